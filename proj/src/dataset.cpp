#include "newstrust/dataset.hpp"

#include "newstrust/errors.hpp"
#include "newstrust/jsonl.hpp"
#include "newstrust/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <set>

namespace newstrust {

std::string_view to_string(LabelKind k) {
    switch (k) {
        case LabelKind::trust_level: return "trust_level";
        case LabelKind::topic: return "topic";
        case LabelKind::coarse_trust: return "coarse_trust";
    }
    return "trust_level";
}

LabelKind label_kind_from_string(std::string_view s) {
    if (s == "trust_level") return LabelKind::trust_level;
    if (s == "topic") return LabelKind::topic;
    if (s == "coarse_trust") return LabelKind::coarse_trust;
    throw ValidationError("unknown label kind: " + std::string(s));
}

std::vector<std::string> class_names(LabelKind k) {
    std::vector<std::string> out;
    switch (k) {
        case LabelKind::trust_level:
            for (const auto& l : trust_levels()) out.emplace_back(l.name);
            break;
        case LabelKind::topic:
            for (auto t : kAllTopics) out.emplace_back(topic_id(t));
            break;
        case LabelKind::coarse_trust:
            out = {std::string(to_string(CoarseTrust::untrusted)), std::string(to_string(CoarseTrust::trusted))};
            break;
    }
    return out;
}

int label_index(const Article& a, LabelKind k) {
    switch (k) {
        case LabelKind::trust_level: return a.trust_level.index;
        case LabelKind::topic: return static_cast<int>(a.topic);
        case LabelKind::coarse_trust: return static_cast<int>(coarsen_level(a.trust_level));
    }
    return 0;
}

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(articles.size());
    for (const auto& a : articles) out.push_back(label_index(a, label_kind));
    return out;
}

const Article* Dataset::find(std::string_view article_id) const {
    for (const auto& a : articles)
        if (a.article_id == article_id) return &a;
    return nullptr;
}

std::string make_article_id(std::string_view domain, std::string_view url) {
    std::string key(domain);
    key += '\n';
    key += url;
    return sha256_hex(key).substr(0, 24);
}

namespace {

std::string compute_dataset_id(const Dataset& d) {
    std::string key(to_string(d.label_kind));
    key += '\n';
    key += d.registry_hash;
    for (const auto& a : d.articles) {
        key += '\n';
        key += a.article_id;
        key += '\t';
        key += sha256_hex(a.text).substr(0, 16);
    }
    return "ds-" + sha256_hex(key).substr(0, 16);
}

}  // namespace

Dataset build_dataset(const std::vector<RawArticle>& cleaned, const Registry& registry,
                      LabelKind label_kind, const BuildOptions& options) {
    Dataset d;
    d.label_kind = label_kind;
    d.created_at = now_utc();
    d.registry_hash = registry.content_hash();
    std::set<std::string> seen_urls;
    std::map<std::string, Source> sources;
    for (const auto& raw : cleaned) {
        auto it = sources.find(raw.domain);
        if (it == sources.end()) {
            auto src = registry.find(raw.domain);
            if (!src) throw BuildError("article " + raw.url + " has unknown source '" + raw.domain + "'");
            Admission adm;
            try {
                adm = admit_source(*src);
            } catch (const ValidationError& e) {
                throw BuildError(e.what());
            }
            if (!adm.accepted)
                throw BuildError("source '" + raw.domain + "' is not admitted (" + adm.reason + ")");
            it = sources.emplace(raw.domain, *src).first;
        }
        if (!seen_urls.insert(raw.url).second) throw BuildError("duplicate article url: " + raw.url);
        if (raw.word_count < options.min_words)
            throw BuildError("article " + raw.url + " has " + std::to_string(raw.word_count) +
                             " words, below the minimum of " + std::to_string(options.min_words));
        ArticleDraft draft{make_article_id(raw.domain, raw.url), raw.domain, raw.url, raw.text,
                           raw.word_count, raw.fetched_at};
        try {
            d.articles.push_back(inherit_labels(std::move(draft), it->second));
        } catch (const LabelingError& e) {
            throw BuildError(e.what());
        }
    }
    std::sort(d.articles.begin(), d.articles.end(), [](const Article& a, const Article& b) {
        return a.source_domain != b.source_domain ? a.source_domain < b.source_domain : a.url < b.url;
    });
    d.dataset_id = compute_dataset_id(d);
    return d;
}

DatasetStats stats(const Dataset& dataset) {
    DatasetStats s;
    std::array<std::array<std::set<std::string>, kTopicCount>, kTrustLevelCount> cell_sources;
    std::array<std::set<std::string>, kTrustLevelCount> level_sources;
    std::array<std::set<std::string>, kTopicCount> topic_sources;
    std::set<std::string> all_sources;
    for (const auto& a : dataset.articles) {
        const auto l = static_cast<std::size_t>(a.trust_level.index);
        const auto t = static_cast<std::size_t>(a.topic);
        ++s.articles[l][t];
        ++s.level_totals[l];
        ++s.topic_totals[t];
        ++s.total;
        cell_sources[l][t].insert(a.source_domain);
        level_sources[l].insert(a.source_domain);
        topic_sources[t].insert(a.source_domain);
        all_sources.insert(a.source_domain);
    }
    for (std::size_t l = 0; l < kTrustLevelCount; ++l) {
        for (std::size_t t = 0; t < kTopicCount; ++t) s.sources[l][t] = cell_sources[l][t].size();
        s.level_source_totals[l] = level_sources[l].size();
    }
    for (std::size_t t = 0; t < kTopicCount; ++t) s.topic_source_totals[t] = topic_sources[t].size();
    s.total_sources = all_sources.size();
    return s;
}

std::string format_stats_table(const DatasetStats& s) {
    std::string out;
    char buf[160];
    auto row = [&](const char* label, auto&& cell, std::size_t total) {
        std::snprintf(buf, sizeof buf, "%-8s", label);
        out += buf;
        for (std::size_t t = 0; t < kTopicCount; ++t) {
            std::snprintf(buf, sizeof buf, " %12zu", cell(t));
            out += buf;
        }
        std::snprintf(buf, sizeof buf, " %12zu\n", total);
        out += buf;
    };
    auto header = [&](const char* title) {
        out += title;
        out += '\n';
        std::snprintf(buf, sizeof buf, "%-8s", "level");
        out += buf;
        for (auto t : kAllTopics) {
            std::snprintf(buf, sizeof buf, " %12s", std::string(topic_id(t)).c_str());
            out += buf;
        }
        out += "        total\n";
    };
    header("articles");
    for (std::size_t l = 0; l < kTrustLevelCount; ++l) {
        const auto& lv = trust_levels()[l];
        const auto label = lv.score_lo == lv.score_hi ? std::to_string(lv.score_lo)
                                                      : std::to_string(lv.score_lo) + "-" + std::to_string(lv.score_hi);
        row(label.c_str(), [&](std::size_t t) { return s.articles[l][t]; }, s.level_totals[l]);
    }
    row("total", [&](std::size_t t) { return s.topic_totals[t]; }, s.total);
    out += '\n';
    header("sources");
    for (std::size_t l = 0; l < kTrustLevelCount; ++l) {
        const auto& lv = trust_levels()[l];
        const auto label = lv.score_lo == lv.score_hi ? std::to_string(lv.score_lo)
                                                      : std::to_string(lv.score_lo) + "-" + std::to_string(lv.score_hi);
        row(label.c_str(), [&](std::size_t t) { return s.sources[l][t]; }, s.level_source_totals[l]);
    }
    row("total", [&](std::size_t t) { return s.topic_source_totals[t]; }, s.total_sources);
    return out;
}

void to_json(nlohmann::json& j, const DatasetStats& s) {
    auto cells = nlohmann::json::array();
    for (std::size_t l = 0; l < kTrustLevelCount; ++l)
        for (std::size_t t = 0; t < kTopicCount; ++t)
            cells.push_back({{"trust_level", trust_levels()[l].name},
                             {"topic", topic_id(kAllTopics[t])},
                             {"articles", s.articles[l][t]},
                             {"sources", s.sources[l][t]}});
    auto levels = nlohmann::json::object();
    for (std::size_t l = 0; l < kTrustLevelCount; ++l)
        levels[std::string(trust_levels()[l].name)] = {{"articles", s.level_totals[l]},
                                                       {"sources", s.level_source_totals[l]}};
    auto topics = nlohmann::json::object();
    for (std::size_t t = 0; t < kTopicCount; ++t)
        topics[std::string(topic_id(kAllTopics[t]))] = {{"articles", s.topic_totals[t]},
                                                        {"sources", s.topic_source_totals[t]}};
    j = nlohmann::json{{"cells", cells},
                       {"level_totals", levels},
                       {"topic_totals", topics},
                       {"total", s.total},
                       {"total_sources", s.total_sources}};
}

void to_json(nlohmann::json& j, const FoldAssignment& f) {
    j = nlohmann::json{{"k", f.k}, {"seed", f.seed}, {"fold_of", f.fold_of}};
}

void from_json(const nlohmann::json& j, FoldAssignment& f) {
    try {
        f.k = j.at("k").get<int>();
        f.seed = j.at("seed").get<std::uint64_t>();
        f.fold_of = j.at("fold_of").get<std::map<std::string, int>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed fold assignment: ") + e.what());
    }
    if (f.k < 2) throw ValidationError("fold assignment k must be >= 2");
    for (const auto& [id, fold] : f.fold_of)
        if (fold < 0 || fold >= f.k) throw ValidationError("fold index out of range for article " + id);
}

std::vector<int> stratified_kfold_labels(const std::vector<int>& labels, int k, std::uint64_t seed,
                                         const std::vector<std::string>& names) {
    if (k < 2) throw ValidationError("k must be >= 2");
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
    for (const auto& [cls, idx] : members) {
        if (idx.size() < static_cast<std::size_t>(k)) {
            const auto name = cls >= 0 && static_cast<std::size_t>(cls) < names.size()
                                  ? names[static_cast<std::size_t>(cls)]
                                  : std::to_string(cls);
            throw StratificationError("class '" + name + "' has " + std::to_string(idx.size()) +
                                      " members, fewer than k=" + std::to_string(k));
        }
    }
    Rng rng(seed);
    std::vector<int> fold(labels.size(), -1);
    std::size_t offset = 0;
    for (auto& [cls, idx] : members) {
        rng.shuffle(std::span<std::size_t>(idx));
        for (std::size_t i = 0; i < idx.size(); ++i)
            fold[idx[i]] = static_cast<int>((offset + i) % static_cast<std::size_t>(k));
        offset = (offset + idx.size()) % static_cast<std::size_t>(k);
    }
    return fold;
}

FoldAssignment stratified_kfold(const Dataset& dataset, int k, std::uint64_t seed) {
    const auto folds = stratified_kfold_labels(dataset.labels(), k, seed, dataset.classes());
    FoldAssignment f;
    f.k = k;
    f.seed = seed;
    for (std::size_t i = 0; i < dataset.articles.size(); ++i)
        f.fold_of[dataset.articles[i].article_id] = folds[i];
    return f;
}

FoldSlices fold_slices(const Dataset& dataset, const FoldAssignment& assignment, int fold) {
    if (fold < 0 || fold >= assignment.k)
        throw ValidationError("fold index " + std::to_string(fold) + " out of range 0.." +
                              std::to_string(assignment.k - 1));
    FoldSlices s;
    for (const auto& a : dataset.articles) {
        auto it = assignment.fold_of.find(a.article_id);
        if (it == assignment.fold_of.end())
            throw ValidationError("fold assignment does not cover article " + a.article_id);
        (it->second == fold ? s.test : s.train).push_back(&a);
    }
    return s;
}

namespace {

nlohmann::json manifest_of(const Dataset& d) {
    const auto names = d.classes();
    std::vector<std::size_t> counts(names.size(), 0);
    for (int l : d.labels()) ++counts[static_cast<std::size_t>(l)];
    auto per_class = nlohmann::json::object();
    for (std::size_t i = 0; i < names.size(); ++i) per_class[names[i]] = counts[i];
    return nlohmann::json{{"dataset_id", d.dataset_id},
                          {"label_kind", to_string(d.label_kind)},
                          {"created_at", format_timestamp(d.created_at)},
                          {"registry_hash", d.registry_hash},
                          {"counts", {{"articles", d.articles.size()}, {"per_class", per_class}}},
                          {"articles_file", "articles.jsonl"}};
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_jsonl(dir / "articles.jsonl", dataset.articles);
    write_file(dir / "manifest.json", manifest_of(dataset).dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(read_file(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed dataset manifest: ") + e.what());
    }
    Dataset d;
    try {
        d.dataset_id = m.at("dataset_id").get<std::string>();
        d.label_kind = label_kind_from_string(m.at("label_kind").get<std::string>());
        d.created_at = parse_timestamp(m.at("created_at").get<std::string>());
        d.registry_hash = m.value("registry_hash", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed dataset manifest: ") + e.what());
    }
    d.articles = read_jsonl<Article>(dir / m.value("articles_file", std::string("articles.jsonl")));
    return d;
}

Dataset relabel(const Dataset& dataset, LabelKind kind) {
    Dataset d = dataset;
    d.label_kind = kind;
    d.dataset_id = compute_dataset_id(d);
    return d;
}

void save_folds(const FoldAssignment& folds, const std::filesystem::path& path) {
    write_file(path, nlohmann::json(folds).dump(2) + "\n");
}

FoldAssignment load_folds(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(read_file(path)).get<FoldAssignment>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed folds file: ") + e.what());
    }
}

}  // namespace newstrust
