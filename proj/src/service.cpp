#include "newstrust/service.hpp"

#include "newstrust/dataset.hpp"
#include "newstrust/errors.hpp"
#include "newstrust/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace newstrust {

namespace {

void require_classes(const Model& m, LabelKind kind, const char* what) {
    if (m.classes != class_names(kind))
        throw ModelError(std::string(what) + " model " + m.model_id + " does not predict the expected classes");
}

bool blank(std::string_view s) { return trim(s).empty(); }

}  // namespace

RedFlagResult classify_article(std::string_view text, const Model& trust_model) {
    if (blank(text)) throw ValidationError("text must not be empty");
    require_classes(trust_model, LabelKind::trust_level, "trust");
    RedFlagResult r;
    r.probabilities = predict_proba(trust_model, text);
    r.predicted_level = trust_level_at(static_cast<int>(argmax(r.probabilities)));
    r.flagged = coarsen_level(r.predicted_level) == CoarseTrust::untrusted;
    r.message = r.flagged ? std::string(kRedFlagMessage)
                          : "No warning: the content resembles writing from outlets rated \"" +
                                std::string(r.predicted_level.name) + "\".";
    r.model_id = trust_model.model_id;
    return r;
}

std::string_view to_string(AggregationRule r) {
    switch (r) {
        case AggregationRule::plurality: return "plurality";
        case AggregationRule::mean_index: return "mean_index";
        case AggregationRule::probability_average: return "probability_average";
    }
    return "plurality";
}

AggregationRule aggregation_rule_from_string(std::string_view s) {
    if (s == "plurality") return AggregationRule::plurality;
    if (s == "mean_index") return AggregationRule::mean_index;
    if (s == "probability_average") return AggregationRule::probability_average;
    throw ConfigError("unknown aggregation rule: " + std::string(s));
}

SourceAssessment aggregate_predictions(std::string_view domain, const std::vector<ArticlePrediction>& preds,
                                       const AssessOptions& options) {
    if (preds.empty()) throw ValidationError("at least one article is required");
    SourceAssessment a;
    a.domain = std::string(domain);
    a.n_articles = preds.size();
    a.rule = options.rule;
    a.created_at = now_utc();
    for (const auto& p : preds) {
        a.level_histogram[static_cast<std::size_t>(trust_level_at(p.level).index)]++;
        if (p.topic) {
            a.has_topics = true;
            if (*p.topic < 0 || static_cast<std::size_t>(*p.topic) >= kTopicCount)
                throw ValidationError("topic index out of range: " + std::to_string(*p.topic));
            a.topic_histogram[static_cast<std::size_t>(*p.topic)]++;
        }
    }

    std::size_t inferred = 0;
    switch (options.rule) {
        case AggregationRule::plurality:
            // strict > keeps the lowest index on ties
            for (std::size_t i = 1; i < kTrustLevelCount; ++i)
                if (a.level_histogram[i] > a.level_histogram[inferred]) inferred = i;
            break;
        case AggregationRule::mean_index: {
            std::size_t sum = 0;
            for (std::size_t i = 0; i < kTrustLevelCount; ++i) sum += i * a.level_histogram[i];
            // round half down
            const double mean = static_cast<double>(sum) / static_cast<double>(a.n_articles);
            inferred = static_cast<std::size_t>(std::ceil(mean - 0.5));
            break;
        }
        case AggregationRule::probability_average: {
            // sum in a canonical order so the result ignores input order
            std::vector<std::vector<double>> rows;
            for (const auto& p : preds) {
                if (p.level_probabilities.size() != kTrustLevelCount)
                    throw ValidationError("probability averaging needs five probabilities per article");
                rows.push_back(p.level_probabilities);
            }
            std::sort(rows.begin(), rows.end());
            std::vector<double> mean(kTrustLevelCount, 0.0);
            for (const auto& r : rows)
                for (std::size_t i = 0; i < kTrustLevelCount; ++i) mean[i] += r[i];
            inferred = argmax(mean);
            break;
        }
    }
    a.inferred_level = trust_level_at(static_cast<int>(inferred));
    a.inferred_coarse = coarsen_level(a.inferred_level);
    a.confidence = static_cast<double>(a.level_histogram[inferred]) / static_cast<double>(a.n_articles);
    if (a.has_topics) {
        std::size_t t = 0;
        for (std::size_t i = 1; i < kTopicCount; ++i)
            if (a.topic_histogram[i] > a.topic_histogram[t]) t = i;
        a.dominant_topic = kAllTopics[t];
    }
    if (a.n_articles < options.min_articles)
        a.warnings.push_back("only " + std::to_string(a.n_articles) + " articles assessed; at least " +
                             std::to_string(options.min_articles) + " are recommended");
    return a;
}

SourceAssessment assess_source(std::string_view domain, const std::vector<std::string>& texts,
                               const Model& trust_model, const Model* topic_model, const AssessOptions& options) {
    if (texts.empty()) throw ValidationError("at least one article is required");
    require_classes(trust_model, LabelKind::trust_level, "trust");
    if (topic_model) require_classes(*topic_model, LabelKind::topic, "topic");
    std::vector<ArticlePrediction> preds;
    preds.reserve(texts.size());
    for (const auto& t : texts) {
        if (blank(t)) throw ValidationError("article texts must not be empty");
        ArticlePrediction p;
        p.level_probabilities = predict_proba(trust_model, t);
        p.level = static_cast<int>(argmax(p.level_probabilities));
        if (topic_model) p.topic = static_cast<int>(predict(*topic_model, t));
        preds.push_back(std::move(p));
    }
    auto a = aggregate_predictions(domain, preds, options);
    a.model_id = trust_model.model_id;
    a.dataset_id = trust_model.dataset_id;
    if (topic_model) a.topic_model_id = topic_model->model_id;
    return a;
}

BalancedSample balanced_sample(const std::vector<SampleCandidate>& candidates, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("sample size must be at least 1");
    if (candidates.empty()) throw ValidationError("no candidates to sample from");
    std::set<std::string> ids;
    std::array<std::array<std::vector<std::string>, kTopicCount>, kTrustLevelCount> cells;
    for (const auto& c : candidates) {
        if (!ids.insert(c.article_id).second) throw ValidationError("duplicate candidate id: " + c.article_id);
        const auto& level = trust_level_at(c.level);
        cells[static_cast<std::size_t>(level.index)][static_cast<std::size_t>(c.topic)].push_back(c.article_id);
    }
    Rng rng(seed);
    struct Cell {
        std::size_t level, topic;
        std::vector<std::string> ids;
        std::size_t next = 0;
    };
    std::vector<Cell> order;
    for (std::size_t l = 0; l < kTrustLevelCount; ++l)
        for (std::size_t t = 0; t < kTopicCount; ++t) {
            auto& v = cells[l][t];
            if (v.empty()) continue;
            std::sort(v.begin(), v.end());
            rng.shuffle(std::span<std::string>(v));
            order.push_back({l, t, std::move(v)});
        }

    BalancedSample s;
    const std::size_t target = std::min(n, candidates.size());
    while (s.article_ids.size() < target) {
        for (auto& c : order) {
            if (s.article_ids.size() == target) break;
            if (c.next == c.ids.size()) continue;
            s.article_ids.push_back(c.ids[c.next++]);
            ++s.cell_counts[c.level][c.topic];
        }
    }
    if (n > candidates.size()) {
        s.truncated = true;
        s.notice = "requested " + std::to_string(n) + " articles but only " + std::to_string(candidates.size()) +
                   " candidates exist; returning all of them";
    }
    return s;
}

void to_json(nlohmann::json& j, const RedFlagResult& r) {
    j = nlohmann::json{{"predicted_level", r.predicted_level.name},
                       {"predicted_level_index", r.predicted_level.index},
                       {"probabilities", r.probabilities},
                       {"classes", class_names(LabelKind::trust_level)},
                       {"flagged", r.flagged},
                       {"message", r.message}};
}

void to_json(nlohmann::json& j, const SourceAssessment& a) {
    auto levels = nlohmann::json::object();
    for (std::size_t i = 0; i < kTrustLevelCount; ++i) levels[std::string(trust_levels()[i].name)] = a.level_histogram[i];
    auto topics = nlohmann::json::object();
    if (a.has_topics)
        for (std::size_t i = 0; i < kTopicCount; ++i) topics[std::string(topic_id(kAllTopics[i]))] = a.topic_histogram[i];
    j = nlohmann::json{{"domain", a.domain},
                       {"n_articles", a.n_articles},
                       {"level_histogram", levels},
                       {"topic_histogram", topics},
                       {"inferred_level", a.inferred_level.name},
                       {"inferred_level_index", a.inferred_level.index},
                       {"inferred_coarse", to_string(a.inferred_coarse)},
                       {"confidence", a.confidence},
                       {"rule", to_string(a.rule)},
                       {"created_at", format_timestamp(a.created_at)},
                       {"warnings", a.warnings}};
    j["dominant_topic"] = a.dominant_topic ? nlohmann::json(topic_id(*a.dominant_topic)) : nlohmann::json(nullptr);
    j["topic_model_id"] = a.topic_model_id.empty() ? nlohmann::json(nullptr) : nlohmann::json(a.topic_model_id);
}

void to_json(nlohmann::json& j, const BalancedSample& s) {
    auto cells = nlohmann::json::array();
    for (std::size_t l = 0; l < kTrustLevelCount; ++l)
        for (std::size_t t = 0; t < kTopicCount; ++t)
            if (s.cell_counts[l][t])
                cells.push_back({{"trust_level", trust_levels()[l].name},
                                 {"topic", topic_id(kAllTopics[t])},
                                 {"count", s.cell_counts[l][t]}});
    j = nlohmann::json{{"article_ids", s.article_ids}, {"cells", cells}, {"truncated", s.truncated}};
    j["notice"] = s.notice.empty() ? nlohmann::json(nullptr) : nlohmann::json(s.notice);
}

}  // namespace newstrust
