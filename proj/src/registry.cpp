#include "newstrust/registry.hpp"

#include "newstrust/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace newstrust {

namespace {

constexpr std::array<TrustLevel, kTrustLevelCount> kLevels = {{
    {0, "Proceed with Maximum Caution", 0, 39},
    {1, "Proceed with Caution", 40, 59},
    {2, "Credible with Exceptions", 60, 74},
    {3, "Generally Credible", 75, 99},
    {4, "High Credibility", 100, 100},
}};

constexpr std::array<std::string_view, kTopicCount> kTopicIds = {"political", "conspiracy",
                                                                "sports", "health"};
constexpr std::array<std::string_view, kTopicCount> kTopicNames = {
    "Political news or commentary", "Conspiracy theories or hoaxes", "Sports and athletics",
    "Health or medical information"};

}  // namespace

const std::array<TrustLevel, kTrustLevelCount>& trust_levels() { return kLevels; }

const TrustLevel& trust_level_at(int index) {
    if (index < 0 || index >= static_cast<int>(kTrustLevelCount))
        throw ValidationError("trust level index out of range: " + std::to_string(index));
    return kLevels[static_cast<std::size_t>(index)];
}

const TrustLevel& trust_level_named(std::string_view name) {
    for (const auto& l : kLevels) {
        if (l.name == name) return l;
        const auto range = l.score_lo == l.score_hi
                               ? std::to_string(l.score_lo)
                               : std::to_string(l.score_lo) + "-" + std::to_string(l.score_hi);
        if (range == name) return l;
    }
    throw ValidationError("unknown trust level: " + std::string(name));
}

const TrustLevel& level_from_score(int score) {
    if (score < 0 || score > 100)
        throw ValidationError("trust score out of range 0..100: " + std::to_string(score));
    for (const auto& l : kLevels)
        if (score >= l.score_lo && score <= l.score_hi) return l;
    throw ValidationError("no trust level for score");  // unreachable: bins partition 0..100
}

const TrustLevel& level_from_score(double score) {
    if (!std::isfinite(score) || std::floor(score) != score)
        throw ValidationError("trust score must be an integer");
    if (score < 0 || score > 100) throw ValidationError("trust score out of range 0..100");
    return level_from_score(static_cast<int>(score));
}

std::string_view to_string(CoarseTrust c) {
    return c == CoarseTrust::trusted ? "trusted" : "untrusted";
}

CoarseTrust coarse_trust_from_string(std::string_view s) {
    if (s == "trusted") return CoarseTrust::trusted;
    if (s == "untrusted") return CoarseTrust::untrusted;
    throw ValidationError("unknown coarse trust label: " + std::string(s));
}

CoarseTrust coarse_level_from_score(int score) {
    if (score < 0 || score > 100)
        throw ValidationError("trust score out of range 0..100: " + std::to_string(score));
    return score <= 59 ? CoarseTrust::untrusted : CoarseTrust::trusted;
}

CoarseTrust coarsen_level(const TrustLevel& level) {
    return level.index <= 1 ? CoarseTrust::untrusted : CoarseTrust::trusted;
}

std::string_view topic_id(Topic t) { return kTopicIds[static_cast<std::size_t>(t)]; }
std::string_view topic_display_name(Topic t) { return kTopicNames[static_cast<std::size_t>(t)]; }

Topic topic_from_id(std::string_view id) {
    for (std::size_t i = 0; i < kTopicCount; ++i)
        if (kTopicIds[i] == id || kTopicNames[i] == id) return kAllTopics[i];
    throw ValidationError("unknown topic: " + std::string(id));
}

bool is_valid_domain(std::string_view d) {
    if (d.empty() || d.size() > 253) return false;
    std::size_t label_len = 0;
    char prev = '.';
    for (char c : d) {
        if (c == '.') {
            if (label_len == 0 || prev == '-') return false;
            label_len = 0;
        } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-') {
            if (label_len == 0 && c == '-') return false;
            if (++label_len > 63) return false;
        } else {
            return false;
        }
        prev = c;
    }
    return label_len > 0 && prev != '-';
}

Admission admit_source(const Source& source) {
    if (!is_valid_domain(source.domain))
        throw ValidationError("malformed domain: '" + source.domain + "'");
    if (source.paywalled) return Admission::reject("paywall");
    // primary subtag of the BCP-47 tag
    const auto lang = to_lower_ascii(source.language.substr(0, source.language.find('-')));
    if (lang != "en") return Admission::reject("language");
    return Admission::accept();
}

Article inherit_labels(ArticleDraft draft, const Source& source) {
    if (draft.source_domain != source.domain)
        throw LabelingError("article domain '" + draft.source_domain +
                            "' does not match source '" + source.domain + "'");
    Article a;
    a.article_id = std::move(draft.article_id);
    a.source_domain = std::move(draft.source_domain);
    a.url = std::move(draft.url);
    a.text = std::move(draft.text);
    a.word_count = draft.word_count;
    a.trust_level = source.trust_level();
    a.topic = source.topic;
    a.fetched_at = draft.fetched_at;
    return a;
}

void to_json(nlohmann::json& j, const Source& s) {
    j = nlohmann::json{{"domain", s.domain},       {"trust_score", s.trust_score},
                       {"topic", topic_id(s.topic)}, {"language", s.language},
                       {"paywalled", s.paywalled}};
    j["crawl_config_id"] = s.crawl_config_id ? nlohmann::json(*s.crawl_config_id) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, Source& s) {
    try {
        s.domain = j.at("domain").get<std::string>();
        const auto& score = j.at("trust_score");
        if (!score.is_number()) throw ValidationError("trust_score must be a number");
        const auto value = score.get<double>();
        level_from_score(value);
        s.trust_score = static_cast<int>(value);
        s.topic = topic_from_id(j.at("topic").get<std::string>());
        s.language = j.value("language", std::string("en"));
        s.paywalled = j.value("paywalled", false);
        if (j.contains("crawl_config_id") && !j["crawl_config_id"].is_null())
            s.crawl_config_id = j["crawl_config_id"].get<std::string>();
        else
            s.crawl_config_id.reset();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed source record: ") + e.what());
    }
}

void to_json(nlohmann::json& j, const Article& a) {
    j = nlohmann::json{{"article_id", a.article_id},
                       {"source_domain", a.source_domain},
                       {"url", a.url},
                       {"text", a.text},
                       {"word_count", a.word_count},
                       {"trust_level", a.trust_level.name},
                       {"topic", topic_id(a.topic)},
                       {"fetched_at", format_timestamp(a.fetched_at)}};
}

void from_json(const nlohmann::json& j, Article& a) {
    try {
        a.article_id = j.at("article_id").get<std::string>();
        a.source_domain = j.at("source_domain").get<std::string>();
        a.url = j.at("url").get<std::string>();
        a.text = j.at("text").get<std::string>();
        a.word_count = j.at("word_count").get<std::size_t>();
        a.trust_level = trust_level_named(j.at("trust_level").get<std::string>());
        a.topic = topic_from_id(j.at("topic").get<std::string>());
        a.fetched_at = parse_timestamp(j.at("fetched_at").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed article record: ") + e.what());
    }
}

Registry::Registry(std::vector<Source> sources) {
    for (auto& s : sources) upsert(std::move(s));
}

Registry::Registry(const Registry& other) {
    std::shared_lock lock(other.mu_);
    by_domain_ = other.by_domain_;
}

Registry& Registry::operator=(const Registry& other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mu_, other.mu_);
    by_domain_ = other.by_domain_;
    return *this;
}

Registry Registry::from_json_text(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("registry is not valid JSON: ") + e.what());
    }
    if (!j.is_array()) throw ValidationError("registry must be a JSON array of sources");
    Registry r;
    for (const auto& item : j) r.upsert(item.get<Source>());
    return r;
}

Registry Registry::load(const std::filesystem::path& path) {
    return from_json_text(read_file(path));
}

std::string Registry::to_json_text() const {
    auto arr = nlohmann::json::array();
    for (const auto& s : sources()) arr.push_back(s);
    return arr.dump(2);
}

void Registry::save(const std::filesystem::path& path) const {
    write_file(path, to_json_text() + "\n");
}

void Registry::upsert(Source source) {
    if (!is_valid_domain(source.domain))
        throw ValidationError("malformed domain: '" + source.domain + "'");
    level_from_score(source.trust_score);
    std::unique_lock lock(mu_);
    auto key = source.domain;
    by_domain_.insert_or_assign(std::move(key), std::move(source));
}

std::optional<Source> Registry::find(std::string_view domain) const {
    std::shared_lock lock(mu_);
    auto it = by_domain_.find(domain);
    if (it == by_domain_.end()) return std::nullopt;
    return it->second;
}

std::vector<Source> Registry::sources() const {
    std::shared_lock lock(mu_);
    std::vector<Source> out;
    out.reserve(by_domain_.size());
    for (const auto& [_, s] : by_domain_) out.push_back(s);
    return out;
}

std::size_t Registry::size() const {
    std::shared_lock lock(mu_);
    return by_domain_.size();
}

std::string Registry::content_hash() const { return sha256_hex(to_json_text()); }

}  // namespace newstrust
