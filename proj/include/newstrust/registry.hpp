#pragma once

#include "newstrust/util.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace newstrust {

// Ordinal publisher trust bin. Index 0 is the least trustworthy.
struct TrustLevel {
    int index = 0;
    std::string_view name;
    int score_lo = 0;
    int score_hi = 0;

    friend bool operator==(const TrustLevel& a, const TrustLevel& b) { return a.index == b.index; }
    friend auto operator<=>(const TrustLevel& a, const TrustLevel& b) { return a.index <=> b.index; }
};

inline constexpr std::size_t kTrustLevelCount = 5;

// The five bins, in index order.
const std::array<TrustLevel, kTrustLevelCount>& trust_levels();
const TrustLevel& trust_level_at(int index);
// Looks a level up by its display name, or by a "lo-hi" / "100" score range.
const TrustLevel& trust_level_named(std::string_view name);

const TrustLevel& level_from_score(int score);
// Non-integer scores are rejected; integral values in range are accepted.
const TrustLevel& level_from_score(double score);

enum class CoarseTrust { untrusted, trusted };
std::string_view to_string(CoarseTrust c);
CoarseTrust coarse_trust_from_string(std::string_view s);

CoarseTrust coarse_level_from_score(int score);
CoarseTrust coarsen_level(const TrustLevel& level);

enum class Topic { political, conspiracy, sports, health };
inline constexpr std::size_t kTopicCount = 4;
inline constexpr std::array<Topic, kTopicCount> kAllTopics = {Topic::political, Topic::conspiracy,
                                                             Topic::sports, Topic::health};

std::string_view topic_id(Topic t);
std::string_view topic_display_name(Topic t);
Topic topic_from_id(std::string_view id);

struct Source {
    std::string domain;
    int trust_score = 0;
    Topic topic = Topic::political;
    std::string language = "en";
    bool paywalled = false;
    std::optional<std::string> crawl_config_id;

    const TrustLevel& trust_level() const { return level_from_score(trust_score); }
};

// Lowercase hostname of dot-separated LDH labels.
bool is_valid_domain(std::string_view domain);

struct Admission {
    bool accepted = true;
    std::string reason;  // "paywall" or "language" when rejected

    static Admission accept() { return {}; }
    static Admission reject(std::string why) { return {false, std::move(why)}; }
};

Admission admit_source(const Source& source);

// Fields of an article before its labels are attached.
struct ArticleDraft {
    std::string article_id;
    std::string source_domain;
    std::string url;
    std::string text;
    std::size_t word_count = 0;
    Timestamp fetched_at{};
};

struct Article {
    std::string article_id;
    std::string source_domain;
    std::string url;
    std::string text;
    std::size_t word_count = 0;
    TrustLevel trust_level;
    Topic topic = Topic::political;
    Timestamp fetched_at{};
};

Article inherit_labels(ArticleDraft draft, const Source& source);

void to_json(nlohmann::json& j, const Source& s);
void from_json(const nlohmann::json& j, Source& s);
void to_json(nlohmann::json& j, const Article& a);
void from_json(const nlohmann::json& j, Article& a);

// Source collection keyed by domain. Reads may run concurrently; writes are
// serialized through a single writer lock.
class Registry {
public:
    Registry() = default;
    explicit Registry(std::vector<Source> sources);

    Registry(const Registry& other);
    Registry& operator=(const Registry& other);

    static Registry load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    static Registry from_json_text(std::string_view json_text);
    std::string to_json_text() const;

    // Inserts or replaces by domain.
    void upsert(Source source);
    std::optional<Source> find(std::string_view domain) const;
    std::vector<Source> sources() const;
    std::size_t size() const;

    // SHA-256 of the canonical JSON form; recorded in dataset manifests.
    std::string content_hash() const;

private:
    mutable std::shared_mutex mu_;
    std::map<std::string, Source, std::less<>> by_domain_;
};

}  // namespace newstrust
