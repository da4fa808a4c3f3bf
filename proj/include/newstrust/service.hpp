#pragma once

#include "newstrust/classifier.hpp"
#include "newstrust/registry.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace newstrust {

struct RedFlagResult {
    TrustLevel predicted_level;
    std::vector<double> probabilities;
    bool flagged = false;
    std::string message;
    std::string model_id;
};

inline constexpr std::string_view kRedFlagMessage =
    "Warning: the content of this article resembles writing from news outlets rated as untrustworthy. "
    "Check the claims against other sources before relying on them.";

// Throws ValidationError for blank text, ModelError when the model is not a
// five-level trust model.
RedFlagResult classify_article(std::string_view text, const Model& trust_model);

enum class AggregationRule { plurality, mean_index, probability_average };
std::string_view to_string(AggregationRule r);
AggregationRule aggregation_rule_from_string(std::string_view s);  // throws ConfigError

struct SourceAssessment {
    std::string domain;
    std::size_t n_articles = 0;
    std::array<std::size_t, kTrustLevelCount> level_histogram{};
    std::array<std::size_t, kTopicCount> topic_histogram{};
    bool has_topics = false;
    TrustLevel inferred_level;
    CoarseTrust inferred_coarse = CoarseTrust::untrusted;
    double confidence = 0;  // histogram[inferred] / n_articles
    std::optional<Topic> dominant_topic;
    AggregationRule rule = AggregationRule::plurality;
    std::string model_id;
    std::string topic_model_id;
    std::string dataset_id;
    Timestamp created_at{};
    std::vector<std::string> warnings;
};

struct AssessOptions {
    AggregationRule rule = AggregationRule::plurality;
    // below this many articles the result carries a warning
    std::size_t min_articles = 40;
};

// Plurality ties resolve to the lower trust index. Throws ValidationError
// when no article is given.
SourceAssessment assess_source(std::string_view domain, const std::vector<std::string>& texts,
                               const Model& trust_model, const Model* topic_model = nullptr,
                               const AssessOptions& options = {});

// Aggregation over already-computed per-article predictions.
struct ArticlePrediction {
    int level = 0;
    std::vector<double> level_probabilities;  // may be empty unless probability_average
    std::optional<int> topic;
};
SourceAssessment aggregate_predictions(std::string_view domain, const std::vector<ArticlePrediction>& predictions,
                                       const AssessOptions& options = {});

struct SampleCandidate {
    std::string article_id;
    int level = 0;
    Topic topic = Topic::political;
};

struct BalancedSample {
    std::vector<std::string> article_ids;  // in draw order
    std::array<std::array<std::size_t, kTopicCount>, kTrustLevelCount> cell_counts{};
    bool truncated = false;
    std::string notice;
};

// Round-robin over non-empty (level, topic) cells, drawing from each cell's
// seeded shuffle. Throws ValidationError for n < 1, no candidates, duplicate
// ids or out-of-range levels. When n exceeds the candidates every candidate
// is returned with a truncation notice.
BalancedSample balanced_sample(const std::vector<SampleCandidate>& candidates, std::size_t n, std::uint64_t seed);

void to_json(nlohmann::json& j, const RedFlagResult& r);
void to_json(nlohmann::json& j, const SourceAssessment& a);
void to_json(nlohmann::json& j, const BalancedSample& s);

}  // namespace newstrust
