#pragma once

#include "newstrust/extractor.hpp"
#include "newstrust/registry.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace newstrust {

enum class LabelKind { trust_level, topic, coarse_trust };

std::string_view to_string(LabelKind k);
LabelKind label_kind_from_string(std::string_view s);  // throws ValidationError

// Class names in index order for a label kind.
std::vector<std::string> class_names(LabelKind k);
// Class index of an article under a label kind.
int label_index(const Article& a, LabelKind k);

struct Dataset {
    std::string dataset_id;
    Timestamp created_at{};
    std::vector<Article> articles;
    LabelKind label_kind = LabelKind::trust_level;
    std::string registry_hash;

    std::vector<int> labels() const;
    std::vector<std::string> classes() const { return class_names(label_kind); }
    const Article* find(std::string_view article_id) const;
};

// Stable id derived from source domain and URL.
std::string make_article_id(std::string_view domain, std::string_view url);

struct BuildOptions {
    std::size_t min_words = 200;
};

// Labels every article from its registered source. Throws BuildError on an
// unknown or non-admitted source, a duplicate URL, or an article under
// min_words. Articles are ordered by source domain, then URL.
Dataset build_dataset(const std::vector<RawArticle>& cleaned, const Registry& registry,
                      LabelKind label_kind, const BuildOptions& options = {});

struct DatasetStats {
    // [level][topic]
    std::array<std::array<std::size_t, kTopicCount>, kTrustLevelCount> articles{};
    std::array<std::array<std::size_t, kTopicCount>, kTrustLevelCount> sources{};
    std::array<std::size_t, kTrustLevelCount> level_totals{};
    std::array<std::size_t, kTopicCount> topic_totals{};
    std::array<std::size_t, kTrustLevelCount> level_source_totals{};
    std::array<std::size_t, kTopicCount> topic_source_totals{};
    std::size_t total = 0;
    std::size_t total_sources = 0;
};

DatasetStats stats(const Dataset& dataset);
std::string format_stats_table(const DatasetStats& s);
void to_json(nlohmann::json& j, const DatasetStats& s);

struct FoldAssignment {
    int k = 0;
    std::uint64_t seed = 0;
    std::map<std::string, int> fold_of;  // article_id -> fold
};

void to_json(nlohmann::json& j, const FoldAssignment& f);
void from_json(const nlohmann::json& j, FoldAssignment& f);

// Shuffles each class with the seeded generator, then deals round-robin. The
// dealing position carries over from one class to the next so fold sizes stay
// balanced overall. Throws StratificationError naming any class with fewer
// than k members, ValidationError when k < 2.
FoldAssignment stratified_kfold(const Dataset& dataset, int k, std::uint64_t seed);
// Same procedure over bare labels; returns the fold of each position.
std::vector<int> stratified_kfold_labels(const std::vector<int>& labels, int k, std::uint64_t seed,
                                         const std::vector<std::string>& class_names = {});

struct FoldSlices {
    std::vector<const Article*> train;
    std::vector<const Article*> test;
};

// Throws ValidationError for an out-of-range fold or an assignment that does
// not cover the dataset.
FoldSlices fold_slices(const Dataset& dataset, const FoldAssignment& assignment, int fold);

// Directory layout: articles.jsonl + manifest.json.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);
// Same articles relabeled under another kind (new dataset id).
Dataset relabel(const Dataset& dataset, LabelKind kind);

void save_folds(const FoldAssignment& folds, const std::filesystem::path& path);
FoldAssignment load_folds(const std::filesystem::path& path);

}  // namespace newstrust
