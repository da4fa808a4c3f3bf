#pragma once

#include "newstrust/classifier.hpp"
#include "newstrust/dataset.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace newstrust {

// Rows are true labels, columns predictions.
struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::vector<std::size_t>> counts;

    std::size_t total() const;
    std::size_t off_diagonal() const;
};

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& predicted,
                          const std::vector<std::string>& classes);
// Label-name variant; throws EvaluationError for names outside `classes`.
ConfusionMatrix confusion(const std::vector<std::string>& truth, const std::vector<std::string>& predicted,
                          const std::vector<std::string>& classes);

struct MetricReport {
    std::vector<std::string> classes;
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
    std::vector<std::size_t> support;
    double micro_precision = 0;
    double micro_recall = 0;
    double f1_micro = 0;
    double f1_macro = 0;
    double accuracy = 0;
    std::size_t n = 0;
};

// Undefined ratios count as 0; the macro mean covers every declared class.
// Throws EvaluationError for an empty matrix.
MetricReport metrics(const ConfusionMatrix& cm);

struct AdjacencySplit {
    std::size_t adjacent = 0;  // |i - j| == 1
    std::size_t distant = 0;   // |i - j| >= 2
};

// Requires the five trust levels in index order; throws EvaluationError
// otherwise.
AdjacencySplit adjacency_decomposition(const ConfusionMatrix& cm);

struct FoldResult {
    int fold = 0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::string model_id;
    ConfusionMatrix confusion;
    MetricReport report;
    std::optional<AdjacencySplit> adjacency;  // trust-level datasets only
};

struct SummaryStat {
    double mean = 0;
    double median = 0;
    double min = 0;
    double max = 0;
};

SummaryStat summarize(const std::vector<double>& values);

struct CVSummary {
    std::string dataset_id;
    std::string label_kind;
    std::string backend;
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> classes;
    std::vector<FoldResult> folds;
    SummaryStat f1_micro;
    SummaryStat f1_macro;
    SummaryStat accuracy;
};

struct CVOptions {
    // Folds trained concurrently; the trainer's fit() must then be safe to
    // call from several threads.
    int workers = 1;
    // Polled before each fold; returning true aborts the run.
    std::function<bool()> cancelled;
};

// Trains on each fold's complement and scores its test slice. Any failure
// aborts with an EvaluationError naming the fold.
CVSummary cross_validate(const Dataset& dataset, const FoldAssignment& folds, TrainableBackend& trainer,
                         const TrainConfig& config, const CVOptions& options = {});

// cross_validate over {untrusted, trusted}; a trust-level dataset is
// relabeled first. Throws EvaluationError for a topic dataset.
CVSummary coarse_evaluate(const Dataset& dataset, const FoldAssignment& folds, TrainableBackend& trainer,
                          const TrainConfig& config, const CVOptions& options = {});

void to_json(nlohmann::json& j, const ConfusionMatrix& cm);
void to_json(nlohmann::json& j, const MetricReport& r);
void to_json(nlohmann::json& j, const SummaryStat& s);
void to_json(nlohmann::json& j, const FoldResult& f);
void to_json(nlohmann::json& j, const CVSummary& s);

std::string confusion_csv(const ConfusionMatrix& cm);
std::string format_summary(const CVSummary& s);
// summary.json, summary.txt, fold_<i>.json, fold_<i>_confusion.csv
void write_report(const CVSummary& s, const std::filesystem::path& dir);

}  // namespace newstrust
