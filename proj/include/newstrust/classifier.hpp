#pragma once

#include "newstrust/dataset.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace newstrust {

// Lowercased maximal runs of letters and digits.
std::vector<std::string> tokenize(std::string_view text);

struct FeaturizerConfig {
    std::uint32_t dimension = 1u << 18;  // power of two
    std::vector<int> ngram_orders = {1, 2};
    bool lowercase = true;

    void validate() const;  // throws ConfigError
    friend bool operator==(const FeaturizerConfig&, const FeaturizerConfig&) = default;
};

// Sparse vector, indices strictly increasing.
struct FeatureVector {
    std::uint32_t dimension = 0;
    std::vector<std::pair<std::uint32_t, double>> entries;

    double norm() const;
    double dot(const FeatureVector& other) const;
};

inline constexpr std::string_view kFeatureHash = "fnv1a64-signed-v1";

// Signed feature hashing of every configured n-gram, counts accumulated, then
// L2-normalized. Empty text gives the zero vector.
FeatureVector featurize(std::string_view text, const FeaturizerConfig& config);

struct TrainConfig {
    double learning_rate = 0.1;
    double decay = 1e-4;  // lr_t = learning_rate / (1 + t * decay), t = step
    int epochs = 10;
    double l2_penalty = 1e-6;
    int batch_size = 32;  // 0 means full batch
    std::vector<int> ngram_orders = {1, 2};
    std::uint32_t dimension = 1u << 18;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
    FeaturizerConfig featurizer() const { return {dimension, ngram_orders, true}; }
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct Model {
    static constexpr int kFormatVersion = 1;

    std::string model_id;
    std::vector<std::string> classes;
    FeaturizerConfig featurizer;
    std::vector<double> weights;  // row-major |classes| x dimension
    std::vector<double> bias;
    TrainConfig train_config;
    std::string dataset_id;
    std::vector<double> loss_history;  // objective after each epoch

    std::size_t num_classes() const { return classes.size(); }
    double weight(std::size_t c, std::uint32_t i) const { return weights[c * featurizer.dimension + i]; }

    // Zero weights over the given classes.
    static Model zeros(std::vector<std::string> classes, FeaturizerConfig featurizer);

    // Throws ModelError when classes are empty or repeated, shapes disagree, or
    // a parameter is not finite.
    void validate() const;

    std::vector<double> logits(const FeatureVector& x) const;
};

void to_json(nlohmann::json& j, const Model& m);
void from_json(const nlohmann::json& j, Model& m);
void save_model(const Model& m, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

// Numerically stable softmax.
std::vector<double> softmax(const std::vector<double>& logits);
// First index of the maximum.
std::size_t argmax(const std::vector<double>& values);

// Throws ModelError on a dimension mismatch.
std::vector<double> predict_proba(const Model& m, const FeatureVector& x);
std::vector<double> predict_proba(const Model& m, std::string_view text);
std::size_t predict(const Model& m, std::string_view text);

// Average cross-entropy plus l2_penalty * ||W||^2 (bias unpenalized). When
// `grad_w` / `grad_b` are given they receive the dense gradient.
double objective(const Model& m, const std::vector<FeatureVector>& xs, const std::vector<int>& ys,
                 double l2_penalty, std::vector<double>* grad_w = nullptr,
                 std::vector<double>* grad_b = nullptr);

// Mini-batch gradient descent from zero weights. Throws TrainingError when
// fewer than two classes have examples or a label is out of range.
Model train(const std::vector<FeatureVector>& xs, const std::vector<int>& ys,
            std::vector<std::string> classes, const TrainConfig& config);
Model train(const std::vector<std::string>& texts, const std::vector<int>& ys,
            std::vector<std::string> classes, const TrainConfig& config);
Model train(const Dataset& dataset, const TrainConfig& config);

// Prediction seam shared by the native model and external services.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string name() const = 0;
    virtual std::vector<std::string> classes() const = 0;
    // One probability row per text. Throws BackendError when unavailable.
    virtual std::vector<std::vector<double>> classify_batch(const std::vector<std::string>& texts) = 0;
    virtual std::string model_id() const { return {}; }
};

class NativeBackend : public Backend {
public:
    explicit NativeBackend(std::shared_ptr<const Model> model);
    std::string name() const override { return "native"; }
    std::vector<std::string> classes() const override { return model_->classes; }
    std::vector<std::vector<double>> classify_batch(const std::vector<std::string>& texts) override;
    std::string model_id() const override { return model_->model_id; }
    const Model& model() const { return *model_; }

private:
    std::shared_ptr<const Model> model_;
};

// Runs classify_batch and checks its output: one row per text, each row as
// long as `expected_classes` (when the backend reports the same list).
// Throws BackendError otherwise.
std::vector<std::vector<double>> checked_classify(Backend& backend, const std::vector<std::string>& texts,
                                                  const std::vector<std::string>& expected_classes);

// Fits a backend on training texts; used by cross-validation.
class TrainableBackend {
public:
    virtual ~TrainableBackend() = default;
    virtual std::string name() const = 0;
    virtual std::unique_ptr<Backend> fit(const std::vector<std::string>& texts, const std::vector<int>& labels,
                                         const std::vector<std::string>& classes, const TrainConfig& config) = 0;
};

class NativeTrainer : public TrainableBackend {
public:
    std::string name() const override { return "native"; }
    std::unique_ptr<Backend> fit(const std::vector<std::string>& texts, const std::vector<int>& labels,
                                 const std::vector<std::string>& classes, const TrainConfig& config) override;
};

// Name -> trainer factory. "native" is always present.
class BackendRegistry {
public:
    using Factory = std::function<std::unique_ptr<TrainableBackend>()>;
    static BackendRegistry& instance();
    void add(const std::string& name, Factory factory);
    // Throws BackendError for an unknown name.
    std::unique_ptr<TrainableBackend> create(const std::string& name) const;
    std::vector<std::string> names() const;

private:
    BackendRegistry();
    std::map<std::string, Factory> factories_;
    mutable std::mutex mu_;
};

}  // namespace newstrust
