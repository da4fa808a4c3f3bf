#include "newstrust/classifier.hpp"

#include "newstrust/errors.hpp"
#include "newstrust/rng.hpp"
#include "newstrust/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

namespace newstrust {

namespace {

bool is_word_code_point(char32_t cp) {
    if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
    if (text::is_unicode_space(cp)) return false;
    if (cp <= 0xBF) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;  // Latin-1 punctuation and symbols
    if (cp == 0xD7 || cp == 0xF7) return false;
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows, shapes
    if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
    if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
    if (cp == 0xFFFD || (cp >= 0xFF01 && cp <= 0xFF0F)) return false;
    return true;
}

char32_t lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
    return cp;
}

bool is_power_of_two(std::uint32_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto cp = text::next_code_point(s, pos);
        if (is_word_code_point(cp)) {
            text::append_utf8(cur, lower(cp));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

void FeaturizerConfig::validate() const {
    if (!is_power_of_two(dimension)) throw ConfigError("feature dimension must be a power of two");
    if (ngram_orders.empty()) throw ConfigError("at least one n-gram order is required");
    for (int n : ngram_orders)
        if (n < 1 || n > 8) throw ConfigError("n-gram orders must be in 1..8");
}

double FeatureVector::norm() const {
    double s = 0;
    for (const auto& [_, v] : entries) s += v * v;
    return std::sqrt(s);
}

double FeatureVector::dot(const FeatureVector& o) const {
    double s = 0;
    auto a = entries.begin();
    auto b = o.entries.begin();
    while (a != entries.end() && b != o.entries.end()) {
        if (a->first < b->first) ++a;
        else if (b->first < a->first) ++b;
        else s += (a++)->second * (b++)->second;
    }
    return s;
}

FeatureVector featurize(std::string_view input, const FeaturizerConfig& config) {
    config.validate();
    auto tokens = tokenize(input);
    if (!config.lowercase) {
        // tokenize() lowercases; redo the split keeping case
        tokens.clear();
        std::string cur;
        std::size_t pos = 0;
        while (pos < input.size()) {
            const auto cp = text::next_code_point(input, pos);
            if (is_word_code_point(cp)) {
                text::append_utf8(cur, cp);
            } else if (!cur.empty()) {
                tokens.push_back(std::move(cur));
                cur.clear();
            }
        }
        if (!cur.empty()) tokens.push_back(std::move(cur));
    }
    std::unordered_map<std::uint32_t, double> acc;
    const std::uint32_t mask = config.dimension - 1;
    std::string gram;
    for (int n : config.ngram_orders) {
        const auto un = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
            gram = tokens[i];
            for (std::size_t j = 1; j < un; ++j) {
                gram += ' ';
                gram += tokens[i + j];
            }
            const auto h = fnv1a64(gram);
            const auto idx = static_cast<std::uint32_t>(h) & mask;
            acc[idx] += (h >> 63) ? -1.0 : 1.0;
        }
    }
    FeatureVector fv;
    fv.dimension = config.dimension;
    fv.entries.reserve(acc.size());
    for (const auto& [i, v] : acc)
        if (v != 0) fv.entries.emplace_back(i, v);
    std::sort(fv.entries.begin(), fv.entries.end());
    const double n = fv.norm();
    if (n > 0)
        for (auto& e : fv.entries) e.second /= n;
    return fv;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
    if (!(decay >= 0) || !std::isfinite(decay)) throw ConfigError("decay must be >= 0");
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (!(l2_penalty >= 0) || !std::isfinite(l2_penalty)) throw ConfigError("l2_penalty must be >= 0");
    if (batch_size < 0) throw ConfigError("batch_size must be >= 0");
    featurizer().validate();
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"learning_rate", c.learning_rate}, {"decay", c.decay},
                       {"epochs", c.epochs},               {"l2_penalty", c.l2_penalty},
                       {"batch_size", c.batch_size},       {"ngram_orders", c.ngram_orders},
                       {"dimension", c.dimension},         {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    try {
        TrainConfig d;
        c.learning_rate = j.value("learning_rate", d.learning_rate);
        c.decay = j.value("decay", d.decay);
        c.epochs = j.value("epochs", d.epochs);
        c.l2_penalty = j.value("l2_penalty", d.l2_penalty);
        c.batch_size = j.value("batch_size", d.batch_size);
        c.ngram_orders = j.value("ngram_orders", d.ngram_orders);
        c.dimension = j.value("dimension", d.dimension);
        c.seed = j.value("seed", d.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed train config: ") + e.what());
    }
}

Model Model::zeros(std::vector<std::string> classes, FeaturizerConfig featurizer) {
    Model m;
    m.classes = std::move(classes);
    m.featurizer = std::move(featurizer);
    m.weights.assign(m.classes.size() * m.featurizer.dimension, 0.0);
    m.bias.assign(m.classes.size(), 0.0);
    return m;
}

void Model::validate() const {
    if (classes.empty()) throw ModelError("model has no classes");
    if (std::set<std::string>(classes.begin(), classes.end()).size() != classes.size())
        throw ModelError("model classes are not unique");
    try {
        featurizer.validate();
    } catch (const ConfigError& e) {
        throw ModelError(e.what());
    }
    if (weights.size() != classes.size() * featurizer.dimension || bias.size() != classes.size())
        throw ModelError("model parameter shapes do not match classes x dimension");
    for (double w : weights)
        if (!std::isfinite(w)) throw ModelError("model weights are not finite");
    for (double b : bias)
        if (!std::isfinite(b)) throw ModelError("model bias is not finite");
}

std::vector<double> Model::logits(const FeatureVector& x) const {
    if (x.dimension != featurizer.dimension)
        throw ModelError("feature dimension " + std::to_string(x.dimension) + " does not match model dimension " +
                         std::to_string(featurizer.dimension));
    std::vector<double> z(bias);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const double* row = weights.data() + c * featurizer.dimension;
        double s = 0;
        for (const auto& [i, v] : x.entries) s += row[i] * v;
        z[c] += s;
    }
    return z;
}

void to_json(nlohmann::json& j, const Model& m) {
    j = nlohmann::json{{"format_version", Model::kFormatVersion},
                       {"model_id", m.model_id},
                       {"feature_hash", kFeatureHash},
                       {"classes", m.classes},
                       {"d", m.featurizer.dimension},
                       {"ngram_orders", m.featurizer.ngram_orders},
                       {"lowercase", m.featurizer.lowercase},
                       {"weights", m.weights},
                       {"bias", m.bias},
                       {"train_config", m.train_config},
                       {"seed", m.train_config.seed},
                       {"dataset_id", m.dataset_id},
                       {"loss_history", m.loss_history}};
}

void from_json(const nlohmann::json& j, Model& m) {
    try {
        if (j.at("format_version").get<int>() != Model::kFormatVersion)
            throw ModelError("unsupported model format_version");
        if (j.value("feature_hash", std::string(kFeatureHash)) != kFeatureHash)
            throw ModelError("unsupported feature hash " + j.at("feature_hash").get<std::string>());
        m.model_id = j.value("model_id", std::string());
        m.classes = j.at("classes").get<std::vector<std::string>>();
        m.featurizer.dimension = j.at("d").get<std::uint32_t>();
        m.featurizer.ngram_orders = j.at("ngram_orders").get<std::vector<int>>();
        m.featurizer.lowercase = j.value("lowercase", true);
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<std::vector<double>>();
        if (j.contains("train_config")) m.train_config = j["train_config"].get<TrainConfig>();
        m.dataset_id = j.value("dataset_id", std::string());
        m.loss_history = j.value("loss_history", std::vector<double>{});
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed model: ") + e.what());
    }
    m.validate();
}

void save_model(const Model& m, const std::filesystem::path& path) {
    write_file(path, nlohmann::json(m).dump() + "\n");
}

Model load_model(const std::filesystem::path& path) {
    const auto text = read_file(path);
    try {
        return nlohmann::json::parse(text).get<Model>();
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed model file: ") + e.what());
    }
}

std::vector<double> softmax(const std::vector<double>& z) {
    if (z.empty()) return {};
    const double mx = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double sum = 0;
    for (std::size_t i = 0; i < z.size(); ++i) sum += p[i] = std::exp(z[i] - mx);
    for (auto& v : p) v /= sum;
    return p;
}

std::size_t argmax(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

std::vector<double> predict_proba(const Model& m, const FeatureVector& x) { return softmax(m.logits(x)); }

std::vector<double> predict_proba(const Model& m, std::string_view t) {
    return predict_proba(m, featurize(t, m.featurizer));
}

std::size_t predict(const Model& m, std::string_view t) { return argmax(predict_proba(m, t)); }

double objective(const Model& m, const std::vector<FeatureVector>& xs, const std::vector<int>& ys,
                 double l2_penalty, std::vector<double>* grad_w, std::vector<double>* grad_b) {
    const std::size_t c_count = m.classes.size();
    const std::size_t d = m.featurizer.dimension;
    if (grad_w) grad_w->assign(m.weights.size(), 0.0);
    if (grad_b) grad_b->assign(c_count, 0.0);
    const double inv_n = xs.empty() ? 0.0 : 1.0 / static_cast<double>(xs.size());
    double loss = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const auto z = m.logits(xs[k]);
        const double mx = *std::max_element(z.begin(), z.end());
        double sum = 0;
        for (double v : z) sum += std::exp(v - mx);
        const auto y = static_cast<std::size_t>(ys[k]);
        loss += (mx + std::log(sum) - z[y]) * inv_n;
        if (!grad_w && !grad_b) continue;
        for (std::size_t c = 0; c < c_count; ++c) {
            const double g = (std::exp(z[c] - mx) / sum - (c == y ? 1.0 : 0.0)) * inv_n;
            if (grad_b) (*grad_b)[c] += g;
            if (grad_w)
                for (const auto& [i, v] : xs[k].entries) (*grad_w)[c * d + i] += g * v;
        }
    }
    double sq = 0;
    for (double w : m.weights) sq += w * w;
    loss += l2_penalty * sq;
    if (grad_w)
        for (std::size_t i = 0; i < m.weights.size(); ++i) (*grad_w)[i] += 2 * l2_penalty * m.weights[i];
    return loss;
}

namespace {

std::string content_id(const Model& m) {
    std::string key = nlohmann::json(m.classes).dump() + nlohmann::json(m.train_config).dump() + m.dataset_id;
    key.append(reinterpret_cast<const char*>(m.bias.data()), m.bias.size() * sizeof(double));
    key.append(reinterpret_cast<const char*>(m.weights.data()), m.weights.size() * sizeof(double));
    return "m-" + sha256_hex(key).substr(0, 16);
}

}  // namespace

Model train(const std::vector<FeatureVector>& xs, const std::vector<int>& ys, std::vector<std::string> classes,
            const TrainConfig& config) {
    config.validate();
    if (xs.size() != ys.size()) throw TrainingError("feature and label counts differ");
    if (std::set<std::string>(classes.begin(), classes.end()).size() != classes.size() || classes.empty())
        throw TrainingError("class list must be non-empty and unique");
    std::set<int> present;
    for (int y : ys) {
        if (y < 0 || static_cast<std::size_t>(y) >= classes.size())
            throw TrainingError("label " + std::to_string(y) + " out of range");
        present.insert(y);
    }
    if (present.size() < 2) throw TrainingError("training data must contain at least two classes");
    for (const auto& x : xs)
        if (x.dimension != config.dimension) throw TrainingError("feature dimension does not match train config");

    Model m = Model::zeros(std::move(classes), config.featurizer());
    m.train_config = config;
    const std::size_t n = xs.size();
    const std::size_t c_count = m.classes.size();
    const std::size_t d = config.dimension;
    const std::size_t batch =
        config.batch_size == 0 || static_cast<std::size_t>(config.batch_size) >= n ? n : static_cast<std::size_t>(config.batch_size);

    // W is kept as scale * weights so the L2 shrink costs O(1) per step.
    double scale = 1.0;
    auto fold_scale = [&] {
        if (scale == 1.0) return;
        for (auto& w : m.weights) w *= scale;
        scale = 1.0;
    };

    Rng rng(config.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> g(batch * c_count);
    std::vector<double> z(c_count);
    std::uint64_t step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (batch < n) rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            const double inv_b = 1.0 / static_cast<double>(end - start);
            for (std::size_t k = start; k < end; ++k) {
                const auto& x = xs[order[k]];
                for (std::size_t c = 0; c < c_count; ++c) {
                    const double* row = m.weights.data() + c * d;
                    double s = 0;
                    for (const auto& [i, v] : x.entries) s += row[i] * v;
                    z[c] = scale * s + m.bias[c];
                }
                const auto p = softmax(z);
                const auto y = static_cast<std::size_t>(ys[order[k]]);
                for (std::size_t c = 0; c < c_count; ++c)
                    g[(k - start) * c_count + c] = (p[c] - (c == y ? 1.0 : 0.0)) * inv_b;
            }
            const double lr = config.learning_rate / (1.0 + static_cast<double>(step) * config.decay);
            ++step;
            const double shrink = 1.0 - 2.0 * lr * config.l2_penalty;
            if (shrink <= 0) throw TrainingError("learning_rate * l2_penalty too large; weights would flip sign");
            scale *= shrink;
            for (std::size_t k = start; k < end; ++k) {
                const auto& x = xs[order[k]];
                for (std::size_t c = 0; c < c_count; ++c) {
                    const double gc = g[(k - start) * c_count + c];
                    m.bias[c] -= lr * gc;
                    if (gc == 0) continue;
                    double* row = m.weights.data() + c * d;
                    const double f = lr * gc / scale;
                    for (const auto& [i, v] : x.entries) row[i] -= f * v;
                }
            }
            if (scale < 1e-100) fold_scale();
        }
        fold_scale();
        const double loss = objective(m, xs, ys, config.l2_penalty);
        if (!std::isfinite(loss)) throw TrainingError("training diverged at epoch " + std::to_string(epoch));
        m.loss_history.push_back(loss);
    }
    m.model_id = content_id(m);
    return m;
}

Model train(const std::vector<std::string>& texts, const std::vector<int>& ys, std::vector<std::string> classes,
            const TrainConfig& config) {
    config.validate();
    std::vector<FeatureVector> xs;
    xs.reserve(texts.size());
    const auto fc = config.featurizer();
    for (const auto& t : texts) xs.push_back(featurize(t, fc));
    return train(xs, ys, std::move(classes), config);
}

Model train(const Dataset& dataset, const TrainConfig& config) {
    std::vector<std::string> texts;
    texts.reserve(dataset.articles.size());
    for (const auto& a : dataset.articles) texts.push_back(a.text);
    Model m = train(texts, dataset.labels(), dataset.classes(), config);
    m.dataset_id = dataset.dataset_id;
    m.model_id = content_id(m);
    return m;
}

NativeBackend::NativeBackend(std::shared_ptr<const Model> model) : model_(std::move(model)) {
    if (!model_) throw BackendError("native backend requires a model");
}

std::vector<std::vector<double>> NativeBackend::classify_batch(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(predict_proba(*model_, t));
    return out;
}

std::vector<std::vector<double>> checked_classify(Backend& backend, const std::vector<std::string>& texts,
                                                  const std::vector<std::string>& expected) {
    const auto reported = backend.classes();
    if (reported != expected)
        throw BackendError("backend '" + backend.name() + "' serves " + std::to_string(reported.size()) +
                           " classes that do not match the expected " + std::to_string(expected.size()));
    auto rows = backend.classify_batch(texts);
    if (rows.size() != texts.size())
        throw BackendError("backend '" + backend.name() + "' returned " + std::to_string(rows.size()) +
                           " rows for " + std::to_string(texts.size()) + " texts");
    for (const auto& r : rows) {
        if (r.size() != expected.size())
            throw BackendError("backend '" + backend.name() + "' returned a row of " + std::to_string(r.size()) +
                               " probabilities for " + std::to_string(expected.size()) + " classes");
        for (double p : r)
            if (!std::isfinite(p)) throw BackendError("backend '" + backend.name() + "' returned a non-finite value");
    }
    return rows;
}

std::unique_ptr<Backend> NativeTrainer::fit(const std::vector<std::string>& texts, const std::vector<int>& labels,
                                            const std::vector<std::string>& classes, const TrainConfig& config) {
    return std::make_unique<NativeBackend>(std::make_shared<const Model>(train(texts, labels, classes, config)));
}

BackendRegistry::BackendRegistry() {
    factories_["native"] = [] { return std::make_unique<NativeTrainer>(); };
}

BackendRegistry& BackendRegistry::instance() {
    static BackendRegistry r;
    return r;
}

void BackendRegistry::add(const std::string& name, Factory factory) {
    std::lock_guard lock(mu_);
    factories_[name] = std::move(factory);
}

std::unique_ptr<TrainableBackend> BackendRegistry::create(const std::string& name) const {
    std::lock_guard lock(mu_);
    auto it = factories_.find(name);
    if (it == factories_.end()) throw BackendError("unknown backend: " + name);
    return it->second();
}

std::vector<std::string> BackendRegistry::names() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [n, _] : factories_) out.push_back(n);
    return out;
}

}  // namespace newstrust
