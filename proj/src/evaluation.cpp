#include "newstrust/evaluation.hpp"

#include "newstrust/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <numeric>
#include <thread>

namespace newstrust {

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
    return t;
}

std::size_t ConfusionMatrix::off_diagonal() const {
    std::size_t t = 0;
    for (std::size_t i = 0; i < counts.size(); ++i)
        for (std::size_t j = 0; j < counts[i].size(); ++j)
            if (i != j) t += counts[i][j];
    return t;
}

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& predicted,
                          const std::vector<std::string>& classes) {
    if (truth.size() != predicted.size())
        throw EvaluationError("truth and prediction lengths differ (" + std::to_string(truth.size()) + " vs " +
                              std::to_string(predicted.size()) + ")");
    ConfusionMatrix cm;
    cm.classes = classes;
    cm.counts.assign(classes.size(), std::vector<std::size_t>(classes.size(), 0));
    const auto n = static_cast<int>(classes.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= n || predicted[i] < 0 || predicted[i] >= n)
            throw EvaluationError("label index out of range at position " + std::to_string(i));
        ++cm.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    }
    return cm;
}

ConfusionMatrix confusion(const std::vector<std::string>& truth, const std::vector<std::string>& predicted,
                          const std::vector<std::string>& classes) {
    auto index = [&](const std::string& name) {
        auto it = std::find(classes.begin(), classes.end(), name);
        if (it == classes.end()) throw EvaluationError("unknown label: " + name);
        return static_cast<int>(it - classes.begin());
    };
    std::vector<int> t, p;
    for (const auto& s : truth) t.push_back(index(s));
    for (const auto& s : predicted) p.push_back(index(s));
    return confusion(t, p, classes);
}

namespace {

double ratio(double num, double den) { return den == 0 ? 0.0 : num / den; }
double harmonic(double p, double r) {
    if (p == r) return p;  // exact, so pooled F1 equals accuracy bit for bit
    return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}

}  // namespace

MetricReport metrics(const ConfusionMatrix& cm) {
    const std::size_t m = cm.classes.size();
    MetricReport r;
    r.classes = cm.classes;
    r.n = cm.total();
    if (m == 0 || r.n == 0) throw EvaluationError("cannot compute metrics of an empty confusion matrix");
    std::size_t tp_sum = 0, fp_sum = 0, fn_sum = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t tp = cm.counts[i][i];
        std::size_t row = 0, col = 0;
        for (std::size_t j = 0; j < m; ++j) {
            row += cm.counts[i][j];
            col += cm.counts[j][i];
        }
        const std::size_t fp = col - tp, fn = row - tp;
        tp_sum += tp;
        fp_sum += fp;
        fn_sum += fn;
        const double p = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
        const double rc = ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
        r.precision.push_back(p);
        r.recall.push_back(rc);
        r.f1.push_back(harmonic(p, rc));
        r.support.push_back(row);
    }
    r.micro_precision = ratio(static_cast<double>(tp_sum), static_cast<double>(tp_sum + fp_sum));
    r.micro_recall = ratio(static_cast<double>(tp_sum), static_cast<double>(tp_sum + fn_sum));
    r.f1_micro = harmonic(r.micro_precision, r.micro_recall);
    r.f1_macro = std::accumulate(r.f1.begin(), r.f1.end(), 0.0) / static_cast<double>(m);
    r.accuracy = static_cast<double>(tp_sum) / static_cast<double>(r.n);
    return r;
}

AdjacencySplit adjacency_decomposition(const ConfusionMatrix& cm) {
    if (cm.classes != class_names(LabelKind::trust_level))
        throw EvaluationError("adjacency decomposition needs the five ordinal trust levels in order");
    AdjacencySplit s;
    for (std::size_t i = 0; i < cm.counts.size(); ++i)
        for (std::size_t j = 0; j < cm.counts[i].size(); ++j) {
            if (i == j) continue;
            (i + 1 == j || j + 1 == i ? s.adjacent : s.distant) += cm.counts[i][j];
        }
    return s;
}

SummaryStat summarize(const std::vector<double>& values) {
    SummaryStat s;
    if (values.empty()) return s;
    auto v = values;
    std::sort(v.begin(), v.end());
    s.min = v.front();
    s.max = v.back();
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    const auto mid = v.size() / 2;
    s.median = v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2;
    // guard the ordering against rounding in the mean of two
    s.median = std::clamp(s.median, s.min, s.max);
    return s;
}

namespace {

FoldResult run_fold(const Dataset& dataset, const FoldAssignment& folds, int f, TrainableBackend& trainer,
                    const TrainConfig& config, const std::vector<std::string>& classes) {
    const auto slices = fold_slices(dataset, folds, f);
    std::vector<std::string> train_texts, test_texts;
    std::vector<int> train_labels, test_labels;
    for (const auto* a : slices.train) {
        train_texts.push_back(a->text);
        train_labels.push_back(label_index(*a, dataset.label_kind));
    }
    for (const auto* a : slices.test) {
        test_texts.push_back(a->text);
        test_labels.push_back(label_index(*a, dataset.label_kind));
    }
    if (test_texts.empty()) throw EvaluationError("test slice is empty");
    auto backend = trainer.fit(train_texts, train_labels, classes, config);
    const auto rows = checked_classify(*backend, test_texts, classes);
    std::vector<int> predicted;
    predicted.reserve(rows.size());
    for (const auto& r : rows) predicted.push_back(static_cast<int>(argmax(r)));

    FoldResult out;
    out.fold = f;
    out.train_size = slices.train.size();
    out.test_size = slices.test.size();
    out.model_id = backend->model_id();
    out.confusion = confusion(test_labels, predicted, classes);
    out.report = metrics(out.confusion);
    if (dataset.label_kind == LabelKind::trust_level) out.adjacency = adjacency_decomposition(out.confusion);
    return out;
}

}  // namespace

CVSummary cross_validate(const Dataset& dataset, const FoldAssignment& folds, TrainableBackend& trainer,
                         const TrainConfig& config, const CVOptions& options) {
    if (folds.k < 2) throw EvaluationError("fold assignment must have k >= 2");
    const auto classes = dataset.classes();
    CVSummary s;
    s.dataset_id = dataset.dataset_id;
    s.label_kind = std::string(to_string(dataset.label_kind));
    s.backend = trainer.name();
    s.k = folds.k;
    s.seed = folds.seed;
    s.classes = classes;

    std::vector<std::optional<FoldResult>> results(static_cast<std::size_t>(folds.k));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(folds.k));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int f = next++; f < folds.k; f = next++) {
            try {
                if (options.cancelled && options.cancelled()) throw JobStateError("evaluation cancelled");
                results[static_cast<std::size_t>(f)] = run_fold(dataset, folds, f, trainer, config, classes);
            } catch (...) {
                errors[static_cast<std::size_t>(f)] = std::current_exception();
            }
        }
    };
    const int workers = std::clamp(options.workers, 1, folds.k);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (int f = 0; f < folds.k; ++f) {
        if (!errors[static_cast<std::size_t>(f)]) continue;
        try {
            std::rethrow_exception(errors[static_cast<std::size_t>(f)]);
        } catch (const JobStateError&) {
            throw;
        } catch (const std::exception& e) {
            throw EvaluationError("fold " + std::to_string(f) + ": " + e.what());
        }
    }
    std::vector<double> micro, macro, acc;
    for (auto& r : results) {
        s.folds.push_back(std::move(*r));
        micro.push_back(s.folds.back().report.f1_micro);
        macro.push_back(s.folds.back().report.f1_macro);
        acc.push_back(s.folds.back().report.accuracy);
    }
    s.f1_micro = summarize(micro);
    s.f1_macro = summarize(macro);
    s.accuracy = summarize(acc);
    return s;
}

CVSummary coarse_evaluate(const Dataset& dataset, const FoldAssignment& folds, TrainableBackend& trainer,
                          const TrainConfig& config, const CVOptions& options) {
    if (dataset.label_kind == LabelKind::topic)
        throw EvaluationError("coarse evaluation needs trust labels, not topics");
    if (dataset.label_kind == LabelKind::coarse_trust) return cross_validate(dataset, folds, trainer, config, options);
    return cross_validate(relabel(dataset, LabelKind::coarse_trust), folds, trainer, config, options);
}

void to_json(nlohmann::json& j, const ConfusionMatrix& cm) {
    j = nlohmann::json{{"classes", cm.classes}, {"counts", cm.counts}, {"total", cm.total()}};
}

void to_json(nlohmann::json& j, const MetricReport& r) {
    auto per_class = nlohmann::json::array();
    for (std::size_t i = 0; i < r.classes.size(); ++i)
        per_class.push_back({{"class", r.classes[i]},
                             {"precision", r.precision[i]},
                             {"recall", r.recall[i]},
                             {"f1", r.f1[i]},
                             {"support", r.support[i]}});
    j = nlohmann::json{{"per_class", per_class},        {"micro_precision", r.micro_precision},
                       {"micro_recall", r.micro_recall}, {"f1_micro", r.f1_micro},
                       {"f1_macro", r.f1_macro},         {"accuracy", r.accuracy},
                       {"n", r.n}};
}

void to_json(nlohmann::json& j, const SummaryStat& s) {
    j = nlohmann::json{{"mean", s.mean}, {"median", s.median}, {"min", s.min}, {"max", s.max}};
}

void to_json(nlohmann::json& j, const FoldResult& f) {
    j = nlohmann::json{{"fold", f.fold},
                       {"train_size", f.train_size},
                       {"test_size", f.test_size},
                       {"model_id", f.model_id},
                       {"confusion", f.confusion},
                       {"metrics", f.report}};
    if (f.adjacency)
        j["adjacency"] = {{"adjacent", f.adjacency->adjacent}, {"distant", f.adjacency->distant}};
}

void to_json(nlohmann::json& j, const CVSummary& s) {
    auto folds = nlohmann::json::array();
    for (const auto& f : s.folds)
        folds.push_back({{"fold", f.fold},
                         {"f1_micro", f.report.f1_micro},
                         {"f1_macro", f.report.f1_macro},
                         {"accuracy", f.report.accuracy},
                         {"test_size", f.test_size},
                         {"model_id", f.model_id}});
    j = nlohmann::json{{"dataset_id", s.dataset_id}, {"label_kind", s.label_kind}, {"backend", s.backend},
                       {"k", s.k},                   {"seed", s.seed},             {"classes", s.classes},
                       {"folds", folds},             {"f1_micro", s.f1_micro},     {"f1_macro", s.f1_macro},
                       {"accuracy", s.accuracy}};
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string confusion_csv(const ConfusionMatrix& cm) {
    std::string out = "true\\predicted";
    for (const auto& c : cm.classes) out += "," + csv_field(c);
    out += '\n';
    for (std::size_t i = 0; i < cm.classes.size(); ++i) {
        out += csv_field(cm.classes[i]);
        for (auto v : cm.counts[i]) out += "," + std::to_string(v);
        out += '\n';
    }
    return out;
}

std::string format_summary(const CVSummary& s) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "dataset %s  labels %s  backend %s  k=%d\n", s.dataset_id.c_str(),
                  s.label_kind.c_str(), s.backend.c_str(), s.k);
    out += buf;
    out += "fold    f1_micro  f1_macro  accuracy     n\n";
    for (const auto& f : s.folds) {
        std::snprintf(buf, sizeof buf, "%4d    %8.4f  %8.4f  %8.4f  %4zu\n", f.fold, f.report.f1_micro,
                      f.report.f1_macro, f.report.accuracy, f.test_size);
        out += buf;
    }
    auto line = [&](const char* name, const SummaryStat& st) {
        std::snprintf(buf, sizeof buf, "%-9s mean %.4f  median %.4f  min %.4f  max %.4f\n", name, st.mean, st.median,
                      st.min, st.max);
        out += buf;
    };
    line("f1_micro", s.f1_micro);
    line("f1_macro", s.f1_macro);
    line("accuracy", s.accuracy);
    return out;
}

void write_report(const CVSummary& s, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_file(dir / "summary.json", nlohmann::json(s).dump(2) + "\n");
    write_file(dir / "summary.txt", format_summary(s));
    for (const auto& f : s.folds) {
        const auto stem = "fold_" + std::to_string(f.fold);
        write_file(dir / (stem + ".json"), nlohmann::json(f).dump(2) + "\n");
        write_file(dir / (stem + "_confusion.csv"), confusion_csv(f.confusion));
    }
}

}  // namespace newstrust
