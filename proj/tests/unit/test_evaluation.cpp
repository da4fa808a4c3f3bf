#include "corpus.hpp"

#include "newstrust/errors.hpp"
#include "newstrust/evaluation.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <filesystem>

using namespace newstrust;
using namespace newstrust::testing;

namespace {

ConfusionMatrix square(std::vector<std::vector<std::size_t>> counts) {
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < counts.size(); ++i) cm.classes.push_back("c" + std::to_string(i));
    cm.counts = std::move(counts);
    return cm;
}

ConfusionMatrix levels(std::vector<std::vector<std::size_t>> counts) {
    auto cm = square(std::move(counts));
    cm.classes = class_names(LabelKind::trust_level);
    return cm;
}

// Returns a constant label for every text, ignoring training data.
class ConstantTrainer : public TrainableBackend {
public:
    std::string name() const override { return "constant"; }
    std::unique_ptr<Backend> fit(const std::vector<std::string>&, const std::vector<int>&,
                                 const std::vector<std::string>& classes, const TrainConfig&) override;
};

class ConstantBackend : public Backend {
public:
    explicit ConstantBackend(std::vector<std::string> c) : classes_(std::move(c)) {}
    std::string name() const override { return "constant"; }
    std::vector<std::string> classes() const override { return classes_; }
    std::vector<std::vector<double>> classify_batch(const std::vector<std::string>& texts) override {
        std::vector<double> row(classes_.size(), 0.0);
        row[0] = 1.0;
        return std::vector<std::vector<double>>(texts.size(), row);
    }

private:
    std::vector<std::string> classes_;
};

std::unique_ptr<Backend> ConstantTrainer::fit(const std::vector<std::string>&, const std::vector<int>&,
                                              const std::vector<std::string>& classes, const TrainConfig&) {
    return std::make_unique<ConstantBackend>(classes);
}

class FailingTrainer : public TrainableBackend {
public:
    std::string name() const override { return "failing"; }
    std::unique_ptr<Backend> fit(const std::vector<std::string>&, const std::vector<int>&,
                                 const std::vector<std::string>&, const TrainConfig&) override {
        throw BackendError("service unreachable");
    }
};

Dataset small_levels() {
    const auto corpus = make_corpus({.articles_per_source = 10, .boilerplate = false});
    return build_dataset(corpus.articles, corpus.registry, LabelKind::trust_level);
}

}  // namespace

TEST_CASE("confusion") {
    const std::vector<std::string> cls = {"A", "B", "C"};
    const auto cm = confusion(std::vector<std::string>{"A", "A", "B", "C"}, std::vector<std::string>{"A", "B", "B", "C"}, cls);
    CHECK(cm.counts == std::vector<std::vector<std::size_t>>{{1, 1, 0}, {0, 1, 0}, {0, 0, 1}});
    CHECK(cm.total() == 4);
    CHECK(cm.off_diagonal() == 1);
    const auto perfect = confusion(std::vector<int>{0, 1, 2, 2}, std::vector<int>{0, 1, 2, 2}, cls);
    CHECK(perfect.off_diagonal() == 0);
    const auto empty = confusion(std::vector<int>{}, std::vector<int>{}, cls);
    CHECK(empty.total() == 0);
    CHECK(empty.counts.size() == 3);
    CHECK_THROWS_AS(confusion(std::vector<std::string>{"A"}, std::vector<std::string>{"D"}, cls), EvaluationError);
    CHECK_THROWS_AS(confusion(std::vector<int>{0, 1}, std::vector<int>{0}, cls), EvaluationError);
    CHECK_THROWS_AS(confusion(std::vector<int>{3}, std::vector<int>{0}, cls), EvaluationError);
}

TEST_CASE("metrics of the four-example case") {
    const auto cm = confusion(std::vector<std::string>{"A", "A", "B", "C"}, std::vector<std::string>{"A", "B", "B", "C"},
                              {"A", "B", "C"});
    const auto m = metrics(cm);
    CHECK(m.precision == std::vector<double>{1.0, 0.5, 1.0});
    CHECK(m.recall == std::vector<double>{0.5, 1.0, 1.0});
    CHECK(m.f1_macro == doctest::Approx(0.7778).epsilon(1e-4));
    CHECK(m.f1_micro == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(m.accuracy == 0.75);
    CHECK(m.support == std::vector<std::size_t>{2, 1, 1});
    CHECK(m.n == 4);
}

TEST_CASE("metric conventions") {
    const auto diag = metrics(square({{3, 0}, {0, 2}}));
    CHECK(diag.f1_macro == 1.0);
    CHECK(diag.f1_micro == 1.0);
    CHECK(diag.accuracy == 1.0);
    // third class never appears: scores 0 and still counts in the macro mean
    const auto absent = metrics(square({{3, 0, 0}, {0, 2, 0}, {0, 0, 0}}));
    CHECK(absent.f1[2] == 0.0);
    CHECK(absent.f1_macro == doctest::Approx(2.0 / 3));
    CHECK_THROWS_AS(metrics(square({{0, 0}, {0, 0}})), EvaluationError);
}

TEST_CASE("metrics are invariant under class permutation") {
    Rng rng(6);
    for (int t = 0; t < 200; ++t) {
        const std::size_t k = 2 + rng.below(5);
        std::vector<std::vector<std::size_t>> c(k, std::vector<std::size_t>(k));
        for (auto& row : c)
            for (auto& v : row) v = rng.below(30);
        c[0][0] += 1;
        std::vector<std::size_t> perm(k);
        for (std::size_t i = 0; i < k; ++i) perm[i] = i;
        rng.shuffle(std::span<std::size_t>(perm));
        auto p = c;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) p[perm[i]][perm[j]] = c[i][j];
        const auto a = metrics(square(c)), b = metrics(square(p));
        CHECK(a.f1_micro == b.f1_micro);
        CHECK(a.f1_macro == doctest::Approx(b.f1_macro).epsilon(1e-12));
        for (std::size_t i = 0; i < k; ++i) CHECK(a.f1[i] == b.f1[perm[i]]);
        for (double v : a.f1) CHECK((v >= 0 && v <= 1));
        CHECK((a.f1_macro >= 0 && a.f1_macro <= 1));
    }
}

TEST_CASE("adjacency decomposition") {
    std::vector<std::vector<std::size_t>> c(5, std::vector<std::size_t>(5, 0));
    for (int i = 0; i < 5; ++i) c[i][i] = 40;
    CHECK(adjacency_decomposition(levels(c)).adjacent == 0);
    CHECK(adjacency_decomposition(levels(c)).distant == 0);
    // 17 one bin away, 11 further
    c[0][1] = 5;
    c[1][0] = 4;
    c[2][3] = 3;
    c[4][3] = 5;
    c[0][2] = 2;
    c[0][4] = 3;
    c[3][1] = 4;
    c[4][2] = 2;
    auto split = adjacency_decomposition(levels(c));
    CHECK(split.adjacent == 17);
    CHECK(split.distant == 11);
    CHECK(split.adjacent + split.distant == levels(c).off_diagonal());

    std::vector<std::vector<std::size_t>> near(5, std::vector<std::size_t>(5, 0));
    near[1][2] = 6;
    near[3][4] = 1;
    split = adjacency_decomposition(levels(near));
    CHECK(split.adjacent == 7);
    CHECK(split.distant == 0);
    CHECK_THROWS_AS(adjacency_decomposition(square({{1, 0}, {0, 1}})), EvaluationError);
}

TEST_CASE("summaries") {
    const auto s = summarize({0.9, 0.7, 0.8, 1.0});
    CHECK(s.mean == doctest::Approx(0.85));
    CHECK(s.median == doctest::Approx(0.85));
    CHECK(s.min == 0.7);
    CHECK(s.max == 1.0);
    const auto same = summarize({0.42, 0.42, 0.42});
    CHECK(same.mean == doctest::Approx(0.42));
    CHECK(same.median == 0.42);
    CHECK(summarize({3, 1, 2}).median == 2);
}

TEST_CASE("cross_validate with the native trainer") {
    const auto ds = small_levels();
    const auto folds = stratified_kfold(ds, 10, 1);
    NativeTrainer trainer;
    TrainConfig cfg;
    cfg.dimension = 1u << 14;
    cfg.epochs = 4;
    const auto cv = cross_validate(ds, folds, trainer, cfg);
    REQUIRE(cv.folds.size() == 10);
    CHECK(cv.k == 10);
    CHECK(cv.dataset_id == ds.dataset_id);
    CHECK(cv.label_kind == "trust_level");
    std::size_t tested = 0;
    for (const auto& f : cv.folds) {
        tested += f.test_size;
        CHECK(f.train_size + f.test_size == ds.articles.size());
        CHECK(f.confusion.total() == f.test_size);
        REQUIRE(f.adjacency);
        CHECK(f.adjacency->adjacent + f.adjacency->distant == f.confusion.off_diagonal());
    }
    CHECK(tested == ds.articles.size());
    CHECK(cv.f1_macro.min <= cv.f1_macro.median);
    CHECK(cv.f1_macro.median <= cv.f1_macro.max);

    CVOptions par;
    par.workers = 3;
    const auto cv2 = cross_validate(ds, folds, trainer, cfg, par);
    CHECK(nlohmann::json(cv2).dump() == nlohmann::json(cv).dump());
}

TEST_CASE("coarse evaluation") {
    // the merged binary classes need more updates than the five-way problem
    // before the prior stops dominating, so this uses a larger corpus
    const auto corpus = make_corpus({.articles_per_source = 50, .boilerplate = false});
    const auto ds = build_dataset(corpus.articles, corpus.registry, LabelKind::trust_level);
    const auto folds = stratified_kfold(ds, 5, 2);
    NativeTrainer trainer;
    TrainConfig cfg;
    cfg.dimension = 1u << 16;
    const auto coarse = coarse_evaluate(ds, folds, trainer, cfg);
    CHECK(coarse.classes == std::vector<std::string>{"untrusted", "trusted"});
    for (const auto& f : coarse.folds) {
        CHECK(f.confusion.counts.size() == 2);
        CHECK_FALSE(f.adjacency);
    }
    const auto relabeled = relabel(ds, LabelKind::coarse_trust);
    for (std::size_t i = 0; i < ds.articles.size(); ++i)
        CHECK(relabeled.labels()[i] == static_cast<int>(coarsen_level(ds.articles[i].trust_level)));
    const auto fine = cross_validate(ds, folds, trainer, cfg);
    CHECK(coarse.f1_macro.mean >= fine.f1_macro.mean);
    CHECK_THROWS_AS(coarse_evaluate(relabel(ds, LabelKind::topic), folds, trainer, cfg), EvaluationError);
}

TEST_CASE("mock backends and failures") {
    const auto ds = small_levels();
    const auto folds = stratified_kfold(ds, 5, 2);
    ConstantTrainer constant;
    const auto cv = cross_validate(ds, folds, constant, {});
    for (const auto& f : cv.folds) {
        // everything predicted as class 0
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 1; j < 5; ++j) CHECK(f.confusion.counts[i][j] == 0);
        CHECK(f.report.accuracy == doctest::Approx(0.2));
    }
    FailingTrainer failing;
    try {
        cross_validate(ds, folds, failing, {});
        FAIL("expected EvaluationError");
    } catch (const EvaluationError& e) {
        CHECK(std::string(e.what()).find("fold 0") != std::string::npos);
    }
    CVOptions stop;
    stop.cancelled = [] { return true; };
    CHECK_THROWS_AS(cross_validate(ds, folds, constant, {}, stop), JobStateError);
}

TEST_CASE("report files") {
    const auto ds = small_levels();
    ConstantTrainer constant;
    const auto cv = cross_validate(ds, stratified_kfold(ds, 3, 2), constant, {});
    const auto dir = std::filesystem::temp_directory_path() / ("newstrust-report-" + uuid4());
    write_report(cv, dir);
    for (const char* f : {"summary.json", "summary.txt", "fold_0.json", "fold_2_confusion.csv"})
        CHECK(std::filesystem::exists(dir / f));
    const auto csv = read_file(dir / "fold_0_confusion.csv");
    CHECK(csv.find("Proceed with Maximum Caution") != std::string::npos);
    const auto j = nlohmann::json::parse(read_file(dir / "summary.json"));
    CHECK(j["folds"].size() == 3);
    CHECK(j.contains("f1_macro"));
    std::filesystem::remove_all(dir);
}
