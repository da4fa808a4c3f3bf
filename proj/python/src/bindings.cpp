#include "newstrust/classifier.hpp"
#include "newstrust/cleaner.hpp"
#include "newstrust/dataset.hpp"
#include "newstrust/errors.hpp"
#include "newstrust/evaluation.hpp"
#include "newstrust/registry.hpp"
#include "newstrust/sampler.hpp"
#include "newstrust/service.hpp"

#include <nlohmann/json.hpp>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>

namespace py = pybind11;
using json = nlohmann::json;
using namespace newstrust;

namespace {

py::object to_py(const json& j) {
    switch (j.type()) {
        case json::value_t::null: return py::none();
        case json::value_t::boolean: return py::bool_(j.get<bool>());
        case json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
        case json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
        case json::value_t::number_float: return py::float_(j.get<double>());
        case json::value_t::string: return py::str(j.get_ref<const std::string&>());
        case json::value_t::array: {
            py::list out;
            for (const auto& v : j) out.append(to_py(v));
            return std::move(out);
        }
        case json::value_t::object: {
            py::dict out;
            for (const auto& [k, v] : j.items()) out[py::str(k)] = to_py(v);
            return std::move(out);
        }
        default: return py::none();
    }
}

json from_py(const py::handle& obj) {
    if (obj.is_none()) return json::object();
    const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
    return json::parse(text);
}

py::dict level_dict(const TrustLevel& l) {
    py::dict d;
    d["index"] = l.index;
    d["name"] = std::string(l.name);
    d["score_lo"] = l.score_lo;
    d["score_hi"] = l.score_hi;
    d["coarse"] = std::string(to_string(coarsen_level(l)));
    return d;
}

using ModelPtr = std::shared_ptr<Model>;

}  // namespace

PYBIND11_MODULE(_newstrust, m) {
    m.doc() = "Article-level news trust classification";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ModelError>(m, "ModelError", base.ptr());
    py::register_exception<TrainingError>(m, "TrainingError", base.ptr());
    py::register_exception<StratificationError>(m, "StratificationError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());

    m.def("trust_levels", [] {
        py::list out;
        for (const auto& l : trust_levels()) out.append(level_dict(l));
        return out;
    });
    m.def("level_from_score", [](int score) { return level_dict(level_from_score(score)); }, py::arg("score"));
    m.def("coarse_from_score", [](int score) { return std::string(to_string(coarse_level_from_score(score))); },
          py::arg("score"));
    m.def("class_names", [](const std::string& kind) { return class_names(label_kind_from_string(kind)); },
          py::arg("kind"));
    m.def("tokenize", &tokenize, py::arg("text"));

    py::class_<Model, ModelPtr>(m, "Model")
        .def_static("load", [](const std::filesystem::path& p) { return std::make_shared<Model>(load_model(p)); })
        .def("save", [](const Model& self, const std::filesystem::path& p) { save_model(self, p); })
        .def_property_readonly("model_id", [](const Model& self) { return self.model_id; })
        .def_property_readonly("dataset_id", [](const Model& self) { return self.dataset_id; })
        .def_property_readonly("classes", [](const Model& self) { return self.classes; })
        .def_property_readonly("dimension", [](const Model& self) { return self.featurizer.dimension; })
        .def_property_readonly("loss_history", [](const Model& self) { return self.loss_history; })
        .def("predict_proba", [](const Model& self, const std::string& t) { return predict_proba(self, t); })
        .def("predict", [](const Model& self, const std::string& t) { return self.classes[predict(self, t)]; });

    m.def(
        "train",
        [](const std::vector<std::string>& texts, const std::vector<std::string>& labels,
           std::vector<std::string> classes, const py::object& config) {
            if (texts.size() != labels.size()) throw ValidationError("texts and labels differ in length");
            std::vector<int> ys;
            ys.reserve(labels.size());
            for (const auto& l : labels) {
                const auto it = std::find(classes.begin(), classes.end(), l);
                if (it == classes.end()) throw ValidationError("label not among classes: " + l);
                ys.push_back(static_cast<int>(it - classes.begin()));
            }
            const auto tc = config.is_none() ? TrainConfig{} : from_py(config).get<TrainConfig>();
            tc.validate();
            py::gil_scoped_release release;
            return std::make_shared<Model>(train(texts, ys, std::move(classes), tc));
        },
        py::arg("texts"), py::arg("labels"), py::arg("classes"), py::arg("config") = py::none());

    m.def(
        "classify_article", [](const std::string& text, const ModelPtr& model) {
            return to_py(json(classify_article(text, *model)));
        },
        py::arg("text"), py::arg("model"));

    m.def(
        "assess_source",
        [](const std::string& domain, const std::vector<std::string>& texts, const ModelPtr& trust,
           const ModelPtr& topic, const std::string& rule, std::size_t min_articles) {
            AssessOptions opt;
            opt.rule = aggregation_rule_from_string(rule);
            opt.min_articles = min_articles;
            return to_py(json(assess_source(domain, texts, *trust, topic.get(), opt)));
        },
        py::arg("domain"), py::arg("texts"), py::arg("model"), py::arg("topic_model") = nullptr,
        py::arg("rule") = "plurality", py::arg("min_articles") = 40);

    m.def(
        "balanced_sample",
        [](const py::list& candidates, std::size_t n, std::uint64_t seed) {
            std::vector<SampleCandidate> cands;
            for (const auto& c : candidates) {
                const auto j = from_py(c);
                SampleCandidate sc;
                sc.article_id = j.at("article_id").get<std::string>();
                sc.level = j.at("trust_level").get<int>();
                sc.topic = topic_from_id(j.at("topic").get<std::string>());
                cands.push_back(std::move(sc));
            }
            return to_py(json(balanced_sample(cands, n, seed)));
        },
        py::arg("candidates"), py::arg("n"), py::arg("seed") = 0);

    m.def(
        "metrics",
        [](const std::vector<std::string>& truth, const std::vector<std::string>& predicted,
           const std::vector<std::string>& classes) {
            const auto cm = confusion(truth, predicted, classes);
            json out = metrics(cm);
            out["confusion"] = cm;
            return to_py(out);
        },
        py::arg("truth"), py::arg("predicted"), py::arg("classes"));

    m.def("stratified_kfold", &stratified_kfold_labels, py::arg("labels"), py::arg("k"), py::arg("seed") = 0,
          py::arg("class_names") = std::vector<std::string>{});

    m.def(
        "allocate",
        [](const std::vector<double>& proportions, int total) {
            if (proportions.size() != kTrustLevelCount) throw ValidationError("expected five proportions");
            LevelDistribution d;
            std::copy(proportions.begin(), proportions.end(), d.proportions.begin());
            const auto a = allocate(d, total);
            return std::vector<int>(a.begin(), a.end());
        },
        py::arg("proportions"), py::arg("total"));

    m.def(
        "clean_corpus",
        [](const py::list& articles, const py::object& config) {
            std::vector<RawArticle> raw;
            for (const auto& a : articles) raw.push_back(from_py(a).get<RawArticle>());
            const auto cfg = config.is_none() ? CleaningConfig{} : from_py(config).get<CleaningConfig>();
            const auto result = clean_corpus(raw, cfg);
            return to_py(json{{"articles", result.articles}, {"report", result.report}});
        },
        py::arg("articles"), py::arg("config") = py::none());
}
