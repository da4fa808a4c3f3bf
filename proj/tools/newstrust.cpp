#include "newstrust/classifier.hpp"
#include "newstrust/cleaner.hpp"
#include "newstrust/crawler.hpp"
#include "newstrust/dataset.hpp"
#include "newstrust/errors.hpp"
#include "newstrust/evaluation.hpp"
#include "newstrust/extractor.hpp"
#include "newstrust/jsonl.hpp"
#include "newstrust/log.hpp"
#include "newstrust/registry.hpp"
#include "newstrust/sampler.hpp"
#include "newstrust/server.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <csignal>
#include <iostream>

using namespace newstrust;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json load_json(const fs::path& p) {
    try {
        return json::parse(read_file(p));
    } catch (const json::exception& e) {
        throw ValidationError(p.string() + " is not valid JSON: " + e.what());
    }
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

Server* g_server = nullptr;
extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"News publisher trustworthiness pipeline"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "debug, info, warn, error or off")
        ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));

    // sample-sources
    auto* sample = app.add_subcommand("sample-sources", "Stratified source selection for one topic");
    std::string s_topic, s_registry;
    int s_n = 0;
    std::uint64_t s_seed = 0;
    sample->add_option("--topic", s_topic, "topic id")->required();
    sample->add_option("--n", s_n, "number of sources")->required()->check(CLI::PositiveNumber);
    sample->add_option("--seed", s_seed, "random seed")->required();
    sample->add_option("--registry", s_registry, "registry JSON")->required()->check(CLI::ExistingFile);

    // crawl
    auto* crawl = app.add_subcommand("crawl", "Crawl one source into a WARC archive");
    std::string c_config, c_out, c_registry = "registry.json";
    std::optional<int> c_max_pages;
    bool c_ignore_robots = false;
    crawl->add_option("--config", c_config, "crawl config JSON")->required()->check(CLI::ExistingFile);
    crawl->add_option("--out", c_out, "output directory")->required();
    crawl->add_option("--registry", c_registry, "registry JSON")->check(CLI::ExistingFile);
    crawl->add_option("--max-pages", c_max_pages, "override max_pages");
    crawl->add_flag("--ignore-robots", c_ignore_robots, "do not consult robots.txt");

    // extract
    auto* extract = app.add_subcommand("extract", "Extract article text from WARC archives");
    std::vector<std::string> e_warcs;
    std::string e_rules, e_out, e_report;
    extract->add_option("--warc", e_warcs, "WARC file(s)")->required()->check(CLI::ExistingFile);
    extract->add_option("--rules", e_rules, "extraction rules JSON")->required()->check(CLI::ExistingFile);
    extract->add_option("--out", e_out, "output JSONL")->required();
    extract->add_option("--report", e_report, "extraction report JSON");

    // clean
    auto* clean = app.add_subcommand("clean", "Remove boilerplate and short articles");
    std::string k_in, k_out, k_report, k_config;
    std::optional<int> k_min_words;
    clean->add_option("--in", k_in, "input JSONL")->required()->check(CLI::ExistingFile);
    clean->add_option("--out", k_out, "output JSONL")->required();
    clean->add_option("--report", k_report, "report JSON")->required();
    clean->add_option("--min-words", k_min_words, "minimum word count");
    clean->add_option("--config", k_config, "cleaning config JSON")->check(CLI::ExistingFile);

    // build-dataset
    auto* build = app.add_subcommand("build-dataset", "Label cleaned articles into a dataset");
    std::string b_in, b_registry, b_labels, b_out;
    build->add_option("--in", b_in, "cleaned JSONL")->required()->check(CLI::ExistingFile);
    build->add_option("--registry", b_registry, "registry JSON")->required()->check(CLI::ExistingFile);
    build->add_option("--labels", b_labels, "label kind")->required()->check(CLI::IsMember({"trust_level", "topic", "coarse_trust"}));
    build->add_option("--out", b_out, "dataset directory")->required();

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Level x topic table of a dataset");
    std::string t_dataset;
    bool t_json = false;
    stats_cmd->add_option("--dataset", t_dataset, "dataset directory")->required()->check(CLI::ExistingDirectory);
    stats_cmd->add_flag("--json", t_json, "print JSON instead of a table");

    // folds
    auto* folds_cmd = app.add_subcommand("folds", "Stratified k-fold assignment");
    std::string f_dataset, f_out, f_labels;
    int f_k = 10;
    std::uint64_t f_seed = 0;
    folds_cmd->add_option("--dataset", f_dataset, "dataset directory")->required()->check(CLI::ExistingDirectory);
    folds_cmd->add_option("--k", f_k, "number of folds")->check(CLI::Range(2, 1000));
    folds_cmd->add_option("--seed", f_seed, "random seed");
    folds_cmd->add_option("--labels", f_labels, "stratify on another label kind")
        ->check(CLI::IsMember({"trust_level", "topic", "coarse_trust"}));
    folds_cmd->add_option("--out", f_out, "folds JSON")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the native classifier");
    std::string r_dataset, r_labels, r_out, r_config;
    std::optional<int> r_epochs;
    std::optional<double> r_lr;
    std::optional<std::uint64_t> r_seed;
    train_cmd->add_option("--dataset", r_dataset, "dataset directory")->required()->check(CLI::ExistingDirectory);
    train_cmd->add_option("--labels", r_labels, "label kind")->required()->check(CLI::IsMember({"trust_level", "topic", "coarse_trust"}));
    train_cmd->add_option("--out", r_out, "model JSON")->required();
    train_cmd->add_option("--epochs", r_epochs, "epochs");
    train_cmd->add_option("--lr", r_lr, "learning rate");
    train_cmd->add_option("--seed", r_seed, "random seed");
    train_cmd->add_option("--train-config", r_config, "train config JSON")->check(CLI::ExistingFile);

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Classify one text file");
    std::string p_model, p_text;
    predict_cmd->add_option("--model", p_model, "model JSON")->required()->check(CLI::ExistingFile);
    predict_cmd->add_option("--text-file", p_text, "UTF-8 text file")->required()->check(CLI::ExistingFile);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Cross-validate a backend");
    std::string v_dataset, v_folds, v_backend = "native", v_config, v_out, v_labels;
    bool v_coarse = false;
    int v_workers = 1;
    eval_cmd->add_option("--dataset", v_dataset, "dataset directory")->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--folds", v_folds, "folds JSON")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--backend", v_backend, "trainable backend name");
    eval_cmd->add_option("--train-config", v_config, "train config JSON")->check(CLI::ExistingFile);
    eval_cmd->add_option("--out", v_out, "report directory")->required();
    eval_cmd->add_option("--labels", v_labels, "evaluate another label kind")
        ->check(CLI::IsMember({"trust_level", "topic", "coarse_trust"}));
    eval_cmd->add_flag("--coarse", v_coarse, "collapse trust levels to untrusted/trusted");
    eval_cmd->add_option("--workers", v_workers, "folds trained in parallel")->check(CLI::PositiveNumber);

    // serve
    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    std::string w_dir, w_host = "127.0.0.1";
    int w_port = 8080;
    serve->add_option("--workspace", w_dir, "workspace directory")->required();
    serve->add_option("--port", w_port, "TCP port")->check(CLI::Range(0, 65535));
    serve->add_option("--host", w_host, "bind address");

    CLI11_PARSE(app, argc, argv);

    static const std::map<std::string, log::Level> levels = {{"debug", log::Level::debug},
                                                             {"info", log::Level::info},
                                                             {"warn", log::Level::warn},
                                                             {"error", log::Level::error},
                                                             {"off", log::Level::off}};
    log::set_level(levels.at(log_level));

    try {
        if (*sample) {
            const auto registry = Registry::load(s_registry);
            const auto topic = topic_from_id(s_topic);
            const auto sources = registry.sources();
            const auto plan = make_plan(compute_distribution(sources, topic), s_n, s_seed);
            print(json{{"sources", stratified_sample(sources, plan)}, {"plan", plan}});
        } else if (*crawl) {
            auto config = load_json(c_config).get<CrawlConfig>();
            if (c_max_pages) config.max_pages = *c_max_pages;
            if (c_ignore_robots) config.respect_robots = false;
            const auto registry = Registry::load(c_registry);
            fs::create_directories(c_out);
            const auto job = run_crawl(config, registry, c_out);
            print(json(job));
            return job.state == JobState::done ? 0 : 1;
        } else if (*extract) {
            const auto rules = load_json(e_rules).get<ExtractionRules>();
            std::vector<RawArticle> all;
            json reports = json::array();
            for (const auto& w : e_warcs) {
                auto r = extract_all(w, rules);
                all.insert(all.end(), r.articles.begin(), r.articles.end());
                reports.push_back({{"warc", w}, {"report", r.report}});
            }
            write_jsonl(e_out, all);
            const json report{{"archives", reports}, {"articles", all.size()}};
            if (!e_report.empty()) write_file(e_report, report.dump(2) + "\n");
            std::cerr << "extracted " << all.size() << " articles\n";
        } else if (*clean) {
            CleaningConfig cfg;
            if (!k_config.empty()) cfg = load_json(k_config).get<CleaningConfig>();
            if (k_min_words) cfg.min_words = *k_min_words;
            const auto result = clean_corpus(read_jsonl<RawArticle>(k_in), cfg);
            write_jsonl(k_out, result.articles);
            write_file(k_report, json(result.report).dump(2) + "\n");
            std::cerr << "kept " << result.report.articles_out << " of " << result.report.articles_in << " articles\n";
        } else if (*build) {
            const auto registry = Registry::load(b_registry);
            const auto ds = build_dataset(read_jsonl<RawArticle>(b_in), registry, label_kind_from_string(b_labels));
            save_dataset(ds, b_out);
            print(load_json(fs::path(b_out) / "manifest.json"));
        } else if (*stats_cmd) {
            const auto s = stats(load_dataset(t_dataset));
            if (t_json)
                print(json(s));
            else
                std::cout << format_stats_table(s);
        } else if (*folds_cmd) {
            auto ds = load_dataset(f_dataset);
            if (!f_labels.empty()) ds = relabel(ds, label_kind_from_string(f_labels));
            save_folds(stratified_kfold(ds, f_k, f_seed), f_out);
        } else if (*train_cmd) {
            TrainConfig tc;
            if (!r_config.empty()) tc = load_json(r_config).get<TrainConfig>();
            if (r_epochs) tc.epochs = *r_epochs;
            if (r_lr) tc.learning_rate = *r_lr;
            if (r_seed) tc.seed = *r_seed;
            const auto ds = relabel(load_dataset(r_dataset), label_kind_from_string(r_labels));
            const auto model = train(ds, tc);
            save_model(model, r_out);
            print(json{{"model_id", model.model_id},
                       {"dataset_id", model.dataset_id},
                       {"classes", model.classes},
                       {"final_loss", model.loss_history.empty() ? 0.0 : model.loss_history.back()}});
        } else if (*predict_cmd) {
            const auto model = load_model(p_model);
            const auto text = read_file(p_text);
            const auto proba = predict_proba(model, text);
            json probs = json::object();
            for (std::size_t i = 0; i < model.classes.size(); ++i) probs[model.classes[i]] = proba[i];
            print(json{{"label", model.classes[argmax(proba)]},
                       {"probabilities", probs},
                       {"model_id", model.model_id}});
        } else if (*eval_cmd) {
            auto ds = load_dataset(v_dataset);
            if (!v_labels.empty()) ds = relabel(ds, label_kind_from_string(v_labels));
            const auto folds = load_folds(v_folds);
            TrainConfig tc;
            if (!v_config.empty()) tc = load_json(v_config).get<TrainConfig>();
            auto trainer = BackendRegistry::instance().create(v_backend);
            CVOptions opt;
            opt.workers = v_workers;
            const auto summary = v_coarse ? coarse_evaluate(ds, folds, *trainer, tc, opt)
                                          : cross_validate(ds, folds, *trainer, tc, opt);
            write_report(summary, v_out);
            std::cout << format_summary(summary);
        } else if (*serve) {
            Server server(w_dir);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "serving " << w_dir << " on " << w_host << ":" << w_port << "\n";
            server.run(w_host, w_port);
            g_server = nullptr;
        }
    } catch (const Error& e) {
        std::cerr << "error (" << e.kind() << "): " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
