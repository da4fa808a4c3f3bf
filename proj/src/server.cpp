#include "newstrust/server.hpp"

#include "newstrust/errors.hpp"
#include "newstrust/evaluation.hpp"
#include "newstrust/log.hpp"

#include <httplib.h>

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <functional>
#include <thread>

namespace newstrust {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- workspace ---------------------------------------------------------

void to_json(json& j, const WorkspaceConfig& c) {
    j = json{{"workers", c.workers},
             {"politeness_delay_ms", c.politeness_delay_ms},
             {"aggregation", to_string(c.aggregation)},
             {"min_assessment_articles", c.min_assessment_articles},
             {"trust_model_id", c.trust_model_id},
             {"topic_model_id", c.topic_model_id}};
}

void from_json(const json& j, WorkspaceConfig& c) {
    try {
        WorkspaceConfig d;
        c.workers = j.value("workers", d.workers);
        c.politeness_delay_ms = j.value("politeness_delay_ms", d.politeness_delay_ms);
        c.aggregation = aggregation_rule_from_string(j.value("aggregation", std::string(to_string(d.aggregation))));
        c.min_assessment_articles = j.value("min_assessment_articles", d.min_assessment_articles);
        c.trust_model_id = j.value("trust_model_id", std::string());
        c.topic_model_id = j.value("topic_model_id", std::string());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed workspace config: ") + e.what());
    }
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    if (c.politeness_delay_ms < 0) throw ConfigError("politeness_delay_ms must be >= 0");
}

Workspace::Workspace(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    for (const char* sub : {"", "configs", "rules", "warcs", "articles", "datasets", "models", "evaluations"}) {
        fs::create_directories(root_ / sub, ec);
        if (ec) throw IoError("cannot create " + (root_ / sub).string() + ": " + ec.message());
    }
    if (fs::exists(path("registry.json"))) registry_ = Registry::load(path("registry.json"));
    if (fs::exists(path("config.json"))) {
        try {
            config_ = json::parse(read_file(path("config.json"))).get<WorkspaceConfig>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("malformed workspace config: ") + e.what());
        }
    }
}

void Workspace::save_registry() {
    std::lock_guard lock(mu_);
    const auto tmp = path("registry.json.tmp");
    registry_.save(tmp);
    fs::rename(tmp, path("registry.json"));
}

std::optional<CrawlConfig> Workspace::crawl_config(const std::string& domain) const {
    if (!is_valid_domain(domain)) return std::nullopt;
    const auto p = root_ / "configs" / (domain + ".json");
    if (!fs::exists(p)) return std::nullopt;
    try {
        return json::parse(read_file(p)).get<CrawlConfig>();
    } catch (const json::exception& e) {
        throw ConfigError("malformed crawl config " + p.string() + ": " + e.what());
    }
}

void Workspace::scan_models() {
    std::map<fs::path, CachedModel> fresh;
    for (const auto& entry : fs::directory_iterator(root_ / "models")) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        const auto mtime = entry.last_write_time();
        auto it = model_cache_.find(entry.path());
        if (it != model_cache_.end() && it->second.mtime == mtime) {
            fresh.emplace(entry.path(), it->second);
            continue;
        }
        try {
            fresh.emplace(entry.path(), CachedModel{mtime, std::make_shared<const Model>(load_model(entry.path()))});
        } catch (const Error& e) {
            log::warn("skipping model " + entry.path().string() + ": " + e.what());
        }
    }
    model_cache_ = std::move(fresh);
}

std::vector<ModelInfo> Workspace::models() {
    std::lock_guard lock(mu_);
    scan_models();
    std::vector<ModelInfo> out;
    for (const auto& [p, c] : model_cache_)
        out.push_back({c.model->model_id, c.model->classes, c.model->dataset_id, c.model->featurizer.dimension, p});
    return out;
}

std::shared_ptr<const Model> Workspace::model(const std::string& id) {
    std::lock_guard lock(mu_);
    scan_models();
    for (const auto& [_, c] : model_cache_)
        if (c.model->model_id == id) return c.model;
    throw NotFoundError("unknown model: " + id);
}

std::shared_ptr<const Model> Workspace::default_model(LabelKind kind) {
    const auto& configured = kind == LabelKind::topic ? config_.topic_model_id : config_.trust_model_id;
    if (!configured.empty()) {
        try {
            return model(configured);
        } catch (const NotFoundError&) {
            throw BackendError("configured model " + configured + " is not available");
        }
    }
    std::lock_guard lock(mu_);
    scan_models();
    const auto want = class_names(kind);
    std::shared_ptr<const Model> best;
    fs::file_time_type best_time{};
    for (const auto& [_, c] : model_cache_) {
        if (c.model->classes != want) continue;
        if (!best || c.mtime > best_time) {
            best = c.model;
            best_time = c.mtime;
        }
    }
    if (!best) throw BackendError("no " + std::string(to_string(kind)) + " model is available in the workspace");
    return best;
}

fs::path Workspace::add_model(const Model& m) {
    const auto p = root_ / "models" / (m.model_id + ".json");
    save_model(m, p);
    return p;
}

Dataset Workspace::dataset(const std::string& id) {
    for (const auto& entry : fs::directory_iterator(root_ / "datasets")) {
        const auto manifest = entry.path() / "manifest.json";
        if (!entry.is_directory() || !fs::exists(manifest)) continue;
        try {
            if (json::parse(read_file(manifest)).value("dataset_id", std::string()) == id)
                return load_dataset(entry.path());
        } catch (const json::exception&) {
        }
    }
    throw NotFoundError("unknown dataset: " + id);
}

std::vector<std::string> Workspace::dataset_ids() const {
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(root_ / "datasets")) {
        const auto manifest = entry.path() / "manifest.json";
        if (!entry.is_directory() || !fs::exists(manifest)) continue;
        try {
            out.push_back(json::parse(read_file(manifest)).at("dataset_id").get<std::string>());
        } catch (const json::exception&) {
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---- journal -----------------------------------------------------------

JobJournal::JobJournal(fs::path path) : path_(std::move(path)) {}

void JobJournal::append(const json& job) {
    std::lock_guard lock(mu_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to " + path_.string());
    out << json{{"recorded_at", format_timestamp(now_utc())}, {"job", job}}.dump() << '\n';
    out.flush();
}

std::map<std::string, json> JobJournal::replay() const {
    std::map<std::string, json> latest;
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        try {
            auto rec = json::parse(line);
            const auto& job = rec.at("job");
            latest[job.at("job_id").get<std::string>()] = job;
        } catch (const json::exception&) {
            log::warn("skipping unreadable journal line in " + path_.string());
        }
    }
    return latest;
}

// ---- server ------------------------------------------------------------

namespace {

class WorkerPool {
public:
    explicit WorkerPool(int n) {
        for (int i = 0; i < n; ++i) threads_.emplace_back([this] { loop(); });
    }
    ~WorkerPool() {
        {
            std::lock_guard lock(mu_);
            stopping_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }
    void submit(std::function<void()> task) {
        {
            std::lock_guard lock(mu_);
            tasks_.push_back(std::move(task));
        }
        cv_.notify_one();
    }

private:
    void loop() {
        while (true) {
            std::function<void()> task;
            {
                std::unique_lock lock(mu_);
                cv_.wait(lock, [&] { return stopping_ || !tasks_.empty(); });
                if (tasks_.empty()) return;
                task = std::move(tasks_.front());
                tasks_.pop_front();
            }
            task();
        }
    }

    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> tasks_;
    std::vector<std::thread> threads_;
    bool stopping_ = false;
};

enum class EvalState { queued, running, done, failed, cancelled };

std::string_view to_string(EvalState s) {
    switch (s) {
        case EvalState::queued: return "queued";
        case EvalState::running: return "running";
        case EvalState::done: return "done";
        case EvalState::failed: return "failed";
        case EvalState::cancelled: return "cancelled";
    }
    return "queued";
}

class EvalJob {
public:
    EvalJob(std::string id, std::string dataset_id, json request)
        : id_(std::move(id)), dataset_id_(std::move(dataset_id)), request_(std::move(request)) {}

    const std::string& id() const { return id_; }
    const std::string& dataset_id() const { return dataset_id_; }
    const json& request() const { return request_; }
    bool cancel_requested() const { return cancel_.load(); }

    void request_cancel() {
        std::lock_guard lock(mu_);
        if (state_ == EvalState::done || state_ == EvalState::failed || state_ == EvalState::cancelled)
            throw JobStateError("evaluation " + id_ + " is already " + std::string(to_string(state_)));
        cancel_ = true;
        if (state_ == EvalState::queued) {
            state_ = EvalState::cancelled;
            finished_at_ = now_utc();
        }
    }
    // false when the job was cancelled before it started
    bool begin() {
        std::lock_guard lock(mu_);
        if (state_ != EvalState::queued) return false;
        state_ = EvalState::running;
        started_at_ = now_utc();
        return true;
    }
    void finish(EvalState s, std::optional<json> summary, std::string error) {
        std::lock_guard lock(mu_);
        state_ = s;
        summary_ = std::move(summary);
        error_ = std::move(error);
        finished_at_ = now_utc();
    }
    json snapshot() const {
        std::lock_guard lock(mu_);
        json j{{"job_id", id_},
               {"kind", "evaluation"},
               {"evaluation_id", id_},
               {"state", to_string(state_)},
               {"dataset_id", dataset_id_},
               {"request", request_}};
        j["started_at"] = started_at_ ? json(format_timestamp(*started_at_)) : json(nullptr);
        j["finished_at"] = finished_at_ ? json(format_timestamp(*finished_at_)) : json(nullptr);
        j["error"] = error_.empty() ? json(nullptr) : json(error_);
        if (summary_) j["summary"] = *summary_;
        return j;
    }

private:
    std::string id_;
    std::string dataset_id_;
    json request_;
    mutable std::mutex mu_;
    EvalState state_ = EvalState::queued;
    std::optional<Timestamp> started_at_, finished_at_;
    std::optional<json> summary_;
    std::string error_;
    std::atomic<bool> cancel_{false};
};

int status_for(const Error& e) {
    const auto& k = e.kind();
    if (k == "not-found") return 404;
    if (k == "job-state") return 409;
    if (k == "backend") return 503;
    if (k == "io") return 500;
    return 400;
}

json parse_body(const httplib::Request& req, bool allow_empty = false) {
    if (req.body.empty() || trim(req.body).empty()) {
        if (allow_empty) return json::object();
        throw ValidationError("request body must be a JSON document");
    }
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("request body is not valid JSON: ") + e.what());
    }
}

template <class T>
T field(const json& body, const char* name, T fallback) {
    if (!body.is_object() || !body.contains(name) || body[name].is_null()) return fallback;
    try {
        return body[name].get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("field '") + name + "' has the wrong type");
    }
}

int level_of(const json& v) {
    if (v.is_number_integer()) return trust_level_at(v.get<int>()).index;
    if (v.is_string()) return trust_level_named(v.get<std::string>()).index;
    throw ValidationError("trust_level must be a level name or index");
}

Topic topic_of(const json& v) {
    if (v.is_number_integer()) {
        const int i = v.get<int>();
        if (i < 0 || static_cast<std::size_t>(i) >= kTopicCount) throw ValidationError("topic index out of range");
        return kAllTopics[static_cast<std::size_t>(i)];
    }
    if (v.is_string()) return topic_from_id(v.get<std::string>());
    throw ValidationError("topic must be a topic id or index");
}

json source_json(const Source& s) {
    json j = s;
    j["trust_level"] = s.trust_level().name;
    try {
        const auto adm = admit_source(s);
        j["admitted"] = adm.accepted;
        j["rejection_reason"] = adm.accepted ? json(nullptr) : json(adm.reason);
    } catch (const ValidationError& e) {
        j["admitted"] = false;
        j["rejection_reason"] = e.what();
    }
    return j;
}

}  // namespace

struct Server::Impl {
    Workspace ws;
    JobJournal journal;
    std::shared_ptr<Fetcher> fetcher;
    httplib::Server http;
    std::thread listener;

    std::mutex jobs_mu;
    std::map<std::string, std::shared_ptr<CrawlJobHandle>> crawls;
    std::map<std::string, std::shared_ptr<EvalJob>> evals;
    std::map<std::string, json> history;  // finished jobs from earlier runs

    std::unique_ptr<WorkerPool> pool;

    Impl(const fs::path& root, ServerOptions options)
        : ws(root),
          journal(root / "jobs.jsonl"),
          fetcher(options.fetcher ? std::move(options.fetcher) : std::make_shared<Fetcher>()) {
        recover();
        pool = std::make_unique<WorkerPool>(ws.config().workers);
        routes();
    }

    ~Impl() {
        std::lock_guard lock(jobs_mu);
        for (auto& [_, h] : crawls) {
            try {
                h->request_cancel();
            } catch (const JobStateError&) {
            }
        }
        for (auto& [_, e] : evals) {
            try {
                e->request_cancel();
            } catch (const JobStateError&) {
            }
        }
    }

    // Jobs left unfinished by a previous process are closed out as failed.
    void recover() {
        for (auto [id, job] : journal.replay()) {
            const auto state = job.value("state", std::string());
            if (state != "done" && state != "failed" && state != "cancelled") {
                job["state"] = "failed";
                if (job.value("kind", std::string()) == "crawl")
                    job["failure_reason"] = "interrupted";
                else
                    job["error"] = "interrupted";
                job["finished_at"] = format_timestamp(now_utc());
                journal.append(job);
            }
            history[id] = std::move(job);
        }
    }

    static void reply(httplib::Response& res, int status, json body, const std::string& model_id = {},
                      const std::string& dataset_id = {}) {
        if (!body.is_object()) body = json{{"result", std::move(body)}};
        if (!body.contains("model_id")) body["model_id"] = model_id.empty() ? json(nullptr) : json(model_id);
        if (!body.contains("dataset_id")) body["dataset_id"] = dataset_id.empty() ? json(nullptr) : json(dataset_id);
        res.status = status;
        res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
    }

    template <class F>
    httplib::Server::Handler guarded(F fn) {
        return [fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const Error& e) {
                reply(res, status_for(e), json{{"error", {{"kind", e.kind()}, {"message", e.what()}}}});
            } catch (const std::exception& e) {
                reply(res, 500, json{{"error", {{"kind", "internal"}, {"message", e.what()}}}});
            }
        };
    }

    std::shared_ptr<const Model> pick_model(const json& body, const char* field_name, LabelKind kind) {
        const auto id = field<std::string>(body, field_name, "");
        return id.empty() ? ws.default_model(kind) : ws.model(id);
    }

    void routes() {
        http.Post("/v1/classify", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            const auto text = field<std::string>(body, "text", "");
            if (trim(text).empty()) throw ValidationError("field 'text' is required");
            const auto model = pick_model(body, "model_id", LabelKind::trust_level);
            const auto r = classify_article(text, *model);
            reply(res, 200, json(r), model->model_id, model->dataset_id);
        }));

        http.Get("/v1/sources", guarded([this](const httplib::Request&, httplib::Response& res) {
            auto arr = json::array();
            for (const auto& s : ws.registry().sources()) arr.push_back(source_json(s));
            reply(res, 200, json{{"sources", arr}});
        }));

        http.Post("/v1/sources", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            const json& items = body.is_array() ? body : body.contains("sources") ? body["sources"] : json::array({body});
            std::vector<Source> parsed;
            for (const auto& item : items) {
                try {
                    parsed.push_back(item.get<Source>());
                } catch (const json::exception& e) {
                    throw ValidationError(std::string("malformed source: ") + e.what());
                }
            }
            for (auto& s : parsed) {
                if (!is_valid_domain(s.domain)) throw ValidationError("malformed domain: '" + s.domain + "'");
            }
            auto arr = json::array();
            for (auto& s : parsed) {
                ws.registry().upsert(s);
                arr.push_back(source_json(s));
            }
            ws.save_registry();
            reply(res, 201, json{{"sources", arr}, {"registry_hash", ws.registry().content_hash()}});
        }));

        http.Post(R"(/v1/sources/([^/]+)/crawl)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string domain = req.matches[1];
            if (!ws.registry().find(domain)) throw NotFoundError("unknown source: " + domain);
            const auto body = parse_body(req, true);
            CrawlConfig config;
            if (body.contains("config")) {
                auto cj = body["config"];
                if (!cj.contains("politeness_delay_ms")) cj["politeness_delay_ms"] = ws.config().politeness_delay_ms;
                if (!cj.contains("domain")) cj["domain"] = domain;
                try {
                    config = cj.get<CrawlConfig>();
                } catch (const json::exception& e) {
                    throw ValidationError(std::string("malformed crawl config: ") + e.what());
                }
            } else if (auto stored = ws.crawl_config(domain)) {
                config = *stored;
            } else {
                throw ValidationError("no crawl config supplied and none stored for " + domain);
            }
            if (config.domain != domain) throw ValidationError("crawl config domain does not match " + domain);
            if (body.contains("max_pages")) config.max_pages = field<int>(body, "max_pages", config.max_pages);
            if (body.contains("ignore_robots") && field<bool>(body, "ignore_robots", false)) config.respect_robots = false;
            config.validate();

            const auto id = uuid4();
            auto handle = std::make_shared<CrawlJobHandle>(id, domain);
            {
                std::lock_guard lock(jobs_mu);
                crawls[id] = handle;
            }
            journal.append(json(handle->snapshot()));
            pool->submit([this, handle, config] {
                try {
                    const Registry snapshot = ws.registry();
                    run_crawl(config, snapshot, ws.path("warcs"), *fetcher, *handle);
                } catch (const std::exception& e) {
                    handle->update([&](CrawlJob& j) {
                        j.failure_reason = "internal";
                        j.errors.push_back({"", "internal", e.what()});
                    });
                    try {
                        handle->transition(JobState::failed);
                    } catch (const JobStateError&) {
                    }
                }
                journal.append(json(handle->snapshot()));
            });
            reply(res, 202, json{{"job", json(handle->snapshot())}});
        }));

        http.Get(R"(/v1/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto [job, dataset] = find_job(req.matches[1]);
            reply(res, 200, json{{"job", job}}, {}, dataset);
        }));

        http.Post(R"(/v1/jobs/([^/]+)/cancel)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            std::shared_ptr<CrawlJobHandle> crawl;
            std::shared_ptr<EvalJob> eval;
            {
                std::lock_guard lock(jobs_mu);
                if (auto it = crawls.find(id); it != crawls.end()) crawl = it->second;
                if (auto it = evals.find(id); it != evals.end()) eval = it->second;
                if (!crawl && !eval) {
                    if (history.count(id)) throw JobStateError("job " + id + " already finished");
                    throw NotFoundError("unknown job: " + id);
                }
            }
            if (crawl) {
                crawl->request_cancel();
                journal.append(json(crawl->snapshot()));
                reply(res, 200, json{{"job", json(crawl->snapshot())}});
            } else {
                eval->request_cancel();
                journal.append(eval->snapshot());
                reply(res, 200, json{{"job", eval->snapshot()}}, {}, eval->dataset_id());
            }
        }));

        http.Post(R"(/v1/sources/([^/]+)/assess)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string domain = req.matches[1];
            const auto body = parse_body(req);
            const auto texts = field<std::vector<std::string>>(body, "texts", {});
            if (texts.empty()) throw ValidationError("field 'texts' must list at least one article");
            const auto trust = pick_model(body, "model_id", LabelKind::trust_level);
            std::shared_ptr<const Model> topic;
            const auto topic_id_field = field<std::string>(body, "topic_model_id", "");
            if (!topic_id_field.empty()) {
                topic = ws.model(topic_id_field);
            } else {
                try {
                    topic = ws.default_model(LabelKind::topic);
                } catch (const BackendError&) {
                }
            }
            AssessOptions opt;
            opt.rule = aggregation_rule_from_string(field<std::string>(body, "rule", std::string(to_string(ws.config().aggregation))));
            opt.min_articles = ws.config().min_assessment_articles;
            const auto a = assess_source(domain, texts, *trust, topic.get(), opt);
            reply(res, 200, json(a), a.model_id, a.dataset_id);
        }));

        http.Post("/v1/samples/balanced", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            if (!body.contains("candidates") || !body["candidates"].is_array())
                throw ValidationError("field 'candidates' must be an array");
            const auto n = field<long long>(body, "n", 0);
            if (n < 1) throw ValidationError("field 'n' must be at least 1");
            const auto seed = field<std::uint64_t>(body, "seed", 0);
            std::shared_ptr<const Model> trust, topic;
            std::vector<SampleCandidate> cands;
            for (const auto& c : body["candidates"]) {
                SampleCandidate sc;
                sc.article_id = field<std::string>(c, "article_id", "");
                if (sc.article_id.empty()) throw ValidationError("every candidate needs an article_id");
                const auto text = field<std::string>(c, "text", "");
                if (c.contains("trust_level")) {
                    sc.level = level_of(c["trust_level"]);
                } else if (!text.empty()) {
                    if (!trust) trust = ws.default_model(LabelKind::trust_level);
                    sc.level = static_cast<int>(predict(*trust, text));
                } else {
                    throw ValidationError("candidate " + sc.article_id + " needs trust_level or text");
                }
                if (c.contains("topic")) {
                    sc.topic = topic_of(c["topic"]);
                } else if (!text.empty()) {
                    if (!topic) topic = ws.default_model(LabelKind::topic);
                    sc.topic = kAllTopics[predict(*topic, text)];
                } else {
                    throw ValidationError("candidate " + sc.article_id + " needs topic or text");
                }
                cands.push_back(std::move(sc));
            }
            const auto s = balanced_sample(cands, static_cast<std::size_t>(n), seed);
            reply(res, 200, json(s), trust ? trust->model_id : "", trust ? trust->dataset_id : "");
        }));

        http.Get("/v1/models", guarded([this](const httplib::Request&, httplib::Response& res) {
            auto arr = json::array();
            for (const auto& m : ws.models())
                arr.push_back({{"model_id", m.model_id},
                               {"classes", m.classes},
                               {"dataset_id", m.dataset_id},
                               {"d", m.dimension},
                               {"file", m.path.filename().string()}});
            reply(res, 200, json{{"models", arr}, {"datasets", ws.dataset_ids()}});
        }));

        http.Post("/v1/evaluations", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            const auto dataset_id = field<std::string>(body, "dataset_id", "");
            if (dataset_id.empty()) throw ValidationError("field 'dataset_id' is required");
            auto dataset = std::make_shared<Dataset>(ws.dataset(dataset_id));
            if (body.contains("labels")) *dataset = relabel(*dataset, label_kind_from_string(field<std::string>(body, "labels", "")));
            const int k = field<int>(body, "k", 10);
            const auto seed = field<std::uint64_t>(body, "seed", 0);
            const bool coarse = field<bool>(body, "coarse", false);
            TrainConfig tc;
            if (body.contains("train_config")) tc = body["train_config"].get<TrainConfig>();
            tc.validate();
            auto trainer = std::shared_ptr<TrainableBackend>(BackendRegistry::instance().create(field<std::string>(body, "backend", "native")));
            // fail fast on an infeasible split
            const auto folds = stratified_kfold(coarse ? relabel(*dataset, LabelKind::coarse_trust) : *dataset, k, seed);

            const auto id = "ev-" + uuid4();
            auto job = std::make_shared<EvalJob>(id, dataset_id, body);
            {
                std::lock_guard lock(jobs_mu);
                evals[id] = job;
            }
            journal.append(job->snapshot());
            pool->submit([this, job, dataset, folds, tc, trainer, coarse] {
                if (!job->begin()) return;
                journal.append(job->snapshot());
                try {
                    CVOptions opt;
                    opt.cancelled = [job] { return job->cancel_requested(); };
                    const auto summary = coarse ? coarse_evaluate(*dataset, folds, *trainer, tc, opt)
                                                : cross_validate(*dataset, folds, *trainer, tc, opt);
                    write_report(summary, ws.path("evaluations") / job->id());
                    job->finish(EvalState::done, json(summary), "");
                } catch (const std::exception& e) {
                    job->finish(job->cancel_requested() ? EvalState::cancelled : EvalState::failed, std::nullopt, e.what());
                }
                journal.append(job->snapshot());
            });
            reply(res, 202, json{{"job", job->snapshot()}, {"evaluation_id", id}}, {}, dataset_id);
        }));

        http.Get(R"(/v1/evaluations/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const auto [job, dataset] = find_job(id);
            if (job.value("kind", std::string()) != "evaluation") throw NotFoundError("unknown evaluation: " + id);
            reply(res, 200, json{{"evaluation", job}}, {}, dataset);
        }));
    }

    std::pair<json, std::string> find_job(const std::string& id) {
        std::lock_guard lock(jobs_mu);
        if (auto it = crawls.find(id); it != crawls.end()) return {json(it->second->snapshot()), ""};
        if (auto it = evals.find(id); it != evals.end()) return {it->second->snapshot(), it->second->dataset_id()};
        if (auto it = history.find(id); it != history.end())
            return {it->second, it->second.value("dataset_id", std::string())};
        throw NotFoundError("unknown job: " + id);
    }
};

Server::Server(const fs::path& workspace, ServerOptions options)
    : impl_(std::make_unique<Impl>(workspace, std::move(options))) {}

Server::~Server() {
    stop();
    impl_.reset();
}

Workspace& Server::workspace() { return impl_->ws; }

int Server::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->http.bind_to_any_port(host);
    } else if (!impl_->http.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    impl_->listener = std::thread([this] { impl_->http.listen_after_bind(); });
    impl_->http.wait_until_ready();
    return bound;
}

void Server::run(const std::string& host, int port) {
    if (!impl_->http.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    impl_->http.listen_after_bind();
}

void Server::stop() {
    if (!impl_) return;
    impl_->http.stop();
    if (impl_->listener.joinable()) impl_->listener.join();
}

}  // namespace newstrust
