#include "corpus.hpp"
#include "fixture_server.hpp"

#include "newstrust/errors.hpp"
#include "newstrust/server.hpp"
#include "newstrust/util.hpp"

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <thread>

using namespace newstrust;
using namespace newstrust::testing;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kSite = "fixture-news.example";

struct Env {
    fs::path root;
    SyntheticCorpus corpus;
    std::string dataset_id;
    std::string trust_id;
    std::string topic_id;
};

// Workspace with a small dataset and trust/topic models already on disk.
Env make_workspace() {
    Env e;
    e.root = fs::temp_directory_path() / ("newstrust-server-" + uuid4());
    fs::create_directories(e.root / "models");
    e.corpus = make_corpus({.articles_per_source = 10, .boilerplate = false});
    e.corpus.registry.save(e.root / "registry.json");
    const auto ds = build_dataset(e.corpus.articles, e.corpus.registry, LabelKind::trust_level);
    save_dataset(ds, e.root / "datasets" / "synthetic");
    e.dataset_id = ds.dataset_id;
    TrainConfig tc;
    tc.dimension = 1u << 12;
    tc.seed = 2;
    const auto trust = train(ds, tc);
    const auto topic = train(relabel(ds, LabelKind::topic), tc);
    save_model(trust, e.root / "models" / "trust.json");
    save_model(topic, e.root / "models" / "topic.json");
    e.trust_id = trust.model_id;
    e.topic_id = topic.model_id;
    return e;
}

struct Reply {
    int status = 0;
    json body;
};

Reply call(httplib::Client& cl, const std::string& method, const std::string& path, const json* body = nullptr) {
    httplib::Result r = method == "GET" ? cl.Get(path)
                                        : cl.Post(path, body ? body->dump() : std::string(), "application/json");
    REQUIRE(r);
    return {r->status, json::parse(r->body)};
}

Reply get(httplib::Client& cl, const std::string& path) { return call(cl, "GET", path); }
Reply post(httplib::Client& cl, const std::string& path, const json& body) { return call(cl, "POST", path, &body); }

json wait_for(httplib::Client& cl, const std::string& path, const char* key, double seconds = 120) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(seconds);
    json last;
    while (std::chrono::steady_clock::now() < deadline) {
        last = get(cl, path).body[key];
        const auto s = last.value("state", std::string());
        if (s == "done" || s == "failed" || s == "cancelled") return last;
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    return last;
}

void require_provenance(const json& body) {
    CHECK(body.contains("model_id"));
    CHECK(body.contains("dataset_id"));
}

}  // namespace

TEST_CASE("sources, classify and models") {
    auto env = make_workspace();
    {
        Server server(env.root);
        const int port = server.start();
        httplib::Client cl("127.0.0.1", port);
        cl.set_read_timeout(60, 0);

        auto r = get(cl, "/v1/sources");
        CHECK(r.status == 200);
        CHECK(r.body["sources"].size() == 20);
        require_provenance(r.body);

        r = post(cl, "/v1/sources", {{"domain", "new-outlet.example"}, {"trust_score", 62}, {"topic", "health"}});
        CHECK(r.status == 201);
        CHECK(r.body["sources"].size() == 1);
        CHECK(r.body["registry_hash"].get<std::string>().size() == 64);
        CHECK(Registry::load(env.root / "registry.json").find("new-outlet.example"));
        CHECK(get(cl, "/v1/sources").body["sources"].size() == 21);

        CHECK(post(cl, "/v1/sources", {{"domain", "Bad Domain"}, {"trust_score", 50}, {"topic", "health"}}).status == 400);
        r = post(cl, "/v1/sources", {{"domain", "x.example"}, {"trust_score", 101}, {"topic", "health"}});
        CHECK(r.status == 400);
        CHECK(r.body["error"]["kind"] == "validation");
        CHECK(post(cl, "/v1/sources", {{"domain", "x.example"}, {"trust_score", 50}, {"topic", "weather"}}).status == 400);

        const auto& low = env.corpus.articles[0].text;  // level 0, political
        r = post(cl, "/v1/classify", {{"text", low}});
        CHECK(r.status == 200);
        CHECK(r.body["flagged"] == true);
        CHECK(r.body["model_id"] == env.trust_id);
        CHECK(r.body["dataset_id"] == env.dataset_id);

        r = post(cl, "/v1/classify", {{"text", ""}});
        CHECK(r.status == 400);
        require_provenance(r.body);
        CHECK(post(cl, "/v1/classify", {{"text", low}, {"model_id", "missing"}}).status == 404);
        // topic model does not produce trust levels
        CHECK(post(cl, "/v1/classify", {{"text", low}, {"model_id", env.topic_id}}).status == 400);
        {
            auto bad = cl.Post("/v1/classify", "{not json", "application/json");
            REQUIRE(bad);
            CHECK(bad->status == 400);
        }

        r = post(cl, "/v1/sources/probe.example/assess", {{"texts", json::array({low, low})}});
        CHECK(r.status == 200);
        CHECK(r.body["inferred_level_index"] == 0);
        CHECK(r.body["topic_model_id"] == env.topic_id);
        CHECK(post(cl, "/v1/sources/probe.example/assess", {{"texts", json::array()}}).status == 400);
        CHECK(post(cl, "/v1/sources/probe.example/assess", {{"texts", json::array({low})}, {"rule", "median"}}).status ==
              400);

        r = post(cl, "/v1/samples/balanced",
                 {{"candidates", json::array({{{"article_id", "a"}, {"text", low}}, {{"article_id", "b"}, {"text", low}}})},
                  {"n", 1}});
        CHECK(r.status == 200);
        CHECK(r.body["article_ids"].size() == 1);
        CHECK(r.body["model_id"] == env.trust_id);
        CHECK(post(cl, "/v1/samples/balanced", {{"candidates", json::array()}, {"n", 0}}).status == 400);

        r = get(cl, "/v1/models");
        CHECK(r.status == 200);
        CHECK(r.body["models"].size() == 2);
        CHECK(r.body["datasets"] == json::array({env.dataset_id}));

        CHECK(get(cl, "/v1/jobs/nope").status == 404);
        CHECK(post(cl, "/v1/jobs/nope/cancel", json::object()).status == 404);
        CHECK(get(cl, "/v1/evaluations/nope").status == 404);
        server.stop();
    }
    fs::remove_all(env.root);
}

TEST_CASE("classify without any model is a backend error") {
    const auto root = fs::temp_directory_path() / ("newstrust-server-" + uuid4());
    {
        Server server(root);
        httplib::Client cl("127.0.0.1", server.start());
        const auto r = post(cl, "/v1/classify", {{"text", "some words here"}});
        CHECK(r.status == 503);
        CHECK(r.body["error"]["kind"] == "backend");
    }
    fs::remove_all(root);
}

TEST_CASE("crawl jobs run, cancel and survive a restart") {
    FixtureServer site;
    const auto root = fs::temp_directory_path() / ("newstrust-server-" + uuid4());
    fs::create_directories(root);
    Registry reg;
    reg.upsert({kSite, 80, Topic::political, "en", false, std::nullopt});
    reg.save(root / "registry.json");
    write_file(root / "configs" / (kSite + ".json"), json(site.crawl_config(kSite, 0)).dump());
    std::string done_id, cancelled_id;
    {
        Server server(root);
        httplib::Client cl("127.0.0.1", server.start());
        cl.set_read_timeout(60, 0);

        auto r = post(cl, "/v1/sources/" + kSite + "/crawl", json::object());
        REQUIRE(r.status == 202);
        done_id = r.body["job"]["job_id"];
        const auto job = wait_for(cl, "/v1/jobs/" + done_id, "job");
        CHECK(job["state"] == "done");
        CHECK(job["articles_archived"] == 60);
        CHECK(fs::exists(job["warc_path"].get<std::string>()));
        CHECK(post(cl, "/v1/jobs/" + done_id + "/cancel", json::object()).status == 409);

        // slow crawl, cancelled mid-flight
        auto slow = json(site.crawl_config(kSite, 300));
        r = post(cl, "/v1/sources/" + kSite + "/crawl", {{"config", slow}});
        REQUIRE(r.status == 202);
        cancelled_id = r.body["job"]["job_id"];
        std::this_thread::sleep_for(std::chrono::milliseconds(400));
        CHECK(post(cl, "/v1/jobs/" + cancelled_id + "/cancel", json::object()).status == 200);
        const auto c = wait_for(cl, "/v1/jobs/" + cancelled_id, "job");
        CHECK(c["state"] == "cancelled");
        CHECK(c["articles_archived"].get<int>() < 60);

        CHECK(post(cl, "/v1/sources/unknown.example/crawl", json::object()).status == 404);
        slow["domain"] = "other.example";
        CHECK(post(cl, "/v1/sources/" + kSite + "/crawl", {{"config", slow}}).status == 400);
        server.stop();
    }

    // a job recorded as running by a dead process is closed out on restart
    JobJournal(root / "jobs.jsonl").append({{"job_id", "stale"}, {"kind", "crawl"}, {"state", "fetching"}});
    const auto replay = JobJournal(root / "jobs.jsonl").replay();
    CHECK(replay.at(done_id)["state"] == "done");
    CHECK(replay.at("stale")["state"] == "fetching");
    {
        Server server(root);
        httplib::Client cl("127.0.0.1", server.start());
        auto r = get(cl, "/v1/jobs/" + done_id);
        CHECK(r.status == 200);
        CHECK(r.body["job"]["state"] == "done");
        r = get(cl, "/v1/jobs/stale");
        CHECK(r.body["job"]["state"] == "failed");
        CHECK(r.body["job"]["failure_reason"] == "interrupted");
        CHECK(get(cl, "/v1/jobs/" + cancelled_id).body["job"]["state"] == "cancelled");
        CHECK(post(cl, "/v1/jobs/stale/cancel", json::object()).status == 409);
    }
    CHECK(JobJournal(root / "jobs.jsonl").replay().at("stale")["state"] == "failed");
    fs::remove_all(root);
}

TEST_CASE("evaluation jobs") {
    auto env = make_workspace();
    {
        Server server(env.root);
        httplib::Client cl("127.0.0.1", server.start());
        cl.set_read_timeout(60, 0);
        const json tc = {{"dimension", 4096}, {"epochs", 3}};
        auto r = post(cl, "/v1/evaluations", {{"dataset_id", env.dataset_id}, {"k", 3}, {"seed", 1}, {"train_config", tc}});
        REQUIRE(r.status == 202);
        CHECK(r.body["dataset_id"] == env.dataset_id);
        const std::string id = r.body["evaluation_id"];
        const auto ev = wait_for(cl, "/v1/evaluations/" + id, "evaluation");
        CHECK(ev["state"] == "done");
        REQUIRE(ev.contains("summary"));
        CHECK(fs::exists(env.root / "evaluations" / id));
        CHECK(get(cl, "/v1/evaluations/" + id).body["dataset_id"] == env.dataset_id);

        r = post(cl, "/v1/evaluations",
                 {{"dataset_id", env.dataset_id}, {"k", 3}, {"coarse", true}, {"train_config", tc}});
        REQUIRE(r.status == 202);
        CHECK(wait_for(cl, "/v1/evaluations/" + r.body["evaluation_id"].get<std::string>(), "evaluation")["state"] ==
              "done");

        CHECK(post(cl, "/v1/evaluations", {{"dataset_id", "missing"}}).status == 404);
        CHECK(post(cl, "/v1/evaluations", json::object()).status == 400);
        // 40 articles per level cannot fill 41 folds
        CHECK(post(cl, "/v1/evaluations", {{"dataset_id", env.dataset_id}, {"k", 41}}).status == 400);
        CHECK(post(cl, "/v1/evaluations", {{"dataset_id", env.dataset_id}, {"backend", "nonexistent"}}).status != 202);
        server.stop();
    }
    fs::remove_all(env.root);
}
