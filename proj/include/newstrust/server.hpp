#pragma once

#include "newstrust/classifier.hpp"
#include "newstrust/crawler.hpp"
#include "newstrust/dataset.hpp"
#include "newstrust/service.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace newstrust {

struct WorkspaceConfig {
    int workers = 4;
    int politeness_delay_ms = 1000;
    AggregationRule aggregation = AggregationRule::plurality;
    std::size_t min_assessment_articles = 40;
    // empty: the newest model whose classes fit
    std::string trust_model_id;
    std::string topic_model_id;
};

void to_json(nlohmann::json& j, const WorkspaceConfig& c);
void from_json(const nlohmann::json& j, WorkspaceConfig& c);

struct ModelInfo {
    std::string model_id;
    std::vector<std::string> classes;
    std::string dataset_id;
    std::uint32_t dimension = 0;
    std::filesystem::path path;
};

// On-disk layout under one root:
//   registry.json  config.json  jobs.jsonl
//   configs/<domain>.json  rules/<domain>.json
//   warcs/  articles/  datasets/<dir>/  models/<id>.json  evaluations/<id>/
class Workspace {
public:
    explicit Workspace(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path path(std::string_view name) const { return root_ / name; }

    Registry& registry() { return registry_; }
    void save_registry();
    const WorkspaceConfig& config() const { return config_; }

    // configs/<domain>.json, if present.
    std::optional<CrawlConfig> crawl_config(const std::string& domain) const;

    std::vector<ModelInfo> models();
    // Throws NotFoundError.
    std::shared_ptr<const Model> model(const std::string& model_id);
    // Configured or newest matching model; throws BackendError when absent.
    std::shared_ptr<const Model> default_model(LabelKind kind);
    std::filesystem::path add_model(const Model& m);

    // Throws NotFoundError.
    Dataset dataset(const std::string& dataset_id);
    std::vector<std::string> dataset_ids() const;

private:
    void scan_models();

    std::filesystem::path root_;
    Registry registry_;
    WorkspaceConfig config_;
    std::mutex mu_;
    struct CachedModel {
        std::filesystem::file_time_type mtime;
        std::shared_ptr<const Model> model;
    };
    std::map<std::filesystem::path, CachedModel> model_cache_;
};

// Append-only JSONL log of job snapshots with a single writer.
class JobJournal {
public:
    explicit JobJournal(std::filesystem::path path);
    void append(const nlohmann::json& job);
    // Latest snapshot per job_id, in file order.
    std::map<std::string, nlohmann::json> replay() const;

private:
    std::filesystem::path path_;
    std::mutex mu_;
};

struct ServerOptions {
    // Shared by every crawl job; a default one is made when null.
    std::shared_ptr<Fetcher> fetcher;
};

// HTTP/JSON API under /v1 backed by a workspace directory.
class Server {
public:
    explicit Server(const std::filesystem::path& workspace, ServerOptions options = {});
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds (port 0 picks a free one), serves on a background thread and
    // returns the bound port. Throws IoError when binding fails.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    // Binds and serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();

    Workspace& workspace();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace newstrust
