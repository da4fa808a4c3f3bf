#pragma once

#include "newstrust/registry.hpp"
#include "newstrust/warc.hpp"

#include <nlohmann/json_fwd.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace newstrust {

struct CrawlConfig {
    std::string domain;
    std::string history_url_template;  // contains "{page}" exactly once
    int start_page = 1;
    int max_pages = 1;
    // XPath when it begins with '/', '.', '(' or "xpath:"; otherwise (or with
    // a "regex:" prefix) an ECMAScript regex matched against resolved hrefs.
    std::string article_link_selector;
    int min_articles = 40;
    int max_articles = 294;
    int politeness_delay_ms = 1000;
    int timeout_ms = 30000;
    int max_retries = 2;
    std::string user_agent = "newstrust-crawler/0.1";
    // base delay for exponential retry backoff
    int retry_backoff_ms = 500;
    bool respect_robots = true;
    bool gzip = false;

    // Throws ConfigError.
    void validate() const;
};

void to_json(nlohmann::json& j, const CrawlConfig& c);
void from_json(const nlohmann::json& j, CrawlConfig& c);

enum class JobState { queued, enumerating, fetching, done, failed, cancelled };
std::string_view to_string(JobState s);
bool is_terminal(JobState s);
// Forward steps queued -> enumerating -> fetching -> done, or from any
// non-terminal state into failed / cancelled.
bool is_legal_transition(JobState from, JobState to);

struct CrawlErrorEntry {
    std::string url;
    std::string kind;
    std::string message;
};

struct CrawlJob {
    std::string job_id;
    std::string domain;
    JobState state = JobState::queued;
    std::size_t urls_found = 0;
    std::size_t pages_fetched = 0;
    std::size_t articles_archived = 0;
    std::vector<CrawlErrorEntry> errors;
    std::string failure_reason;  // e.g. "insufficient-articles", "config"
    std::filesystem::path warc_path;
    std::optional<Timestamp> started_at;
    std::optional<Timestamp> finished_at;
    std::vector<std::string> archived_urls;
};

void to_json(nlohmann::json& j, const CrawlJob& job);

// Shared state of a running crawl: readers take snapshots, the crawl thread
// applies updates, and cancellation is a flag polled between fetches.
class CrawlJobHandle {
public:
    CrawlJobHandle(std::string job_id, std::string domain);

    CrawlJob snapshot() const;
    void update(const std::function<void(CrawlJob&)>& fn);
    // Throws JobStateError on an illegal transition.
    void transition(JobState to);

    // Throws JobStateError if the job already finished.
    void request_cancel();
    bool cancel_requested() const { return cancel_.load(); }

private:
    mutable std::mutex mu_;
    CrawlJob job_;
    std::atomic<bool> cancel_{false};
};

// Per-host politeness: at most one request in flight per host, and each
// request starts no sooner than `delay` after the previous one to that host
// completed.
class HostGate {
public:
    class Permit {
    public:
        Permit(HostGate& gate, std::string host);
        ~Permit();
        Permit(const Permit&) = delete;
        Permit& operator=(const Permit&) = delete;

    private:
        HostGate& gate_;
        std::string host_;
    };

    Permit acquire(const std::string& host, std::chrono::milliseconds delay);

private:
    struct HostState {
        bool busy = false;
        std::optional<std::chrono::steady_clock::time_point> last_done;
    };
    void release(const std::string& host);

    std::mutex mu_;
    std::condition_variable cv_;
    std::map<std::string, HostState> hosts_;
};

// robots.txt rules for one user agent.
class RobotsRules {
public:
    static RobotsRules parse(std::string_view robots_txt, std::string_view user_agent);
    static RobotsRules allow_all() { return {}; }
    bool allowed(std::string_view path_and_query) const;

private:
    struct Rule {
        bool allow;
        std::string pattern;
    };
    std::vector<Rule> rules_;
};

class Fetcher {
public:
    explicit Fetcher(std::shared_ptr<HostGate> gate = std::make_shared<HostGate>());

    // GET with up to 5 redirects and max_retries retries on transient failure
    // (connection errors, 429, 5xx), with exponential backoff. Throws
    // FetchError. Honors robots.txt unless config.respect_robots is false.
    FetchRecord fetch(const std::string& url, const CrawlConfig& config);

    std::shared_ptr<HostGate> gate() const { return gate_; }

private:
    FetchRecord fetch_once(const std::string& url, const CrawlConfig& config);
    const RobotsRules& robots_for(const std::string& url, const CrawlConfig& config);

    std::shared_ptr<HostGate> gate_;
    std::mutex robots_mu_;
    std::map<std::string, RobotsRules> robots_;
};

std::vector<std::string> enumerate_page_urls(const CrawlConfig& config);

// Deduplicated absolute http(s) URLs selected from a history page, in
// document order. Throws ConfigError for an invalid selector.
std::vector<std::string> extract_article_urls(std::string_view page_html, std::string_view page_url,
                                              const CrawlConfig& config);

// Walks the history pages, then fetches and archives article pages until
// max_articles are archived or URLs run out. The job ends done when at least
// min_articles were archived and failed("insufficient-articles") otherwise.
void run_crawl(const CrawlConfig& config, const Registry& registry,
               const std::filesystem::path& out_dir, Fetcher& fetcher, CrawlJobHandle& handle);

CrawlJob run_crawl(const CrawlConfig& config, const Registry& registry,
                   const std::filesystem::path& out_dir);

}  // namespace newstrust
