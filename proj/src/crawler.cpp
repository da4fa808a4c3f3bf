#include "newstrust/crawler.hpp"

#include "newstrust/errors.hpp"
#include "newstrust/html.hpp"
#include "newstrust/log.hpp"
#include "newstrust/url.hpp"
#include "newstrust/xpath.hpp"

#include <httplib.h>
#include <netdb.h>
#include <nlohmann/json.hpp>

#include <regex>
#include <set>
#include <thread>

namespace newstrust {

void CrawlConfig::validate() const {
    if (!is_valid_domain(domain)) throw ConfigError("crawl config: malformed domain '" + domain + "'");
    const auto first = history_url_template.find("{page}");
    if (first == std::string::npos || history_url_template.find("{page}", first + 1) != std::string::npos)
        throw ConfigError("crawl config: history_url_template must contain {page} exactly once");
    {
        auto probe = history_url_template;
        probe.replace(first, 6, "1");
        if (!is_http_url(probe))
            throw ConfigError("crawl config: history_url_template is not an http(s) URL");
    }
    if (start_page < 1) throw ConfigError("crawl config: start_page must be positive");
    if (max_pages < 1) throw ConfigError("crawl config: max_pages must be positive");
    if (min_articles < 1 || max_articles < 1)
        throw ConfigError("crawl config: article bounds must be positive");
    if (min_articles > max_articles)
        throw ConfigError("crawl config: min_articles exceeds max_articles");
    if (politeness_delay_ms < 0) throw ConfigError("crawl config: negative politeness_delay_ms");
    if (timeout_ms < 1) throw ConfigError("crawl config: timeout_ms must be positive");
    if (max_retries < 0) throw ConfigError("crawl config: negative max_retries");
    if (retry_backoff_ms < 0) throw ConfigError("crawl config: negative retry_backoff_ms");
    if (trim(article_link_selector).empty()) throw ConfigError("crawl config: empty article_link_selector");
}

void to_json(nlohmann::json& j, const CrawlConfig& c) {
    j = nlohmann::json{{"domain", c.domain},
                       {"history_url_template", c.history_url_template},
                       {"start_page", c.start_page},
                       {"max_pages", c.max_pages},
                       {"article_link_selector", c.article_link_selector},
                       {"min_articles", c.min_articles},
                       {"max_articles", c.max_articles},
                       {"politeness_delay_ms", c.politeness_delay_ms},
                       {"timeout_ms", c.timeout_ms},
                       {"max_retries", c.max_retries},
                       {"user_agent", c.user_agent},
                       {"retry_backoff_ms", c.retry_backoff_ms},
                       {"respect_robots", c.respect_robots},
                       {"gzip", c.gzip}};
}

void from_json(const nlohmann::json& j, CrawlConfig& c) {
    try {
        CrawlConfig d;
        c.domain = j.at("domain").get<std::string>();
        c.history_url_template = j.at("history_url_template").get<std::string>();
        c.start_page = j.value("start_page", d.start_page);
        c.max_pages = j.at("max_pages").get<int>();
        c.article_link_selector = j.at("article_link_selector").get<std::string>();
        c.min_articles = j.value("min_articles", d.min_articles);
        c.max_articles = j.value("max_articles", d.max_articles);
        c.politeness_delay_ms = j.value("politeness_delay_ms", d.politeness_delay_ms);
        c.timeout_ms = j.value("timeout_ms", d.timeout_ms);
        c.max_retries = j.value("max_retries", d.max_retries);
        c.user_agent = j.value("user_agent", d.user_agent);
        c.retry_backoff_ms = j.value("retry_backoff_ms", d.retry_backoff_ms);
        c.respect_robots = j.value("respect_robots", d.respect_robots);
        c.gzip = j.value("gzip", d.gzip);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed crawl config: ") + e.what());
    }
}

std::string_view to_string(JobState s) {
    switch (s) {
        case JobState::queued: return "queued";
        case JobState::enumerating: return "enumerating";
        case JobState::fetching: return "fetching";
        case JobState::done: return "done";
        case JobState::failed: return "failed";
        case JobState::cancelled: return "cancelled";
    }
    return "unknown";
}

bool is_terminal(JobState s) {
    return s == JobState::done || s == JobState::failed || s == JobState::cancelled;
}

bool is_legal_transition(JobState from, JobState to) {
    if (is_terminal(from)) return false;
    if (to == JobState::failed || to == JobState::cancelled) return true;
    return (from == JobState::queued && to == JobState::enumerating) ||
           (from == JobState::enumerating && to == JobState::fetching) ||
           (from == JobState::fetching && to == JobState::done);
}

void to_json(nlohmann::json& j, const CrawlJob& job) {
    auto errors = nlohmann::json::array();
    for (const auto& e : job.errors)
        errors.push_back({{"url", e.url}, {"kind", e.kind}, {"message", e.message}});
    j = nlohmann::json{{"job_id", job.job_id},
                       {"kind", "crawl"},
                       {"domain", job.domain},
                       {"state", to_string(job.state)},
                       {"urls_found", job.urls_found},
                       {"pages_fetched", job.pages_fetched},
                       {"articles_archived", job.articles_archived},
                       {"errors", errors},
                       {"failure_reason", job.failure_reason},
                       {"warc_path", job.warc_path.string()}};
    j["started_at"] = job.started_at ? nlohmann::json(format_timestamp(*job.started_at)) : nlohmann::json(nullptr);
    j["finished_at"] = job.finished_at ? nlohmann::json(format_timestamp(*job.finished_at)) : nlohmann::json(nullptr);
}

CrawlJobHandle::CrawlJobHandle(std::string job_id, std::string domain) {
    job_.job_id = std::move(job_id);
    job_.domain = std::move(domain);
}

CrawlJob CrawlJobHandle::snapshot() const {
    std::lock_guard lock(mu_);
    return job_;
}

void CrawlJobHandle::update(const std::function<void(CrawlJob&)>& fn) {
    std::lock_guard lock(mu_);
    fn(job_);
}

void CrawlJobHandle::transition(JobState to) {
    std::lock_guard lock(mu_);
    if (!is_legal_transition(job_.state, to))
        throw JobStateError("illegal job transition " + std::string(to_string(job_.state)) + " -> " +
                            std::string(to_string(to)));
    job_.state = to;
    if (to == JobState::enumerating) job_.started_at = now_utc();
    if (is_terminal(to)) job_.finished_at = now_utc();
}

void CrawlJobHandle::request_cancel() {
    std::lock_guard lock(mu_);
    if (is_terminal(job_.state))
        throw JobStateError("job " + job_.job_id + " is already " + std::string(to_string(job_.state)));
    if (job_.state == JobState::queued) {
        job_.state = JobState::cancelled;
        job_.finished_at = now_utc();
    }
    cancel_ = true;
}

// ---- politeness --------------------------------------------------------

HostGate::Permit::Permit(HostGate& gate, std::string host) : gate_(gate), host_(std::move(host)) {}
HostGate::Permit::~Permit() { gate_.release(host_); }

HostGate::Permit HostGate::acquire(const std::string& host, std::chrono::milliseconds delay) {
    std::unique_lock lock(mu_);
    auto& st = hosts_[host];
    cv_.wait(lock, [&] { return !st.busy; });
    st.busy = true;
    if (st.last_done) {
        const auto ready = *st.last_done + delay;
        lock.unlock();
        std::this_thread::sleep_until(ready);
    }
    return Permit(*this, host);
}

void HostGate::release(const std::string& host) {
    {
        std::lock_guard lock(mu_);
        auto& st = hosts_[host];
        st.busy = false;
        st.last_done = std::chrono::steady_clock::now();
    }
    cv_.notify_all();
}

// ---- robots.txt --------------------------------------------------------

namespace {

bool robots_match(std::string_view pattern, std::string_view path) {
    // '*' matches any run, a trailing '$' anchors at the end
    bool anchored = !pattern.empty() && pattern.back() == '$';
    if (anchored) pattern.remove_suffix(1);
    std::function<bool(std::size_t, std::size_t)> rec = [&](std::size_t pi, std::size_t si) -> bool {
        if (pi == pattern.size()) return !anchored || si == path.size();
        if (pattern[pi] == '*') {
            for (std::size_t k = si; k <= path.size(); ++k)
                if (rec(pi + 1, k)) return true;
            return false;
        }
        if (si < path.size() && pattern[pi] == path[si]) return rec(pi + 1, si + 1);
        return false;
    };
    return rec(0, 0);
}

}  // namespace

RobotsRules RobotsRules::parse(std::string_view txt, std::string_view user_agent) {
    const auto token = to_lower_ascii(user_agent.substr(0, user_agent.find('/')));
    struct Group {
        std::vector<std::string> agents;
        std::vector<Rule> rules;
    };
    std::vector<Group> groups;
    bool last_was_agent = false;
    std::size_t pos = 0;
    while (pos <= txt.size()) {
        auto eol = txt.find('\n', pos);
        if (eol == std::string_view::npos) eol = txt.size();
        auto line = txt.substr(pos, eol - pos);
        pos = eol + 1;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) continue;
        const auto key = to_lower_ascii(trim(line.substr(0, colon)));
        const auto value = trim(line.substr(colon + 1));
        if (key == "user-agent") {
            if (!last_was_agent) groups.emplace_back();
            groups.back().agents.push_back(to_lower_ascii(value));
            last_was_agent = true;
        } else if (key == "allow" || key == "disallow") {
            last_was_agent = false;
            if (groups.empty() || value.empty()) continue;
            groups.back().rules.push_back({key == "allow", value});
        } else {
            last_was_agent = false;
        }
    }
    const Group* chosen = nullptr;
    for (const auto& g : groups)
        for (const auto& a : g.agents)
            if (a != "*" && !token.empty() && token.find(a) != std::string::npos) chosen = chosen ? chosen : &g;
    if (!chosen)
        for (const auto& g : groups)
            for (const auto& a : g.agents)
                if (a == "*") chosen = chosen ? chosen : &g;
    RobotsRules r;
    if (chosen) r.rules_ = chosen->rules;
    return r;
}

bool RobotsRules::allowed(std::string_view path) const {
    const Rule* best = nullptr;
    for (const auto& rule : rules_) {
        if (!robots_match(rule.pattern, path)) continue;
        if (!best || rule.pattern.size() > best->pattern.size() ||
            (rule.pattern.size() == best->pattern.size() && rule.allow))
            best = &rule;
    }
    return !best || best->allow;
}

// ---- fetching ----------------------------------------------------------

Fetcher::Fetcher(std::shared_ptr<HostGate> gate) : gate_(std::move(gate)) {}

namespace {

bool host_resolves(const std::string& host) {
    addrinfo* res = nullptr;
    const int rc = getaddrinfo(host.c_str(), nullptr, nullptr, &res);
    if (res) freeaddrinfo(res);
    return rc == 0;
}

std::string host_key(const Url& u) { return u.host() + ":" + std::to_string(u.port()); }

bool is_redirect(int status) {
    return status == 301 || status == 302 || status == 303 || status == 307 || status == 308;
}

bool is_transient(int status) { return status == 429 || status >= 500; }

}  // namespace

FetchRecord Fetcher::fetch_once(const std::string& url, const CrawlConfig& config) {
    if (!is_http_url(url)) throw FetchError("bad-url", "not an absolute http(s) URL: " + url);
    const auto u = Url::parse(url);
    auto permit = gate_->acquire(host_key(u), std::chrono::milliseconds(config.politeness_delay_ms));

    httplib::Client client(u.origin());
    const auto secs = config.timeout_ms / 1000;
    const auto usecs = (config.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    client.set_follow_location(false);
    client.enable_server_certificate_verification(true);

    const httplib::Headers req_headers = {{"User-Agent", config.user_agent}, {"Accept", "text/html,*/*"}};
    FetchRecord rec;
    rec.url = url;
    rec.fetched_at = now_utc();
    auto res = client.Get(u.request_target(), req_headers);
    if (!res) {
        const auto err = res.error();
        const auto msg = httplib::to_string(err) + " fetching " + url;
        switch (err) {
            case httplib::Error::ConnectionTimeout:
            case httplib::Error::Read:
                throw FetchError("timeout", msg);
            case httplib::Error::SSLConnection:
            case httplib::Error::SSLLoadingCerts:
            case httplib::Error::SSLServerVerification:
                throw FetchError("tls", msg);
            default:
                if (!host_resolves(u.host())) throw FetchError("dns", "cannot resolve host " + u.host());
                throw FetchError("connection", msg);
        }
    }
    rec.status = res->status;
    rec.reason = res->reason.empty() ? std::string(httplib::status_message(res->status)) : res->reason;
    for (const auto& [k, v] : res->headers) {
        const auto lower = to_lower_ascii(k);
        if (lower == "transfer-encoding" || lower == "content-length") continue;
        rec.headers.emplace_back(k, v);
    }
    rec.body = std::move(res->body);
    rec.headers.emplace_back("Content-Length", std::to_string(rec.body.size()));
    return rec;
}

const RobotsRules& Fetcher::robots_for(const std::string& url, const CrawlConfig& config) {
    const auto u = Url::parse(url);
    const auto origin = u.origin();
    {
        std::lock_guard lock(robots_mu_);
        if (auto it = robots_.find(origin); it != robots_.end()) return it->second;
    }
    RobotsRules rules = RobotsRules::allow_all();
    try {
        const auto rec = fetch_once(origin + "/robots.txt", config);
        if (rec.status >= 200 && rec.status < 300) rules = RobotsRules::parse(rec.body, config.user_agent);
    } catch (const FetchError& e) {
        log::warn(std::string("robots.txt unavailable for ") + origin + ": " + e.what());
    }
    std::lock_guard lock(robots_mu_);
    return robots_.emplace(origin, std::move(rules)).first->second;
}

FetchRecord Fetcher::fetch(const std::string& url, const CrawlConfig& config) {
    std::string current = url;
    for (int hop = 0; hop <= 5; ++hop) {
        if (!is_http_url(current)) throw FetchError("bad-url", "not an absolute http(s) URL: " + current);
        if (config.respect_robots) {
            if (!robots_for(current, config).allowed(Url::parse(current).request_target()))
                throw FetchError("robots", "disallowed by robots.txt: " + current);
        }
        FetchRecord rec;
        for (int attempt = 0;; ++attempt) {
            try {
                rec = fetch_once(current, config);
                if (!is_transient(rec.status) || attempt >= config.max_retries) break;
            } catch (const FetchError& e) {
                const bool retryable = e.reason() == "timeout" || e.reason() == "connection";
                if (!retryable || attempt >= config.max_retries) throw;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(
                static_cast<std::int64_t>(config.retry_backoff_ms) << attempt));
        }
        if (is_redirect(rec.status)) {
            const auto location = rec.header("Location");
            if (location.empty()) throw FetchError("http-status", "redirect without Location from " + current);
            current = resolve_url(current, location);
            continue;
        }
        if (rec.status < 200 || rec.status >= 300)
            throw FetchError("http-status", "HTTP " + std::to_string(rec.status) + " from " + current);
        return rec;
    }
    throw FetchError("too-many-redirects", "more than 5 redirects starting at " + url);
}

// ---- enumeration and link extraction -----------------------------------

std::vector<std::string> enumerate_page_urls(const CrawlConfig& config) {
    const auto at = config.history_url_template.find("{page}");
    if (at == std::string::npos || config.history_url_template.find("{page}", at + 1) != std::string::npos)
        throw ConfigError("history_url_template must contain {page} exactly once");
    if (config.start_page < 1 || config.max_pages < 1)
        throw ConfigError("start_page and max_pages must be positive");
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(config.max_pages));
    for (int p = config.start_page; p < config.start_page + config.max_pages; ++p) {
        auto u = config.history_url_template;
        u.replace(at, 6, std::to_string(p));
        out.push_back(std::move(u));
    }
    return out;
}

namespace {

bool selector_is_xpath(std::string_view sel) {
    return sel.starts_with("xpath:") || sel.starts_with("/") || sel.starts_with(".") ||
           sel.starts_with("(");
}

std::string strip_fragment(std::string u) {
    if (const auto h = u.find('#'); h != std::string::npos) u.erase(h);
    return u;
}

void collect_anchor_hrefs(const html::Node& n, std::vector<std::string>& out) {
    if (n.kind == html::NodeKind::element && (n.name == "a" || n.name == "area"))
        if (const auto* href = n.attribute("href")) out.push_back(*href);
    for (const auto& c : n.children) collect_anchor_hrefs(*c, out);
}

}  // namespace

std::vector<std::string> extract_article_urls(std::string_view page_html, std::string_view page_url,
                                              const CrawlConfig& config) {
    const auto sel = std::string_view(config.article_link_selector);
    const auto doc = html::Document::parse(page_html);
    std::vector<std::string> hrefs;
    std::optional<std::regex> pattern;

    if (selector_is_xpath(sel)) {
        const auto expr = xpath::XPath::compile(sel.starts_with("xpath:") ? sel.substr(6) : sel);
        for (const auto& n : expr.select(doc.root())) {
            if (n.is_attribute()) {
                hrefs.push_back(n.string_value());
            } else if (n.node->kind == html::NodeKind::element) {
                if (const auto* href = n.node->attribute("href")) hrefs.push_back(*href);
            }
        }
    } else {
        const auto re_text = sel.starts_with("regex:") ? sel.substr(6) : sel;
        try {
            pattern.emplace(std::string(re_text), std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
            throw ConfigError("invalid article_link_selector regex: " + std::string(e.what()));
        }
        collect_anchor_hrefs(doc.root(), hrefs);
    }

    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& raw : hrefs) {
        const auto href = html::decode_entities(trim(raw));
        if (href.empty()) continue;
        auto abs = strip_fragment(resolve_url(page_url, href));
        if (!is_http_url(abs)) continue;
        if (pattern && !std::regex_search(abs, *pattern)) continue;
        if (seen.insert(abs).second) out.push_back(std::move(abs));
    }
    return out;
}

// ---- crawl orchestration ----------------------------------------------

void run_crawl(const CrawlConfig& config, const Registry& registry, const std::filesystem::path& out_dir,
               Fetcher& fetcher, CrawlJobHandle& handle) {
    auto fail = [&](std::string reason, std::string message) {
        handle.update([&](CrawlJob& j) {
            j.failure_reason = reason;
            if (!message.empty()) j.errors.push_back({"", reason, std::move(message)});
        });
        handle.transition(JobState::failed);
    };
    auto cancelled = [&] {
        if (!handle.cancel_requested()) return false;
        if (!is_terminal(handle.snapshot().state)) handle.transition(JobState::cancelled);
        return true;
    };
    if (cancelled()) return;
    handle.transition(JobState::enumerating);

    try {
        config.validate();
    } catch (const ConfigError& e) {
        fail("config", e.what());
        return;
    }
    const auto source = registry.find(config.domain);
    if (!source) {
        fail("config", "domain " + config.domain + " is not in the registry");
        return;
    }
    if (const auto adm = admit_source(*source); !adm.accepted) {
        fail("config", "source " + config.domain + " is not admitted (" + adm.reason + ")");
        return;
    }
    if (!config.respect_robots) log::warn("robots.txt ignored for " + config.domain + " (override)");

    const auto job_id = handle.snapshot().job_id;
    const auto warc_path = out_dir / (config.domain + "-" + job_id + (config.gzip ? ".warc.gz" : ".warc"));
    handle.update([&](CrawlJob& j) { j.warc_path = warc_path; });

    std::vector<std::string> article_urls;
    std::set<std::string> seen;
    const auto max_articles = static_cast<std::size_t>(config.max_articles);
    for (const auto& page_url : enumerate_page_urls(config)) {
        if (cancelled()) return;
        std::vector<std::string> found;
        try {
            const auto rec = fetcher.fetch(page_url, config);
            found = extract_article_urls(rec.body, rec.url, config);
        } catch (const FetchError& e) {
            handle.update([&](CrawlJob& j) { j.errors.push_back({page_url, e.reason(), e.what()}); });
            continue;
        } catch (const ConfigError& e) {
            fail("config", e.what());
            return;
        }
        std::size_t fresh = 0;
        for (auto& u : found)
            if (seen.insert(u).second) {
                article_urls.push_back(std::move(u));
                ++fresh;
            }
        handle.update([&](CrawlJob& j) {
            ++j.pages_fetched;
            j.urls_found = article_urls.size();
        });
        if (fresh == 0 || article_urls.size() >= max_articles) break;
    }

    if (cancelled()) return;
    handle.transition(JobState::fetching);
    std::optional<WarcWriter> writer;
    std::size_t archived = 0;
    for (const auto& url : article_urls) {
        if (archived >= max_articles) break;
        if (cancelled()) return;
        try {
            auto rec = fetcher.fetch(url, config);
            if (!writer) writer.emplace(warc_path, config.gzip);
            writer->append(rec);
            ++archived;
            handle.update([&](CrawlJob& j) {
                j.articles_archived = archived;
                j.archived_urls.push_back(rec.url);
            });
        } catch (const FetchError& e) {
            handle.update([&](CrawlJob& j) { j.errors.push_back({url, e.reason(), e.what()}); });
        } catch (const IoError& e) {
            fail("io", e.what());
            return;
        }
    }
    if (archived >= static_cast<std::size_t>(config.min_articles)) {
        handle.transition(JobState::done);
    } else {
        fail("insufficient-articles", "archived " + std::to_string(archived) + " of the required " +
                                          std::to_string(config.min_articles) + " articles");
    }
}

CrawlJob run_crawl(const CrawlConfig& config, const Registry& registry, const std::filesystem::path& out_dir) {
    Fetcher fetcher;
    CrawlJobHandle handle(uuid4(), config.domain);
    run_crawl(config, registry, out_dir, fetcher, handle);
    return handle.snapshot();
}

}  // namespace newstrust
