// Pass/fail line per acceptance criterion. Exit status is non-zero when any
// criterion fails or runs past its time bound.

#include "corpus.hpp"
#include "fixture_server.hpp"

#include "newstrust/classifier.hpp"
#include "newstrust/cleaner.hpp"
#include "newstrust/crawler.hpp"
#include "newstrust/dataset.hpp"
#include "newstrust/errors.hpp"
#include "newstrust/evaluation.hpp"
#include "newstrust/extractor.hpp"
#include "newstrust/registry.hpp"
#include "newstrust/sampler.hpp"
#include "newstrust/server.hpp"
#include "newstrust/service.hpp"
#include "newstrust/text.hpp"
#include "newstrust/warc.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

using namespace newstrust;
using namespace newstrust::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Check {
    bool ok = true;
    std::ostringstream detail;
    std::string failures;

    void expect(bool cond, const std::string& what) {
        if (cond) return;
        failures += (ok ? "" : "; ") + what;
        ok = false;
    }

    std::string line() const {
        const auto d = detail.str();
        if (ok) return d;
        return d.empty() ? "failed: " + failures : d + " | failed: " + failures;
    }
};

struct Criterion {
    const char* name;
    double bound_s;
    std::function<void(Check&)> body;
};

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("newstrust-acceptance-" + std::to_string(::getpid()) + "-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// ---------------------------------------------------------------- metrics

void metric_oracle(Check& c) {
    const std::vector<std::string> classes = {"A", "B", "C"};
    const auto cm = confusion(std::vector<std::string>{"A", "A", "B", "C"},
                              std::vector<std::string>{"A", "B", "B", "C"}, classes);
    const auto m = metrics(cm);
    // hand computation: P = (1, 1/2, 1), R = (1/2, 1, 1), F1 = (2/3, 2/3, 1)
    const double macro = (2.0 / 3 + 2.0 / 3 + 1.0) / 3;
    c.expect(std::abs(m.f1_macro - 0.7778) <= 1e-4, "f1_macro " + std::to_string(m.f1_macro));
    c.expect(std::abs(m.f1_macro - macro) <= 1e-12, "f1_macro differs from 7/9");
    c.expect(std::abs(m.f1_micro - 0.75) <= 1e-9, "f1_micro " + std::to_string(m.f1_micro));
    c.expect(std::abs(m.accuracy - 0.75) <= 1e-9, "accuracy " + std::to_string(m.accuracy));

    Rng rng(2024);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto k = 2 + rng.below(6);
        ConfusionMatrix r;
        for (std::size_t i = 0; i < k; ++i) r.classes.push_back("c" + std::to_string(i));
        r.counts.assign(k, std::vector<std::size_t>(k, 0));
        for (auto& row : r.counts)
            for (auto& v : row) v = rng.below(rng.below(2) ? 5 : 200);
        if (r.total() == 0) r.counts[0][0] = 1;
        const auto mr = metrics(r);
        c.expect(mr.f1_micro == mr.accuracy, "f1_micro != accuracy at trial " + std::to_string(trial));
        ++checked;
        if (!c.ok) break;
    }
    c.detail << "f1_macro=" << m.f1_macro << " f1_micro=" << m.f1_micro << " accuracy=" << m.accuracy
             << "; " << checked << " random matrices with f1_micro == accuracy";
}

// ---------------------------------------------------------------- binning

void binning_sweep(Check& c) {
    // score bands of the five published levels, highest first
    struct Band {
        int lo, hi;
        const char* name;
    };
    const Band bands[] = {{100, 100, "High Credibility"},
                          {75, 99, "Generally Credible"},
                          {60, 74, "Credible with Exceptions"},
                          {40, 59, "Proceed with Caution"},
                          {0, 39, "Proceed with Maximum Caution"}};
    int agree = 0;
    for (int s = 0; s <= 100; ++s) {
        const char* expected = nullptr;
        for (const auto& b : bands)
            if (s >= b.lo && s <= b.hi) expected = b.name;
        const auto& l = level_from_score(s);
        c.expect(l.name == expected, "score " + std::to_string(s) + " -> " + std::string(l.name));
        c.expect(coarsen_level(l) == coarse_level_from_score(s), "coarse mismatch at " + std::to_string(s));
        c.expect((coarse_level_from_score(s) == CoarseTrust::untrusted) == (s <= 59), "coarse cut at " + std::to_string(s));
        if (c.ok) ++agree;
    }
    c.detail << agree << "/101 scores agree";
}

// ---------------------------------------------------------------- sampler

void sampler_reproduction(Check& c) {
    LevelDistribution d;
    d.proportions = {0.3, 0.5, 0.2, 0.0, 0.0};
    const auto a = allocate(d, 10);
    c.expect(a[0] == 3 && a[1] == 5 && a[2] == 2 && a[3] == 0 && a[4] == 0, "allocation for {0.3,0.5,0.2} n=10");

    Rng rng(99);
    int trials = 0;
    for (; trials < 2000 && c.ok; ++trials) {
        LevelDistribution r;
        double sum = 0;
        std::array<double, kTrustLevelCount> w{};
        for (auto& x : w) sum += x = rng.below(4) == 0 ? 0.0 : rng.uniform();
        if (sum == 0) {
            w[0] = 1;
            sum = 1;
        }
        for (std::size_t i = 0; i < kTrustLevelCount; ++i) r.proportions[i] = w[i] / sum;
        const int n = 1 + static_cast<int>(rng.below(500));
        const auto alloc = allocate(r, n);
        int total = 0;
        for (std::size_t i = 0; i < kTrustLevelCount; ++i) {
            total += alloc[i];
            c.expect(std::abs(alloc[i] - r.proportions[i] * n) < 1.0, "bound violated at trial " + std::to_string(trials));
        }
        c.expect(total == n, "allocation does not sum to n at trial " + std::to_string(trials));
    }
    c.detail << "allocation {" << a[0] << "," << a[1] << "," << a[2] << "}; " << trials
             << " random distributions within the largest-remainder bound";
}

// ---------------------------------------------------------------- k-fold

void kfold_invariant(Check& c) {
    Rng rng(31337);
    const int ks[] = {2, 5, 10};
    int datasets = 0;
    for (; datasets < 240 && c.ok; ++datasets) {
        const int k = ks[datasets % 3];
        const auto classes = 2 + rng.below(5);
        const auto n = 50 + rng.below(4951);
        std::vector<int> labels(n);
        for (auto& l : labels) l = static_cast<int>(rng.below(classes));
        // top up so every class reaches k
        for (std::size_t cl = 0; cl < classes; ++cl)
            for (int i = 0; i < k; ++i) labels.push_back(static_cast<int>(cl));
        const auto folds = stratified_kfold_labels(labels, k, rng.next());
        std::map<int, std::size_t> class_n;
        std::map<std::pair<int, int>, std::size_t> cell;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            c.expect(folds[i] >= 0 && folds[i] < k, "fold out of range");
            ++class_n[labels[i]];
            ++cell[{labels[i], folds[i]}];
        }
        for (const auto& [cl, total] : class_n)
            for (int f = 0; f < k; ++f) {
                const auto got = cell[{cl, f}];
                const auto lo = total / static_cast<std::size_t>(k);
                const auto hi = lo + (total % static_cast<std::size_t>(k) ? 1 : 0);
                c.expect(got >= lo && got <= hi, "class " + std::to_string(cl) + " fold " + std::to_string(f));
            }
        // partition: each position has exactly one fold, so test slices are
        // disjoint and cover everything
        std::size_t covered = 0;
        for (int f = 0; f < k; ++f)
            for (int x : folds) covered += x == f;
        c.expect(covered == labels.size(), "folds do not partition the dataset");
    }
    c.detail << datasets << " random datasets stratified and partitioned";
}

// ---------------------------------------------------------------- classifier

void classifier_numerics(Check& c) {
    Rng rng(5);
    TrainConfig cfg;
    cfg.dimension = 64;
    Model m = Model::zeros({"a", "b", "c"}, cfg.featurizer());
    for (auto& w : m.weights) w = rng.uniform() - 0.5;
    for (auto& b : m.bias) b = rng.uniform() - 0.5;
    std::vector<FeatureVector> xs;
    std::vector<int> ys;
    for (int i = 0; i < 30; ++i) {
        FeatureVector x;
        x.dimension = 64;
        for (std::uint32_t j = 0; j < 64; ++j)
            if (rng.below(4) == 0) x.entries.emplace_back(j, rng.uniform() * 2 - 1);
        xs.push_back(x);
        ys.push_back(static_cast<int>(rng.below(3)));
    }
    const double l2 = 1e-2;
    std::vector<double> gw, gb;
    objective(m, xs, ys, l2, &gw, &gb);
    double max_rel = 0;
    const double h = 1e-5;
    auto rel = [](double a, double n) { return std::abs(a - n) / std::max(1e-8, std::abs(a) + std::abs(n)); };
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
        Model p = m, q = m;
        p.weights[i] += h;
        q.weights[i] -= h;
        const double num = (objective(p, xs, ys, l2) - objective(q, xs, ys, l2)) / (2 * h);
        max_rel = std::max(max_rel, rel(gw[i], num));
    }
    for (std::size_t i = 0; i < m.bias.size(); ++i) {
        Model p = m, q = m;
        p.bias[i] += h;
        q.bias[i] -= h;
        const double num = (objective(p, xs, ys, l2) - objective(q, xs, ys, l2)) / (2 * h);
        max_rel = std::max(max_rel, rel(gb[i], num));
    }
    c.expect(max_rel < 1e-4, "gradient relative error " + std::to_string(max_rel));

    double worst_sum = 0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> z(2 + rng.below(8));
        for (auto& v : z) v = (rng.uniform() - 0.5) * 200;
        const auto p = softmax(z);
        double s = 0;
        for (double v : p) s += v;
        worst_sum = std::max(worst_sum, std::abs(s - 1));
    }
    c.expect(worst_sum <= 1e-9, "softmax sum off by " + std::to_string(worst_sum));

    const auto corpus = make_corpus({.articles_per_source = 10, .boilerplate = false});
    std::vector<std::string> texts;
    std::vector<int> labels;
    for (const auto& a : corpus.articles) {
        texts.push_back(a.text);
        labels.push_back(static_cast<int>(corpus.registry.find(a.domain)->topic));
    }
    TrainConfig tc;
    tc.dimension = 1u << 12;
    tc.epochs = 3;
    tc.seed = 11;
    const auto m1 = json(train(texts, labels, class_names(LabelKind::topic), tc)).dump();
    const auto m2 = json(train(texts, labels, class_names(LabelKind::topic), tc)).dump();
    c.expect(m1 == m2, "retraining with the same seed changed the model file");
    c.detail << "max gradient rel. error " << max_rel << "; softmax |sum-1| <= " << worst_sum
             << "; retrained model files identical (" << m1.size() << " bytes)";
}

// ---------------------------------------------------------------- end to end

void synthetic_end_to_end(Check& c) {
    const auto corpus = make_corpus();
    c.expect(corpus.articles.size() == 2000, "corpus size " + std::to_string(corpus.articles.size()));
    const auto cleaned = clean_corpus(corpus.articles, CleaningConfig{});
    c.expect(cleaned.articles.size() == 2000, "cleaning dropped articles");
    TrainConfig tc;
    tc.seed = 3;
    NativeTrainer trainer;
    CVOptions opt;
    opt.workers = 2;

    const auto topics = build_dataset(cleaned.articles, corpus.registry, LabelKind::topic);
    const auto topic_cv = cross_validate(topics, stratified_kfold(topics, 5, 17), trainer, tc, opt);
    c.expect(topic_cv.folds.size() == 5, "expected 5 topic folds");
    c.expect(topic_cv.f1_macro.mean >= 0.95, "topic mean f1_macro " + std::to_string(topic_cv.f1_macro.mean));

    const auto levels = relabel(topics, LabelKind::trust_level);
    const auto level_cv = cross_validate(levels, stratified_kfold(levels, 5, 17), trainer, tc, opt);
    c.expect(level_cv.f1_macro.mean >= 0.90, "trust mean f1_macro " + std::to_string(level_cv.f1_macro.mean));
    std::size_t off = 0, adj = 0, dist = 0;
    for (const auto& f : level_cv.folds) {
        const auto split = adjacency_decomposition(f.confusion);
        c.expect(split.adjacent + split.distant == f.confusion.off_diagonal(), "adjacency mass mismatch");
        off += f.confusion.off_diagonal();
        adj += split.adjacent;
        dist += split.distant;
    }
    c.detail << "topic f1_macro mean " << topic_cv.f1_macro.mean << ", trust f1_macro mean " << level_cv.f1_macro.mean
             << "; off-diagonal " << off << " = adjacent " << adj << " + distant " << dist;
}

// ---------------------------------------------------------------- crawl

void crawl_pipeline(Check& c) {
    FixtureServer site;
    const std::string domain = "fixture-news.example";
    Registry registry;
    registry.upsert({domain, 80, Topic::political, "en", false, std::nullopt});
    const auto dir = scratch("crawl");
    const auto config = site.crawl_config(domain, 100);
    const auto job = run_crawl(config, registry, dir);
    auto hits = site.hits();
    c.expect(job.state == JobState::done, "crawl state " + std::string(to_string(job.state)));
    c.expect(job.articles_archived == 60, "archived " + std::to_string(job.articles_archived));

    // raw WARC headers, checked without the reader
    const auto raw = read_file(job.warc_path);
    std::size_t pos = 0, records = 0;
    bool headers_ok = true;
    while (pos < raw.size()) {
        const auto end = raw.find("\r\n\r\n", pos);
        if (end == std::string::npos) {
            headers_ok = false;
            break;
        }
        const auto head = raw.substr(pos, end - pos);
        for (const char* h : {"WARC/1.1\r\n", "WARC-Type: response", "WARC-Record-ID: <urn:uuid:", "WARC-Date: ",
                              "WARC-Target-URI: ", "Content-Type: application/http;msgtype=response"})
            if (head.find(h) == std::string::npos) headers_ok = false;
        const auto cl = head.find("Content-Length: ");
        if (cl == std::string::npos) {
            headers_ok = false;
            break;
        }
        const auto len = std::stoull(head.substr(cl + 16, head.find("\r\n", cl) - cl - 16));
        const auto block = end + 4;
        if (raw.compare(block + len, 4, "\r\n\r\n") != 0) headers_ok = false;
        pos = block + len + 4;
        ++records;
    }
    c.expect(headers_ok, "malformed WARC record headers");
    c.expect(records == 60, "WARC holds " + std::to_string(records) + " records");

    const auto recs = read_warc(job.warc_path);
    const auto copy = dir / "copy.warc";
    for (const auto& r : recs) archive(r, copy);
    c.expect(read_warc(copy) == recs, "re-archived records differ");
    httplib::Client direct(site.base_url());
    bool bodies_ok = true;
    std::set<std::string> enumerated;
    for (int n = 1; n <= 60; ++n) enumerated.insert(site.article_url(n));
    for (const auto& r : recs) {
        const auto path = r.url.substr(site.base_url().size());
        const auto res = direct.Get(path);
        if (!res || res->body != r.body) bodies_ok = false;
        if (!enumerated.count(r.url)) bodies_ok = false;
    }
    c.expect(bodies_ok, "archived bodies differ from served pages");

    const auto ex = extract_all(job.warc_path, site.rules(domain));
    c.expect(ex.articles.size() == 60, "extracted " + std::to_string(ex.articles.size()));
    const auto filtered = filter_min_words(ex.articles, CleaningConfig{});
    auto has = [](const std::vector<RawArticle>& v, const std::string& url) {
        return std::any_of(v.begin(), v.end(), [&](const RawArticle& a) { return a.url == url; });
    };
    c.expect(has(filtered.dropped, site.article_url(7)) && !has(filtered.kept, site.article_url(7)), "199-word article kept");
    c.expect(has(filtered.kept, site.article_url(8)), "200-word article dropped");
    c.expect(filtered.dropped.size() == 1, "dropped " + std::to_string(filtered.dropped.size()));

    hits.erase(std::remove_if(hits.begin(), hits.end(), [](const Hit& h) { return h.path.rfind("/flaky", 0) == 0; }),
               hits.end());
    double min_gap_ms = 1e9;
    for (std::size_t i = 1; i < hits.size(); ++i)
        min_gap_ms = std::min(min_gap_ms, std::chrono::duration<double, std::milli>(hits[i].at - hits[i - 1].at).count());
    c.expect(min_gap_ms >= config.politeness_delay_ms, "request gap " + std::to_string(min_gap_ms) + " ms");
    fs::remove_all(dir);
    c.detail << records << " records, " << ex.articles.size() << " extracted, " << filtered.kept.size()
             << " kept after the word filter; min request gap " << min_gap_ms << " ms over " << hits.size()
             << " requests";
}

// ---------------------------------------------------------------- cleaner

void cleaner_check(Check& c) {
    Rng rng(8);
    const auto vocab = distinct_words(rng, 400);
    const std::vector<std::string> planted = {"Thanks for reading the Morning Ledger, your trusted daily briefing.",
                                              "Sign up for our newsletter to get breaking alerts first.",
                                              "All rights reserved by Ledger Media Group worldwide."};
    std::vector<RawArticle> articles;
    std::vector<std::vector<std::string>> own_sentences;
    for (int i = 0; i < 10; ++i) {
        RawArticle a;
        a.domain = "ledger.example";
        a.url = "https://ledger.example/" + std::to_string(i);
        const auto body = compose_text(rng, vocab, {}, 260);
        own_sentences.push_back(split_segments(body));
        std::string t = body;
        if (i != 3) t = planted[0] + " " + t + "\n" + planted[1] + " " + planted[2];
        a.text = text::normalize_lines(t);
        a.word_count = text::word_count(a.text);
        articles.push_back(a);
    }
    CleaningConfig cfg;
    const auto found = find_repeated_fragments(articles, cfg);
    std::size_t recalled = 0;
    for (const auto& p : planted) recalled += std::count(found.begin(), found.end(), p);
    c.expect(recalled == planted.size(), "recalled " + std::to_string(recalled) + "/" + std::to_string(planted.size()));
    c.expect(found.size() == planted.size(), "found " + std::to_string(found.size()) + " fragments");
    std::size_t kept_sentences = 0, total_sentences = 0;
    for (std::size_t i = 0; i < articles.size(); ++i) {
        const auto once = clean_article(articles[i], found, cfg);
        const auto twice = clean_article(once, found, cfg);
        c.expect(once == twice, "cleaning is not idempotent for article " + std::to_string(i));
        for (const auto& p : planted) c.expect(once.text.find(p) == std::string::npos, "planted text survived");
        for (const auto& s : own_sentences[i]) {
            ++total_sentences;
            kept_sentences += once.text.find(s) != std::string::npos;
        }
    }
    c.expect(kept_sentences == total_sentences, "removed non-planted sentences");
    c.detail << "recall " << recalled << "/" << planted.size() << ", " << found.size() << " fragments flagged, "
             << kept_sentences << "/" << total_sentences << " original sentences kept, idempotent";
}

// ---------------------------------------------------------------- service

json post(httplib::Client& cl, const std::string& path, const json& body, int& status) {
    const auto res = cl.Post(path, body.dump(), "application/json");
    if (!res) {
        status = -1;
        return json();
    }
    status = res->status;
    return json::parse(res->body);
}

void service_contract(Check& c) {
    const auto ws = scratch("service");
    auto corpus = make_corpus({.articles_per_source = 20, .boilerplate = false});
    corpus.registry.save(ws / "registry.json");
    {
        const auto ds = build_dataset(corpus.articles, corpus.registry, LabelKind::trust_level);
        TrainConfig tc;
        tc.dimension = 1u << 14;
        tc.seed = 1;
        save_model(train(ds, tc), ws / "models" / "trust.json");
        save_model(train(relabel(ds, LabelKind::topic), tc), ws / "models" / "topic.json");
    }
    Server server(ws);
    const int port = server.start();
    httplib::Client cl("127.0.0.1", port);
    cl.set_read_timeout(60, 0);

    auto text_of = [&](int level, Topic t, int i) {
        return corpus.articles[static_cast<std::size_t>((level * 4 + static_cast<int>(t)) * 20 + i)].text;
    };
    int st = 0;
    const auto low = post(cl, "/v1/classify", {{"text", text_of(0, Topic::political, 0)}}, st);
    c.expect(st == 200, "classify status " + std::to_string(st));
    c.expect(low.value("predicted_level", "") == "Proceed with Maximum Caution" && low.value("flagged", false),
             "low-trust text not flagged");
    c.expect(low.contains("model_id") && low.contains("dataset_id") && !low["model_id"].is_null(), "missing provenance");
    const auto high = post(cl, "/v1/classify", {{"text", text_of(3, Topic::sports, 1)}}, st);
    c.expect(high.value("predicted_level", "") == "Generally Credible" && !high.value("flagged", true),
             "credible text flagged");
    {
        // probabilities pass through unchanged
        const auto model = server.workspace().default_model(LabelKind::trust_level);
        const auto p = predict_proba(*model, text_of(3, Topic::sports, 1));
        c.expect(high["probabilities"].get<std::vector<double>>() == p, "probabilities differ from predict_proba");
    }
    post(cl, "/v1/classify", {{"text", "   "}}, st);
    c.expect(st == 400, "blank text status " + std::to_string(st));

    // the test-side oracle is a plurality over /v1/classify verdicts
    auto assess = [&](const std::vector<std::string>& texts, std::array<int, 5>& hist) {
        hist.fill(0);
        for (const auto& t : texts) ++hist[static_cast<std::size_t>(post(cl, "/v1/classify", {{"text", t}}, st)["predicted_level_index"].get<int>())];
        return post(cl, "/v1/sources/probe.example/assess", {{"texts", texts}}, st);
    };
    std::array<int, 5> hist{};
    std::vector<std::string> texts;
    for (int i = 0; i < 10; ++i) texts.push_back(text_of(4, kAllTopics[static_cast<std::size_t>(i % 4)], i));
    auto a = assess(texts, hist);
    c.expect(hist[4] == 10, "level-4 texts not all predicted level 4");
    c.expect(a.value("inferred_level", "") == "High Credibility" && a.value("confidence", 0.0) == 1.0, "all-high assessment");
    c.expect(!a["warnings"].empty(), "missing small-sample warning");

    texts.clear();
    for (int i = 0; i < 3; ++i) texts.push_back(text_of(0, Topic::health, i));
    for (int i = 0; i < 3; ++i) texts.push_back(text_of(3, Topic::health, i));
    a = assess(texts, hist);
    c.expect(hist[0] == 3 && hist[3] == 3, "tie fixture mispredicted");
    c.expect(a.value("inferred_level_index", -1) == 0, "tie not resolved to the lower level");

    texts.clear();
    for (int i = 0; i < 7; ++i) texts.push_back(text_of(3, Topic::political, i));
    for (int i = 0; i < 3; ++i) texts.push_back(text_of(4, Topic::political, i));
    a = assess(texts, hist);
    c.expect(hist[3] == 7 && hist[4] == 3, "plurality fixture mispredicted");
    c.expect(a.value("inferred_level_index", -1) == 3 && std::abs(a.value("confidence", 0.0) - 0.7) < 1e-12,
             "plurality 7/3 assessment");
    std::reverse(texts.begin(), texts.end());
    const auto a_rev = post(cl, "/v1/sources/probe.example/assess", {{"texts", texts}}, st);
    c.expect(a_rev["level_histogram"] == a["level_histogram"] && a_rev["inferred_level"] == a["inferred_level"],
             "assessment depends on article order");

    auto cand = [](const std::string& id, int level, const char* topic) {
        return json{{"article_id", id}, {"trust_level", level}, {"topic", topic}};
    };
    json cands = json::array();
    for (int l = 0; l < 5; ++l)
        for (auto t : kAllTopics)
            for (int i = 0; i < 3; ++i)
                cands.push_back(cand(std::to_string(l) + std::string(topic_id(t)) + std::to_string(i), l,
                                     std::string(topic_id(t)).c_str()));
    auto s = post(cl, "/v1/samples/balanced", {{"candidates", cands}, {"n", 20}, {"seed", 4}}, st);
    c.expect(st == 200 && s["cells"].size() == 20, "20-cell sample");
    for (const auto& cell : s["cells"]) c.expect(cell["count"] == 1, "cell count not 1");
    cands = json::array();
    for (int i = 0; i < 8; ++i) cands.push_back(cand("p" + std::to_string(i), 2, "sports"));
    s = post(cl, "/v1/samples/balanced", {{"candidates", cands}, {"n", 5}, {"seed", 4}}, st);
    c.expect(s["article_ids"].size() == 5, "single-cell sample size");
    cands = json::array();
    for (int i = 0; i < 5; ++i) cands.push_back(cand("big" + std::to_string(i), 0, "political"));
    cands.push_back(cand("small", 1, "political"));
    s = post(cl, "/v1/samples/balanced", {{"candidates", cands}, {"n", 4}, {"seed", 9}}, st);
    std::map<std::string, int> counts;
    for (const auto& cell : s["cells"]) counts[cell["trust_level"].get<std::string>()] = cell["count"].get<int>();
    c.expect(counts["Proceed with Maximum Caution"] == 3 && counts["Proceed with Caution"] == 1, "{5,1} n=4 -> {3,1}");
    // random pools: non-exhausted cells differ by at most one
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<SampleCandidate> pool;
        std::map<std::pair<int, int>, std::size_t> sizes;
        for (int i = 0; i < 120; ++i) {
            const int l = static_cast<int>(rng.below(5)), t = static_cast<int>(rng.below(4));
            pool.push_back({"a" + std::to_string(i), l, kAllTopics[static_cast<std::size_t>(t)]});
            ++sizes[{l, t}];
        }
        const auto n = 1 + rng.below(120);
        const auto bs = balanced_sample(pool, n, rng.next());
        std::size_t lo = SIZE_MAX, hi = 0;
        for (const auto& [cell, size] : sizes) {
            const auto got = bs.cell_counts[static_cast<std::size_t>(cell.first)][static_cast<std::size_t>(cell.second)];
            if (got == size) continue;  // exhausted
            lo = std::min(lo, got);
            hi = std::max(hi, got);
        }
        if (hi > 0) c.expect(hi - lo <= 1, "non-exhausted cells differ by more than one");
    }
    const auto res = cl.Get("/v1/jobs/does-not-exist");
    c.expect(res && res->status == 404, "unknown job status");
    server.stop();
    fs::remove_all(ws);
    c.detail << "classify, assess (tie, plurality, order), balanced-sample and 404 cases over HTTP";
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"metric-oracle", 5, metric_oracle},
        {"binning-sweep", 1, binning_sweep},
        {"sampler-reproduction", 5, sampler_reproduction},
        {"stratified-kfold-invariant", 30, kfold_invariant},
        {"classifier-numerics", 10, classifier_numerics},
        {"synthetic-end-to-end", 180, synthetic_end_to_end},
        {"crawl-extract-pipeline", 60, crawl_pipeline},
        {"cleaner", 10, cleaner_check},
        {"service-contract", 30, service_contract},
    };
    int failures = 0;
    for (const auto& cr : criteria) {
        Check check;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            cr.body(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs >= cr.bound_s) check.expect(false, "runtime over bound");
        if (!check.ok) ++failures;
        std::printf("%s  %-28s %7.2fs (bound %.0fs)  %s\n", check.ok ? "PASS" : "FAIL", cr.name, secs, cr.bound_s,
                    check.line().c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
