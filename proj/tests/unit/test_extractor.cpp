#include "fixture_server.hpp"

#include "newstrust/errors.hpp"
#include "newstrust/extractor.hpp"
#include "newstrust/text.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <filesystem>

using namespace newstrust;
namespace fs = std::filesystem;

namespace {

FetchRecord page(const std::string& url, const std::string& html, const std::string& content_type = "text/html") {
    FetchRecord r;
    r.url = url;
    r.status = 200;
    r.reason = "OK";
    r.headers = {{"Content-Type", content_type}};
    r.body = html;
    r.fetched_at = parse_timestamp("2023-05-05T08:00:00Z");
    return r;
}

ExtractionRules article_rules() {
    ExtractionRules r;
    r.domain = "h.example";
    r.text_xpaths = {"//article/p"};
    r.title_xpath = "//h1";
    r.drop_xpaths = {"//*[@class='share']"};
    return r;
}

fs::path temp(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("newstrust-extract-" + uuid4());
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("drop rules remove footers") {
    const auto rec = page("https://h.example/1",
                          "<h1>Title  here</h1><article><p>Body   one.</p><p class='share'>Share this on social</p>"
                          "<p>Body <b>two</b>\n continues.</p></article>");
    const auto a = extract_text(rec, article_rules());
    CHECK(a.text == "Body one.\nBody two continues.");
    CHECK(a.title == "Title here");
    CHECK(a.word_count == 5);
    CHECK(a.domain == "h.example");
    CHECK(a.url == rec.url);
    CHECK(a.fetched_at == rec.fetched_at);

    auto keep = article_rules();
    keep.drop_xpaths.clear();
    CHECK(extract_text(rec, keep).text.size() > a.text.size());
}

TEST_CASE("nested markup and misses") {
    auto rules = article_rules();
    rules.text_xpaths = {"//p"};
    CHECK(extract_text(page("u", "<p>a <b>b</b> c</p>"), rules).text == "a b c");
    CHECK_THROWS_AS(extract_text(page("u", "<div>nothing</div>"), article_rules()), ExtractionMiss);
    rules.text_xpaths.clear();
    CHECK_THROWS_AS(rules.validate(), ConfigError);
    rules.text_xpaths = {"//p["};
    CHECK_THROWS_AS(rules.validate(), ConfigError);
}

TEST_CASE("charset handling") {
    auto rules = article_rules();
    rules.text_xpaths = {"//p"};
    bool fallback = true;
    auto a = extract_text(page("u", "<p>caf\xe9</p>", "text/html; charset=iso-8859-1"), rules, &fallback);
    CHECK(a.text == "caf\xc3\xa9");
    CHECK_FALSE(fallback);
    a = extract_text(page("u", "<meta charset=\"windows-1252\"><p>\x93q\x94</p>", "text/html"), rules, &fallback);
    CHECK(a.text == "\xe2\x80\x9cq\xe2\x80\x9d");
    a = extract_text(page("u", "<p>bad \xff byte</p>", "text/html"), rules, &fallback);
    CHECK(fallback);
    CHECK(text::is_valid_utf8(a.text));
}

TEST_CASE("word_count agrees with a whitespace re-count") {
    auto rules = article_rules();
    rules.text_xpaths = {"//p"};
    const auto a = extract_text(page("u", "<p>one\xc2\xa0two</p><p>  three\tfour\xe2\x80\x83" "five </p>"), rules);
    std::size_t n = 0;
    bool in_word = false;
    std::size_t pos = 0;
    while (pos < a.text.size()) {
        const auto cp = text::next_code_point(a.text, pos);
        const bool space = text::is_unicode_space(cp);
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    CHECK(a.word_count == n);
    CHECK(n == 5);
}

TEST_CASE("extract_all reports misses") {
    const auto path = temp("ten.warc");
    for (int i = 0; i < 10; ++i) {
        const auto body = i == 4 ? std::string("<div>no article here</div>")
                                 : "<article><p>Story " + std::to_string(i) + " text.</p></article>";
        archive(page("https://h.example/" + std::to_string(i), body), path);
    }
    const auto res = extract_all(path, article_rules());
    CHECK(res.articles.size() == 9);
    CHECK(res.report.records == 10);
    CHECK(res.report.misses == 1);
    REQUIRE(res.report.issues.size() == 1);
    CHECK(res.report.issues[0].kind == "extraction-miss");
    CHECK(res.report.issues[0].url == "https://h.example/4");

    const auto again = extract_all(path, article_rules());
    CHECK(again.articles == res.articles);

    const auto empty = temp("empty.warc");
    write_file(empty, "");
    const auto none = extract_all(empty, article_rules());
    CHECK(none.articles.empty());
    CHECK(none.report.records == 0);
    CHECK(none.report.issues.empty());
    fs::remove_all(path.parent_path());
    fs::remove_all(empty.parent_path());
}

TEST_CASE("extract_all keeps records before corruption") {
    const auto path = temp("bad.warc");
    archive(page("https://h.example/1", "<article><p>one</p></article>"), path);
    archive(page("https://h.example/2", "<article><p>two</p></article>"), path);
    const auto off = archive(page("https://h.example/3", "<article><p>three</p></article>"), path);
    auto raw = read_file(path);
    write_file(path, raw.substr(0, off + 30));
    const auto res = extract_all(path, article_rules());
    CHECK(res.articles.size() == 2);
    REQUIRE_FALSE(res.report.issues.empty());
    CHECK(res.report.issues.back().kind == "archive");
    fs::remove_all(path.parent_path());
}

TEST_CASE("fixture site pages extract to the generated bodies") {
    testing::FixtureServer site;
    const auto cfg = site.crawl_config("fixture-news.example", 0);
    Fetcher fetcher;
    for (int n : {1, 7, 8, 33}) {
        const auto rec = fetcher.fetch(site.article_url(n), cfg);
        const auto a = extract_text(rec, site.rules("fixture-news.example"));
        CHECK(a.text == site.article_body(n));
        CHECK(a.word_count == static_cast<std::size_t>(site.body_words(n)));
    }
    CHECK(site.body_words(7) == 199);
    CHECK(site.body_words(8) == 200);
}

TEST_CASE("RawArticle JSON round trip") {
    RawArticle a{"https://h.example/1", "h.example", std::nullopt, "x y", 2, parse_timestamp("2023-05-04T00:00:00Z")};
    const nlohmann::json j = a;
    CHECK(j["title"].is_null());
    CHECK(j.get<RawArticle>() == a);
    a.title = "T";
    CHECK(nlohmann::json(a).get<RawArticle>() == a);
}
