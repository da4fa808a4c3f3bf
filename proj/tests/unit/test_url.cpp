#include "newstrust/errors.hpp"
#include "newstrust/url.hpp"

#include <doctest.h>

using namespace newstrust;

TEST_CASE("component parsing") {
    const auto u = Url::parse("https://User@Example.COM:8443/a/b?x=1#frag");
    CHECK(u.scheme == "https");
    CHECK(u.authority == "User@Example.COM:8443");
    CHECK(u.path == "/a/b");
    CHECK(u.query == "x=1");
    CHECK(u.fragment == "frag");
    CHECK(u.host() == "example.com");
    CHECK(u.port() == 8443);
    CHECK(u.request_target() == "/a/b?x=1");
    CHECK(u.origin() == "https://User@Example.COM:8443");

    const auto v = Url::parse("http://h.example");
    CHECK(v.port() == 80);
    CHECK(v.request_target() == "/");
    CHECK(Url::parse("https://h.example/").port() == 443);

    const auto empty_query = Url::parse("/p?");
    CHECK(empty_query.query == "");
    CHECK_FALSE(Url::parse("/p").query);
    CHECK(Url::parse("http://h.example/p?q#f").str() == "http://h.example/p?q#f");
}

// Reference resolution examples from RFC 3986, 5.4.
TEST_CASE("normal examples") {
    const std::string base = "http://a/b/c/d;p?q";
    const std::pair<const char*, const char*> cases[] = {
        {"g:h", "g:h"},
        {"g", "http://a/b/c/g"},
        {"./g", "http://a/b/c/g"},
        {"g/", "http://a/b/c/g/"},
        {"/g", "http://a/g"},
        {"//g", "http://g"},
        {"?y", "http://a/b/c/d;p?y"},
        {"g?y", "http://a/b/c/g?y"},
        {"#s", "http://a/b/c/d;p?q"},
        {"g#s", "http://a/b/c/g"},
        {";x", "http://a/b/c/;x"},
        {"g;x", "http://a/b/c/g;x"},
        {"", "http://a/b/c/d;p?q"},
        {".", "http://a/b/c/"},
        {"./", "http://a/b/c/"},
        {"..", "http://a/b/"},
        {"../", "http://a/b/"},
        {"../g", "http://a/b/g"},
        {"../..", "http://a/"},
        {"../../", "http://a/"},
        {"../../g", "http://a/g"},
    };
    for (const auto& [ref, want] : cases) {
        CAPTURE(ref);
        CHECK(resolve_url(base, ref) == want);
    }
}

TEST_CASE("abnormal examples") {
    const std::string base = "http://a/b/c/d;p?q";
    const std::pair<const char*, const char*> cases[] = {
        {"../../../g", "http://a/g"},
        {"../../../../g", "http://a/g"},
        {"/./g", "http://a/g"},
        {"/../g", "http://a/g"},
        {"g.", "http://a/b/c/g."},
        {".g", "http://a/b/c/.g"},
        {"g..", "http://a/b/c/g.."},
        {"..g", "http://a/b/c/..g"},
        {"./../g", "http://a/b/g"},
        {"./g/.", "http://a/b/c/g/"},
        {"g/./h", "http://a/b/c/g/h"},
        {"g/../h", "http://a/b/c/h"},
        {"g;x=1/./y", "http://a/b/c/g;x=1/y"},
        {"g;x=1/../y", "http://a/b/c/y"},
        {"g?y/./x", "http://a/b/c/g?y/./x"},
        {"g?y/../x", "http://a/b/c/g?y/../x"},
        {"g#s/./x", "http://a/b/c/g"},
        {"http:g", "http:g"},
    };
    for (const auto& [ref, want] : cases) {
        CAPTURE(ref);
        CHECK(resolve_url(base, ref) == want);
    }
}

TEST_CASE("site-relative links") {
    CHECK(resolve_url("https://h.example/page/1/", "/news/x") == "https://h.example/news/x");
    CHECK(resolve_url("https://h.example/page/1/", "story.html") == "https://h.example/page/1/story.html");
}

TEST_CASE("is_http_url") {
    CHECK(is_http_url("http://h.example/"));
    CHECK(is_http_url("HTTPS://h.example"));
    CHECK_FALSE(is_http_url("ftp://h.example/"));
    CHECK_FALSE(is_http_url("/relative"));
    CHECK_FALSE(is_http_url("http:///nohost"));
}
