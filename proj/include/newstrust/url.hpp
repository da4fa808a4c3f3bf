#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace newstrust {

// Generic URI components (RFC 3986 section 3). Absent components are
// distinguished from empty ones.
struct Url {
    std::optional<std::string> scheme;
    std::optional<std::string> authority;
    std::string path;
    std::optional<std::string> query;
    std::optional<std::string> fragment;

    static Url parse(std::string_view text);
    std::string str() const;

    // Lowercase host without userinfo or port.
    std::string host() const;
    // Explicit port, or the scheme default (80/443).
    int port() const;
    // Path plus query, as sent in a request line.
    std::string request_target() const;
    // scheme://authority
    std::string origin() const;
};

// Reference resolution per RFC 3986 section 5.2, fragment dropped.
std::string resolve_url(std::string_view base, std::string_view reference);

bool is_http_url(std::string_view text);

}  // namespace newstrust
