#include "newstrust/url.hpp"

#include "newstrust/util.hpp"

#include <cctype>
#include <vector>

namespace newstrust {

Url Url::parse(std::string_view s) {
    Url u;
    // scheme
    const auto colon = s.find(':');
    const auto first_delim = s.find_first_of("/?#");
    if (colon != std::string_view::npos && colon > 0 &&
        (first_delim == std::string_view::npos || colon < first_delim)) {
        bool ok = std::isalpha(static_cast<unsigned char>(s[0])) != 0;
        for (std::size_t i = 1; i < colon && ok; ++i) {
            const char c = s[i];
            ok = std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
        }
        if (ok) {
            u.scheme = to_lower_ascii(s.substr(0, colon));
            s.remove_prefix(colon + 1);
        }
    }
    if (const auto hash = s.find('#'); hash != std::string_view::npos) {
        u.fragment = std::string(s.substr(hash + 1));
        s = s.substr(0, hash);
    }
    if (const auto q = s.find('?'); q != std::string_view::npos) {
        u.query = std::string(s.substr(q + 1));
        s = s.substr(0, q);
    }
    if (s.starts_with("//")) {
        s.remove_prefix(2);
        const auto slash = s.find('/');
        u.authority = std::string(s.substr(0, slash));
        s = slash == std::string_view::npos ? std::string_view{} : s.substr(slash);
    }
    u.path = std::string(s);
    return u;
}

std::string Url::str() const {
    std::string out;
    if (scheme) out += *scheme + ":";
    if (authority) out += "//" + *authority;
    out += path;
    if (query) out += "?" + *query;
    if (fragment) out += "#" + *fragment;
    return out;
}

std::string Url::host() const {
    if (!authority) return "";
    std::string_view a = *authority;
    if (const auto at = a.rfind('@'); at != std::string_view::npos) a.remove_prefix(at + 1);
    if (a.starts_with('[')) {
        const auto close = a.find(']');
        return to_lower_ascii(a.substr(0, close + 1));
    }
    return to_lower_ascii(a.substr(0, a.find(':')));
}

int Url::port() const {
    if (authority) {
        std::string_view a = *authority;
        if (const auto at = a.rfind('@'); at != std::string_view::npos) a.remove_prefix(at + 1);
        const auto close = a.find(']');
        const auto colon = a.find(':', close == std::string_view::npos ? 0 : close);
        if (colon != std::string_view::npos && colon + 1 < a.size()) {
            try {
                return std::stoi(std::string(a.substr(colon + 1)));
            } catch (...) {
                return -1;
            }
        }
    }
    if (scheme == "https") return 443;
    if (scheme == "http") return 80;
    return -1;
}

std::string Url::request_target() const {
    std::string out = path.empty() ? "/" : path;
    if (query) out += "?" + *query;
    return out;
}

std::string Url::origin() const {
    return scheme.value_or("") + "://" + authority.value_or("");
}

namespace {

// RFC 3986 section 5.2.4
std::string remove_dot_segments(std::string_view in) {
    std::string output;
    std::string input(in);
    while (!input.empty()) {
        if (input.starts_with("../")) {
            input.erase(0, 3);
        } else if (input.starts_with("./")) {
            input.erase(0, 2);
        } else if (input.starts_with("/./")) {
            input.erase(0, 2);
        } else if (input == "/.") {
            input = "/";
        } else if (input.starts_with("/../") || input == "/..") {
            input = input == "/.." ? "/" : input.substr(3);
            const auto last = output.rfind('/');
            output.erase(last == std::string::npos ? 0 : last);
        } else if (input == "." || input == "..") {
            input.clear();
        } else {
            const auto next = input.find('/', input[0] == '/' ? 1 : 0);
            output += input.substr(0, next);
            input.erase(0, next == std::string::npos ? input.size() : next);
        }
    }
    return output;
}

std::string merge_paths(const Url& base, std::string_view ref_path) {
    if (base.authority && base.path.empty()) return "/" + std::string(ref_path);
    const auto last = base.path.rfind('/');
    if (last == std::string::npos) return std::string(ref_path);
    return base.path.substr(0, last + 1) + std::string(ref_path);
}

}  // namespace

std::string resolve_url(std::string_view base_text, std::string_view reference) {
    const auto base = Url::parse(base_text);
    const auto ref = Url::parse(trim(reference));
    Url t;
    if (ref.scheme) {
        t.scheme = ref.scheme;
        t.authority = ref.authority;
        t.path = remove_dot_segments(ref.path);
        t.query = ref.query;
    } else {
        if (ref.authority) {
            t.authority = ref.authority;
            t.path = remove_dot_segments(ref.path);
            t.query = ref.query;
        } else {
            if (ref.path.empty()) {
                t.path = base.path;
                t.query = ref.query ? ref.query : base.query;
            } else {
                if (ref.path.starts_with('/'))
                    t.path = remove_dot_segments(ref.path);
                else
                    t.path = remove_dot_segments(merge_paths(base, ref.path));
                t.query = ref.query;
            }
            t.authority = base.authority;
        }
        t.scheme = base.scheme;
    }
    return t.str();
}

bool is_http_url(std::string_view text) {
    const auto u = Url::parse(text);
    return (u.scheme == "http" || u.scheme == "https") && u.authority && !u.host().empty();
}

}  // namespace newstrust
