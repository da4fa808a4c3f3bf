#include "newstrust/text.hpp"

#include "newstrust/util.hpp"

#include <array>

namespace newstrust::text {

char32_t next_code_point(std::string_view s, std::size_t& pos) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2, cp = b0 & 0x1F, min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3, cp = b0 & 0x0F, min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4, cp = b0 & 0x07, min = 0x10000;
    } else {
        ++pos;
        return 0xFFFD;
    }
    if (pos + len > s.size()) {
        ++pos;
        return 0xFFFD;
    }
    for (int i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) {
            ++pos;
            return 0xFFFD;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++pos;
        return 0xFFFD;
    }
    pos += len;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_unicode_space(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_valid_utf8(std::string_view s) {
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto start = pos;
        const auto cp = next_code_point(s, pos);
        if (cp == 0xFFFD) {
            // a literal U+FFFD is three bytes; a replacement advances by one
            if (pos - start != 3) return false;
        }
    }
    return true;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto start = pos;
        const auto cp = next_code_point(s, pos);
        if (is_unicode_space(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.append(s.substr(start, pos - start));
    }
    return out;
}

std::string normalize_lines(std::string_view s) {
    std::string out;
    std::size_t begin = 0;
    while (begin <= s.size()) {
        auto end = s.find('\n', begin);
        if (end == std::string_view::npos) end = s.size();
        auto line = collapse_whitespace(s.substr(begin, end - begin));
        if (!line.empty()) {
            if (!out.empty()) out.push_back('\n');
            out += line;
        }
        begin = end + 1;
    }
    return out;
}

std::size_t word_count(std::string_view s) {
    std::size_t words = 0;
    bool in_word = false;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto cp = next_code_point(s, pos);
        if (is_unicode_space(cp)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++words;
        }
    }
    return words;
}

std::size_t code_point_count(std::string_view s) {
    std::size_t n = 0;
    std::size_t pos = 0;
    while (pos < s.size()) {
        next_code_point(s, pos);
        ++n;
    }
    return n;
}

namespace {

// windows-1252 0x80..0x9F; 0 marks undefined bytes.
constexpr std::array<char32_t, 32> kCp1252High = {
    0x20AC, 0,      0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
    0x2039, 0x0152, 0,      0x017D, 0,      0,      0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
    0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0,      0x017E, 0x0178};

}  // namespace

Decoded decode_to_utf8(std::string_view bytes, std::string_view charset) {
    const auto label = to_lower_ascii(trim(charset));
    Decoded d;
    if (label == "iso-8859-1" || label == "latin1" || label == "latin-1" ||
        label == "iso8859-1") {
        d.charset = "iso-8859-1";
        for (unsigned char c : bytes) append_utf8(d.utf8, c);
        return d;
    }
    if (label == "windows-1252" || label == "cp1252") {
        d.charset = "windows-1252";
        for (unsigned char c : bytes) {
            if (c >= 0x80 && c <= 0x9F) {
                const auto cp = kCp1252High[c - 0x80];
                if (cp == 0) d.fallback = true;
                append_utf8(d.utf8, cp == 0 ? 0xFFFD : cp);
            } else {
                append_utf8(d.utf8, c);
            }
        }
        return d;
    }
    const bool known = label.empty() || label == "utf-8" || label == "utf8" ||
                       label == "us-ascii" || label == "ascii";
    d.charset = "utf-8";
    d.fallback = !known;
    if (is_valid_utf8(bytes)) {
        d.utf8.assign(bytes);
        return d;
    }
    d.fallback = true;
    std::size_t pos = 0;
    while (pos < bytes.size()) append_utf8(d.utf8, next_code_point(bytes, pos));
    return d;
}

std::string charset_from_content_type(std::string_view content_type) {
    const auto lower = to_lower_ascii(content_type);
    const auto at = lower.find("charset=");
    if (at == std::string::npos) return "";
    auto value = std::string_view(lower).substr(at + 8);
    const auto end = value.find(';');
    if (end != std::string_view::npos) value = value.substr(0, end);
    auto out = trim(value);
    if (out.size() >= 2 && (out.front() == '"' || out.front() == '\''))
        out = out.substr(1, out.size() - 2);
    return out;
}

}  // namespace newstrust::text
