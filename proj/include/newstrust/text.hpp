#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace newstrust::text {

// Decodes one code point starting at `pos`, advancing it. Invalid sequences
// yield U+FFFD and advance by one byte.
char32_t next_code_point(std::string_view s, std::size_t& pos);
void append_utf8(std::string& out, char32_t cp);

// Unicode White_Space property.
bool is_unicode_space(char32_t cp);

// True when `s` is well-formed UTF-8.
bool is_valid_utf8(std::string_view s);

// Collapses every run of Unicode whitespace (including newlines) to one ASCII
// space and trims both ends.
std::string collapse_whitespace(std::string_view s);

// Applies collapse_whitespace to each line, drops empty lines, and rejoins
// with single '\n'.
std::string normalize_lines(std::string_view s);

// Number of maximal runs of non-whitespace code points.
std::size_t word_count(std::string_view s);

std::size_t code_point_count(std::string_view s);

struct Decoded {
    std::string utf8;
    // Set when the declared charset was unknown or the bytes were not valid
    // in it, so replacement characters may have been substituted.
    bool fallback = false;
    std::string charset;  // charset actually used
};

// Converts `bytes` in `charset` (case-insensitive label; empty means UTF-8)
// to UTF-8. Supports utf-8, us-ascii, iso-8859-1 and windows-1252; anything
// else is decoded as UTF-8 with replacement and flagged as a fallback.
Decoded decode_to_utf8(std::string_view bytes, std::string_view charset);

// Extracts the charset parameter from a Content-Type header value, or "".
std::string charset_from_content_type(std::string_view content_type);

}  // namespace newstrust::text
