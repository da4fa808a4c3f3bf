#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace newstrust {

using Clock = std::chrono::system_clock;
using Timestamp = std::chrono::time_point<Clock, std::chrono::milliseconds>;

Timestamp now_utc();

// ISO-8601 UTC with millisecond precision, e.g. 2023-05-04T12:30:00.125Z.
std::string format_timestamp(Timestamp t);
// Accepts the format above and the same without fractional seconds.
Timestamp parse_timestamp(std::string_view text);

// Random (version 4) UUID in canonical lowercase form.
std::string uuid4();

// FNV-1a, 64 bit. Stable across platforms; feature hashing depends on it.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string sha256_hex(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);

}  // namespace newstrust
