#pragma once

#include "newstrust/util.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace newstrust {

// A captured HTTP response. Headers are kept in received order; Content-Length
// describes `body` exactly and no Transfer-Encoding is present, so the record
// can be re-serialized as a well-formed HTTP message.
struct FetchRecord {
    std::string url;
    int status = 0;
    std::string reason;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
    Timestamp fetched_at{};

    // First header with a case-insensitive name match, or "".
    std::string header(std::string_view name) const;

    friend bool operator==(const FetchRecord&, const FetchRecord&) = default;
};

// Status line, headers and body as an HTTP/1.1 message.
std::string http_payload(const FetchRecord& record);

// Appends WARC/1.1 `response` records to one file, optionally compressing each
// record as its own gzip member.
class WarcWriter {
public:
    WarcWriter(const std::filesystem::path& path, bool gzip);

    // Returns the byte offset of the new record. Throws IoError.
    std::uint64_t append(const FetchRecord& record);

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    bool gzip_;
    std::ofstream out_;
};

std::uint64_t archive(const FetchRecord& record, const std::filesystem::path& warc_path,
                      bool gzip = false);

// Sequential reader over a WARC file. Non-response records are skipped.
class WarcReader {
public:
    explicit WarcReader(const std::filesystem::path& path);

    // Next response record, or nullopt at end of file. Throws ArchiveError,
    // carrying the record's byte offset, on truncated or corrupt input.
    std::optional<FetchRecord> next();

    // Byte offset of the next unread record.
    std::uint64_t offset() const { return offset_; }

private:
    std::string data_;
    std::uint64_t offset_ = 0;
};

std::vector<FetchRecord> read_warc(const std::filesystem::path& path);

}  // namespace newstrust
