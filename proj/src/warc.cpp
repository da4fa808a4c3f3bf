#include "newstrust/warc.hpp"

#include "newstrust/errors.hpp"

#include <zlib.h>

#include <charconv>

namespace newstrust {

namespace {

std::string_view default_reason(int status) {
    switch (status) {
        case 200: return "OK";
        case 201: return "Created";
        case 204: return "No Content";
        case 301: return "Moved Permanently";
        case 302: return "Found";
        case 303: return "See Other";
        case 304: return "Not Modified";
        case 307: return "Temporary Redirect";
        case 308: return "Permanent Redirect";
        case 400: return "Bad Request";
        case 403: return "Forbidden";
        case 404: return "Not Found";
        case 429: return "Too Many Requests";
        case 500: return "Internal Server Error";
        case 502: return "Bad Gateway";
        case 503: return "Service Unavailable";
        case 504: return "Gateway Timeout";
        default: return "Unknown";
    }
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && to_lower_ascii(a) == to_lower_ascii(b);
}

std::string gzip_member(std::string_view in) {
    z_stream zs{};
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw IoError("deflateInit2 failed");
    std::string out(deflateBound(&zs, static_cast<uLong>(in.size())) + 32, '\0');
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    out.resize(zs.total_out);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw IoError("gzip compression failed");
    return out;
}

// Inflates one gzip member starting at `in`; sets `consumed` to its length.
std::string gunzip_member(std::string_view in, std::size_t& consumed, std::uint64_t offset) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 16) != Z_OK) throw ArchiveError(offset, "inflateInit2 failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
    zs.avail_in = static_cast<uInt>(in.size());
    std::string out;
    char buf[16384];
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = reinterpret_cast<Bytef*>(buf);
        zs.avail_out = sizeof buf;
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw ArchiveError(offset, "corrupt gzip member");
        }
        out.append(buf, sizeof buf - zs.avail_out);
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw ArchiveError(offset, "truncated gzip member");
        }
    }
    consumed = zs.total_in;
    inflateEnd(&zs);
    return out;
}

struct HeaderBlock {
    std::string first_line;
    std::vector<std::pair<std::string, std::string>> fields;
    std::size_t end = 0;  // offset just past the blank line
};

// Parses "line CRLF (name: value CRLF)* CRLF" starting at `pos`; nullopt if the
// terminating blank line is missing.
std::optional<HeaderBlock> parse_header_block(std::string_view s, std::size_t pos) {
    HeaderBlock hb;
    auto eol = s.find("\r\n", pos);
    if (eol == std::string_view::npos) return std::nullopt;
    hb.first_line = std::string(s.substr(pos, eol - pos));
    pos = eol + 2;
    while (true) {
        eol = s.find("\r\n", pos);
        if (eol == std::string_view::npos) return std::nullopt;
        if (eol == pos) {
            hb.end = pos + 2;
            return hb;
        }
        const auto line = s.substr(pos, eol - pos);
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) return std::nullopt;
        hb.fields.emplace_back(std::string(line.substr(0, colon)), trim(line.substr(colon + 1)));
        pos = eol + 2;
    }
}

std::string field(const HeaderBlock& hb, std::string_view name) {
    for (const auto& [k, v] : hb.fields)
        if (iequals(k, name)) return v;
    return "";
}

}  // namespace

std::string FetchRecord::header(std::string_view name) const {
    for (const auto& [k, v] : headers)
        if (iequals(k, name)) return v;
    return "";
}

std::string http_payload(const FetchRecord& r) {
    std::string out = "HTTP/1.1 " + std::to_string(r.status) + " " +
                      (r.reason.empty() ? std::string(default_reason(r.status)) : r.reason) + "\r\n";
    for (const auto& [k, v] : r.headers) out += k + ": " + v + "\r\n";
    out += "\r\n";
    out += r.body;
    return out;
}

WarcWriter::WarcWriter(const std::filesystem::path& path, bool gzip) : path_(path), gzip_(gzip) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open archive " + path.string());
}

std::uint64_t WarcWriter::append(const FetchRecord& record) {
    out_.seekp(0, std::ios::end);
    const auto offset = static_cast<std::uint64_t>(out_.tellp());
    const auto payload = http_payload(record);
    std::string rec;
    rec.reserve(payload.size() + 512);
    rec += "WARC/1.1\r\n";
    rec += "WARC-Type: response\r\n";
    rec += "WARC-Record-ID: <urn:uuid:" + uuid4() + ">\r\n";
    rec += "WARC-Date: " + format_timestamp(record.fetched_at) + "\r\n";
    rec += "WARC-Target-URI: " + record.url + "\r\n";
    rec += "Content-Type: application/http;msgtype=response\r\n";
    rec += "Content-Length: " + std::to_string(payload.size()) + "\r\n";
    rec += "\r\n";
    rec += payload;
    rec += "\r\n\r\n";
    const auto bytes = gzip_ ? gzip_member(rec) : rec;
    out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out_.flush();
    if (!out_) throw IoError("write failed for archive " + path_.string());
    return offset;
}

std::uint64_t archive(const FetchRecord& record, const std::filesystem::path& warc_path, bool gzip) {
    WarcWriter w(warc_path, gzip);
    return w.append(record);
}

WarcReader::WarcReader(const std::filesystem::path& path) : data_(read_file(path)) {}

std::optional<FetchRecord> WarcReader::next() {
    while (offset_ < data_.size()) {
        const auto start = offset_;
        std::string_view view(data_);
        std::string inflated;
        std::string_view rec;
        std::size_t consumed = 0;
        const bool gz = view.size() - start >= 2 && static_cast<unsigned char>(view[start]) == 0x1f &&
                        static_cast<unsigned char>(view[start + 1]) == 0x8b;
        if (gz) {
            inflated = gunzip_member(view.substr(start), consumed, start);
            rec = inflated;
        } else {
            rec = view.substr(start);
        }

        const auto hb = parse_header_block(rec, 0);
        if (!hb) throw ArchiveError(start, "truncated WARC header");
        if (!hb->first_line.starts_with("WARC/"))
            throw ArchiveError(start, "missing WARC version line");
        const auto len_text = field(*hb, "Content-Length");
        std::uint64_t len = 0;
        {
            auto [p, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
            if (len_text.empty() || ec != std::errc{} || p != len_text.data() + len_text.size())
                throw ArchiveError(start, "invalid Content-Length");
        }
        if (hb->end + len + 4 > rec.size()) throw ArchiveError(start, "truncated WARC record block");
        if (rec.substr(hb->end + len, 4) != "\r\n\r\n")
            throw ArchiveError(start, "WARC record not terminated by CRLF CRLF");
        const auto block = rec.substr(hb->end, len);
        offset_ = gz ? start + consumed : start + hb->end + len + 4;

        if (!iequals(field(*hb, "WARC-Type"), "response")) continue;

        FetchRecord r;
        r.url = field(*hb, "WARC-Target-URI");
        try {
            r.fetched_at = parse_timestamp(field(*hb, "WARC-Date"));
        } catch (const ValidationError&) {
            throw ArchiveError(start, "invalid WARC-Date");
        }
        const auto http = parse_header_block(block, 0);
        if (!http || !http->first_line.starts_with("HTTP/"))
            throw ArchiveError(start, "response block is not an HTTP message");
        const auto sp1 = http->first_line.find(' ');
        if (sp1 == std::string::npos) throw ArchiveError(start, "bad HTTP status line");
        const auto sp2 = http->first_line.find(' ', sp1 + 1);
        const auto code = http->first_line.substr(sp1 + 1, sp2 == std::string::npos ? std::string::npos : sp2 - sp1 - 1);
        auto [p, ec] = std::from_chars(code.data(), code.data() + code.size(), r.status);
        if (ec != std::errc{} || p != code.data() + code.size())
            throw ArchiveError(start, "bad HTTP status code");
        if (sp2 != std::string::npos) r.reason = http->first_line.substr(sp2 + 1);
        r.headers = http->fields;
        r.body = std::string(block.substr(http->end));
        return r;
    }
    return std::nullopt;
}

std::vector<FetchRecord> read_warc(const std::filesystem::path& path) {
    WarcReader reader(path);
    std::vector<FetchRecord> out;
    while (auto r = reader.next()) out.push_back(std::move(*r));
    return out;
}

}  // namespace newstrust
