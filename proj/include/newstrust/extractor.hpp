#pragma once

#include "newstrust/warc.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace newstrust {

struct ExtractionRules {
    std::string domain;
    std::vector<std::string> text_xpaths;  // non-empty
    std::optional<std::string> title_xpath;
    std::vector<std::string> drop_xpaths;

    // Throws ConfigError (empty text_xpaths or an XPath syntax error).
    void validate() const;
};

void to_json(nlohmann::json& j, const ExtractionRules& r);
void from_json(const nlohmann::json& j, ExtractionRules& r);

struct RawArticle {
    std::string url;
    std::string domain;
    std::optional<std::string> title;
    std::string text;
    std::size_t word_count = 0;
    Timestamp fetched_at{};

    friend bool operator==(const RawArticle&, const RawArticle&) = default;
};

void to_json(nlohmann::json& j, const RawArticle& a);
void from_json(const nlohmann::json& j, RawArticle& a);

// Decodes the record body (Content-Type charset, then <meta charset>, then
// UTF-8 with replacement), removes drop_xpaths subtrees, and joins the text of
// every text_xpaths match in document order, one match per line with
// whitespace collapsed inside lines. Throws ExtractionMiss when nothing
// matches. `decode_fallback`, if given, is set when lossy decoding was used.
RawArticle extract_text(const FetchRecord& record, const ExtractionRules& rules,
                        bool* decode_fallback = nullptr);

struct ExtractionIssue {
    std::string url;
    std::string kind;  // "extraction-miss", "decode-fallback" or "archive"
    std::string message;
};

struct ExtractionReport {
    std::size_t records = 0;
    std::size_t misses = 0;
    std::size_t decode_fallbacks = 0;
    std::vector<ExtractionIssue> issues;
};

void to_json(nlohmann::json& j, const ExtractionReport& r);

struct ExtractionResult {
    std::vector<RawArticle> articles;
    ExtractionReport report;
};

// Extracts every response record. Per-record failures, and archive corruption
// after the last readable record, are reported instead of thrown.
ExtractionResult extract_all(const std::filesystem::path& warc_path, const ExtractionRules& rules);

}  // namespace newstrust
