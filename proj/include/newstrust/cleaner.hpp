#pragma once

#include "newstrust/extractor.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace newstrust {

struct CleaningConfig {
    double repeat_fraction_threshold = 0.30;  // in (0, 1]
    int repeat_min_articles = 3;              // >= 2
    int min_fragment_chars = 20;              // code points
    // ECMAScript regexes removed from every article (dates, bylines, times).
    std::vector<std::string> strip_patterns = default_strip_patterns();
    int min_words = 200;

    static std::vector<std::string> default_strip_patterns();
    // Throws ConfigError.
    void validate() const;
};

void to_json(nlohmann::json& j, const CleaningConfig& c);
void from_json(const nlohmann::json& j, CleaningConfig& c);

// Sentence-like segments: lines split after '.', '!' or '?' followed by
// whitespace, trimmed, empties dropped.
std::vector<std::string> split_segments(std::string_view text);

// Segments of at least min_fragment_chars that occur in at least
// repeat_min_articles articles and in at least repeat_fraction_threshold of
// them (inclusive). Expects the articles of a single source; fewer than two
// articles yields no fragments. Result is sorted.
std::vector<std::string> find_repeated_fragments(const std::vector<RawArticle>& articles,
                                                 const CleaningConfig& config);

// Removes every occurrence of each fragment and every strip_patterns match,
// repeating until nothing changes, then re-normalizes whitespace and
// recomputes word_count. `removed`, if given, accumulates per-fragment
// occurrence counts.
RawArticle clean_article(const RawArticle& raw, const std::vector<std::string>& fragments,
                         const CleaningConfig& config,
                         std::map<std::string, std::size_t>* removed = nullptr);

struct WordFilterResult {
    std::vector<RawArticle> kept;
    std::vector<RawArticle> dropped;
};

// kept iff word_count >= min_words.
WordFilterResult filter_min_words(std::vector<RawArticle> articles, const CleaningConfig& config);

struct CleanReport {
    // domain -> (fragment, occurrences removed)
    std::map<std::string, std::vector<std::pair<std::string, std::size_t>>> removed_fragments;
    std::size_t articles_dropped_short = 0;
    std::size_t articles_in = 0;
    std::size_t articles_out = 0;
};

void to_json(nlohmann::json& j, const CleanReport& r);

struct CleanResult {
    std::vector<RawArticle> articles;  // input order, short ones removed
    CleanReport report;
};

// Full cleaning pass over a mixed-source corpus: fragment mining per domain,
// per-article cleaning, then the word-count filter.
CleanResult clean_corpus(const std::vector<RawArticle>& articles, const CleaningConfig& config);

}  // namespace newstrust
