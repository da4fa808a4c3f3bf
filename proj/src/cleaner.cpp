#include "newstrust/cleaner.hpp"

#include "newstrust/errors.hpp"
#include "newstrust/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <regex>
#include <set>

namespace newstrust {

std::vector<std::string> CleaningConfig::default_strip_patterns() {
    const std::string month =
        R"((?:Jan(?:uary)?|Feb(?:ruary)?|Mar(?:ch)?|Apr(?:il)?|May|June?|July?|Aug(?:ust)?|Sep(?:t(?:ember)?)?|Oct(?:ober)?|Nov(?:ember)?|Dec(?:ember)?)\.?)";
    const std::string lead = R"((?:(?:Published|Updated|Posted|Last updated)(?: on)?:?\s+)?)";
    // "10:30 AM ET"
    const std::string clock =
        R"(\b\d{1,2}:\d{2}(?::\d{2})?\s?(?:[AaPp]\.?[Mm]\.?)(?:\s?(?:ET|EST|EDT|CT|CST|CDT|PT|PST|PDT|GMT|UTC|BST)\b)?)";
    const std::string at_clock = R"((?:,?\s+(?:at\s+)?)" + clock + ")?";
    return {
        // "Published May 4, 2023", "May 4th 2023 at 9:00 PM"
        lead + R"(\b)" + month + R"(\s+\d{1,2}(?:st|nd|rd|th)?,?\s+\d{4}\b)" + at_clock,
        // "4 May 2023"
        lead + R"(\b\d{1,2}\s+)" + month + R"(\s+\d{4}\b)" + at_clock,
        // ISO dates with optional time
        lead + R"(\b\d{4}-\d{2}-\d{2}(?:[T ]\d{2}:\d{2}(?::\d{2})?(?:\.\d+)?(?:Z|[+-]\d{2}:?\d{2})?)?\b)",
        // "05/04/2023"
        lead + R"(\b\d{1,2}/\d{1,2}/\d{4}\b)",
        clock,
    };
}

void CleaningConfig::validate() const {
    if (!(repeat_fraction_threshold > 0 && repeat_fraction_threshold <= 1))
        throw ConfigError("repeat_fraction_threshold must be in (0, 1]");
    if (repeat_min_articles < 2) throw ConfigError("repeat_min_articles must be >= 2");
    if (min_fragment_chars < 1) throw ConfigError("min_fragment_chars must be >= 1");
    if (min_words < 0) throw ConfigError("min_words must be >= 0");
    for (const auto& p : strip_patterns) {
        try {
            std::regex re(p, std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
            throw ConfigError("invalid strip pattern '" + p + "': " + e.what());
        }
    }
}

void to_json(nlohmann::json& j, const CleaningConfig& c) {
    j = nlohmann::json{{"repeat_fraction_threshold", c.repeat_fraction_threshold},
                       {"repeat_min_articles", c.repeat_min_articles},
                       {"min_fragment_chars", c.min_fragment_chars},
                       {"strip_patterns", c.strip_patterns},
                       {"min_words", c.min_words}};
}

void from_json(const nlohmann::json& j, CleaningConfig& c) {
    try {
        CleaningConfig d;
        c.repeat_fraction_threshold = j.value("repeat_fraction_threshold", d.repeat_fraction_threshold);
        c.repeat_min_articles = j.value("repeat_min_articles", d.repeat_min_articles);
        c.min_fragment_chars = j.value("min_fragment_chars", d.min_fragment_chars);
        c.strip_patterns = j.value("strip_patterns", d.strip_patterns);
        c.min_words = j.value("min_words", d.min_words);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed cleaning config: ") + e.what());
    }
}

std::vector<std::string> split_segments(std::string_view text) {
    std::vector<std::string> out;
    auto flush = [&](std::string_view piece) {
        auto t = trim(piece);
        if (!t.empty()) out.push_back(std::move(t));
    };
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\n') {
            flush(text.substr(start, i - start));
            start = i + 1;
        } else if ((c == '.' || c == '!' || c == '?') && i + 1 < text.size() &&
                   std::isspace(static_cast<unsigned char>(text[i + 1]))) {
            flush(text.substr(start, i + 1 - start));
            start = i + 1;
        }
    }
    flush(text.substr(start));
    return out;
}

std::vector<std::string> find_repeated_fragments(const std::vector<RawArticle>& articles,
                                                 const CleaningConfig& config) {
    if (articles.size() < 2) return {};
    std::map<std::string, std::size_t> article_counts;
    for (const auto& a : articles) {
        std::set<std::string> distinct;
        for (auto& seg : split_segments(a.text))
            if (text::code_point_count(seg) >= static_cast<std::size_t>(config.min_fragment_chars))
                distinct.insert(std::move(seg));
        for (const auto& seg : distinct) ++article_counts[seg];
    }
    const double needed = config.repeat_fraction_threshold * static_cast<double>(articles.size());
    std::vector<std::string> out;
    for (const auto& [seg, count] : article_counts) {
        if (count < static_cast<std::size_t>(config.repeat_min_articles)) continue;
        // inclusive, tolerant of 0.3 * 10 = 3.0000000000000004
        if (static_cast<double>(count) + 1e-9 < needed) continue;
        out.push_back(seg);
    }
    return out;
}

namespace {

std::size_t erase_all(std::string& s, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t n = 0;
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto at = s.find(needle, pos);
        if (at == std::string::npos) break;
        out.append(s, pos, at - pos);
        pos = at + needle.size();
        ++n;
    }
    if (n == 0) return 0;
    out.append(s, pos);
    s = std::move(out);
    return n;
}

// Deletes non-empty matches only, so patterns that can match the empty string
// do not split words.
void erase_matches(std::string& s, const std::regex& re) {
    std::string out;
    std::size_t last = 0;
    bool changed = false;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
        if (it->length(0) == 0) continue;
        const auto at = static_cast<std::size_t>(it->position(0));
        out.append(s, last, at - last);
        last = at + static_cast<std::size_t>(it->length(0));
        changed = true;
    }
    if (!changed) return;
    out.append(s, last);
    s = std::move(out);
}

const std::vector<std::regex>& compiled(const std::vector<std::string>& patterns) {
    thread_local std::vector<std::string> key;
    thread_local std::vector<std::regex> cache;
    if (key != patterns) {
        cache.clear();
        for (const auto& p : patterns) {
            try {
                cache.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
            } catch (const std::regex_error& e) {
                throw ConfigError("invalid strip pattern '" + p + "': " + e.what());
            }
        }
        key = patterns;
    }
    return cache;
}

}  // namespace

RawArticle clean_article(const RawArticle& raw, const std::vector<std::string>& fragments,
                         const CleaningConfig& config, std::map<std::string, std::size_t>* removed) {
    std::vector<std::string> ordered(fragments.begin(), fragments.end());
    std::sort(ordered.begin(), ordered.end(), [](const std::string& a, const std::string& b) {
        return a.size() != b.size() ? a.size() > b.size() : a < b;
    });
    const auto& patterns = compiled(config.strip_patterns);

    RawArticle out = raw;
    std::string current = text::normalize_lines(raw.text);
    while (true) {
        std::string next = current;
        for (const auto& f : ordered) {
            const auto n = erase_all(next, f);
            if (n && removed) (*removed)[f] += n;
        }
        for (const auto& re : patterns) erase_matches(next, re);
        next = text::normalize_lines(next);
        if (next == current) break;
        current = std::move(next);
    }
    out.text = std::move(current);
    out.word_count = text::word_count(out.text);
    return out;
}

WordFilterResult filter_min_words(std::vector<RawArticle> articles, const CleaningConfig& config) {
    WordFilterResult r;
    for (auto& a : articles) {
        if (a.word_count >= static_cast<std::size_t>(config.min_words) && a.word_count > 0)
            r.kept.push_back(std::move(a));
        else
            r.dropped.push_back(std::move(a));
    }
    return r;
}

void to_json(nlohmann::json& j, const CleanReport& r) {
    auto per_source = nlohmann::json::object();
    for (const auto& [domain, frags] : r.removed_fragments) {
        auto arr = nlohmann::json::array();
        for (const auto& [f, n] : frags) arr.push_back({{"fragment", f}, {"occurrences", n}});
        per_source[domain] = arr;
    }
    j = nlohmann::json{{"removed_fragments", per_source},
                       {"articles_dropped_short", r.articles_dropped_short},
                       {"articles_in", r.articles_in},
                       {"articles_out", r.articles_out}};
}

CleanResult clean_corpus(const std::vector<RawArticle>& articles, const CleaningConfig& config) {
    config.validate();
    std::map<std::string, std::vector<RawArticle>> by_domain;
    for (const auto& a : articles) by_domain[a.domain].push_back(a);
    std::map<std::string, std::vector<std::string>> fragments;
    for (const auto& [domain, group] : by_domain) fragments[domain] = find_repeated_fragments(group, config);

    CleanResult result;
    result.report.articles_in = articles.size();
    std::map<std::string, std::map<std::string, std::size_t>> removed;
    std::vector<RawArticle> cleaned;
    cleaned.reserve(articles.size());
    for (const auto& a : articles) cleaned.push_back(clean_article(a, fragments[a.domain], config, &removed[a.domain]));

    auto filtered = filter_min_words(std::move(cleaned), config);
    result.articles = std::move(filtered.kept);
    result.report.articles_dropped_short = filtered.dropped.size();
    result.report.articles_out = result.articles.size();
    for (const auto& [domain, m] : removed) {
        auto& list = result.report.removed_fragments[domain];
        for (const auto& [f, n] : m) list.emplace_back(f, n);
    }
    return result;
}

}  // namespace newstrust
