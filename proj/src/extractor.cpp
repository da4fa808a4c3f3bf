#include "newstrust/extractor.hpp"

#include "newstrust/errors.hpp"
#include "newstrust/html.hpp"
#include "newstrust/text.hpp"
#include "newstrust/url.hpp"
#include "newstrust/xpath.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <regex>

namespace newstrust {

void ExtractionRules::validate() const {
    if (text_xpaths.empty()) throw ConfigError("extraction rules for " + domain + ": text_xpaths is empty");
    for (const auto& x : text_xpaths) xpath::XPath::compile(x);
    for (const auto& x : drop_xpaths) xpath::XPath::compile(x);
    if (title_xpath) xpath::XPath::compile(*title_xpath);
}

void to_json(nlohmann::json& j, const ExtractionRules& r) {
    j = nlohmann::json{{"domain", r.domain}, {"text_xpaths", r.text_xpaths}, {"drop_xpaths", r.drop_xpaths}};
    j["title_xpath"] = r.title_xpath ? nlohmann::json(*r.title_xpath) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, ExtractionRules& r) {
    try {
        r.domain = j.at("domain").get<std::string>();
        r.text_xpaths = j.at("text_xpaths").get<std::vector<std::string>>();
        r.drop_xpaths = j.value("drop_xpaths", std::vector<std::string>{});
        if (j.contains("title_xpath") && !j["title_xpath"].is_null())
            r.title_xpath = j["title_xpath"].get<std::string>();
        else
            r.title_xpath.reset();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed extraction rules: ") + e.what());
    }
}

void to_json(nlohmann::json& j, const RawArticle& a) {
    j = nlohmann::json{{"url", a.url},
                       {"domain", a.domain},
                       {"text", a.text},
                       {"word_count", a.word_count},
                       {"fetched_at", format_timestamp(a.fetched_at)}};
    j["title"] = a.title ? nlohmann::json(*a.title) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, RawArticle& a) {
    try {
        a.url = j.at("url").get<std::string>();
        a.domain = j.at("domain").get<std::string>();
        a.text = j.at("text").get<std::string>();
        a.word_count = j.contains("word_count") ? j["word_count"].get<std::size_t>() : text::word_count(a.text);
        a.fetched_at = j.contains("fetched_at") ? parse_timestamp(j["fetched_at"].get<std::string>()) : Timestamp{};
        if (j.contains("title") && !j["title"].is_null())
            a.title = j["title"].get<std::string>();
        else
            a.title.reset();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed article record: ") + e.what());
    }
}

namespace {

std::string meta_charset(std::string_view body) {
    // only the head is consulted, as browsers do
    static const std::regex re(R"(<meta[^>]+charset\s*=\s*["']?([A-Za-z0-9_\-]+))", std::regex::icase);
    const std::string head(body.substr(0, std::min<std::size_t>(body.size(), 2048)));
    std::smatch m;
    if (std::regex_search(head, m, re)) return m[1].str();
    return "";
}

bool has_ancestor_in(const html::Node* n, const std::vector<const html::Node*>& set) {
    for (auto* p = n->parent; p; p = p->parent)
        if (std::find(set.begin(), set.end(), p) != set.end()) return true;
    return false;
}

}  // namespace

RawArticle extract_text(const FetchRecord& record, const ExtractionRules& rules, bool* decode_fallback) {
    auto charset = text::charset_from_content_type(record.header("Content-Type"));
    if (charset.empty()) charset = meta_charset(record.body);
    const auto decoded = text::decode_to_utf8(record.body, charset);
    if (decode_fallback) *decode_fallback = decoded.fallback;

    auto doc = html::Document::parse(decoded.utf8);

    std::vector<const html::Node*> drops;
    for (const auto& expr : rules.drop_xpaths)
        for (const auto& n : xpath::XPath::compile(expr).select(doc.root()))
            if (!n.is_attribute() && n.node->parent) drops.push_back(n.node);
    // outermost nodes only; a removed subtree takes its descendants with it
    std::vector<const html::Node*> outer;
    for (const auto* n : drops)
        if (!has_ancestor_in(n, drops) && std::find(outer.begin(), outer.end(), n) == outer.end())
            outer.push_back(n);
    for (const auto* n : outer) doc.remove(*n);

    xpath::NodeSet matched;
    for (const auto& expr : rules.text_xpaths) {
        auto set = xpath::XPath::compile(expr).select(doc.root());
        matched.insert(matched.end(), set.begin(), set.end());
    }
    std::sort(matched.begin(), matched.end(), [](const xpath::XNode& a, const xpath::XNode& b) {
        return std::pair{a.node->order, a.attr} < std::pair{b.node->order, b.attr};
    });
    matched.erase(std::unique(matched.begin(), matched.end()), matched.end());
    if (matched.empty()) throw ExtractionMiss("no text_xpaths matched in " + record.url);

    std::string joined;
    for (const auto& n : matched) {
        const auto piece = text::collapse_whitespace(
            n.is_attribute() || n.node->kind != html::NodeKind::element ? n.string_value() : n.node->text_content());
        if (piece.empty()) continue;
        if (!joined.empty()) joined.push_back('\n');
        joined += piece;
    }

    RawArticle a;
    a.url = record.url;
    a.domain = rules.domain.empty() ? Url::parse(record.url).host() : rules.domain;
    if (rules.title_xpath) {
        const auto set = xpath::XPath::compile(*rules.title_xpath).select(doc.root());
        if (!set.empty()) {
            auto t = text::collapse_whitespace(set.front().is_attribute() ? set.front().string_value()
                                                                          : set.front().node->text_content());
            if (!t.empty()) a.title = std::move(t);
        }
    }
    a.text = std::move(joined);
    a.word_count = text::word_count(a.text);
    a.fetched_at = record.fetched_at;
    return a;
}

void to_json(nlohmann::json& j, const ExtractionReport& r) {
    auto issues = nlohmann::json::array();
    for (const auto& i : r.issues) issues.push_back({{"url", i.url}, {"kind", i.kind}, {"message", i.message}});
    j = nlohmann::json{{"records", r.records},
                       {"misses", r.misses},
                       {"decode_fallbacks", r.decode_fallbacks},
                       {"issues", issues}};
}

ExtractionResult extract_all(const std::filesystem::path& warc_path, const ExtractionRules& rules) {
    rules.validate();
    ExtractionResult out;
    WarcReader reader(warc_path);
    while (true) {
        std::optional<FetchRecord> rec;
        try {
            rec = reader.next();
        } catch (const ArchiveError& e) {
            out.report.issues.push_back({"", "archive", e.what()});
            break;
        }
        if (!rec) break;
        ++out.report.records;
        try {
            bool fallback = false;
            out.articles.push_back(extract_text(*rec, rules, &fallback));
            if (fallback) {
                ++out.report.decode_fallbacks;
                out.report.issues.push_back({rec->url, "decode-fallback", "lossy charset decoding"});
            }
        } catch (const ExtractionMiss& e) {
            ++out.report.misses;
            out.report.issues.push_back({rec->url, "extraction-miss", e.what()});
        }
    }
    return out;
}

}  // namespace newstrust
