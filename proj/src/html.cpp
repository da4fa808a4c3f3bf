#include "newstrust/html.hpp"

#include "newstrust/text.hpp"
#include "newstrust/util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>

namespace newstrust::html {

const std::string* Node::attribute(std::string_view attr) const {
    const auto want = to_lower_ascii(attr);
    for (const auto& [k, v] : attributes)
        if (k == want) return &v;
    return nullptr;
}

namespace {

bool is_hidden_text_container(std::string_view name) {
    return name == "script" || name == "style" || name == "template" || name == "noscript";
}

void collect_text(const Node& n, std::string& out) {
    if (n.kind == NodeKind::text) {
        out += n.data;
        return;
    }
    if (n.kind == NodeKind::comment) return;
    if (n.kind == NodeKind::element && is_hidden_text_container(n.name)) return;
    for (const auto& c : n.children) collect_text(*c, out);
}

}  // namespace

std::string Node::text_content() const {
    std::string out;
    collect_text(*this, out);
    return out;
}

namespace {

const std::unordered_map<std::string_view, char32_t>& named_entities() {
    static const std::unordered_map<std::string_view, char32_t> table = {
        {"amp", '&'},       {"lt", '<'},        {"gt", '>'},        {"quot", '"'},
        {"apos", '\''},     {"nbsp", 0xA0},     {"copy", 0xA9},     {"reg", 0xAE},
        {"trade", 0x2122},  {"mdash", 0x2014},  {"ndash", 0x2013},  {"hellip", 0x2026},
        {"lsquo", 0x2018},  {"rsquo", 0x2019},  {"ldquo", 0x201C},  {"rdquo", 0x201D},
        {"laquo", 0xAB},    {"raquo", 0xBB},    {"bull", 0x2022},   {"middot", 0xB7},
        {"deg", 0xB0},      {"euro", 0x20AC},   {"pound", 0xA3},    {"cent", 0xA2},
        {"times", 0xD7},    {"eacute", 0xE9},   {"egrave", 0xE8},   {"aacute", 0xE1},
        {"agrave", 0xE0},   {"iacute", 0xED},   {"oacute", 0xF3},   {"uacute", 0xFA},
        {"ntilde", 0xF1},   {"ccedil", 0xE7},   {"uuml", 0xFC},     {"ouml", 0xF6},
        {"auml", 0xE4},     {"szlig", 0xDF},    {"thinsp", 0x2009}, {"ensp", 0x2002},
        {"emsp", 0x2003},   {"zwnj", 0x200C},   {"zwj", 0x200D},    {"shy", 0xAD},
    };
    return table;
}

}  // namespace

std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '&') {
            out.push_back(s[i++]);
            continue;
        }
        const auto semi = s.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 32) {
            out.push_back(s[i++]);
            continue;
        }
        const auto ref = s.substr(i + 1, semi - i - 1);
        char32_t cp = 0;
        bool ok = false;
        if (ref.size() >= 2 && ref[0] == '#') {
            const bool hex = ref[1] == 'x' || ref[1] == 'X';
            const auto digits = ref.substr(hex ? 2 : 1);
            if (!digits.empty() && digits.size() <= 8) {
                ok = true;
                for (char c : digits) {
                    const auto uc = static_cast<unsigned char>(c);
                    if (hex ? !std::isxdigit(uc) : !std::isdigit(uc)) ok = false;
                }
                if (ok) {
                    cp = static_cast<char32_t>(std::stoul(std::string(digits), nullptr, hex ? 16 : 10));
                    if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
                }
            }
        } else {
            const auto& table = named_entities();
            if (auto it = table.find(ref); it != table.end()) {
                cp = it->second;
                ok = true;
            }
        }
        if (!ok) {
            out.push_back(s[i++]);
            continue;
        }
        text::append_utf8(out, cp);
        i = semi + 1;
    }
    return out;
}

namespace {

constexpr std::array<std::string_view, 14> kVoidElements = {
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param",
    "source", "track", "wbr"};

constexpr std::array<std::string_view, 27> kClosesParagraph = {
    "address", "article", "aside", "blockquote", "div", "dl", "fieldset", "figcaption", "figure",
    "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "main", "nav", "ol",
    "p", "pre", "section", "table", "ul"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view name) {
    return std::find(set.begin(), set.end(), name) != set.end();
}

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' ||
           c == '.';
}

class Parser {
public:
    explicit Parser(std::string_view in) : in_(in) {
        root_ = std::make_unique<Node>();
        root_->kind = NodeKind::document;
        stack_.push_back(root_.get());
    }

    std::unique_ptr<Node> run() {
        while (pos_ < in_.size()) {
            if (in_[pos_] == '<' && try_markup()) continue;
            const auto next = in_.find('<', pos_ + 1);
            const auto end = next == std::string_view::npos ? in_.size() : next;
            append_text(decode_entities(in_.substr(pos_, end - pos_)));
            pos_ = end;
        }
        std::size_t counter = 0;
        number(*root_, counter);
        return std::move(root_);
    }

private:
    Node& current() { return *stack_.back(); }

    void append_text(std::string data) {
        if (data.empty()) return;
        auto& parent = current();
        if (!parent.children.empty() && parent.children.back()->kind == NodeKind::text) {
            parent.children.back()->data += data;
            return;
        }
        auto node = std::make_unique<Node>();
        node->kind = NodeKind::text;
        node->data = std::move(data);
        node->parent = &parent;
        parent.children.push_back(std::move(node));
    }

    bool try_markup() {
        const auto rest = in_.substr(pos_);
        if (rest.starts_with("<!--")) {
            const auto end = in_.find("-->", pos_ + 4);
            auto node = std::make_unique<Node>();
            node->kind = NodeKind::comment;
            node->data = std::string(in_.substr(pos_ + 4, (end == std::string_view::npos ? in_.size() : end) - pos_ - 4));
            node->parent = &current();
            current().children.push_back(std::move(node));
            pos_ = end == std::string_view::npos ? in_.size() : end + 3;
            return true;
        }
        if (rest.size() >= 2 && (rest[1] == '!' || rest[1] == '?')) {
            const auto end = in_.find('>', pos_);
            pos_ = end == std::string_view::npos ? in_.size() : end + 1;
            return true;
        }
        if (rest.size() >= 3 && rest[1] == '/' && std::isalpha(static_cast<unsigned char>(rest[2]))) {
            end_tag();
            return true;
        }
        if (rest.size() >= 2 && std::isalpha(static_cast<unsigned char>(rest[1]))) {
            start_tag();
            return true;
        }
        return false;
    }

    std::string read_name() {
        const auto start = pos_;
        while (pos_ < in_.size() && is_name_char(in_[pos_])) ++pos_;
        return to_lower_ascii(in_.substr(start, pos_ - start));
    }

    void skip_space() {
        while (pos_ < in_.size() && std::isspace(static_cast<unsigned char>(in_[pos_]))) ++pos_;
    }

    void end_tag() {
        pos_ += 2;
        const auto name = read_name();
        const auto gt = in_.find('>', pos_);
        pos_ = gt == std::string_view::npos ? in_.size() : gt + 1;
        // pop to the nearest matching open element; ignore stray end tags
        for (std::size_t i = stack_.size(); i-- > 1;) {
            if (stack_[i]->name == name) {
                stack_.resize(i);
                return;
            }
        }
    }

    void close_nearest(std::string_view name, std::initializer_list<std::string_view> scope) {
        for (std::size_t i = stack_.size(); i-- > 1;) {
            const auto& open = stack_[i]->name;
            if (open == name) {
                stack_.resize(i);
                return;
            }
            if (std::find(scope.begin(), scope.end(), open) != scope.end()) return;
        }
    }

    void apply_implied_end_tags(std::string_view name) {
        if (contains(kClosesParagraph, name)) close_nearest("p", {"button", "td", "th", "table"});
        if (name == "li") close_nearest("li", {"ul", "ol"});
        if (name == "dt" || name == "dd") {
            close_nearest("dt", {"dl"});
            close_nearest("dd", {"dl"});
        }
        if (name == "tr") close_nearest("tr", {"table", "tbody", "thead", "tfoot"});
        if (name == "td" || name == "th") {
            close_nearest("td", {"tr", "table"});
            close_nearest("th", {"tr", "table"});
        }
        if (name == "option") close_nearest("option", {"select"});
    }

    void start_tag() {
        ++pos_;
        auto node = std::make_unique<Node>();
        node->kind = NodeKind::element;
        node->name = read_name();
        bool self_closing = false;
        while (pos_ < in_.size()) {
            skip_space();
            if (pos_ >= in_.size()) break;
            const char c = in_[pos_];
            if (c == '>') {
                ++pos_;
                break;
            }
            if (c == '/') {
                ++pos_;
                if (pos_ < in_.size() && in_[pos_] == '>') {
                    self_closing = true;
                    ++pos_;
                    break;
                }
                continue;
            }
            const auto attr_start = pos_;
            while (pos_ < in_.size() && !std::isspace(static_cast<unsigned char>(in_[pos_])) &&
                   in_[pos_] != '=' && in_[pos_] != '>' && in_[pos_] != '/')
                ++pos_;
            if (pos_ == attr_start) {
                ++pos_;
                continue;
            }
            auto key = to_lower_ascii(in_.substr(attr_start, pos_ - attr_start));
            std::string value;
            skip_space();
            if (pos_ < in_.size() && in_[pos_] == '=') {
                ++pos_;
                skip_space();
                if (pos_ < in_.size() && (in_[pos_] == '"' || in_[pos_] == '\'')) {
                    const char quote = in_[pos_++];
                    const auto close = in_.find(quote, pos_);
                    const auto end = close == std::string_view::npos ? in_.size() : close;
                    value = decode_entities(in_.substr(pos_, end - pos_));
                    pos_ = close == std::string_view::npos ? in_.size() : close + 1;
                } else {
                    const auto vstart = pos_;
                    while (pos_ < in_.size() && !std::isspace(static_cast<unsigned char>(in_[pos_])) &&
                           in_[pos_] != '>')
                        ++pos_;
                    value = decode_entities(in_.substr(vstart, pos_ - vstart));
                }
            }
            if (!node->attribute(key)) node->attributes.emplace_back(std::move(key), std::move(value));
        }

        apply_implied_end_tags(node->name);
        const auto name = node->name;
        node->parent = &current();
        Node* raw = node.get();
        current().children.push_back(std::move(node));
        if (self_closing || contains(kVoidElements, name)) return;

        if (name == "script" || name == "style" || name == "textarea" || name == "title") {
            const auto close = find_close_tag(name);
            auto content = in_.substr(pos_, close - pos_);
            stack_.push_back(raw);
            append_text(name == "textarea" || name == "title" ? decode_entities(content)
                                                               : std::string(content));
            stack_.pop_back();
            pos_ = close;
            if (pos_ < in_.size()) {
                const auto gt = in_.find('>', pos_);
                pos_ = gt == std::string_view::npos ? in_.size() : gt + 1;
            }
            return;
        }
        stack_.push_back(raw);
    }

    std::size_t find_close_tag(std::string_view name) const {
        std::size_t from = pos_;
        while (true) {
            const auto lt = in_.find("</", from);
            if (lt == std::string_view::npos) return in_.size();
            if (to_lower_ascii(in_.substr(lt + 2, name.size())) == name) {
                const auto after = lt + 2 + name.size();
                if (after >= in_.size() || !is_name_char(in_[after])) return lt;
            }
            from = lt + 2;
        }
    }

    static void number(Node& n, std::size_t& counter) {
        n.order = counter++;
        for (auto& c : n.children) number(*c, counter);
    }

    std::string_view in_;
    std::size_t pos_ = 0;
    std::unique_ptr<Node> root_;
    std::vector<Node*> stack_;
};

}  // namespace

Document Document::parse(std::string_view html) {
    Document d;
    d.root_ = Parser(html).run();
    return d;
}

void Document::remove(const Node& node) {
    Node* parent = node.parent;
    if (!parent) return;
    auto& siblings = parent->children;
    siblings.erase(std::remove_if(siblings.begin(), siblings.end(),
                                  [&](const std::unique_ptr<Node>& c) { return c.get() == &node; }),
                   siblings.end());
}

}  // namespace newstrust::html
