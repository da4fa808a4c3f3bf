#include "newstrust/xpath.hpp"

#include "newstrust/errors.hpp"
#include "newstrust/text.hpp"
#include "newstrust/util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <set>

namespace newstrust::xpath {

using html::Node;
using html::NodeKind;

std::string XNode::string_value() const {
    if (!node) return "";
    if (is_attribute()) return node->attributes[static_cast<std::size_t>(attr)].second;
    if (node->kind == NodeKind::text || node->kind == NodeKind::comment) return node->data;
    std::string out;
    std::function<void(const Node&)> walk = [&](const Node& n) {
        if (n.kind == NodeKind::text) out += n.data;
        for (const auto& c : n.children) walk(*c);
    };
    walk(*node);
    return out;
}

struct Ctx {
    XNode node;
    std::size_t position = 1;
    std::size_t size = 1;
};

struct Expr {
    virtual ~Expr() = default;
    virtual Value eval(const Ctx& ctx) const = 0;
};

namespace {

using ExprPtr = std::shared_ptr<const Expr>;

// ---- value conversions -------------------------------------------------

auto order_key(const XNode& n) { return std::pair{n.node->order, n.attr}; }

void sort_unique(NodeSet& set) {
    std::sort(set.begin(), set.end(),
              [](const XNode& a, const XNode& b) { return order_key(a) < order_key(b); });
    set.erase(std::unique(set.begin(), set.end()), set.end());
}

double string_to_number(std::string_view s) {
    const auto t = text::collapse_whitespace(s);
    if (t.empty()) return std::numeric_limits<double>::quiet_NaN();
    for (char c : t)
        if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-'))
            return std::numeric_limits<double>::quiet_NaN();
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) return std::numeric_limits<double>::quiet_NaN();
    return v;
}

std::string number_to_string(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
    if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

std::string to_string(const Value& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, NodeSet>) return x.empty() ? "" : x.front().string_value();
            else if constexpr (std::is_same_v<T, std::string>) return x;
            else if constexpr (std::is_same_v<T, double>) return number_to_string(x);
            else return x ? "true" : "false";
        },
        v);
}

double to_number(const Value& v) {
    return std::visit(
        [](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, NodeSet>)
                return x.empty() ? std::numeric_limits<double>::quiet_NaN()
                                 : string_to_number(x.front().string_value());
            else if constexpr (std::is_same_v<T, std::string>) return string_to_number(x);
            else if constexpr (std::is_same_v<T, double>) return x;
            else return x ? 1.0 : 0.0;
        },
        v);
}

bool to_bool(const Value& v) {
    return std::visit(
        [](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, NodeSet>) return !x.empty();
            else if constexpr (std::is_same_v<T, std::string>) return !x.empty();
            else if constexpr (std::is_same_v<T, double>) return x != 0 && !std::isnan(x);
            else return x;
        },
        v);
}

const NodeSet& as_node_set(const Value& v, std::string_view what) {
    if (const auto* ns = std::get_if<NodeSet>(&v)) return *ns;
    throw ConfigError("XPath: " + std::string(what) + " requires a node-set");
}

// ---- comparison --------------------------------------------------------

enum class CmpOp { eq, ne, lt, le, gt, ge };

bool compare_atoms(CmpOp op, const Value& a, const Value& b) {
    if (op == CmpOp::eq || op == CmpOp::ne) {
        bool eq;
        if (std::holds_alternative<bool>(a) || std::holds_alternative<bool>(b))
            eq = to_bool(a) == to_bool(b);
        else if (std::holds_alternative<double>(a) || std::holds_alternative<double>(b))
            eq = to_number(a) == to_number(b);
        else
            eq = to_string(a) == to_string(b);
        return op == CmpOp::eq ? eq : !eq;
    }
    const double x = to_number(a), y = to_number(b);
    switch (op) {
        case CmpOp::lt: return x < y;
        case CmpOp::le: return x <= y;
        case CmpOp::gt: return x > y;
        default: return x >= y;
    }
}

bool compare(CmpOp op, const Value& a, const Value& b) {
    const auto* na = std::get_if<NodeSet>(&a);
    const auto* nb = std::get_if<NodeSet>(&b);
    if (na && nb) {
        for (const auto& x : *na)
            for (const auto& y : *nb)
                if (compare_atoms(op, x.string_value(), y.string_value())) return true;
        return false;
    }
    if (na || nb) {
        const auto& set = na ? *na : *nb;
        const auto& other = na ? b : a;
        if (std::holds_alternative<bool>(other)) {
            return na ? compare_atoms(op, !set.empty(), other) : compare_atoms(op, other, !set.empty());
        }
        for (const auto& n : set) {
            Value atom = std::holds_alternative<double>(other)
                             ? Value{string_to_number(n.string_value())}
                             : Value{n.string_value()};
            if (na ? compare_atoms(op, atom, other) : compare_atoms(op, other, atom)) return true;
        }
        return false;
    }
    return compare_atoms(op, a, b);
}

// ---- AST ---------------------------------------------------------------

struct LiteralExpr final : Expr {
    Value value;
    explicit LiteralExpr(Value v) : value(std::move(v)) {}
    Value eval(const Ctx&) const override { return value; }
};

enum class BinOp { or_, and_, eq, ne, lt, le, gt, ge, add, sub, mul, div, mod };

struct BinaryExpr final : Expr {
    BinOp op;
    ExprPtr lhs, rhs;
    BinaryExpr(BinOp o, ExprPtr l, ExprPtr r) : op(o), lhs(std::move(l)), rhs(std::move(r)) {}
    Value eval(const Ctx& ctx) const override {
        switch (op) {
            case BinOp::or_: return to_bool(lhs->eval(ctx)) || to_bool(rhs->eval(ctx));
            case BinOp::and_: return to_bool(lhs->eval(ctx)) && to_bool(rhs->eval(ctx));
            case BinOp::eq: return compare(CmpOp::eq, lhs->eval(ctx), rhs->eval(ctx));
            case BinOp::ne: return compare(CmpOp::ne, lhs->eval(ctx), rhs->eval(ctx));
            case BinOp::lt: return compare(CmpOp::lt, lhs->eval(ctx), rhs->eval(ctx));
            case BinOp::le: return compare(CmpOp::le, lhs->eval(ctx), rhs->eval(ctx));
            case BinOp::gt: return compare(CmpOp::gt, lhs->eval(ctx), rhs->eval(ctx));
            case BinOp::ge: return compare(CmpOp::ge, lhs->eval(ctx), rhs->eval(ctx));
            case BinOp::add: return to_number(lhs->eval(ctx)) + to_number(rhs->eval(ctx));
            case BinOp::sub: return to_number(lhs->eval(ctx)) - to_number(rhs->eval(ctx));
            case BinOp::mul: return to_number(lhs->eval(ctx)) * to_number(rhs->eval(ctx));
            case BinOp::div: return to_number(lhs->eval(ctx)) / to_number(rhs->eval(ctx));
            case BinOp::mod: return std::fmod(to_number(lhs->eval(ctx)), to_number(rhs->eval(ctx)));
        }
        return false;
    }
};

struct NegateExpr final : Expr {
    ExprPtr operand;
    explicit NegateExpr(ExprPtr e) : operand(std::move(e)) {}
    Value eval(const Ctx& ctx) const override { return -to_number(operand->eval(ctx)); }
};

struct UnionExpr final : Expr {
    ExprPtr lhs, rhs;
    UnionExpr(ExprPtr l, ExprPtr r) : lhs(std::move(l)), rhs(std::move(r)) {}
    Value eval(const Ctx& ctx) const override {
        auto a = as_node_set(lhs->eval(ctx), "'|'");
        const auto b = as_node_set(rhs->eval(ctx), "'|'");
        a.insert(a.end(), b.begin(), b.end());
        sort_unique(a);
        return a;
    }
};

NodeSet filter_by_predicates(NodeSet nodes, const std::vector<ExprPtr>& preds) {
    for (const auto& pred : preds) {
        NodeSet kept;
        const auto size = nodes.size();
        for (std::size_t i = 0; i < size; ++i) {
            const Ctx c{nodes[i], i + 1, size};
            const auto v = pred->eval(c);
            const bool keep = std::holds_alternative<double>(v)
                                  ? std::get<double>(v) == static_cast<double>(i + 1)
                                  : to_bool(v);
            if (keep) kept.push_back(nodes[i]);
        }
        nodes = std::move(kept);
    }
    return nodes;
}

enum class Axis {
    child, descendant, descendant_or_self, self, parent, ancestor, ancestor_or_self, attribute,
    following_sibling, preceding_sibling
};

enum class TestKind { name, any_name, text, node, comment };

struct NodeTest {
    TestKind kind = TestKind::node;
    std::string name;
};

struct Step {
    Axis axis = Axis::child;
    NodeTest test;
    std::vector<ExprPtr> predicates;
};

bool matches(const XNode& n, const NodeTest& t, Axis axis) {
    if (n.is_attribute()) {
        const auto& key = n.node->attributes[static_cast<std::size_t>(n.attr)].first;
        switch (t.kind) {
            case TestKind::name: return key == t.name;
            case TestKind::any_name: case TestKind::node: return true;
            default: return false;
        }
    }
    const auto kind = n.node->kind;
    switch (t.kind) {
        case TestKind::node: return true;
        case TestKind::text: return kind == NodeKind::text;
        case TestKind::comment: return kind == NodeKind::comment;
        case TestKind::any_name: return axis != Axis::attribute && kind == NodeKind::element;
        case TestKind::name: return kind == NodeKind::element && n.node->name == t.name;
    }
    return false;
}

void descendants(const Node& n, NodeSet& out) {
    for (const auto& c : n.children) {
        out.push_back({c.get(), -1});
        descendants(*c, out);
    }
}

// Nodes along `axis` from `n`, in axis order (reverse axes nearest first).
NodeSet axis_nodes(const XNode& n, Axis axis) {
    NodeSet out;
    const Node* node = n.node;
    switch (axis) {
        case Axis::self:
            out.push_back(n);
            break;
        case Axis::attribute:
            if (!n.is_attribute() && node->kind == NodeKind::element)
                for (std::size_t i = 0; i < node->attributes.size(); ++i)
                    out.push_back({node, static_cast<int>(i)});
            break;
        case Axis::child:
            if (!n.is_attribute())
                for (const auto& c : node->children) out.push_back({c.get(), -1});
            break;
        case Axis::descendant_or_self:
            out.push_back(n);
            [[fallthrough]];
        case Axis::descendant:
            if (!n.is_attribute()) descendants(*node, out);
            break;
        case Axis::parent:
            if (n.is_attribute()) out.push_back({node, -1});
            else if (node->parent) out.push_back({node->parent, -1});
            break;
        case Axis::ancestor_or_self:
            out.push_back(n);
            [[fallthrough]];
        case Axis::ancestor: {
            const Node* p = n.is_attribute() ? node : node->parent;
            for (; p; p = p->parent) out.push_back({p, -1});
            break;
        }
        case Axis::following_sibling:
        case Axis::preceding_sibling: {
            if (n.is_attribute() || !node->parent) break;
            const auto& sib = node->parent->children;
            const auto it = std::find_if(sib.begin(), sib.end(),
                                         [&](const auto& c) { return c.get() == node; });
            if (axis == Axis::following_sibling) {
                for (auto j = it + 1; j != sib.end(); ++j) out.push_back({j->get(), -1});
            } else {
                for (auto j = it; j != sib.begin();) out.push_back({(--j)->get(), -1});
            }
            break;
        }
    }
    return out;
}

NodeSet apply_step(const NodeSet& input, const Step& step) {
    NodeSet result;
    for (const auto& n : input) {
        NodeSet candidates;
        for (const auto& c : axis_nodes(n, step.axis))
            if (matches(c, step.test, step.axis)) candidates.push_back(c);
        // predicates see proximity positions in axis order
        auto kept = filter_by_predicates(std::move(candidates), step.predicates);
        result.insert(result.end(), kept.begin(), kept.end());
    }
    sort_unique(result);
    return result;
}

struct PathExpr final : Expr {
    ExprPtr filter;  // leading filter expression, if any
    bool absolute = false;
    std::vector<Step> steps;

    Value eval(const Ctx& ctx) const override {
        NodeSet current;
        if (filter) {
            current = as_node_set(filter->eval(ctx), "a path step");
        } else if (absolute) {
            const Node* r = ctx.node.node;
            while (r->parent) r = r->parent;
            current.push_back({r, -1});
        } else {
            current.push_back(ctx.node);
        }
        for (const auto& s : steps) current = apply_step(current, s);
        return current;
    }
};

struct FilterExpr final : Expr {
    ExprPtr primary;
    std::vector<ExprPtr> predicates;
    Value eval(const Ctx& ctx) const override {
        auto v = primary->eval(ctx);
        if (predicates.empty()) return v;
        auto set = as_node_set(v, "a predicate");
        return filter_by_predicates(std::move(set), predicates);
    }
};

struct FunctionExpr final : Expr {
    std::string name;
    std::vector<ExprPtr> args;

    std::string arg_string(const Ctx& ctx, std::size_t i) const {
        return i < args.size() ? to_string(args[i]->eval(ctx)) : ctx.node.string_value();
    }

    Value eval(const Ctx& ctx) const override {
        if (name == "last") return static_cast<double>(ctx.size);
        if (name == "position") return static_cast<double>(ctx.position);
        if (name == "count") return static_cast<double>(as_node_set(args[0]->eval(ctx), "count()").size());
        if (name == "string") return arg_string(ctx, 0);
        if (name == "concat") {
            std::string out;
            for (const auto& a : args) out += to_string(a->eval(ctx));
            return out;
        }
        if (name == "contains") return arg_string(ctx, 0).find(arg_string(ctx, 1)) != std::string::npos;
        if (name == "starts-with") return arg_string(ctx, 0).starts_with(arg_string(ctx, 1));
        if (name == "normalize-space") return text::collapse_whitespace(arg_string(ctx, 0));
        if (name == "string-length") return static_cast<double>(text::code_point_count(arg_string(ctx, 0)));
        if (name == "not") return !to_bool(args[0]->eval(ctx));
        if (name == "true") return true;
        if (name == "false") return false;
        if (name == "boolean") return to_bool(args[0]->eval(ctx));
        if (name == "number") return args.empty() ? string_to_number(ctx.node.string_value()) : to_number(args[0]->eval(ctx));
        if (name == "name" || name == "local-name") {
            XNode n = ctx.node;
            if (!args.empty()) {
                const auto v = args[0]->eval(ctx);
                const auto& set = as_node_set(v, "name()");
                if (set.empty()) return std::string();
                n = set.front();
            }
            if (n.is_attribute()) return n.node->attributes[static_cast<std::size_t>(n.attr)].first;
            return n.node->kind == NodeKind::element ? n.node->name : std::string();
        }
        throw ConfigError("XPath: unknown function " + name + "()");
    }
};

// ---- lexer -------------------------------------------------------------

enum class Tok {
    slash, dslash, lparen, rparen, lbracket, rbracket, dot, ddot, at, comma, dcolon, pipe, plus,
    minus, eq, ne, lt, le, gt, ge, star, literal, number, name, op_and, op_or, op_div, op_mod,
    op_mul, end
};

struct Token {
    Tok type;
    std::string text;
    double number = 0;
};

bool is_operator(Tok t) {
    switch (t) {
        case Tok::op_and: case Tok::op_or: case Tok::op_div: case Tok::op_mod: case Tok::op_mul:
        case Tok::slash: case Tok::dslash: case Tok::pipe: case Tok::plus: case Tok::minus:
        case Tok::eq: case Tok::ne: case Tok::lt: case Tok::le: case Tok::gt: case Tok::ge:
            return true;
        default:
            return false;
    }
}

std::vector<Token> lex(std::string_view s) {
    std::vector<Token> out;
    auto fail = [&](std::string msg) { return ConfigError("XPath syntax error in '" + std::string(s) + "': " + msg); };
    // whether the previous token lets '*' or a name act as an operator
    auto operator_context = [&] {
        if (out.empty()) return false;
        const auto t = out.back().type;
        return !(t == Tok::at || t == Tok::dcolon || t == Tok::lparen || t == Tok::lbracket ||
                 t == Tok::comma || is_operator(t));
    };
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        auto push = [&](Tok t, std::size_t len) {
            out.push_back({t, std::string(s.substr(i, len))});
            i += len;
        };
        const auto next = i + 1 < s.size() ? s[i + 1] : '\0';
        switch (c) {
            case '/': next == '/' ? push(Tok::dslash, 2) : push(Tok::slash, 1); continue;
            case '(': push(Tok::lparen, 1); continue;
            case ')': push(Tok::rparen, 1); continue;
            case '[': push(Tok::lbracket, 1); continue;
            case ']': push(Tok::rbracket, 1); continue;
            case '@': push(Tok::at, 1); continue;
            case ',': push(Tok::comma, 1); continue;
            case '|': push(Tok::pipe, 1); continue;
            case '+': push(Tok::plus, 1); continue;
            case '-': push(Tok::minus, 1); continue;
            case '=': push(Tok::eq, 1); continue;
            case '!':
                if (next != '=') throw fail("expected '!='");
                push(Tok::ne, 2);
                continue;
            case '<': next == '=' ? push(Tok::le, 2) : push(Tok::lt, 1); continue;
            case '>': next == '=' ? push(Tok::ge, 2) : push(Tok::gt, 1); continue;
            case ':':
                if (next != ':') throw fail("unexpected ':'");
                push(Tok::dcolon, 2);
                continue;
            case '*': operator_context() ? push(Tok::op_mul, 1) : push(Tok::star, 1); continue;
            case '"':
            case '\'': {
                const auto close = s.find(c, i + 1);
                if (close == std::string_view::npos) throw fail("unterminated string literal");
                out.push_back({Tok::literal, std::string(s.substr(i + 1, close - i - 1))});
                i = close + 1;
                continue;
            }
            default:
                break;
        }
        if (c == '.' && next == '.') {
            push(Tok::ddot, 2);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && std::isdigit(static_cast<unsigned char>(next)))) {
            std::size_t j = i;
            while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
            Token t{Tok::number, std::string(s.substr(i, j - i))};
            t.number = std::strtod(t.text.c_str(), nullptr);
            out.push_back(std::move(t));
            i = j;
            continue;
        }
        if (c == '.') {
            push(Tok::dot, 1);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < s.size()) {
                const char d = s[j];
                if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '-' || d == '.') {
                    ++j;
                } else if (d == ':' && j + 1 < s.size() && s[j + 1] != ':' &&
                           (std::isalpha(static_cast<unsigned char>(s[j + 1])) || s[j + 1] == '*')) {
                    ++j;  // QName prefix
                } else {
                    break;
                }
            }
            std::string name(s.substr(i, j - i));
            Tok type = Tok::name;
            if (operator_context()) {
                if (name == "and") type = Tok::op_and;
                else if (name == "or") type = Tok::op_or;
                else if (name == "div") type = Tok::op_div;
                else if (name == "mod") type = Tok::op_mod;
            }
            out.push_back({type, std::move(name)});
            i = j;
            continue;
        }
        throw fail(std::string("unexpected character '") + c + "'");
    }
    out.push_back({Tok::end, ""});
    return out;
}

// ---- parser ------------------------------------------------------------

class Parser {
public:
    Parser(std::string_view src, std::vector<Token> toks) : src_(src), toks_(std::move(toks)) {}

    ExprPtr parse() {
        auto e = parse_or();
        if (peek().type != Tok::end) throw fail("unexpected '" + peek().text + "'");
        return e;
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }
    bool accept(Tok t) {
        if (peek().type != t) return false;
        ++pos_;
        return true;
    }
    void expect(Tok t, std::string_view what) {
        if (!accept(t)) throw fail("expected " + std::string(what));
    }
    ConfigError fail(const std::string& msg) const {
        return ConfigError("XPath syntax error in '" + std::string(src_) + "': " + msg);
    }

    ExprPtr parse_or() {
        auto lhs = parse_and();
        while (accept(Tok::op_or)) lhs = std::make_shared<BinaryExpr>(BinOp::or_, lhs, parse_and());
        return lhs;
    }
    ExprPtr parse_and() {
        auto lhs = parse_equality();
        while (accept(Tok::op_and)) lhs = std::make_shared<BinaryExpr>(BinOp::and_, lhs, parse_equality());
        return lhs;
    }
    ExprPtr parse_equality() {
        auto lhs = parse_relational();
        while (true) {
            if (accept(Tok::eq)) lhs = std::make_shared<BinaryExpr>(BinOp::eq, lhs, parse_relational());
            else if (accept(Tok::ne)) lhs = std::make_shared<BinaryExpr>(BinOp::ne, lhs, parse_relational());
            else return lhs;
        }
    }
    ExprPtr parse_relational() {
        auto lhs = parse_additive();
        while (true) {
            BinOp op;
            if (accept(Tok::lt)) op = BinOp::lt;
            else if (accept(Tok::le)) op = BinOp::le;
            else if (accept(Tok::gt)) op = BinOp::gt;
            else if (accept(Tok::ge)) op = BinOp::ge;
            else return lhs;
            lhs = std::make_shared<BinaryExpr>(op, lhs, parse_additive());
        }
    }
    ExprPtr parse_additive() {
        auto lhs = parse_multiplicative();
        while (true) {
            if (accept(Tok::plus)) lhs = std::make_shared<BinaryExpr>(BinOp::add, lhs, parse_multiplicative());
            else if (accept(Tok::minus)) lhs = std::make_shared<BinaryExpr>(BinOp::sub, lhs, parse_multiplicative());
            else return lhs;
        }
    }
    ExprPtr parse_multiplicative() {
        auto lhs = parse_unary();
        while (true) {
            if (accept(Tok::op_mul)) lhs = std::make_shared<BinaryExpr>(BinOp::mul, lhs, parse_unary());
            else if (accept(Tok::op_div)) lhs = std::make_shared<BinaryExpr>(BinOp::div, lhs, parse_unary());
            else if (accept(Tok::op_mod)) lhs = std::make_shared<BinaryExpr>(BinOp::mod, lhs, parse_unary());
            else return lhs;
        }
    }
    ExprPtr parse_unary() {
        if (accept(Tok::minus)) return std::make_shared<NegateExpr>(parse_unary());
        auto lhs = parse_path();
        while (accept(Tok::pipe)) lhs = std::make_shared<UnionExpr>(lhs, parse_path());
        return lhs;
    }

    bool at_primary() const {
        const auto& t = peek();
        if (t.type == Tok::lparen || t.type == Tok::literal || t.type == Tok::number) return true;
        if (t.type == Tok::name && peek(1).type == Tok::lparen)
            return !(t.text == "text" || t.text == "node" || t.text == "comment" ||
                     t.text == "processing-instruction");
        return false;
    }

    ExprPtr parse_path() {
        auto path = std::make_shared<PathExpr>();
        if (at_primary()) {
            auto filter = std::make_shared<FilterExpr>();
            filter->primary = parse_primary();
            while (peek().type == Tok::lbracket) filter->predicates.push_back(parse_predicate());
            if (peek().type != Tok::slash && peek().type != Tok::dslash) return filter;
            path->filter = filter;
            parse_relative(*path, /*leading_separator=*/true);
            return path;
        }
        if (peek().type == Tok::slash) {
            ++pos_;
            path->absolute = true;
            if (starts_step()) parse_relative(*path, false);
            return path;
        }
        if (peek().type == Tok::dslash) {
            path->absolute = true;
            parse_relative(*path, true);
            return path;
        }
        parse_relative(*path, false);
        return path;
    }

    bool starts_step() const {
        const auto t = peek().type;
        return t == Tok::name || t == Tok::star || t == Tok::at || t == Tok::dot || t == Tok::ddot;
    }

    void parse_relative(PathExpr& path, bool leading_separator) {
        bool first = !leading_separator;
        while (true) {
            if (!first) {
                if (accept(Tok::dslash)) {
                    path.steps.push_back({Axis::descendant_or_self, {TestKind::node, ""}, {}});
                } else if (!accept(Tok::slash)) {
                    return;
                }
            }
            first = false;
            path.steps.push_back(parse_step());
        }
    }

    Step parse_step() {
        Step step;
        if (accept(Tok::dot)) return {Axis::self, {TestKind::node, ""}, {}};
        if (accept(Tok::ddot)) return {Axis::parent, {TestKind::node, ""}, {}};
        if (accept(Tok::at)) {
            step.axis = Axis::attribute;
        } else if (peek().type == Tok::name && peek(1).type == Tok::dcolon) {
            step.axis = parse_axis(peek().text);
            pos_ += 2;
        }
        if (accept(Tok::star)) {
            step.test.kind = TestKind::any_name;
        } else if (peek().type == Tok::name) {
            const auto name = peek().text;
            ++pos_;
            if (peek().type == Tok::lparen) {
                ++pos_;
                expect(Tok::rparen, "')'");
                if (name == "text") step.test.kind = TestKind::text;
                else if (name == "node") step.test.kind = TestKind::node;
                else if (name == "comment") step.test.kind = TestKind::comment;
                else throw fail("unsupported node test " + name + "()");
            } else {
                step.test = {TestKind::name, to_lower_ascii_copy(name)};
            }
        } else {
            throw fail("expected a node test");
        }
        while (peek().type == Tok::lbracket) step.predicates.push_back(parse_predicate());
        return step;
    }

    static std::string to_lower_ascii_copy(std::string s) {
        for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    }

    Axis parse_axis(const std::string& name) const {
        if (name == "child") return Axis::child;
        if (name == "descendant") return Axis::descendant;
        if (name == "descendant-or-self") return Axis::descendant_or_self;
        if (name == "self") return Axis::self;
        if (name == "parent") return Axis::parent;
        if (name == "ancestor") return Axis::ancestor;
        if (name == "ancestor-or-self") return Axis::ancestor_or_self;
        if (name == "attribute") return Axis::attribute;
        if (name == "following-sibling") return Axis::following_sibling;
        if (name == "preceding-sibling") return Axis::preceding_sibling;
        throw fail("unsupported axis " + name);
    }

    ExprPtr parse_predicate() {
        expect(Tok::lbracket, "'['");
        auto e = parse_or();
        expect(Tok::rbracket, "']'");
        return e;
    }

    ExprPtr parse_primary() {
        const auto t = peek();
        if (accept(Tok::lparen)) {
            auto e = parse_or();
            expect(Tok::rparen, "')'");
            return e;
        }
        if (accept(Tok::literal)) return std::make_shared<LiteralExpr>(Value{t.text});
        if (accept(Tok::number)) return std::make_shared<LiteralExpr>(Value{t.number});
        // function call
        auto fn = std::make_shared<FunctionExpr>();
        fn->name = t.text;
        pos_ += 2;
        if (!accept(Tok::rparen)) {
            do {
                fn->args.push_back(parse_or());
            } while (accept(Tok::comma));
            expect(Tok::rparen, "')'");
        }
        check_arity(*fn);
        return fn;
    }

    void check_arity(const FunctionExpr& fn) const {
        struct Arity { std::string_view name; std::size_t lo, hi; };
        static constexpr Arity table[] = {
            {"last", 0, 0}, {"position", 0, 0}, {"count", 1, 1}, {"string", 0, 1},
            {"concat", 2, 64}, {"contains", 2, 2}, {"starts-with", 2, 2},
            {"normalize-space", 0, 1}, {"string-length", 0, 1}, {"not", 1, 1}, {"true", 0, 0},
            {"false", 0, 0}, {"boolean", 1, 1}, {"number", 0, 1}, {"name", 0, 1},
            {"local-name", 0, 1}};
        for (const auto& a : table) {
            if (a.name != fn.name) continue;
            if (fn.args.size() < a.lo || fn.args.size() > a.hi)
                throw fail("wrong number of arguments to " + fn.name + "()");
            return;
        }
        throw fail("unknown function " + fn.name + "()");
    }

    std::string_view src_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

}  // namespace

XPath XPath::compile(std::string_view expression) {
    if (newstrust::trim(expression).empty()) throw ConfigError("XPath expression is empty");
    XPath x;
    x.source_ = std::string(expression);
    x.root_ = Parser(expression, lex(expression)).parse();
    return x;
}

Value XPath::evaluate(const html::Node& context) const {
    return root_->eval(Ctx{{&context, -1}, 1, 1});
}

NodeSet XPath::select(const html::Node& context) const {
    auto v = evaluate(context);
    if (auto* ns = std::get_if<NodeSet>(&v)) return std::move(*ns);
    throw ConfigError("XPath '" + source_ + "' does not select nodes");
}

}  // namespace newstrust::xpath
