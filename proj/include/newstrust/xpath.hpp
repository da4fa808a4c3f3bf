#pragma once

#include "newstrust/html.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace newstrust::xpath {

// A node in the XPath data model: a tree node, or one attribute of an element.
struct XNode {
    const html::Node* node = nullptr;
    int attr = -1;  // index into node->attributes, or -1

    bool is_attribute() const { return attr >= 0; }
    std::string string_value() const;
    friend bool operator==(const XNode&, const XNode&) = default;
};

using NodeSet = std::vector<XNode>;  // always in document order, no duplicates
using Value = std::variant<NodeSet, std::string, double, bool>;

struct Expr;

// Compiled XPath 1.0 expression. Supported: absolute and relative location
// paths with the abbreviated syntax (/, //, ., .., @, *); the child,
// descendant, descendant-or-self, self, parent, ancestor, ancestor-or-self,
// attribute, following-sibling and preceding-sibling axes; text(), node() and
// comment() tests; predicates; union; or/and/=/!=/</<=/>/>=/+/-; and the
// functions last, position, count, string, concat, contains, starts-with,
// normalize-space, string-length, not, true, false, boolean, number, name and
// local-name.
class XPath {
public:
    // Throws ConfigError on syntax errors.
    static XPath compile(std::string_view expression);

    Value evaluate(const html::Node& context) const;
    // Throws ConfigError if the expression does not yield a node-set.
    NodeSet select(const html::Node& context) const;

    const std::string& source() const { return source_; }

private:
    std::string source_;
    std::shared_ptr<const Expr> root_;
};

}  // namespace newstrust::xpath
