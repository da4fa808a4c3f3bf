#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace newstrust::html {

enum class NodeKind { document, element, text, comment };

struct Node {
    NodeKind kind = NodeKind::element;
    std::string name;  // lowercase tag name (elements only)
    std::vector<std::pair<std::string, std::string>> attributes;
    std::string data;  // character data for text and comment nodes
    Node* parent = nullptr;
    std::vector<std::unique_ptr<Node>> children;
    std::size_t order = 0;  // pre-order position assigned at parse time

    const std::string* attribute(std::string_view attr) const;

    // All descendant character data, skipping script/style/template/noscript.
    std::string text_content() const;
};

// Error-recovering parse of real-world HTML into a tree. Never throws on
// malformed markup: unknown end tags are ignored, unclosed elements are closed
// at end of input, and common implied end tags (p, li, td, ...) are inferred.
class Document {
public:
    static Document parse(std::string_view html);

    const Node& root() const { return *root_; }
    Node& root() { return *root_; }

    // Detaches `node` (and its subtree) from the tree. The root cannot be removed.
    void remove(const Node& node);

private:
    std::unique_ptr<Node> root_;
};

// Decodes character references (&amp;, &#39;, &#x2014;, ...). Unknown named
// references are left verbatim.
std::string decode_entities(std::string_view s);

}  // namespace newstrust::html
