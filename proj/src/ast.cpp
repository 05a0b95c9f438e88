#include "opskb/ast.hpp"

#include <fstream>
#include <stdexcept>

namespace opskb::ast {

const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Program: return "Program";
        case NodeKind::VariableDeclaration: return "VariableDeclaration";
        case NodeKind::ExpressionStatement: return "ExpressionStatement";
        case NodeKind::CallExpression: return "CallExpression";
        case NodeKind::MemberExpression: return "MemberExpression";
        case NodeKind::Identifier: return "Identifier";
        case NodeKind::FunctionExpression: return "FunctionExpression";
        case NodeKind::IfStatement: return "IfStatement";
        case NodeKind::ForStatement: return "ForStatement";
        case NodeKind::WhileStatement: return "WhileStatement";
        case NodeKind::ReturnStatement: return "ReturnStatement";
        case NodeKind::BlockStatement: return "BlockStatement";
        case NodeKind::Other: return "Other";
    }
    throw std::logic_error("bad node kind");
}

NodeKind kind_from_string(const std::string& s) {
    static const std::pair<const char*, NodeKind> table[] = {
        {"Program", NodeKind::Program},
        {"VariableDeclaration", NodeKind::VariableDeclaration},
        {"ExpressionStatement", NodeKind::ExpressionStatement},
        {"CallExpression", NodeKind::CallExpression},
        {"MemberExpression", NodeKind::MemberExpression},
        {"Identifier", NodeKind::Identifier},
        {"FunctionExpression", NodeKind::FunctionExpression},
        {"IfStatement", NodeKind::IfStatement},
        {"ForStatement", NodeKind::ForStatement},
        {"WhileStatement", NodeKind::WhileStatement},
        {"ReturnStatement", NodeKind::ReturnStatement},
        {"BlockStatement", NodeKind::BlockStatement},
        {"Other", NodeKind::Other},
    };
    for (const auto& [name, kind] : table) {
        if (s == name) return kind;
    }
    throw std::runtime_error("unknown node kind: " + s);
}

std::vector<std::int32_t> SyntaxTree::subtree_ends() const {
    // Preorder ids make every subtree a contiguous range; compute ends
    // bottom-up (children have larger ids than their parent).
    std::vector<std::int32_t> ends(nodes.size());
    for (std::size_t i = nodes.size(); i-- > 0;) {
        std::int32_t end = static_cast<std::int32_t>(i) + 1;
        for (std::int32_t c : nodes[i].children) {
            if (ends[static_cast<std::size_t>(c)] > end) end = ends[static_cast<std::size_t>(c)];
        }
        ends[i] = end;
    }
    return ends;
}

nlohmann::ordered_json to_json(const SyntaxTree& tree) {
    nlohmann::ordered_json j;
    j["script_id"] = tree.script_id;
    j["root"] = tree.root;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& n : tree.nodes) {
        nlohmann::ordered_json nj;
        nj["id"] = n.id;
        nj["kind"] = to_string(n.kind);
        nj["children"] = n.children;
        nj["span"] = {n.span_begin, n.span_end};
        if (!n.name.empty()) nj["name"] = n.name;
        arr.push_back(std::move(nj));
    }
    j["nodes"] = std::move(arr);
    return j;
}

SyntaxTree from_json(const nlohmann::json& j) {
    SyntaxTree tree;
    tree.script_id = j.at("script_id").get<std::string>();
    tree.root = j.at("root").get<std::int32_t>();
    const auto& arr = j.at("nodes");
    tree.nodes.reserve(arr.size());
    for (const auto& nj : arr) {
        AstNode n;
        n.id = nj.at("id").get<std::int32_t>();
        n.kind = kind_from_string(nj.at("kind").get<std::string>());
        n.children = nj.at("children").get<std::vector<std::int32_t>>();
        const auto& span = nj.at("span");
        if (!span.is_array() || span.size() != 2) throw std::runtime_error("ast: bad span");
        n.span_begin = span[0].get<std::uint32_t>();
        n.span_end = span[1].get<std::uint32_t>();
        if (nj.contains("name")) n.name = nj.at("name").get<std::string>();
        tree.nodes.push_back(std::move(n));
    }

    const std::int32_t n = static_cast<std::int32_t>(tree.nodes.size());
    if (n == 0) throw std::runtime_error("ast: empty node list");
    if (tree.root != 0) throw std::runtime_error("ast: root must be node 0");
    if (tree.nodes[0].kind != NodeKind::Program) throw std::runtime_error("ast: root not Program");
    std::vector<int> parent_count(static_cast<std::size_t>(n), 0);
    for (std::int32_t i = 0; i < n; ++i) {
        const AstNode& node = tree.nodes[static_cast<std::size_t>(i)];
        if (node.id != i) throw std::runtime_error("ast: ids are not dense and ordered");
        if (node.span_end < node.span_begin) throw std::runtime_error("ast: negative span");
        for (std::int32_t c : node.children) {
            if (c <= i || c >= n) throw std::runtime_error("ast: child id out of preorder range");
            parent_count[static_cast<std::size_t>(c)] += 1;
            const AstNode& child = tree.nodes[static_cast<std::size_t>(c)];
            if (child.span_begin < node.span_begin || child.span_end > node.span_end) {
                throw std::runtime_error("ast: child span escapes parent");
            }
        }
    }
    for (std::int32_t i = 1; i < n; ++i) {
        if (parent_count[static_cast<std::size_t>(i)] != 1) {
            throw std::runtime_error("ast: node " + std::to_string(i) + " has " +
                                     std::to_string(parent_count[static_cast<std::size_t>(i)]) +
                                     " parents");
        }
    }
    return tree;
}

void save_json_file(const SyntaxTree& tree, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_json(tree).dump() << '\n';
}

SyntaxTree load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

}  // namespace opskb::ast
