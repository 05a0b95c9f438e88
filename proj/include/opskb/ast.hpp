#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace opskb::ast {

/// Normalized node vocabulary. Constructs outside the explicit set become
/// Other with the construct tag stored in AstNode::name.
enum class NodeKind {
    Program,
    VariableDeclaration,
    ExpressionStatement,
    CallExpression,
    MemberExpression,
    Identifier,
    FunctionExpression,
    IfStatement,
    ForStatement,
    WhileStatement,
    ReturnStatement,
    BlockStatement,
    Other,
};

const char* to_string(NodeKind k);
NodeKind kind_from_string(const std::string& s);

struct AstNode {
    std::int32_t id = 0;
    NodeKind kind = NodeKind::Other;
    std::vector<std::int32_t> children;
    std::uint32_t span_begin = 0;  // byte offsets into the cleaned source
    std::uint32_t span_end = 0;
    std::string name;  // identifier / member property / declaration kind / Other tag
};

/// Tree with dense ids: nodes[i].id == i, ids assigned in preorder, root 0.
struct SyntaxTree {
    std::string script_id;
    std::int32_t root = 0;
    std::vector<AstNode> nodes;

    const AstNode& node(std::int32_t id) const { return nodes[static_cast<std::size_t>(id)]; }

    /// subtree_end(id): one past the last preorder id inside id's subtree,
    /// i.e. the subtree occupies the contiguous id range [id, subtree_end).
    std::vector<std::int32_t> subtree_ends() const;
};

nlohmann::ordered_json to_json(const SyntaxTree& tree);
/// Parses and structurally validates (dense ids, Program root, child links
/// forming a tree, spans contained in parents). Throws on violations.
SyntaxTree from_json(const nlohmann::json& j);

void save_json_file(const SyntaxTree& tree, const std::filesystem::path& path);
SyntaxTree load_json_file(const std::filesystem::path& path);

}  // namespace opskb::ast
