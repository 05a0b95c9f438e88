#pragma once

// Operator relationship chains: a compact, parseable summary of the order in
// which a script applies its operators.
//
// Grammar (tokens are whitespace separated):
//
//   chain := seq
//   seq   := node (" -> " node)*
//   node  := NAME | par | nest
//   par   := "{ " seq (" " seq)* " }"
//   nest  := NAME " ~> { " seq " }"
//
// "a -> b" means b follows a, "{ x y }" means x and y are independent
// branches, and "f ~> { g }" means g runs inside a callback passed to f.
// Branches of a par are stored sorted by their serialized form, so equal
// chains always serialize to equal strings.

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "opskb/ast.hpp"
#include "opskb/relations.hpp"

namespace opskb::chains {

struct Chain {
    enum class Kind { leaf, seq, par, nest };

    Kind kind = Kind::seq;
    std::string name;             // leaf name or nest head
    std::vector<Chain> children;  // seq parts, par branches, or [nest body]

    /// True for the canonical empty chain (a seq with no parts).
    bool empty() const { return kind == Kind::seq && children.empty(); }

    bool operator==(const Chain&) const = default;
};

Chain leaf(std::string name);

/// Sequence `parts` in order. Nested seqs are spliced, empty parts dropped;
/// a single surviving part is returned unwrapped.
Chain make_seq(std::vector<Chain> parts);

/// Put `branches` in parallel. Nested pars are spliced, empty branches
/// dropped, survivors sorted by serialized form; a single survivor is
/// returned unwrapped.
Chain make_par(std::vector<Chain> branches);

/// Nest `body` under the operator `head`. An empty body degenerates to a
/// plain leaf.
Chain make_nest(std::string head, Chain body);

/// Render a chain to its textual form. The empty chain renders as "".
/// `arrow_only` replaces "~>" with "->", losing the nesting distinction.
std::string serialize(const Chain& chain, bool arrow_only = false);

/// Parse the textual form back into a chain (with par branches re-sorted to
/// canonical order). Throws std::runtime_error on malformed input.
Chain parse_chain(const std::string& text);

/// Build the chain of one script from its syntax tree and analysis. Every
/// named operator occurrence appears exactly once; dynamic call sites are
/// omitted (their callback bodies are spliced into the surrounding
/// sequence).
Chain build_chain(const ast::SyntaxTree& tree, const relations::ScriptAnalysis& analysis);

/// Operator names of a serialized chain in textual order, structural tokens
/// ("->", "~>", "{", "}") removed.
std::vector<std::string> operator_tokens(const std::string& serialized);

/// rows: (script_name, serialized chain). Header: script_name,chain.
void write_chains_csv(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, std::string>>& rows);

std::map<std::string, std::string> read_chains_csv(const std::filesystem::path& path);

}  // namespace opskb::chains
