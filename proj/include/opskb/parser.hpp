#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <variant>

#include "opskb/ast.hpp"
#include "opskb/corpus.hpp"

namespace opskb::ast {

struct ParseFailure {
    std::string message;
    std::size_t offset = 0;
    int line = 1;  // 1-based
    int col = 1;   // 1-based
    bool timed_out = false;

    /// Reject reason string: "timeout" or "syntax:<line>:<col>".
    std::string reject_reason() const;
};

struct ParseOptions {
    std::chrono::milliseconds timeout{10000};
    int max_depth = 512;      // parser recursion bound
    int max_tree_depth = 4096;  // bound on the produced tree (protects later walks)
};

using ParseResult = std::variant<SyntaxTree, ParseFailure>;

/// Parses an ECMAScript 2020 script (script goal, comments allowed) into
/// the normalized tree. Never throws for malformed input; returns
/// ParseFailure instead.
ParseResult parse_source(std::string_view source, std::string script_id,
                         const ParseOptions& opts = {});

/// Parses a cleaned record and advances its stage to validated or rejected.
ParseResult parse(corpus::ScriptRecord& record, const ParseOptions& opts = {});

}  // namespace opskb::ast
