#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opskb/ast.hpp"

namespace opskb::relations {

enum class RelationKind { sequential, parallel, nested };

std::string to_string(RelationKind k);
RelationKind relation_from_string(const std::string& s);

/// One operator call site. canonical is the dotted path when the member
/// chain is rooted at a platform namespace (ee, Map, Export, Chart, ui),
/// otherwise the final name alone; "<dynamic>" for computed or indirect
/// callees.
struct OperatorOccurrence {
    std::string canonical;
    std::string short_name;
    std::int32_t node_id = 0;
    std::int32_t stmt_id = 0;
    int order_in_stmt = 0;
    int depth = 0;
    std::uint32_t span_begin = 0;
    std::uint32_t span_end = 0;
    bool dynamic = false;
};

struct RelationInstance {
    std::string op_a;
    std::string op_b;
    RelationKind kind = RelationKind::sequential;

    bool operator==(const RelationInstance&) const = default;
    bool operator<(const RelationInstance& o) const {
        return std::tie(kind, op_a, op_b) < std::tie(o.kind, o.op_a, o.op_b);
    }
};

struct OperatorRelation {
    std::string op_a;
    std::string op_b;
    RelationKind kind = RelationKind::sequential;
    std::uint64_t frequency = 0;
};

enum class ParallelRule { dataflow, intersection };

struct ExtractOptions {
    ParallelRule parallel_rule = ParallelRule::dataflow;
};

/// Def-use edge between two statement-level nodes (def strictly before use
/// in source order; uses of later declarations are never recorded).
struct DefUseEdge {
    std::int32_t def_stmt = 0;
    std::int32_t use_stmt = 0;
    bool def_has_ops = false;  // any contributing declarator initializer contains a call
};

/// Sibling-statement grouping of one block: weakly-connected def-use
/// components and longest-path levels within each component.
struct BlockGroups {
    std::int32_t block = 0;
    std::vector<std::int32_t> members;  // statement children, in order
    std::vector<int> component;         // per member, 0..component_count-1
    std::vector<int> level;             // per member, longest def-use path depth
    int component_count = 0;
};

struct ScriptAnalysis {
    std::vector<OperatorOccurrence> occurrences;  // sorted by (stmt_id, order_in_stmt)
    std::vector<DefUseEdge> def_use;              // dedup'd per stmt pair, sorted
    std::vector<BlockGroups> blocks;              // one per block with members
    std::vector<std::int32_t> stmt_of;            // per node; -1 above statement level
    std::vector<std::int32_t> subtree_end;        // preorder subtree ranges
    std::map<std::int32_t, std::size_t> occ_by_node;

    /// First occurrence (by occurrence order, dynamics excluded) whose call
    /// node lies in the subtree of `node`; nullopt when there is none.
    std::optional<std::size_t> first_occ_in_subtree(std::int32_t node) const;
    /// Occurrence indices anchored to stmt (dynamics excluded), in order.
    std::vector<std::size_t> own_occs(std::int32_t stmt) const;
};

/// Header/body split of a control statement (if/for/while/do/switch/with);
/// nullopt for anything else. Bodies are always BlockStatement nodes.
struct ControlParts {
    std::vector<std::int32_t> header;
    std::vector<std::int32_t> bodies;
};
std::optional<ControlParts> control_parts(const ast::SyntaxTree& tree, const ast::AstNode& node);

ScriptAnalysis analyze(const ast::SyntaxTree& tree);

/// Occurrence list alone (convenience over analyze()).
std::vector<OperatorOccurrence> extract_occurrences(const ast::SyntaxTree& tree);

/// Applies the four rules. Instances are emitted rule by rule (R1, R2, R3,
/// R4) in deterministic tree order; parallel pairs are canonicalized so
/// op_a <= op_b.
std::vector<RelationInstance> classify_relations(const ast::SyntaxTree& tree,
                                                 const ScriptAnalysis& analysis,
                                                 const ExtractOptions& opts = {});

/// Counts identical triples across scripts; sorted by (relationship,
/// frequency desc, operator, related_operator).
std::vector<OperatorRelation> aggregate(const std::vector<std::vector<RelationInstance>>& per_script);

void write_relations_csv(const std::filesystem::path& path,
                         const std::vector<OperatorRelation>& relations);
std::vector<OperatorRelation> read_relations_csv(const std::filesystem::path& path);

/// Per-script deduplicated triples, for scoring against ground truth.
/// Columns: script_name,operator,related_operator,relationship.
void write_per_script_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::vector<RelationInstance>>>& per_script);
std::map<std::string, std::vector<RelationInstance>> read_per_script_csv(
    const std::filesystem::path& path);

}  // namespace opskb::relations
