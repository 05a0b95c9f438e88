// Occurrence extraction and relationship classification.
//
// Rule summary (all operate on <dynamic>-filtered occurrence lists):
//  R1 within one statement: consecutive occurrences are sequential.
//  R2 def-use across statements: a declaration whose initializer contains a
//     call, referenced by a later statement, links the defining statement's
//     last own occurrence to the using statement's first own occurrence
//     (one instance per statement pair).
//  R3 sibling statements of a block grouped into weakly-connected def-use
//     components: dataflow-independent groups are parallel, linked by their
//     first occurrences; level antichains inside one component are parallel
//     too. The literal alternative (empty pairwise operator-set
//     intersection) is available as ParallelRule::intersection.
//  R4 nesting: control-statement header occurrences link to the first
//     occurrence of each body block, and a call taking a function-valued
//     argument links to the first occurrence of that callback body.

#include "opskb/relations.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "opskb/util/csv.hpp"

namespace opskb::relations {

using ast::AstNode;
using ast::NodeKind;
using ast::SyntaxTree;

std::string to_string(RelationKind k) {
    switch (k) {
        case RelationKind::sequential: return "sequential";
        case RelationKind::parallel: return "parallel";
        case RelationKind::nested: return "nested";
    }
    throw std::logic_error("bad relation kind");
}

RelationKind relation_from_string(const std::string& s) {
    if (s == "sequential") return RelationKind::sequential;
    if (s == "parallel") return RelationKind::parallel;
    if (s == "nested") return RelationKind::nested;
    throw std::runtime_error("unknown relationship: " + s);
}

namespace {

const std::set<std::string>& platform_namespaces() {
    static const std::set<std::string> ns = {"ee", "Map", "Export", "Chart", "ui"};
    return ns;
}

struct CalleeName {
    std::string canonical;
    std::string short_name;
    bool dynamic = false;
};

CalleeName resolve_callee(const SyntaxTree& tree, const AstNode& callee) {
    CalleeName r;
    if (callee.kind == NodeKind::Identifier) {
        r.canonical = callee.name;
        r.short_name = callee.name;
        return r;
    }
    if (callee.kind == NodeKind::MemberExpression) {
        if (callee.name.empty()) {
            r.canonical = r.short_name = "<dynamic>";
            r.dynamic = true;
            return r;
        }
        std::vector<const std::string*> segments{&callee.name};
        const AstNode* cur = &tree.node(callee.children.at(0));
        while (cur->kind == NodeKind::MemberExpression && !cur->name.empty()) {
            segments.push_back(&cur->name);
            cur = &tree.node(cur->children.at(0));
        }
        r.short_name = callee.name;
        if (cur->kind == NodeKind::Identifier && platform_namespaces().count(cur->name) > 0) {
            std::string full = cur->name;
            for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
                full += '.';
                full += **it;
            }
            r.canonical = std::move(full);
        } else {
            r.canonical = callee.name;
        }
        return r;
    }
    r.canonical = r.short_name = "<dynamic>";
    r.dynamic = true;
    return r;
}

// ---- def-use scope walker ----

struct Def {
    std::int32_t stmt = -1;
    bool has_ops = false;
};

struct Scope {
    bool is_function = false;
    std::map<std::string, Def> defs;
};

class DefUseWalker {
  public:
    DefUseWalker(const SyntaxTree& tree, const std::vector<std::int32_t>& stmt_of,
                 const std::vector<std::int32_t>& subtree_end,
                 const std::vector<std::int32_t>& occ_nodes_sorted)
        : tree_(tree),
          stmt_of_(stmt_of),
          subtree_end_(subtree_end),
          occ_nodes_(occ_nodes_sorted) {}

    // (def_stmt, use_stmt) -> any def had ops
    std::map<std::pair<std::int32_t, std::int32_t>, bool> run() {
        scopes_.push_back({true, {}});
        walk(tree_.root);
        return std::move(edges_);
    }

  private:
    bool subtree_has_call(std::int32_t node) const {
        auto it = std::lower_bound(occ_nodes_.begin(), occ_nodes_.end(), node);
        return it != occ_nodes_.end() && *it < subtree_end_[static_cast<std::size_t>(node)];
    }

    void bind(const std::string& name, bool function_scoped, const Def& def) {
        if (function_scoped) {
            for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
                if (it->is_function) {
                    it->defs[name] = def;
                    return;
                }
            }
        }
        scopes_.back().defs[name] = def;
    }

    void use(const std::string& name, std::int32_t node) {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto found = it->defs.find(name);
            if (found == it->defs.end()) continue;
            std::int32_t use_stmt = stmt_of_[static_cast<std::size_t>(node)];
            if (use_stmt < 0 || found->second.stmt < 0 || use_stmt == found->second.stmt) return;
            bool& has_ops = edges_[{found->second.stmt, use_stmt}];
            has_ops = has_ops || found->second.has_ops;
            return;
        }
    }

    void bind_pattern(std::int32_t node_id, bool function_scoped, const Def& def) {
        const AstNode& node = tree_.node(node_id);
        if (node.kind == NodeKind::Identifier) {
            bind(node.name, function_scoped, def);
            return;
        }
        if (node.kind == NodeKind::Other) {
            if (node.name == "AssignmentPattern") {
                bind_pattern(node.children.at(0), function_scoped, def);
                if (node.children.size() > 1) walk(node.children[1]);
                return;
            }
            if (node.name == "PropertyComputed") {
                walk(node.children.at(0));
                if (node.children.size() > 1) bind_pattern(node.children[1], function_scoped, def);
                return;
            }
            if (node.name == "ObjectPattern" || node.name == "ArrayPattern" ||
                node.name == "RestElement") {
                for (std::int32_t c : node.children) bind_pattern(c, function_scoped, def);
                return;
            }
        }
        // Anything else in a binding position is malformed input tolerance;
        // treat it as expression uses.
        walk(node_id);
    }

    bool is_statement_level(std::int32_t node_id) const {
        return stmt_of_[static_cast<std::size_t>(node_id)] == node_id;
    }

    void walk(std::int32_t node_id) {
        const AstNode& node = tree_.node(node_id);
        switch (node.kind) {
            case NodeKind::Identifier:
                use(node.name, node_id);
                return;
            case NodeKind::VariableDeclaration: {
                bool function_scoped = node.name == "var";
                for (std::int32_t d : node.children) {
                    const AstNode& decl = tree_.node(d);
                    std::int32_t target = decl.children.at(0);
                    bool has_init = decl.children.size() > 1;
                    if (has_init) walk(decl.children[1]);  // uses resolve before the binding
                    Def def;
                    def.stmt = stmt_of_[static_cast<std::size_t>(d)];
                    def.has_ops = has_init && subtree_has_call(decl.children[1]);
                    bind_pattern(target, function_scoped, def);
                }
                return;
            }
            case NodeKind::FunctionExpression: {
                // A named function at statement level declares its name in
                // the enclosing (function) scope.
                if (!node.name.empty() && is_statement_level(node_id)) {
                    Def def;
                    def.stmt = node_id;
                    def.has_ops = subtree_has_call(node_id);
                    bind(node.name, true, def);
                }
                scopes_.push_back({true, {}});
                if (!node.name.empty() && !is_statement_level(node_id)) {
                    Def self;
                    self.stmt = stmt_of_[static_cast<std::size_t>(node_id)];
                    self.has_ops = subtree_has_call(node_id);
                    bind(node.name, true, self);
                }
                Def param_def;
                param_def.stmt = stmt_of_[static_cast<std::size_t>(node_id)];
                param_def.has_ops = false;
                for (std::size_t i = 0; i + 1 < node.children.size(); ++i) {
                    bind_pattern(node.children[i], true, param_def);
                }
                if (!node.children.empty()) walk(node.children.back());
                scopes_.pop_back();
                return;
            }
            case NodeKind::BlockStatement: {
                scopes_.push_back({false, {}});
                for (std::int32_t c : node.children) walk(c);
                scopes_.pop_back();
                return;
            }
            case NodeKind::ForStatement: {
                // let/const in the header scope to the loop
                scopes_.push_back({false, {}});
                for (std::int32_t c : node.children) walk(c);
                scopes_.pop_back();
                return;
            }
            case NodeKind::Other: {
                if (node.name == "CatchClause") {
                    scopes_.push_back({false, {}});
                    if (node.children.size() == 2) {
                        Def def;
                        def.stmt = stmt_of_[static_cast<std::size_t>(node_id)];
                        def.has_ops = false;
                        bind_pattern(node.children[0], false, def);
                        walk(node.children[1]);
                    } else if (!node.children.empty()) {
                        walk(node.children.back());
                    }
                    scopes_.pop_back();
                    return;
                }
                if (node.name.rfind("ClassDeclaration", 0) == 0) {
                    auto colon = node.name.find(':');
                    if (colon != std::string::npos && is_statement_level(node_id)) {
                        Def def;
                        def.stmt = node_id;
                        def.has_ops = subtree_has_call(node_id);
                        bind(node.name.substr(colon + 1), false, def);
                    }
                    for (std::int32_t c : node.children) walk(c);
                    return;
                }
                break;
            }
            default:
                break;
        }
        for (std::int32_t c : node.children) walk(c);
    }

    const SyntaxTree& tree_;
    const std::vector<std::int32_t>& stmt_of_;
    const std::vector<std::int32_t>& subtree_end_;
    const std::vector<std::int32_t>& occ_nodes_;
    std::vector<Scope> scopes_;
    std::map<std::pair<std::int32_t, std::int32_t>, bool> edges_;
};

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
    }
    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
};

}  // namespace

std::optional<ControlParts> control_parts(const SyntaxTree& tree, const AstNode& node) {
    ControlParts parts;
    switch (node.kind) {
        case NodeKind::IfStatement:
            if (node.children.empty()) return std::nullopt;
            parts.header.push_back(node.children[0]);
            for (std::size_t i = 1; i < node.children.size(); ++i) {
                parts.bodies.push_back(node.children[i]);
            }
            return parts;
        case NodeKind::ForStatement:
        case NodeKind::WhileStatement:
            if (node.children.empty()) return std::nullopt;
            for (std::size_t i = 0; i + 1 < node.children.size(); ++i) {
                parts.header.push_back(node.children[i]);
            }
            parts.bodies.push_back(node.children.back());
            return parts;
        case NodeKind::Other:
            if (node.name == "DoWhileStatement" && node.children.size() == 2) {
                parts.bodies.push_back(node.children[0]);
                parts.header.push_back(node.children[1]);
                return parts;
            }
            if (node.name == "WithStatement" && node.children.size() == 2) {
                parts.header.push_back(node.children[0]);
                parts.bodies.push_back(node.children[1]);
                return parts;
            }
            if (node.name == "SwitchStatement" && !node.children.empty()) {
                parts.header.push_back(node.children[0]);
                for (std::size_t i = 1; i < node.children.size(); ++i) {
                    const AstNode& c = tree.node(node.children[i]);
                    if (c.children.size() > 1) parts.header.push_back(c.children[0]);
                    if (!c.children.empty()) parts.bodies.push_back(c.children.back());
                }
                return parts;
            }
            return std::nullopt;
        default:
            return std::nullopt;
    }
}

std::optional<std::size_t> ScriptAnalysis::first_occ_in_subtree(std::int32_t node) const {
    std::int32_t end = subtree_end[static_cast<std::size_t>(node)];
    for (std::size_t i = 0; i < occurrences.size(); ++i) {
        if (occurrences[i].dynamic) continue;
        if (occurrences[i].node_id >= node && occurrences[i].node_id < end) return i;
    }
    return std::nullopt;
}

std::vector<std::size_t> ScriptAnalysis::own_occs(std::int32_t stmt) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < occurrences.size(); ++i) {
        if (occurrences[i].stmt_id == stmt && !occurrences[i].dynamic) out.push_back(i);
    }
    return out;
}

ScriptAnalysis analyze(const SyntaxTree& tree) {
    ScriptAnalysis a;
    const std::size_t n = tree.nodes.size();
    a.subtree_end = tree.subtree_ends();

    // Statement anchors: a node whose parent is Program or BlockStatement
    // anchors itself; everything else inherits.
    a.stmt_of.assign(n, -1);
    std::vector<int> depth(n, 0);
    for (const AstNode& node : tree.nodes) {
        bool is_block = node.kind == NodeKind::Program || node.kind == NodeKind::BlockStatement;
        for (std::int32_t c : node.children) {
            depth[static_cast<std::size_t>(c)] = depth[static_cast<std::size_t>(node.id)] + 1;
            a.stmt_of[static_cast<std::size_t>(c)] =
                is_block ? c : a.stmt_of[static_cast<std::size_t>(node.id)];
        }
    }

    // Occurrences in evaluation order: a call is emitted after its callee
    // and argument subtrees.
    std::vector<std::size_t> emit_order;  // node ids in emission order
    {
        std::vector<std::pair<std::int32_t, bool>> stack{{tree.root, false}};
        while (!stack.empty()) {
            auto [id, done] = stack.back();
            stack.pop_back();
            const AstNode& node = tree.node(id);
            if (done) {
                emit_order.push_back(static_cast<std::size_t>(id));
                continue;
            }
            if (node.kind == NodeKind::CallExpression) stack.push_back({id, true});
            for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) {
                stack.push_back({*it, false});
            }
        }
    }
    std::map<std::int32_t, int> per_stmt_counter;
    for (std::size_t id : emit_order) {
        const AstNode& node = tree.nodes[id];
        CalleeName name = node.children.empty()
                              ? CalleeName{"<dynamic>", "<dynamic>", true}
                              : resolve_callee(tree, tree.node(node.children[0]));
        OperatorOccurrence occ;
        occ.canonical = std::move(name.canonical);
        occ.short_name = std::move(name.short_name);
        occ.node_id = node.id;
        occ.stmt_id = a.stmt_of[id];
        occ.order_in_stmt = per_stmt_counter[occ.stmt_id]++;
        occ.depth = depth[id];
        occ.span_begin = node.span_begin;
        occ.span_end = node.span_end;
        occ.dynamic = name.dynamic;
        a.occurrences.push_back(std::move(occ));
    }
    std::stable_sort(a.occurrences.begin(), a.occurrences.end(),
                     [](const OperatorOccurrence& x, const OperatorOccurrence& y) {
                         return std::tie(x.stmt_id, x.order_in_stmt) <
                                std::tie(y.stmt_id, y.order_in_stmt);
                     });
    for (std::size_t i = 0; i < a.occurrences.size(); ++i) {
        a.occ_by_node[a.occurrences[i].node_id] = i;
    }

    // Def-use edges.
    std::vector<std::int32_t> occ_nodes;
    occ_nodes.reserve(a.occurrences.size());
    for (const auto& occ : a.occurrences) occ_nodes.push_back(occ.node_id);
    std::sort(occ_nodes.begin(), occ_nodes.end());
    DefUseWalker walker(tree, a.stmt_of, a.subtree_end, occ_nodes);
    for (const auto& [key, has_ops] : walker.run()) {
        a.def_use.push_back({key.first, key.second, has_ops});
    }

    // Sibling groupings per block.
    for (const AstNode& node : tree.nodes) {
        bool is_block = node.kind == NodeKind::Program || node.kind == NodeKind::BlockStatement;
        if (!is_block || node.children.empty()) continue;
        BlockGroups g;
        g.block = node.id;
        g.members = node.children;
        const std::size_t m = g.members.size();

        // Map a statement anywhere below this block to the member whose
        // subtree contains it (members own disjoint preorder ranges).
        auto member_of = [&](std::int32_t stmt) -> int {
            auto it = std::upper_bound(g.members.begin(), g.members.end(), stmt);
            if (it == g.members.begin()) return -1;
            std::size_t idx = static_cast<std::size_t>(it - g.members.begin()) - 1;
            std::int32_t member = g.members[idx];
            if (stmt >= member && stmt < a.subtree_end[static_cast<std::size_t>(member)]) {
                return static_cast<int>(idx);
            }
            return -1;
        };

        std::vector<std::pair<int, int>> edges;
        for (const DefUseEdge& e : a.def_use) {
            int i = member_of(e.def_stmt);
            int j = member_of(e.use_stmt);
            if (i >= 0 && j >= 0 && i != j) {
                edges.emplace_back(std::min(i, j), std::max(i, j));
            }
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

        UnionFind uf(m);
        for (auto [i, j] : edges) uf.unite(i, j);
        g.component.assign(m, -1);
        std::map<int, int> comp_ids;
        for (std::size_t i = 0; i < m; ++i) {
            int root = uf.find(static_cast<int>(i));
            auto [it, inserted] = comp_ids.emplace(root, static_cast<int>(comp_ids.size()));
            g.component[i] = it->second;
        }
        g.component_count = static_cast<int>(comp_ids.size());

        g.level.assign(m, 0);
        for (auto [i, j] : edges) {
            // edges are sorted with i < j, so levels propagate in one pass
            g.level[static_cast<std::size_t>(j)] =
                std::max(g.level[static_cast<std::size_t>(j)],
                         g.level[static_cast<std::size_t>(i)] + 1);
        }
        a.blocks.push_back(std::move(g));
    }
    return a;
}

std::vector<OperatorOccurrence> extract_occurrences(const SyntaxTree& tree) {
    return analyze(tree).occurrences;
}

namespace {

void emit_parallel(std::vector<RelationInstance>& out, const std::string& a,
                   const std::string& b) {
    if (a <= b) {
        out.push_back({a, b, RelationKind::parallel});
    } else {
        out.push_back({b, a, RelationKind::parallel});
    }
}

}  // namespace

std::vector<RelationInstance> classify_relations(const SyntaxTree& tree,
                                                 const ScriptAnalysis& a,
                                                 const ExtractOptions& opts) {
    std::vector<RelationInstance> out;

    // R1: consecutive occurrences within a statement.
    for (std::size_t i = 0; i + 1 < a.occurrences.size(); ++i) {
        const auto& cur = a.occurrences[i];
        if (cur.dynamic) continue;
        // find the next non-dynamic occurrence of the same statement
        for (std::size_t j = i + 1; j < a.occurrences.size(); ++j) {
            if (a.occurrences[j].stmt_id != cur.stmt_id) break;
            if (a.occurrences[j].dynamic) continue;
            out.push_back({cur.canonical, a.occurrences[j].canonical, RelationKind::sequential});
            break;
        }
    }

    // R2: def-use across statements.
    for (const DefUseEdge& e : a.def_use) {
        if (!e.def_has_ops) continue;
        auto defs = a.own_occs(e.def_stmt);
        auto uses = a.own_occs(e.use_stmt);
        if (defs.empty() || uses.empty()) continue;
        out.push_back({a.occurrences[defs.back()].canonical,
                       a.occurrences[uses.front()].canonical, RelationKind::sequential});
    }

    // R3: parallel sibling groups.
    for (const BlockGroups& g : a.blocks) {
        if (opts.parallel_rule == ParallelRule::intersection) {
            // literal reading: pairwise empty intersection of operator sets
            std::vector<std::set<std::string>> op_sets(g.members.size());
            std::vector<std::optional<std::size_t>> firsts(g.members.size());
            for (std::size_t i = 0; i < g.members.size(); ++i) {
                std::int32_t member = g.members[i];
                std::int32_t end = a.subtree_end[static_cast<std::size_t>(member)];
                for (std::size_t k = 0; k < a.occurrences.size(); ++k) {
                    const auto& occ = a.occurrences[k];
                    if (occ.dynamic || occ.node_id < member || occ.node_id >= end) continue;
                    op_sets[i].insert(occ.canonical);
                    if (!firsts[i]) firsts[i] = k;
                }
            }
            for (std::size_t i = 0; i < g.members.size(); ++i) {
                if (!firsts[i]) continue;
                for (std::size_t j = i + 1; j < g.members.size(); ++j) {
                    if (!firsts[j]) continue;
                    bool disjoint = true;
                    for (const auto& op : op_sets[i]) {
                        if (op_sets[j].count(op) > 0) {
                            disjoint = false;
                            break;
                        }
                    }
                    if (disjoint) {
                        emit_parallel(out, a.occurrences[*firsts[i]].canonical,
                                      a.occurrences[*firsts[j]].canonical);
                    }
                }
            }
            continue;
        }

        // dataflow rule: components are branches
        std::vector<std::optional<std::size_t>> comp_first(
            static_cast<std::size_t>(g.component_count));
        for (std::size_t i = 0; i < g.members.size(); ++i) {
            auto& slot = comp_first[static_cast<std::size_t>(g.component[i])];
            if (slot) continue;
            slot = a.first_occ_in_subtree(g.members[i]);
        }
        std::vector<std::size_t> branches;
        for (const auto& f : comp_first) {
            if (f) branches.push_back(*f);
        }
        if (branches.size() >= 2) {
            for (std::size_t i = 0; i < branches.size(); ++i) {
                for (std::size_t j = i + 1; j < branches.size(); ++j) {
                    emit_parallel(out, a.occurrences[branches[i]].canonical,
                                  a.occurrences[branches[j]].canonical);
                }
            }
        }

        // antichains: same level inside one component
        std::map<std::pair<int, int>, std::vector<std::size_t>> level_groups;
        for (std::size_t i = 0; i < g.members.size(); ++i) {
            auto first = a.first_occ_in_subtree(g.members[i]);
            if (!first) continue;
            level_groups[{g.component[i], g.level[i]}].push_back(*first);
        }
        for (const auto& [key, occs] : level_groups) {
            if (occs.size() < 2) continue;
            for (std::size_t i = 0; i < occs.size(); ++i) {
                for (std::size_t j = i + 1; j < occs.size(); ++j) {
                    emit_parallel(out, a.occurrences[occs[i]].canonical,
                                  a.occurrences[occs[j]].canonical);
                }
            }
        }
    }

    // R4: nesting.
    for (const AstNode& node : tree.nodes) {
        if (auto parts = control_parts(tree, node)) {
            std::vector<std::size_t> header_occs;
            for (std::int32_t h : parts->header) {
                std::int32_t end = a.subtree_end[static_cast<std::size_t>(h)];
                for (std::size_t k = 0; k < a.occurrences.size(); ++k) {
                    const auto& occ = a.occurrences[k];
                    if (!occ.dynamic && occ.node_id >= h && occ.node_id < end) {
                        header_occs.push_back(k);
                    }
                }
            }
            if (header_occs.empty()) continue;
            for (std::int32_t body : parts->bodies) {
                auto first = a.first_occ_in_subtree(body);
                if (!first) continue;
                for (std::size_t h : header_occs) {
                    out.push_back({a.occurrences[h].canonical, a.occurrences[*first].canonical,
                                   RelationKind::nested});
                }
            }
            continue;
        }
        if (node.kind == NodeKind::CallExpression) {
            auto it = a.occ_by_node.find(node.id);
            if (it == a.occ_by_node.end()) continue;
            const OperatorOccurrence& occ = a.occurrences[it->second];
            if (occ.dynamic) continue;
            for (std::size_t i = 1; i < node.children.size(); ++i) {
                const AstNode& arg = tree.node(node.children[i]);
                if (arg.kind != NodeKind::FunctionExpression || arg.children.empty()) continue;
                auto first = a.first_occ_in_subtree(arg.children.back());
                if (!first) continue;
                out.push_back(
                    {occ.canonical, a.occurrences[*first].canonical, RelationKind::nested});
            }
        }
    }
    return out;
}

std::vector<OperatorRelation> aggregate(
    const std::vector<std::vector<RelationInstance>>& per_script) {
    std::map<std::tuple<int, std::string, std::string>, std::uint64_t> counts;
    for (const auto& script : per_script) {
        for (const auto& inst : script) {
            counts[{static_cast<int>(inst.kind), inst.op_a, inst.op_b}] += 1;
        }
    }
    std::vector<OperatorRelation> out;
    out.reserve(counts.size());
    for (const auto& [key, freq] : counts) {
        OperatorRelation r;
        r.kind = static_cast<RelationKind>(std::get<0>(key));
        r.op_a = std::get<1>(key);
        r.op_b = std::get<2>(key);
        r.frequency = freq;
        out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), [](const OperatorRelation& x, const OperatorRelation& y) {
        if (x.kind != y.kind) return static_cast<int>(x.kind) < static_cast<int>(y.kind);
        if (x.frequency != y.frequency) return x.frequency > y.frequency;
        return std::tie(x.op_a, x.op_b) < std::tie(y.op_a, y.op_b);
    });
    return out;
}

void write_relations_csv(const std::filesystem::path& path,
                         const std::vector<OperatorRelation>& relations) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    csv_write_row(out, {"index", "operator", "related_operator", "relationship", "frequency"});
    std::size_t index = 1;
    for (const auto& r : relations) {
        csv_write_row(out, {std::to_string(index++), r.op_a, r.op_b, to_string(r.kind),
                            std::to_string(r.frequency)});
    }
}

std::vector<OperatorRelation> read_relations_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto rows = csv_parse(text);
    if (rows.empty()) throw std::runtime_error("empty relations csv: " + path.string());
    std::vector<OperatorRelation> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != 5) {
            throw std::runtime_error("relations csv row " + std::to_string(i + 1) +
                                     ": expected 5 cells");
        }
        OperatorRelation r;
        r.op_a = row[1];
        r.op_b = row[2];
        r.kind = relation_from_string(row[3]);
        r.frequency = std::stoull(row[4]);
        out.push_back(std::move(r));
    }
    return out;
}

void write_per_script_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::vector<RelationInstance>>>& per_script) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    csv_write_row(out, {"script_name", "operator", "related_operator", "relationship"});
    for (const auto& [script, instances] : per_script) {
        std::set<RelationInstance> dedup(instances.begin(), instances.end());
        for (const auto& inst : dedup) {
            csv_write_row(out, {script, inst.op_a, inst.op_b, to_string(inst.kind)});
        }
    }
}

std::map<std::string, std::vector<RelationInstance>> read_per_script_csv(
    const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto rows = csv_parse(text);
    if (rows.empty()) throw std::runtime_error("empty csv: " + path.string());
    std::map<std::string, std::vector<RelationInstance>> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != 4) {
            throw std::runtime_error("truth csv row " + std::to_string(i + 1) +
                                     ": expected 4 cells");
        }
        out[row[0]].push_back({row[1], row[2], relation_from_string(row[3])});
    }
    return out;
}

}  // namespace opskb::relations
