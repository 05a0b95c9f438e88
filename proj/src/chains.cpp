#include "opskb/chains.hpp"

#include <algorithm>
#include <fstream>
#include <cctype>
#include <sstream>
#include <stdexcept>

#include "opskb/util/csv.hpp"

namespace opskb::chains {

using ast::AstNode;
using ast::NodeKind;
using ast::SyntaxTree;
using relations::BlockGroups;
using relations::ScriptAnalysis;

Chain leaf(std::string name) {
    Chain c;
    c.kind = Chain::Kind::leaf;
    c.name = std::move(name);
    return c;
}

Chain make_seq(std::vector<Chain> parts) {
    Chain out;
    out.kind = Chain::Kind::seq;
    for (Chain& p : parts) {
        if (p.empty()) continue;
        if (p.kind == Chain::Kind::seq) {
            for (Chain& c : p.children) out.children.push_back(std::move(c));
        } else {
            out.children.push_back(std::move(p));
        }
    }
    if (out.children.size() == 1) return std::move(out.children.front());
    return out;
}

Chain make_par(std::vector<Chain> branches) {
    std::vector<Chain> flat;
    for (Chain& b : branches) {
        if (b.empty()) continue;
        if (b.kind == Chain::Kind::par) {
            for (Chain& c : b.children) flat.push_back(std::move(c));
        } else {
            flat.push_back(std::move(b));
        }
    }
    if (flat.empty()) return {};
    if (flat.size() == 1) return std::move(flat.front());
    std::stable_sort(flat.begin(), flat.end(), [](const Chain& x, const Chain& y) {
        return serialize(x) < serialize(y);
    });
    Chain out;
    out.kind = Chain::Kind::par;
    out.children = std::move(flat);
    return out;
}

Chain make_nest(std::string head, Chain body) {
    if (body.empty()) return leaf(std::move(head));
    Chain out;
    out.kind = Chain::Kind::nest;
    out.name = std::move(head);
    out.children.push_back(std::move(body));
    return out;
}

namespace {

void serialize_into(const Chain& chain, std::string& out, bool arrow_only) {
    switch (chain.kind) {
        case Chain::Kind::leaf:
            out += chain.name;
            return;
        case Chain::Kind::seq:
            for (std::size_t i = 0; i < chain.children.size(); ++i) {
                if (i > 0) out += " -> ";
                serialize_into(chain.children[i], out, arrow_only);
            }
            return;
        case Chain::Kind::par:
            out += "{ ";
            for (std::size_t i = 0; i < chain.children.size(); ++i) {
                if (i > 0) out += ' ';
                serialize_into(chain.children[i], out, arrow_only);
            }
            out += " }";
            return;
        case Chain::Kind::nest:
            out += chain.name;
            out += arrow_only ? " -> { " : " ~> { ";
            serialize_into(chain.children.at(0), out, arrow_only);
            out += " }";
            return;
    }
}

class ChainParser {
  public:
    explicit ChainParser(const std::string& text) : text_size_(text.size()) {
        std::size_t i = 0;
        while (i < text.size()) {
            if (std::isspace(static_cast<unsigned char>(text[i]))) {
                ++i;
                continue;
            }
            std::size_t begin = i;
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            tokens_.push_back(text.substr(begin, i - begin));
            offsets_.push_back(begin);
        }
    }

    Chain run() {
        if (tokens_.empty()) return {};
        Chain c = parse_seq();
        if (pos_ != tokens_.size()) fail("trailing tokens after chain");
        return c;
    }

  private:
    [[noreturn]] void fail(const std::string& what) const {
        std::size_t offset = pos_ < offsets_.size() ? offsets_[pos_] : text_size_;
        throw std::runtime_error("chain parse error at byte " + std::to_string(offset) + ": " +
                                 what);
    }

    const std::string& peek() const {
        static const std::string kEnd = "<end>";
        return pos_ < tokens_.size() ? tokens_[pos_] : kEnd;
    }

    bool at_end() const { return pos_ >= tokens_.size(); }

    Chain parse_seq() {
        std::vector<Chain> parts;
        while (true) {
            parts.push_back(parse_node());
            if (!at_end() && peek() == "->") {
                ++pos_;
                continue;
            }
            break;
        }
        return make_seq(std::move(parts));
    }

    Chain parse_node() {
        if (at_end()) fail("expected a chain node");
        if (peek() == "{") {
            ++pos_;
            std::vector<Chain> branches;
            while (!at_end() && peek() != "}") branches.push_back(parse_seq());
            if (at_end()) fail("missing '}'");
            ++pos_;
            if (branches.empty()) fail("empty branch group");
            return make_par(std::move(branches));
        }
        if (peek() == "}" || peek() == "->" || peek() == "~>") {
            fail("unexpected '" + peek() + "'");
        }
        std::string name = tokens_[pos_++];
        if (!at_end() && peek() == "~>") {
            ++pos_;
            if (at_end() || peek() != "{") fail("expected '{' after '~>'");
            ++pos_;
            if (!at_end() && peek() == "}") fail("empty nest body");
            Chain body = parse_seq();
            if (at_end() || peek() != "}") fail("missing '}' after nest body");
            ++pos_;
            return make_nest(std::move(name), std::move(body));
        }
        return leaf(std::move(name));
    }

    std::vector<std::string> tokens_;
    std::vector<std::size_t> offsets_;
    std::size_t text_size_;
    std::size_t pos_ = 0;
};

class ChainBuilder {
  public:
    ChainBuilder(const SyntaxTree& tree, const ScriptAnalysis& analysis)
        : tree_(tree), a_(analysis) {
        for (const BlockGroups& g : a_.blocks) blocks_[g.block] = &g;
    }

    Chain run() { return block_chain(tree_.root); }

  private:
    Chain block_chain(std::int32_t block_id) {
        auto it = blocks_.find(block_id);
        if (it == blocks_.end()) return {};
        const BlockGroups& g = *it->second;

        std::vector<Chain> member_chains(g.members.size());
        for (std::size_t i = 0; i < g.members.size(); ++i) {
            member_chains[i] = stmt_chain(g.members[i]);
        }

        // One branch per dataflow component; inside a component, statements
        // at the same dependency level run side by side and levels follow
        // one another.
        std::vector<Chain> component_chains;
        for (int comp = 0; comp < g.component_count; ++comp) {
            std::map<int, std::vector<Chain>> by_level;
            for (std::size_t i = 0; i < g.members.size(); ++i) {
                if (g.component[i] != comp || member_chains[i].empty()) continue;
                by_level[g.level[i]].push_back(std::move(member_chains[i]));
            }
            std::vector<Chain> level_nodes;
            for (auto& [level, group] : by_level) {
                level_nodes.push_back(make_par(std::move(group)));
            }
            component_chains.push_back(make_seq(std::move(level_nodes)));
        }
        return make_par(std::move(component_chains));
    }

    Chain stmt_chain(std::int32_t node_id) {
        std::vector<Chain> frags;
        walk(node_id, frags);
        return make_seq(std::move(frags));
    }

    Chain body_chain(std::int32_t node_id) {
        return tree_.node(node_id).kind == NodeKind::BlockStatement ? block_chain(node_id)
                                                                    : stmt_chain(node_id);
    }

    void walk(std::int32_t node_id, std::vector<Chain>& frags) {
        const AstNode& node = tree_.node(node_id);

        if (auto parts = relations::control_parts(tree_, node)) {
            for (std::int32_t h : parts->header) walk(h, frags);
            std::vector<Chain> bodies;
            for (std::int32_t b : parts->bodies) bodies.push_back(body_chain(b));
            Chain combined = make_par(std::move(bodies));
            if (combined.empty()) return;
            if (!frags.empty() && frags.back().kind == Chain::Kind::leaf) {
                combined = make_nest(std::move(frags.back().name), std::move(combined));
                frags.back() = std::move(combined);
            } else {
                frags.push_back(std::move(combined));
            }
            return;
        }

        switch (node.kind) {
            case NodeKind::CallExpression: {
                walk(node.children.at(0), frags);
                std::vector<Chain> callback_bodies;
                for (std::size_t i = 1; i < node.children.size(); ++i) {
                    const AstNode& arg = tree_.node(node.children[i]);
                    if (arg.kind == NodeKind::FunctionExpression && !arg.children.empty()) {
                        for (std::size_t p = 0; p + 1 < arg.children.size(); ++p) {
                            walk(arg.children[p], frags);
                        }
                        Chain body = body_chain(arg.children.back());
                        if (!body.empty()) callback_bodies.push_back(std::move(body));
                    } else {
                        walk(node.children[i], frags);
                    }
                }
                auto occ_it = a_.occ_by_node.find(node_id);
                bool dynamic =
                    occ_it == a_.occ_by_node.end() || a_.occurrences[occ_it->second].dynamic;
                if (dynamic) {
                    for (Chain& b : callback_bodies) frags.push_back(std::move(b));
                } else {
                    const std::string& name = a_.occurrences[occ_it->second].canonical;
                    frags.push_back(make_nest(name, make_par(std::move(callback_bodies))));
                }
                return;
            }
            case NodeKind::FunctionExpression: {
                if (node.children.empty()) return;
                for (std::size_t p = 0; p + 1 < node.children.size(); ++p) {
                    walk(node.children[p], frags);
                }
                Chain body = body_chain(node.children.back());
                if (!body.empty()) frags.push_back(std::move(body));
                return;
            }
            case NodeKind::BlockStatement: {
                Chain c = block_chain(node_id);
                if (!c.empty()) frags.push_back(std::move(c));
                return;
            }
            default:
                for (std::int32_t c : node.children) walk(c, frags);
                return;
        }
    }

    const SyntaxTree& tree_;
    const ScriptAnalysis& a_;
    std::map<std::int32_t, const BlockGroups*> blocks_;
};

}  // namespace

std::string serialize(const Chain& chain, bool arrow_only) {
    std::string out;
    serialize_into(chain, out, arrow_only);
    return out;
}

Chain parse_chain(const std::string& text) { return ChainParser(text).run(); }

Chain build_chain(const SyntaxTree& tree, const ScriptAnalysis& analysis) {
    Chain c = ChainBuilder(tree, analysis).run();
    if (c.empty()) throw std::runtime_error("empty chain");
    return c;
}

std::vector<std::string> operator_tokens(const std::string& serialized) {
    std::istringstream in(serialized);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) {
        if (tok == "->" || tok == "~>" || tok == "{" || tok == "}") continue;
        out.push_back(tok);
    }
    return out;
}

void write_chains_csv(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    csv_write_row(out, {"script_name", "chain"});
    for (const auto& [name, chain] : rows) csv_write_row(out, {name, chain});
}

std::map<std::string, std::string> read_chains_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto rows = csv_parse(text);
    if (rows.empty()) throw std::runtime_error("empty chains csv: " + path.string());
    std::map<std::string, std::string> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 2) {
            throw std::runtime_error("chains csv row " + std::to_string(i + 1) +
                                     ": expected 2 cells");
        }
        out[rows[i][0]] = rows[i][1];
    }
    return out;
}

}  // namespace opskb::chains
