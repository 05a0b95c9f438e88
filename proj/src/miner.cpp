#include "opskb/miner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "opskb/util/csv.hpp"

namespace opskb::miner {

void MinerConfig::validate() const {
    if (!(min_support > 0.0) || !(min_support <= start_support) || !(start_support <= 1.0)) {
        throw std::invalid_argument("require 0 < min_support <= start_support <= 1");
    }
    if (!(descent_factor > 0.0) || !(descent_factor < 1.0)) {
        throw std::invalid_argument("descent_factor must be in (0, 1)");
    }
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
}

namespace {

using IdTxn = std::pair<std::vector<int>, std::uint64_t>;  // item ids (asc), weight

struct MineFlags {
    bool prefilter = false;
    bool batch = false;
    std::size_t batch_size = 1;
    bool postings = false;
};

std::map<int, std::uint64_t> count_ids(const std::vector<IdTxn>& txns, bool batch) {
    std::map<int, std::uint64_t> counts;
    if (batch) {
        for (const auto& [items, weight] : txns) {
            for (int id : items) counts[id] += weight;
        }
        return counts;
    }
    // one scan per distinct item
    std::vector<int> distinct;
    for (const auto& [items, weight] : txns) {
        distinct.insert(distinct.end(), items.begin(), items.end());
    }
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (int id : distinct) {
        std::uint64_t c = 0;
        for (const auto& [items, weight] : txns) {
            if (std::binary_search(items.begin(), items.end(), id)) c += weight;
        }
        counts[id] = c;
    }
    return counts;
}

// Sparse item-major store: one node chain per item through shared prefixes.
struct FpTree {
    struct Node {
        int item;
        std::uint64_t count;
        int parent;
    };
    std::vector<Node> nodes{{-1, 0, -1}};
    std::map<int, std::vector<int>> postings;       // item id -> node indices
    std::map<std::pair<int, int>, int> child_slot;  // (node, item) -> node

    void insert(const std::vector<int>& items, std::uint64_t weight) {
        int cur = 0;
        for (int id : items) {
            auto [it, inserted] = child_slot.try_emplace({cur, id}, -1);
            if (inserted) {
                it->second = static_cast<int>(nodes.size());
                nodes.push_back({id, 0, cur});
                postings[id].push_back(it->second);
            }
            cur = it->second;
            nodes[static_cast<std::size_t>(cur)].count += weight;
        }
    }
};

class Miner {
  public:
    Miner(std::uint64_t min_count, const MineFlags& flags)
        : min_count_(min_count), flags_(flags) {}

    // ids sorted ascending, plus count
    std::vector<std::pair<std::vector<int>, std::uint64_t>> out;

    void mine(const std::vector<IdTxn>& txns, std::vector<int>& suffix) {
        auto counts = count_ids(txns, flags_.batch);
        FpTree tree;
        if (flags_.postings) {
            for (const auto& [items, weight] : txns) tree.insert(items, weight);
        }
        // least frequent item first: ids are assigned by descending global
        // frequency, so walk ids in descending order
        for (auto it = counts.rbegin(); it != counts.rend(); ++it) {
            const auto [id, count] = *it;
            if (count < min_count_) continue;
            suffix.push_back(id);
            std::vector<int> items(suffix.rbegin(), suffix.rend());
            out.emplace_back(std::move(items), count);

            std::vector<IdTxn> base =
                flags_.postings ? base_from_tree(tree, id) : base_by_projection(txns, id);
            if (!base.empty()) mine(base, suffix);
            suffix.pop_back();
        }
    }

  private:
    static std::vector<IdTxn> base_from_tree(const FpTree& tree, int id) {
        std::vector<IdTxn> base;
        auto it = tree.postings.find(id);
        if (it == tree.postings.end()) return base;
        for (int node : it->second) {
            std::uint64_t weight = tree.nodes[static_cast<std::size_t>(node)].count;
            std::vector<int> path;
            for (int p = tree.nodes[static_cast<std::size_t>(node)].parent; p > 0;
                 p = tree.nodes[static_cast<std::size_t>(p)].parent) {
                path.push_back(tree.nodes[static_cast<std::size_t>(p)].item);
            }
            if (path.empty()) continue;
            std::reverse(path.begin(), path.end());
            base.emplace_back(std::move(path), weight);
        }
        return base;
    }

    static std::vector<IdTxn> base_by_projection(const std::vector<IdTxn>& txns, int id) {
        std::vector<IdTxn> base;
        for (const auto& [items, weight] : txns) {
            auto pos = std::lower_bound(items.begin(), items.end(), id);
            if (pos == items.end() || *pos != id || pos == items.begin()) continue;
            base.emplace_back(std::vector<int>(items.begin(), pos), weight);
        }
        return base;
    }

    std::uint64_t min_count_;
    MineFlags flags_;
};

std::uint64_t count_threshold(double min_support, std::size_t n, std::uint64_t floor_count) {
    double raw = min_support * static_cast<double>(n) - 1e-9;
    double c = std::ceil(raw);
    std::uint64_t threshold = c < 1.0 ? 1 : static_cast<std::uint64_t>(c);
    return std::max(threshold, std::max<std::uint64_t>(floor_count, 1));
}

std::vector<Transaction> normalize(const std::vector<Transaction>& txns) {
    std::vector<Transaction> out = txns;
    for (Transaction& t : out) {
        std::sort(t.begin(), t.end());
        t.erase(std::unique(t.begin(), t.end()), t.end());
    }
    return out;
}

std::vector<std::pair<std::vector<int>, std::uint64_t>> mine_once(
    const std::vector<Transaction>& normalized, std::uint64_t min_count, const MineFlags& flags,
    std::vector<std::string>& names_out) {
    // global item frequencies
    std::map<std::string, std::uint64_t> freq;
    if (flags.batch) {
        for (std::size_t start = 0; start < normalized.size(); start += flags.batch_size) {
            std::map<std::string, std::uint64_t> local;
            std::size_t end = std::min(normalized.size(), start + flags.batch_size);
            for (std::size_t i = start; i < end; ++i) {
                for (const std::string& item : normalized[i]) local[item] += 1;
            }
            for (const auto& [item, c] : local) freq[item] += c;
        }
    } else {
        std::vector<std::string> distinct;
        for (const Transaction& t : normalized) {
            distinct.insert(distinct.end(), t.begin(), t.end());
        }
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        for (const std::string& item : distinct) {
            std::uint64_t c = 0;
            for (const Transaction& t : normalized) {
                if (std::binary_search(t.begin(), t.end(), item)) c += 1;
            }
            freq[item] = c;
        }
    }

    // id 0 = most frequent; ties broken by name
    std::vector<std::pair<std::string, std::uint64_t>> order(freq.begin(), freq.end());
    std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });
    std::unordered_map<std::string, int> id_of;
    names_out.clear();
    for (const auto& [name, count] : order) {
        if (flags.prefilter && count < min_count) break;  // sorted by count desc
        id_of.emplace(name, static_cast<int>(names_out.size()));
        names_out.push_back(name);
    }

    std::vector<IdTxn> id_txns;
    for (const Transaction& t : normalized) {
        std::vector<int> ids;
        for (const std::string& item : t) {
            auto it = id_of.find(item);
            if (it != id_of.end()) ids.push_back(it->second);
        }
        if (ids.empty()) continue;
        std::sort(ids.begin(), ids.end());
        id_txns.emplace_back(std::move(ids), 1);
    }

    Miner miner(min_count, flags);
    std::vector<int> suffix;
    miner.mine(id_txns, suffix);
    return std::move(miner.out);
}

std::vector<Itemset> to_itemsets(
    const std::vector<std::pair<std::vector<int>, std::uint64_t>>& raw,
    const std::vector<std::string>& names) {
    std::vector<Itemset> result;
    result.reserve(raw.size());
    for (const auto& [ids, count] : raw) {
        Itemset s;
        s.count = count;
        s.items.reserve(ids.size());
        for (int id : ids) s.items.push_back(names[static_cast<std::size_t>(id)]);
        std::sort(s.items.begin(), s.items.end());
        result.push_back(std::move(s));
    }
    return result;
}

void sort_itemsets(std::vector<Itemset>& itemsets) {
    std::sort(itemsets.begin(), itemsets.end(), [](const Itemset& x, const Itemset& y) {
        if (x.items.size() != y.items.size()) return x.items.size() < y.items.size();
        if (x.count != y.count) return x.count > y.count;
        return x.items < y.items;
    });
}

std::string join_items(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ';';
        out += items[i];
    }
    return out;
}

}  // namespace

std::vector<Itemset> fp_growth(const std::vector<Transaction>& txns, const MinerConfig& cfg) {
    cfg.validate();
    std::vector<Transaction> normalized = normalize(txns);
    std::uint64_t min_count = count_threshold(cfg.min_support, txns.size(), cfg.low_freq_floor);
    MineFlags flags;  // everything plain
    std::vector<std::string> names;
    auto raw = mine_once(normalized, min_count, flags, names);
    std::vector<Itemset> result = to_itemsets(raw, names);
    sort_itemsets(result);
    return result;
}

std::vector<Itemset> mine_with_optimizations(const std::vector<Transaction>& txns,
                                             const MinerConfig& cfg) {
    cfg.validate();
    std::vector<Transaction> normalized = normalize(txns);
    MineFlags flags;
    flags.prefilter = true;
    flags.batch = true;
    flags.batch_size = cfg.batch_size;
    flags.postings = true;

    // support ladder: start_support, shrinking by descent_factor each round,
    // last round exactly min_support
    std::vector<double> ladder;
    for (double s = cfg.start_support; s > cfg.min_support; s *= cfg.descent_factor) {
        ladder.push_back(s);
    }
    ladder.push_back(cfg.min_support);

    std::map<std::vector<std::string>, std::uint64_t> merged;
    std::vector<std::string> names;
    for (double s : ladder) {
        std::uint64_t min_count = count_threshold(s, txns.size(), cfg.low_freq_floor);
        if (min_count > txns.size() && s != cfg.min_support) continue;
        for (Itemset& it : to_itemsets(mine_once(normalized, min_count, flags, names), names)) {
            merged[std::move(it.items)] = it.count;
        }
    }

    std::vector<Itemset> result;
    result.reserve(merged.size());
    for (const auto& [items, count] : merged) {
        Itemset s;
        s.items = items;
        s.count = count;
        result.push_back(std::move(s));
    }
    sort_itemsets(result);
    return result;
}

std::vector<Rule> derive_rules(const std::vector<Itemset>& itemsets, std::size_t txn_count,
                               double min_confidence) {
    std::map<std::vector<std::string>, std::uint64_t> count_of;
    for (const Itemset& s : itemsets) count_of[s.items] = s.count;

    auto lookup = [&](const std::vector<std::string>& items) {
        auto it = count_of.find(items);
        if (it == count_of.end()) {
            throw std::logic_error("itemset collection is not downward closed; missing {" +
                                   join_items(items) + "}");
        }
        return it->second;
    };

    const double n = static_cast<double>(txn_count);
    std::vector<Rule> rules;
    for (const Itemset& s : itemsets) {
        const std::size_t m = s.items.size();
        if (m < 2) continue;
        if (m > 24) throw std::invalid_argument("itemset too large for rule derivation");
        const std::uint32_t full = (1u << m) - 1;
        for (std::uint32_t mask = 1; mask < full; ++mask) {
            Rule r;
            for (std::size_t i = 0; i < m; ++i) {
                ((mask >> i) & 1u ? r.antecedent : r.consequent).push_back(s.items[i]);
            }
            r.antecedent_count = lookup(r.antecedent);
            r.consequent_count = lookup(r.consequent);
            r.count = s.count;
            r.confidence = static_cast<double>(r.count) / static_cast<double>(r.antecedent_count);
            if (r.confidence + 1e-12 < min_confidence) continue;
            r.antecedent_support = static_cast<double>(r.antecedent_count) / n;
            r.consequent_support = static_cast<double>(r.consequent_count) / n;
            r.support = static_cast<double>(r.count) / n;
            r.lift = r.confidence / r.consequent_support;
            rules.push_back(std::move(r));
        }
    }
    std::sort(rules.begin(), rules.end(), [](const Rule& x, const Rule& y) {
        if (x.confidence != y.confidence) return x.confidence > y.confidence;
        if (x.support != y.support) return x.support > y.support;
        if (x.antecedent != y.antecedent) return x.antecedent < y.antecedent;
        return x.consequent < y.consequent;
    });
    return rules;
}

void write_txns_jsonl(const std::filesystem::path& path,
                      const std::vector<TransactionRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const TransactionRecord& rec : records) {
        nlohmann::ordered_json obj;
        obj["script_id"] = rec.script_id;
        obj["items"] = rec.items;
        nlohmann::ordered_json rels = nlohmann::ordered_json::array();
        for (const auto& r : rec.relation_items) {
            rels.push_back(nlohmann::ordered_json::array({r[0], r[1], r[2]}));
        }
        obj["relations"] = std::move(rels);
        out << obj.dump() << '\n';
    }
}

std::vector<TransactionRecord> read_txns_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<TransactionRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            nlohmann::json obj = nlohmann::json::parse(line);
            TransactionRecord rec;
            rec.script_id = obj.at("script_id").get<std::string>();
            rec.items = obj.at("items").get<std::vector<std::string>>();
            if (obj.contains("relations")) {
                for (const auto& r : obj.at("relations")) {
                    rec.relation_items.push_back({r.at(0).get<std::string>(),
                                                  r.at(1).get<std::string>(),
                                                  r.at(2).get<std::string>()});
                }
            }
            out.push_back(std::move(rec));
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " +
                                     e.what());
        }
    }
    return out;
}

void write_itemsets_csv(const std::filesystem::path& path, const std::vector<Itemset>& itemsets,
                        std::size_t txn_count) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    csv_write_row(out, {"index", "frequent_itemset", "support"});
    std::size_t index = 1;
    for (const Itemset& s : itemsets) {
        csv_write_row(out, {std::to_string(index++), join_items(s.items),
                            double_repr(s.support(txn_count))});
    }
}

void write_rules_csv(const std::filesystem::path& path, const std::vector<Rule>& rules) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    csv_write_row(out, {"index", "antecedents", "consequents", "antecedent_support",
                        "consequent_support", "support", "confidence", "lift"});
    std::size_t index = 1;
    for (const Rule& r : rules) {
        csv_write_row(out, {std::to_string(index++), join_items(r.antecedent),
                            join_items(r.consequent), double_repr(r.antecedent_support),
                            double_repr(r.consequent_support), double_repr(r.support),
                            double_repr(r.confidence), double_repr(r.lift)});
    }
}

}  // namespace opskb::miner
