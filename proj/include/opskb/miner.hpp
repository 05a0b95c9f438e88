#pragma once

// Frequent-itemset mining over operator transactions, plus association rule
// derivation.
//
// Two equivalent mining paths are provided. fp_growth is the plain
// pattern-growth recursion; mine_with_optimizations adds four performance
// measures that must never change the result set:
//   (a) low-frequency items dropped before tree construction,
//   (b) transaction counting in batches with merged count maps,
//   (c) sparse item postings (an FP-tree with per-item header chains),
//   (d) a descending support ladder from start_support down to min_support,
//       unioning the per-round results.
//
// Support boundaries are decided on integer counts: an itemset qualifies
// iff count >= ceil(min_support * n - 1e-9), so thresholds that land
// exactly on count/n include that count.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace opskb::miner {

/// Items of one transaction. Normalized to sorted unique form by the miner.
using Transaction = std::vector<std::string>;

struct TransactionRecord {
    std::string script_id;
    Transaction items;                                         // distinct operator names
    std::vector<std::array<std::string, 3>> relation_items{};  // (op_a, op_b, relationship)
};

struct Itemset {
    std::vector<std::string> items;  // sorted lexicographically
    std::uint64_t count = 0;

    double support(std::size_t txn_count) const {
        return txn_count == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(txn_count);
    }
};

struct MinerConfig {
    double min_support = 0.05;
    double start_support = 0.20;    // first round of the descent ladder
    double descent_factor = 0.5;    // support multiplier per round, in (0,1)
    std::uint64_t low_freq_floor = 0;  // absolute count below which items drop
    std::size_t batch_size = 1024;  // transactions per counting batch

    void validate() const;  // throws std::invalid_argument
};

/// Plain miner: all itemsets with support >= min_support (and count >=
/// low_freq_floor), sorted by (size asc, count desc, items asc).
std::vector<Itemset> fp_growth(const std::vector<Transaction>& txns, const MinerConfig& cfg);

/// Optimized miner; identical output to fp_growth on every input.
std::vector<Itemset> mine_with_optimizations(const std::vector<Transaction>& txns,
                                             const MinerConfig& cfg);

struct Rule {
    std::vector<std::string> antecedent;  // sorted lexicographically
    std::vector<std::string> consequent;  // sorted lexicographically
    std::uint64_t antecedent_count = 0;
    std::uint64_t consequent_count = 0;
    std::uint64_t count = 0;

    double antecedent_support = 0.0;
    double consequent_support = 0.0;
    double support = 0.0;
    double confidence = 0.0;
    double lift = 0.0;
};

/// Association rules from every antecedent/consequent split of each itemset
/// of size >= 2, kept when confidence >= min_confidence (with 1e-12 slack).
/// `itemsets` must be downward closed (every subset present), as produced by
/// the miners; a missing subset raises std::logic_error. Itemsets larger
/// than 24 items are rejected.
std::vector<Rule> derive_rules(const std::vector<Itemset>& itemsets, std::size_t txn_count,
                               double min_confidence);

/// One JSON object per line:
/// {"script_id": ..., "items": [...], "relations": [[a,b,kind]...]}.
void write_txns_jsonl(const std::filesystem::path& path,
                      const std::vector<TransactionRecord>& records);
std::vector<TransactionRecord> read_txns_jsonl(const std::filesystem::path& path);

/// Header: index,frequent_itemset,support. Items joined with ';'.
void write_itemsets_csv(const std::filesystem::path& path, const std::vector<Itemset>& itemsets,
                        std::size_t txn_count);

/// Header: index,antecedents,consequents,antecedent_support,
/// consequent_support,support,confidence,lift.
void write_rules_csv(const std::filesystem::path& path, const std::vector<Rule>& rules);

}  // namespace opskb::miner
