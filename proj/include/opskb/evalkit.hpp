#pragma once

// Scoring of extraction output against expert ground truth: set-overlap
// counts with the derived accuracy metrics, stability via the coefficient
// of variation, and structural/semantic chain similarity.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "opskb/relations.hpp"
#include "opskb/retrieval.hpp"

namespace opskb::evalkit {

struct Counts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
};

/// Metrics undefined by a zero denominator stay nullopt, they are never 0.
struct Metrics {
    std::optional<double> accuracy;   // TP / (TP+FP+FN)
    std::optional<double> recall;     // TP / (TP+FN)
    std::optional<double> precision;  // TP / (TP+FP)
    std::optional<double> f1;         // 2PR / (P+R)
};

Metrics metrics_from_counts(const Counts& c);

struct RelationScore {
    Counts counts;
    Metrics metrics;
};

/// Set overlap (inputs deduplicated): TP = |pred ∩ truth|,
/// FP = |pred \ truth|, FN = |truth \ pred|.
RelationScore score_relations(const std::vector<relations::RelationInstance>& predicted,
                              const std::vector<relations::RelationInstance>& truth);

/// Population standard deviation over mean. Empty input or zero mean -> null.
std::optional<double> coefficient_of_variation(const std::vector<double>& values);

enum class LcsNorm { max_len, mean_len };

/// LCS length over operator-name tokens, normalized by the max (default)
/// or mean of the two lengths. Both sequences empty -> null.
std::optional<double> lcs_similarity(const std::vector<std::string>& pred,
                                     const std::vector<std::string>& truth,
                                     LcsNorm norm = LcsNorm::max_len);

enum class NgramCoef { dice, jaccard };

/// Character n-gram multiset overlap: Dice 2|∩|/(|A|+|B|) by default,
/// Jaccard |∩|/(|A|+|B|−|∩|) as the alternative. Null when both texts
/// are shorter than n.
std::optional<double> ngram_similarity(const std::string& pred, const std::string& truth,
                                       std::size_t n = 3, NgramCoef coef = NgramCoef::dice);

struct EmbeddingScore {
    double score = 0.0;
    std::string embedder;  // identity tag; never compare across embedders
};

EmbeddingScore embedding_similarity(const std::string& pred, const std::string& truth,
                                    retrieval::Embedder& embedder);

/// Per-script rows plus column means and CV. Scripts missing from one file
/// score against the empty set. Metric values print with 2 decimals.
nlohmann::ordered_json relations_report(
    const std::map<std::string, std::vector<relations::RelationInstance>>& predicted,
    const std::map<std::string, std::vector<relations::RelationInstance>>& truth);

struct ChainEvalOptions {
    std::size_t ngram_n = 3;
    NgramCoef ngram_coef = NgramCoef::dice;
    LcsNorm lcs_norm = LcsNorm::max_len;
    retrieval::Embedder* embedder = nullptr;  // set to add the embedding column
};

/// Chain similarity report over serialized chain strings keyed by script.
nlohmann::ordered_json chains_report(const std::map<std::string, std::string>& predicted,
                                     const std::map<std::string, std::string>& truth,
                                     const ChainEvalOptions& options = {});

}  // namespace opskb::evalkit
