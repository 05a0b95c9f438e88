#include "opskb/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "opskb/chains.hpp"

namespace opskb::evalkit {

namespace {

// half-up to 2 decimals, the convention of the published tables
double round2(double x) { return std::floor(x * 100.0 + 0.5) / 100.0; }

nlohmann::ordered_json rounded(const std::optional<double>& v) {
    if (!v) return nullptr;
    return round2(*v);
}

double mean_of(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

// column summary over the defined per-script values, full precision until print
struct Column {
    std::vector<double> values;

    void push(const std::optional<double>& v) {
        if (v) values.push_back(*v);
    }
    nlohmann::ordered_json mean() const {
        if (values.empty()) return nullptr;
        return round2(mean_of(values));
    }
    nlohmann::ordered_json cv() const { return rounded(coefficient_of_variation(values)); }
};

}  // namespace

Metrics metrics_from_counts(const Counts& c) {
    Metrics m;
    double tp = static_cast<double>(c.tp);
    if (c.tp + c.fp + c.fn > 0) m.accuracy = tp / static_cast<double>(c.tp + c.fp + c.fn);
    if (c.tp + c.fn > 0) m.recall = tp / static_cast<double>(c.tp + c.fn);
    if (c.tp + c.fp > 0) m.precision = tp / static_cast<double>(c.tp + c.fp);
    if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    }
    return m;
}

RelationScore score_relations(const std::vector<relations::RelationInstance>& predicted,
                              const std::vector<relations::RelationInstance>& truth) {
    std::set<relations::RelationInstance> pred_set(predicted.begin(), predicted.end());
    std::set<relations::RelationInstance> truth_set(truth.begin(), truth.end());
    RelationScore score;
    for (const auto& r : pred_set) {
        if (truth_set.count(r)) {
            ++score.counts.tp;
        } else {
            ++score.counts.fp;
        }
    }
    score.counts.fn = static_cast<long long>(truth_set.size()) - score.counts.tp;
    score.metrics = metrics_from_counts(score.counts);
    return score;
}

std::optional<double> coefficient_of_variation(const std::vector<double>& values) {
    if (values.empty()) return std::nullopt;
    double mean = mean_of(values);
    if (mean == 0.0) return std::nullopt;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    return std::sqrt(var) / mean;
}

std::optional<double> lcs_similarity(const std::vector<std::string>& pred,
                                     const std::vector<std::string>& truth, LcsNorm norm) {
    if (pred.empty() && truth.empty()) return std::nullopt;
    // rolling-row DP
    std::vector<std::size_t> prev(truth.size() + 1, 0), cur(truth.size() + 1, 0);
    for (std::size_t i = 1; i <= pred.size(); ++i) {
        for (std::size_t j = 1; j <= truth.size(); ++j) {
            if (pred[i - 1] == truth[j - 1]) {
                cur[j] = prev[j - 1] + 1;
            } else {
                cur[j] = std::max(prev[j], cur[j - 1]);
            }
        }
        std::swap(prev, cur);
    }
    double lcs = static_cast<double>(prev[truth.size()]);
    double denom = norm == LcsNorm::max_len
                       ? static_cast<double>(std::max(pred.size(), truth.size()))
                       : (static_cast<double>(pred.size() + truth.size()) / 2.0);
    return lcs / denom;
}

std::optional<double> ngram_similarity(const std::string& pred, const std::string& truth,
                                       std::size_t n, NgramCoef coef) {
    if (n == 0) throw std::invalid_argument("ngram size must be positive");
    if (pred.size() < n && truth.size() < n) return std::nullopt;

    auto grams = [n](const std::string& s) {
        std::map<std::string_view, std::size_t> counts;
        for (std::size_t i = 0; i + n <= s.size(); ++i) {
            ++counts[std::string_view(s).substr(i, n)];
        }
        return counts;
    };
    auto a = grams(pred);
    auto b = grams(truth);
    std::size_t total_a = 0, total_b = 0, inter = 0;
    for (const auto& [g, c] : a) total_a += c;
    for (const auto& [g, c] : b) total_b += c;
    for (const auto& [g, c] : a) {
        auto it = b.find(g);
        if (it != b.end()) inter += std::min(c, it->second);
    }
    if (coef == NgramCoef::dice) {
        return 2.0 * static_cast<double>(inter) / static_cast<double>(total_a + total_b);
    }
    return static_cast<double>(inter) / static_cast<double>(total_a + total_b - inter);
}

EmbeddingScore embedding_similarity(const std::string& pred, const std::string& truth,
                                    retrieval::Embedder& embedder) {
    auto vectors = embedder.embed({pred, truth});
    return {retrieval::cosine(vectors[0], vectors[1]), embedder.identity()};
}

nlohmann::ordered_json relations_report(
    const std::map<std::string, std::vector<relations::RelationInstance>>& predicted,
    const std::map<std::string, std::vector<relations::RelationInstance>>& truth) {
    static const std::vector<relations::RelationInstance> kNone;

    std::set<std::string> names;
    for (const auto& [name, rels] : predicted) names.insert(name);
    for (const auto& [name, rels] : truth) names.insert(name);

    Column acc, rec, prec, f1;
    nlohmann::ordered_json scripts = nlohmann::ordered_json::array();
    for (const std::string& name : names) {
        auto pit = predicted.find(name);
        auto tit = truth.find(name);
        RelationScore s = score_relations(pit == predicted.end() ? kNone : pit->second,
                                          tit == truth.end() ? kNone : tit->second);
        nlohmann::ordered_json row;
        row["script_name"] = name;
        row["tp"] = s.counts.tp;
        row["fp"] = s.counts.fp;
        row["fn"] = s.counts.fn;
        row["accuracy"] = rounded(s.metrics.accuracy);
        row["recall"] = rounded(s.metrics.recall);
        row["precision"] = rounded(s.metrics.precision);
        row["f1"] = rounded(s.metrics.f1);
        scripts.push_back(std::move(row));
        acc.push(s.metrics.accuracy);
        rec.push(s.metrics.recall);
        prec.push(s.metrics.precision);
        f1.push(s.metrics.f1);
    }

    nlohmann::ordered_json report;
    report["metric_kind"] = "relations";
    report["scripts"] = std::move(scripts);
    report["mean"] = {{"accuracy", acc.mean()},
                      {"recall", rec.mean()},
                      {"precision", prec.mean()},
                      {"f1", f1.mean()}};
    report["cv"] = {{"accuracy", acc.cv()},
                    {"recall", rec.cv()},
                    {"precision", prec.cv()},
                    {"f1", f1.cv()}};
    return report;
}

nlohmann::ordered_json chains_report(const std::map<std::string, std::string>& predicted,
                                     const std::map<std::string, std::string>& truth,
                                     const ChainEvalOptions& options) {
    std::set<std::string> names;
    for (const auto& [name, chain] : predicted) names.insert(name);
    for (const auto& [name, chain] : truth) names.insert(name);

    Column lcs_col, ngram_col, emb_col;
    nlohmann::ordered_json scripts = nlohmann::ordered_json::array();
    for (const std::string& name : names) {
        auto pit = predicted.find(name);
        auto tit = truth.find(name);
        const std::string pred = pit == predicted.end() ? std::string() : pit->second;
        const std::string tru = tit == truth.end() ? std::string() : tit->second;

        auto lcs = lcs_similarity(chains::operator_tokens(pred), chains::operator_tokens(tru),
                                  options.lcs_norm);
        auto ngram = ngram_similarity(pred, tru, options.ngram_n, options.ngram_coef);
        std::optional<double> emb;
        if (options.embedder != nullptr && !pred.empty() && !tru.empty()) {
            emb = embedding_similarity(pred, tru, *options.embedder).score;
        }

        nlohmann::ordered_json row;
        row["script_name"] = name;
        row["lcs"] = rounded(lcs);
        row["ngram"] = rounded(ngram);
        if (options.embedder != nullptr) row["embedding"] = rounded(emb);
        scripts.push_back(std::move(row));
        lcs_col.push(lcs);
        ngram_col.push(ngram);
        emb_col.push(emb);
    }

    nlohmann::ordered_json opts;
    opts["lcs_norm"] = options.lcs_norm == LcsNorm::max_len ? "max" : "mean";
    opts["ngram_n"] = options.ngram_n;
    opts["ngram_coef"] = options.ngram_coef == NgramCoef::dice ? "dice" : "jaccard";
    if (options.embedder != nullptr) opts["embedder"] = options.embedder->identity();

    nlohmann::ordered_json mean = {{"lcs", lcs_col.mean()}, {"ngram", ngram_col.mean()}};
    nlohmann::ordered_json cv = {{"lcs", lcs_col.cv()}, {"ngram", ngram_col.cv()}};
    if (options.embedder != nullptr) {
        mean["embedding"] = emb_col.mean();
        cv["embedding"] = emb_col.cv();
    }

    nlohmann::ordered_json report;
    report["metric_kind"] = "chains";
    report["options"] = std::move(opts);
    report["scripts"] = std::move(scripts);
    report["mean"] = std::move(mean);
    report["cv"] = std::move(cv);
    return report;
}

}  // namespace opskb::evalkit
