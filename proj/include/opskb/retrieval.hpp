#pragma once

// Retrieval layer: embed knowledge-base rows and queries into one vector
// space, search by exact cosine similarity, and assemble augmented prompts.
//
// The built-in embedder hashes lowercased token unigrams and bigrams onto
// dense random-sign rows (one per feature, term-frequency weighted) and
// L2-normalizes the sum. It is fully deterministic. When the environment
// variable OPSKB_EMBED_URL is set, an external embedding service is used
// instead: HTTP POST /embed with {"texts": [...]} returning
// {"vectors": [[...]...]}.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace opskb::retrieval {

class Embedder {
  public:
    virtual ~Embedder() = default;

    /// One vector per text, all the same dimension, each L2-normalized.
    /// Empty or token-free texts raise std::invalid_argument.
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;

    /// Stable tag naming the embedding scheme; vectors from different
    /// identities must never be compared.
    virtual std::string identity() const = 0;

    std::vector<double> embed_one(const std::string& text);
};

class HashedEmbedder final : public Embedder {
  public:
    explicit HashedEmbedder(std::size_t dim = 256, std::uint64_t seed = 42);

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    std::string identity() const override;

  private:
    std::size_t dim_;
    std::uint64_t seed_;
};

class HttpEmbedder final : public Embedder {
  public:
    explicit HttpEmbedder(std::string endpoint);

    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    std::string identity() const override;

  private:
    std::string endpoint_;
};

/// HttpEmbedder when OPSKB_EMBED_URL is set, HashedEmbedder otherwise.
std::unique_ptr<Embedder> make_embedder();

enum class Table { syntax, relation, itemset, chain };
std::string to_string(Table t);

struct KbEntry {
    std::string entry_id;  // "<table>:<key>"
    Table table = Table::syntax;
    std::string text;  // rendered row
    std::vector<double> vector;
};

struct RetrievalHit {
    std::string entry_id;
    double score = 0.0;  // cosine similarity
    int rank = 0;        // 1-based
};

double cosine(const std::vector<double>& a, const std::vector<double>& b);

/// Exact top-k cosine search over an immutable entry set.
class VectorIndex {
  public:
    /// Entries must share one dimension and have unique ids.
    void add(KbEntry entry);

    /// Hits sorted by score descending, ties by entry_id ascending.
    std::vector<RetrievalHit> search(const std::vector<double>& query, std::size_t k) const;

    const KbEntry* find(std::string_view entry_id) const;
    std::size_t size() const { return entries_.size(); }
    std::size_t dimension() const { return dim_; }
    const std::vector<KbEntry>& entries() const { return entries_; }

  private:
    std::vector<KbEntry> entries_;
    std::map<std::string, std::size_t, std::less<>> by_id_;
    std::size_t dim_ = 0;
};

/// Render the knowledge tables found in `dir` (syntax.csv, relations.csv,
/// itemsets.csv, chains.csv; missing files are skipped) into text entries:
///   syntax   "FULL_NAME: DESCRIPTION (returns OUTPUT_TYPE)"
///   relation "OPERATOR RELATIONSHIP related to RELATED_OPERATOR (frequency N)"
///   itemset  the frequent_itemset cell
///   chain    the serialized chain
std::vector<KbEntry> load_kb_entries(const std::filesystem::path& dir);

/// Embed all entry texts (one batch) and build the index.
VectorIndex build_index(std::vector<KbEntry> entries, Embedder& embedder);

/// Fill {context} and {query} slots. Context lists hit texts grouped by
/// table, tables ordered by their best hit rank; with no hits the context
/// is "no knowledge retrieved". Unresolved hits raise std::logic_error.
std::string assemble_prompt(const std::string& query, const std::vector<RetrievalHit>& hits,
                            const VectorIndex& index, const std::string& prompt_template);

std::string default_prompt_template();

/// Chat completion against OPSKB_LLM_URL: POST {"prompt": ...} returning
/// {"text": ...}. Throws std::runtime_error when the variable is unset or
/// the service fails after retries.
std::string llm_generate(const std::string& prompt);

}  // namespace opskb::retrieval
