#include "opskb/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "opskb/chains.hpp"
#include "opskb/relations.hpp"
#include "opskb/syntax_kb.hpp"
#include "opskb/util/csv.hpp"
#include "opskb/util/hash.hpp"

namespace opskb::retrieval {

namespace {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            cur += static_cast<char>(std::tolower(u));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

struct Endpoint {
    std::string base;  // scheme://host:port
    std::string path;
};

Endpoint parse_endpoint(const std::string& url, const std::string& default_path) {
    std::size_t scheme = url.find("://");
    std::size_t path_start =
        scheme == std::string::npos ? url.find('/') : url.find('/', scheme + 3);
    if (path_start == std::string::npos || path_start + 1 == url.size()) {
        std::string base = url;
        if (!base.empty() && base.back() == '/') base.pop_back();
        return {base, default_path};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

nlohmann::json post_json(const std::string& url, const std::string& default_path,
                         const nlohmann::json& request) {
    Endpoint ep = parse_endpoint(url, default_path);
    std::string body = request.dump();
    std::string last_error;
    for (int attempt = 0; attempt < 3; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(200 * attempt));
        }
        httplib::Client client(ep.base);
        client.set_connection_timeout(30, 0);
        client.set_read_timeout(30, 0);
        client.set_write_timeout(30, 0);
        auto res = client.Post(ep.path, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("bad JSON response: ") + e.what();
        }
    }
    throw std::runtime_error("request to " + ep.base + ep.path + " failed: " + last_error);
}

}  // namespace

std::vector<double> Embedder::embed_one(const std::string& text) {
    return embed({text}).front();
}

HashedEmbedder::HashedEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::vector<std::vector<double>> HashedEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const std::string& text : texts) {
        if (text.empty()) throw std::invalid_argument("cannot embed empty text");
        std::vector<std::string> tokens = tokenize(text);
        if (tokens.empty()) {
            throw std::invalid_argument("cannot embed text without word characters");
        }
        // term frequencies of unigrams and adjacent bigrams
        std::map<std::string, double> tf;
        for (const std::string& t : tokens) tf[t] += 1.0;
        for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
            tf[tokens[i] + ' ' + tokens[i + 1]] += 1.0;
        }

        std::vector<double> vec(dim_, 0.0);
        for (const auto& [feature, weight] : tf) {
            // one dense random-sign row per feature
            std::uint64_t state = fnv1a64(feature) ^ (0x9E3779B97F4A7C15ULL * (seed_ + 1));
            for (std::size_t d = 0; d < dim_; ++d) {
                std::uint64_t z = splitmix64(state);
                vec[d] += (z >> 63) ? -weight : weight;
            }
        }
        double norm = 0.0;
        for (double v : vec) norm += v * v;
        norm = std::sqrt(norm);
        for (double& v : vec) v /= norm;
        out.push_back(std::move(vec));
    }
    return out;
}

std::string HashedEmbedder::identity() const {
    return "builtin-hash/unigram-bigram/d=" + std::to_string(dim_) +
           "/seed=" + std::to_string(seed_);
}

HttpEmbedder::HttpEmbedder(std::string endpoint) : endpoint_(std::move(endpoint)) {}

std::vector<std::vector<double>> HttpEmbedder::embed(const std::vector<std::string>& texts) {
    for (const std::string& t : texts) {
        if (t.empty()) throw std::invalid_argument("cannot embed empty text");
    }
    nlohmann::json request;
    request["texts"] = texts;
    nlohmann::json response = post_json(endpoint_, "/embed", request);
    std::vector<std::vector<double>> out;
    try {
        out = response.at("vectors").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("embedding service response malformed: ") +
                                 e.what());
    }
    if (out.size() != texts.size()) {
        throw std::runtime_error("embedding service returned " + std::to_string(out.size()) +
                                 " vectors for " + std::to_string(texts.size()) + " texts");
    }
    return out;
}

std::string HttpEmbedder::identity() const { return "http/" + endpoint_; }

std::unique_ptr<Embedder> make_embedder() {
    if (const char* url = std::getenv("OPSKB_EMBED_URL"); url != nullptr && *url != '\0') {
        return std::make_unique<HttpEmbedder>(url);
    }
    return std::make_unique<HashedEmbedder>();
}

std::string to_string(Table t) {
    switch (t) {
        case Table::syntax: return "syntax";
        case Table::relation: return "relation";
        case Table::itemset: return "itemset";
        case Table::chain: return "chain";
    }
    throw std::logic_error("bad table");
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) {
        throw std::invalid_argument("cosine requires equal nonzero dimensions");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine of a zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

void VectorIndex::add(KbEntry entry) {
    if (entry.vector.empty()) throw std::invalid_argument("entry has no vector");
    if (entries_.empty()) {
        dim_ = entry.vector.size();
    } else if (entry.vector.size() != dim_) {
        throw std::invalid_argument("entry dimension " + std::to_string(entry.vector.size()) +
                                    " does not match index dimension " + std::to_string(dim_));
    }
    auto [it, inserted] = by_id_.emplace(entry.entry_id, entries_.size());
    if (!inserted) throw std::invalid_argument("duplicate entry_id " + entry.entry_id);
    entries_.push_back(std::move(entry));
}

std::vector<RetrievalHit> VectorIndex::search(const std::vector<double>& query,
                                              std::size_t k) const {
    std::vector<RetrievalHit> hits;
    hits.reserve(entries_.size());
    for (const KbEntry& e : entries_) {
        hits.push_back({e.entry_id, cosine(query, e.vector), 0});
    }
    std::sort(hits.begin(), hits.end(), [](const RetrievalHit& x, const RetrievalHit& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.entry_id < y.entry_id;
    });
    if (hits.size() > k) hits.resize(k);
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i].rank = static_cast<int>(i + 1);
    return hits;
}

const KbEntry* VectorIndex::find(std::string_view entry_id) const {
    auto it = by_id_.find(entry_id);
    return it == by_id_.end() ? nullptr : &entries_[it->second];
}

std::vector<KbEntry> load_kb_entries(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::vector<KbEntry> entries;

    if (fs::exists(dir / "syntax.csv")) {
        auto rows = syntax_kb::load_syntax(dir / "syntax.csv");
        std::size_t index = 1;
        for (const auto& e : rows) {
            KbEntry entry;
            entry.entry_id = "syntax:" + std::to_string(index++);
            entry.table = Table::syntax;
            entry.text = e.full_name + ": " + e.description + " (returns " + e.output_type + ")";
            entries.push_back(std::move(entry));
        }
    }
    if (fs::exists(dir / "relations.csv")) {
        auto rows = relations::read_relations_csv(dir / "relations.csv");
        std::size_t index = 1;
        for (const auto& r : rows) {
            KbEntry entry;
            entry.entry_id = "relation:" + std::to_string(index++);
            entry.table = Table::relation;
            entry.text = r.op_a + " " + relations::to_string(r.kind) + " related to " + r.op_b +
                         " (frequency " + std::to_string(r.frequency) + ")";
            entries.push_back(std::move(entry));
        }
    }
    if (fs::exists(dir / "itemsets.csv")) {
        std::ifstream in(dir / "itemsets.csv", std::ios::binary);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        auto rows = csv_parse(text);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].size() < 2) continue;
            KbEntry entry;
            entry.entry_id = "itemset:" + rows[i][0];
            entry.table = Table::itemset;
            entry.text = rows[i][1];
            entries.push_back(std::move(entry));
        }
    }
    if (fs::exists(dir / "chains.csv")) {
        for (const auto& [script, chain] : chains::read_chains_csv(dir / "chains.csv")) {
            if (chain.empty()) continue;
            KbEntry entry;
            entry.entry_id = "chain:" + script;
            entry.table = Table::chain;
            entry.text = chain;
            entries.push_back(std::move(entry));
        }
    }
    return entries;
}

VectorIndex build_index(std::vector<KbEntry> entries, Embedder& embedder) {
    std::vector<std::string> texts;
    texts.reserve(entries.size());
    for (const KbEntry& e : entries) texts.push_back(e.text);
    if (!texts.empty()) {
        std::vector<std::vector<double>> vectors = embedder.embed(texts);
        for (std::size_t i = 0; i < entries.size(); ++i) {
            entries[i].vector = std::move(vectors[i]);
        }
    }
    VectorIndex index;
    for (KbEntry& e : entries) index.add(std::move(e));
    return index;
}

std::string assemble_prompt(const std::string& query, const std::vector<RetrievalHit>& hits,
                            const VectorIndex& index, const std::string& prompt_template) {
    std::string context;
    if (hits.empty()) {
        context = "no knowledge retrieved";
    } else {
        // group by table, tables ordered by their best hit rank
        std::vector<Table> table_order;
        std::map<Table, std::vector<const KbEntry*>> grouped;
        for (const RetrievalHit& hit : hits) {
            const KbEntry* entry = index.find(hit.entry_id);
            if (entry == nullptr) {
                throw std::logic_error("hit references unknown entry " + hit.entry_id);
            }
            auto [it, inserted] = grouped.try_emplace(entry->table);
            if (inserted) table_order.push_back(entry->table);
            it->second.push_back(entry);
        }
        for (std::size_t i = 0; i < table_order.size(); ++i) {
            if (i > 0) context += "\n\n";
            context += "### " + to_string(table_order[i]);
            for (const KbEntry* entry : grouped[table_order[i]]) {
                context += '\n';
                context += entry->text;
            }
        }
    }

    std::string prompt = prompt_template;
    auto replace_all = [&prompt](const std::string& slot, const std::string& value) {
        std::size_t pos = 0;
        while ((pos = prompt.find(slot, pos)) != std::string::npos) {
            prompt.replace(pos, slot.size(), value);
            pos += value.size();
        }
    };
    replace_all("{context}", context);
    replace_all("{query}", query);
    return prompt;
}

std::string default_prompt_template() {
    return "Use the retrieved geospatial operator knowledge to answer the request.\n"
           "\n"
           "Knowledge:\n"
           "{context}\n"
           "\n"
           "Request:\n"
           "{query}\n";
}

std::string llm_generate(const std::string& prompt) {
    const char* url = std::getenv("OPSKB_LLM_URL");
    if (url == nullptr || *url == '\0') {
        throw std::runtime_error("OPSKB_LLM_URL is not set");
    }
    nlohmann::json request;
    request["prompt"] = prompt;
    nlohmann::json response = post_json(url, "/", request);
    try {
        return response.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("LLM response malformed: ") + e.what());
    }
}

}  // namespace opskb::retrieval
