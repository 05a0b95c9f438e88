#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "opskb/retrieval.hpp"
#include "support/oracles.hpp"
#include "support/testutil.hpp"

using namespace opskb;
using retrieval::HashedEmbedder;
using retrieval::KbEntry;
using retrieval::VectorIndex;

namespace {

double norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

KbEntry entry(std::string id, retrieval::Table table, std::string text,
              std::vector<double> vec = {}) {
    KbEntry e;
    e.entry_id = std::move(id);
    e.table = table;
    e.text = std::move(text);
    e.vector = std::move(vec);
    return e;
}

std::string random_text(std::mt19937& rng) {
    static const char* words[] = {"image",  "collection", "filter",   "bounds", "ndvi",
                                  "band",   "select",     "mosaic",   "clip",   "export",
                                  "reduce", "region",     "geometry", "scale",  "mask"};
    std::uniform_int_distribution<int> len(1, 8), pick(0, 14);
    std::string out;
    for (int i = len(rng); i > 0; --i) {
        if (!out.empty()) out += ' ';
        out += words[pick(rng)];
    }
    return out;
}

}  // namespace

TEST_CASE("hashed embedder is deterministic and normalized") {
    HashedEmbedder a;
    HashedEmbedder b;
    auto va = a.embed_one("Loads the image given its ID.");
    auto vb = b.embed_one("Loads the image given its ID.");
    CHECK(va == vb);
    CHECK(va.size() == 256);
    CHECK(norm(va) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(a.identity() == b.identity());

    // seed changes the space and the identity
    HashedEmbedder other(256, 7);
    CHECK(other.embed_one("Loads the image given its ID.") != va);
    CHECK(other.identity() != a.identity());
}

TEST_CASE("similar texts score higher than disjoint ones") {
    HashedEmbedder e;
    auto base = e.embed_one("filter the image collection by bounds");
    auto near = e.embed_one("filter the collection by geometry bounds");
    auto far = e.embed_one("zzz qqq www uuu");
    CHECK(retrieval::cosine(base, base) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(retrieval::cosine(base, near) > retrieval::cosine(base, far));
    CHECK(std::abs(retrieval::cosine(base, far)) < 0.2);
}

TEST_CASE("token-free texts are rejected") {
    HashedEmbedder e;
    CHECK_THROWS_AS(e.embed_one(""), std::invalid_argument);
    CHECK_THROWS_AS(e.embed_one("   \t\n"), std::invalid_argument);
    CHECK_THROWS_AS(e.embed_one("!!! --- ???"), std::invalid_argument);
    CHECK_NOTHROW(e.embed_one("x1"));
}

TEST_CASE("tokenization folds case and punctuation") {
    HashedEmbedder e;
    auto a = e.embed_one("Map.addLayer(NDVI)");
    auto b = e.embed_one("map addlayer ndvi");
    CHECK(retrieval::cosine(a, b) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cosine rejects mismatched or zero vectors") {
    CHECK_THROWS_AS(retrieval::cosine({1.0, 0.0}, {1.0, 0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(retrieval::cosine({0.0, 0.0}, {1.0, 0.0}), std::invalid_argument);
    CHECK(retrieval::cosine({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(0.0));
}

TEST_CASE("index enforces dimension and id uniqueness") {
    VectorIndex index;
    index.add(entry("syntax:1", retrieval::Table::syntax, "a", {1.0, 0.0}));
    CHECK_THROWS_AS(
        index.add(entry("syntax:2", retrieval::Table::syntax, "b", {1.0, 0.0, 0.0})),
        std::invalid_argument);
    CHECK_THROWS_AS(index.add(entry("syntax:1", retrieval::Table::syntax, "dup", {0.0, 1.0})),
                    std::invalid_argument);
    CHECK(index.size() == 1);
    CHECK(index.dimension() == 2);
    CHECK(index.find("syntax:1") != nullptr);
    CHECK(index.find("syntax:9") == nullptr);
}

TEST_CASE("search matches the brute force oracle") {
    std::mt19937 rng(4242);
    HashedEmbedder embedder;

    std::vector<std::string> texts;
    std::set<std::string> seen;
    while (texts.size() < 120) {
        auto t = random_text(rng);
        if (seen.insert(t).second) texts.push_back(t);
    }

    VectorIndex index;
    std::vector<std::pair<std::string, std::vector<double>>> reference;
    auto vectors = embedder.embed(texts);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        std::string id = "itemset:" + std::to_string(i);
        index.add(entry(id, retrieval::Table::itemset, texts[i], vectors[i]));
        reference.emplace_back(id, vectors[i]);
    }

    for (int q = 0; q < 25; ++q) {
        auto query = embedder.embed_one(random_text(rng));
        auto hits = index.search(query, 5);
        auto expected = testsupport::knn_oracle(reference, query, 5);
        REQUIRE(hits.size() == expected.size());
        for (std::size_t i = 0; i < hits.size(); ++i) {
            CHECK(hits[i].entry_id == expected[i].entry_id);
            CHECK(hits[i].score == doctest::Approx(expected[i].score).epsilon(1e-9));
            CHECK(hits[i].rank == static_cast<int>(i) + 1);
        }
    }

    // every stored text retrieves itself first
    for (std::size_t i = 0; i < 10; ++i) {
        auto hits = index.search(vectors[i], 1);
        REQUIRE(hits.size() == 1);
        CHECK(hits[0].entry_id == "itemset:" + std::to_string(i));
        CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("equal scores break ties by entry id") {
    VectorIndex index;
    index.add(entry("b", retrieval::Table::chain, "t1", {1.0, 0.0}));
    index.add(entry("a", retrieval::Table::chain, "t2", {1.0, 0.0}));
    index.add(entry("c", retrieval::Table::chain, "t3", {0.0, 1.0}));
    auto hits = index.search({1.0, 0.0}, 3);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].entry_id == "a");
    CHECK(hits[1].entry_id == "b");
    CHECK(hits[2].entry_id == "c");
}

TEST_CASE("k larger than the index returns everything") {
    VectorIndex index;
    index.add(entry("a", retrieval::Table::chain, "t", {1.0, 0.0}));
    CHECK(index.search({1.0, 0.0}, 10).size() == 1);
    CHECK(index.search({1.0, 0.0}, 0).empty());
}

TEST_CASE("kb entries render all four tables") {
    testsupport::TempDir tmp;
    testsupport::write_file(
        tmp.file("syntax.csv"),
        "index,full_name,short_name,description,output_type,parameters\n"
        "1,ee.Image,Image,Loads the image given its ID.,Image,[]\n");
    testsupport::write_file(tmp.file("relations.csv"),
                            "index,operator,related_operator,relationship,frequency\n"
                            "1,ee.Image,Map.addLayer,sequential,3\n");
    testsupport::write_file(tmp.file("itemsets.csv"),
                            "index,frequent_itemset,support\n"
                            "1,ee.Image;Map.addLayer,0.5\n");
    testsupport::write_file(tmp.file("chains.csv"),
                            "script_name,chain\n"
                            "a.js,ee.Image -> Map.addLayer\n");

    auto entries = retrieval::load_kb_entries(tmp.path);
    REQUIRE(entries.size() == 4);

    std::map<std::string, std::string> by_id;
    for (const auto& e : entries) by_id[e.entry_id] = e.text;
    CHECK(by_id.at("syntax:1") == "ee.Image: Loads the image given its ID. (returns Image)");
    CHECK(by_id.at("relation:1") == "ee.Image sequential related to Map.addLayer (frequency 3)");
    CHECK(by_id.at("itemset:1") == "ee.Image;Map.addLayer");
    CHECK(by_id.at("chain:a.js") == "ee.Image -> Map.addLayer");
}

TEST_CASE("missing tables are skipped, not errors") {
    testsupport::TempDir tmp;
    testsupport::write_file(tmp.file("chains.csv"),
                            "script_name,chain\n"
                            "a.js,x -> y\n");
    auto entries = retrieval::load_kb_entries(tmp.path);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].table == retrieval::Table::chain);
}

TEST_CASE("build index embeds every entry") {
    HashedEmbedder embedder;
    std::vector<KbEntry> entries{
        entry("syntax:1", retrieval::Table::syntax, "loads an image"),
        entry("chain:a.js", retrieval::Table::chain, "image then layer"),
    };
    auto index = retrieval::build_index(std::move(entries), embedder);
    CHECK(index.size() == 2);
    CHECK(index.dimension() == 256);
    for (const auto& e : index.entries()) CHECK(norm(e.vector) == doctest::Approx(1.0));
}

TEST_CASE("prompt groups hits by table in best-rank order") {
    VectorIndex index;
    index.add(entry("syntax:1", retrieval::Table::syntax, "syntax text one", {1.0, 0.0}));
    index.add(entry("syntax:2", retrieval::Table::syntax, "syntax text two", {1.0, 0.0}));
    index.add(entry("chain:a.js", retrieval::Table::chain, "chain text", {1.0, 0.0}));

    std::vector<retrieval::RetrievalHit> hits{
        {"chain:a.js", 0.9, 1},
        {"syntax:2", 0.8, 2},
        {"syntax:1", 0.7, 3},
    };
    auto prompt = retrieval::assemble_prompt("how to load?", hits, index,
                                             "K:\n{context}\nQ: {query}");
    // chain section first (best rank 1), then syntax (best rank 2)
    auto chain_pos = prompt.find("### chain");
    auto syntax_pos = prompt.find("### syntax");
    REQUIRE(chain_pos != std::string::npos);
    REQUIRE(syntax_pos != std::string::npos);
    CHECK(chain_pos < syntax_pos);
    CHECK(prompt.find("syntax text two") < prompt.find("syntax text one"));
    CHECK(prompt.find("Q: how to load?") != std::string::npos);
    CHECK(prompt.rfind("K:\n", 0) == 0);
}

TEST_CASE("prompt with no hits says so") {
    VectorIndex index;
    auto prompt = retrieval::assemble_prompt("q", {}, index, retrieval::default_prompt_template());
    CHECK(prompt.find("no knowledge retrieved") != std::string::npos);
    CHECK(prompt.find("{context}") == std::string::npos);
    CHECK(prompt.find("{query}") == std::string::npos);
}

TEST_CASE("unresolved hits are a logic error") {
    VectorIndex index;
    index.add(entry("syntax:1", retrieval::Table::syntax, "text", {1.0, 0.0}));
    std::vector<retrieval::RetrievalHit> hits{{"syntax:999", 0.5, 1}};
    CHECK_THROWS_AS(retrieval::assemble_prompt("q", hits, index, "{context} {query}"),
                    std::logic_error);
}

TEST_CASE("default template has both slots") {
    auto t = retrieval::default_prompt_template();
    CHECK(t.find("{context}") != std::string::npos);
    CHECK(t.find("{query}") != std::string::npos);
}
