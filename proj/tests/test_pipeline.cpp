#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "opskb/pipeline.hpp"
#include "support/testutil.hpp"

using namespace opskb;
namespace fs = std::filesystem;

namespace {

pipeline::PipelineConfig mini_config(const fs::path& out) {
    pipeline::PipelineConfig cfg;
    cfg.corpus_dir = testsupport::fixture_dir() / "corpus_mini";
    cfg.syntax_path = testsupport::fixture_dir() / "syntax_sample.csv";
    cfg.out_dir = out;
    cfg.min_support = 0.05;
    cfg.start_support = 0.20;
    return cfg;
}

}  // namespace

TEST_CASE("atomic write renames on success and keeps partials on failure") {
    testsupport::TempDir tmp;
    auto target = tmp.file("out.txt");

    pipeline::atomic_write(target, [](const fs::path& p) {
        std::ofstream out(p);
        out << "done";
    });
    CHECK(testsupport::read_file(target) == "done");
    CHECK_FALSE(fs::exists(tmp.file("out.txt.partial")));

    auto failing = tmp.file("bad.txt");
    CHECK_THROWS_AS(pipeline::atomic_write(failing,
                                           [](const fs::path& p) {
                                               std::ofstream out(p);
                                               out << "half";
                                               throw std::runtime_error("boom");
                                           }),
                    std::runtime_error);
    CHECK_FALSE(fs::exists(failing));
    CHECK(fs::exists(tmp.file("bad.txt.partial")));
}

TEST_CASE("transactions build per script or per relation pair") {
    std::vector<miner::TransactionRecord> records{
        {"a.js", {"x", "y"}, {{{"y", "x", "sequential"}}, {{"x", "x", "parallel"}}}},
        {"b.js", {}, {}},
        {"c.js", {"z"}, {}},
    };
    auto per_script = pipeline::build_transactions(records, pipeline::TxnMode::script);
    REQUIRE(per_script.size() == 2);  // empty item set dropped
    CHECK(per_script[0] == miner::Transaction{"x", "y"});
    CHECK(per_script[1] == miner::Transaction{"z"});

    auto per_pair = pipeline::build_transactions(records, pipeline::TxnMode::relation_pairs);
    REQUIRE(per_pair.size() == 2);
    CHECK(per_pair[0] == miner::Transaction{"x", "y"});  // pair sorted
    CHECK(per_pair[1] == miner::Transaction{"x"});       // self pair collapses
}

TEST_CASE("txn mode strings round-trip") {
    CHECK(pipeline::to_string(pipeline::TxnMode::script) == "script");
    CHECK(pipeline::txn_mode_from_string("relation_pairs") == pipeline::TxnMode::relation_pairs);
    CHECK_THROWS_AS(pipeline::txn_mode_from_string("nope"), std::invalid_argument);
}

TEST_CASE("pipeline over the mini corpus produces the documented tables") {
    testsupport::TempDir tmp;
    auto manifest = pipeline::run_pipeline(mini_config(tmp.file("run")));

    CHECK(manifest.counts.ingested == 3);
    CHECK(manifest.counts.cleaned == 3);
    CHECK(manifest.counts.validated == 3);
    CHECK(manifest.counts.rejected == 0);
    CHECK(manifest.counts.relations == 9);
    CHECK(manifest.counts.itemsets == 131);
    CHECK(manifest.counts.chains == 3);

    auto out = tmp.file("run");
    CHECK(testsupport::read_file(out / "relations.csv") ==
          "index,operator,related_operator,relationship,frequency\n"
          "1,ee.Image,normalizedDifference,sequential,3\n"
          "2,normalizedDifference,Map.addLayer,sequential,3\n"
          "3,ee.Geometry.Point,filterBounds,sequential,1\n"
          "4,ee.ImageCollection,ee.Geometry.Point,sequential,1\n"
          "5,filterBounds,map,sequential,1\n"
          "6,map,qualityMosaic,sequential,1\n"
          "7,qualityMosaic,Map.addLayer,sequential,1\n"
          "8,ee.Image,ee.Image,parallel,1\n"
          "9,map,normalizedDifference,nested,1\n");

    CHECK(testsupport::read_file(out / "chains.csv") ==
          "script_name,chain\n"
          "nested_mapped_ndvi.js,ee.ImageCollection -> ee.Geometry.Point -> filterBounds -> "
          "map ~> { normalizedDifference } -> qualityMosaic -> Map.addLayer\n"
          "par_ndvi.js,{ ee.Image -> normalizedDifference -> Map.addLayer "
          "ee.Image -> normalizedDifference -> Map.addLayer }\n"
          "seq_ndvi.js,ee.Image -> normalizedDifference -> Map.addLayer\n");

    for (const char* name :
         {"syntax.csv", "itemsets.csv", "rules.csv", "raw.jsonl", "cleaned.jsonl", "valid.jsonl",
          "rejects.jsonl", "txns.jsonl", "manifest.json"}) {
        CHECK(fs::exists(out / name));
    }
}

TEST_CASE("repeat runs are byte-identical across the knowledge tables") {
    testsupport::TempDir tmp;
    pipeline::run_pipeline(mini_config(tmp.file("one")));
    pipeline::run_pipeline(mini_config(tmp.file("two")));
    for (const char* name : {"relations.csv", "itemsets.csv", "rules.csv", "chains.csv",
                             "syntax.csv", "txns.jsonl"}) {
        CHECK(testsupport::read_file(tmp.file("one") / name) ==
              testsupport::read_file(tmp.file("two") / name));
    }
}

TEST_CASE("threads do not change any table") {
    testsupport::TempDir tmp;
    auto single = mini_config(tmp.file("single"));
    auto multi = mini_config(tmp.file("multi"));
    multi.threads = 4;
    pipeline::run_pipeline(single);
    pipeline::run_pipeline(multi);
    for (const char* name : {"relations.csv", "itemsets.csv", "rules.csv", "chains.csv"}) {
        CHECK(testsupport::read_file(tmp.file("single") / name) ==
              testsupport::read_file(tmp.file("multi") / name));
    }
}

TEST_CASE("paper style drops the nesting arrow") {
    testsupport::TempDir tmp;
    auto cfg = mini_config(tmp.file("run"));
    cfg.paper_style = true;
    pipeline::run_pipeline(cfg);
    auto chains = testsupport::read_file(tmp.file("run") / "chains.csv");
    CHECK(chains.find("~>") == std::string::npos);
    CHECK(chains.find("map -> { normalizedDifference }") != std::string::npos);
}

TEST_CASE("unparseable scripts are rejected, not fatal") {
    testsupport::TempDir tmp;
    auto corpus = tmp.file("corpus");
    fs::create_directories(corpus);
    testsupport::write_file(corpus / "broken.js", "var x = (;\n");

    auto cfg = mini_config(tmp.file("run"));
    cfg.corpus_dir = corpus;
    auto manifest = pipeline::run_pipeline(cfg);
    CHECK(manifest.counts.ingested == 1);
    CHECK(manifest.counts.validated == 0);
    CHECK(manifest.counts.rejected == 1);
    CHECK(manifest.counts.relations == 0);

    auto rejects = testsupport::read_file(tmp.file("run") / "rejects.jsonl");
    CHECK(rejects.find("syntax:1:10") != std::string::npos);

    // header-only tables still appear
    CHECK(testsupport::read_file(tmp.file("run") / "relations.csv") ==
          "index,operator,related_operator,relationship,frequency\n");
}

TEST_CASE("missing inputs are input errors") {
    testsupport::TempDir tmp;
    auto cfg = mini_config(tmp.file("run"));
    cfg.corpus_dir = tmp.file("no_such_dir");
    CHECK_THROWS_AS(pipeline::run_pipeline(cfg), pipeline::InputError);

    cfg = mini_config(tmp.file("run2"));
    cfg.syntax_path = tmp.file("no_such.csv");
    CHECK_THROWS_AS(pipeline::run_pipeline(cfg), pipeline::InputError);

    // malformed syntax table is caught in preflight, before any stage runs
    auto bad = tmp.file("bad.csv");
    testsupport::write_file(bad, "wrong,header\n1,2\n");
    cfg = mini_config(tmp.file("run3"));
    cfg.syntax_path = bad;
    CHECK_THROWS_AS(pipeline::run_pipeline(cfg), pipeline::InputError);
    CHECK_FALSE(fs::exists(tmp.file("run3") / "raw.jsonl"));
}

TEST_CASE("bad configuration is rejected before any work") {
    testsupport::TempDir tmp;
    auto cfg = mini_config(tmp.file("run"));
    cfg.min_support = 0.0;
    CHECK_THROWS_AS(pipeline::run_pipeline(cfg), std::invalid_argument);

    cfg = mini_config(tmp.file("run2"));
    cfg.corpus_dir.clear();
    CHECK_THROWS_AS(pipeline::run_pipeline(cfg), std::invalid_argument);
}

TEST_CASE("stage errors carry the stage name") {
    pipeline::StageError err("mine", "out of beans");
    CHECK(err.stage == "mine");
    CHECK(std::string(err.what()) == "mine: out of beans");
}

TEST_CASE("manifest records config, inputs, counts, and outputs") {
    testsupport::TempDir tmp;
    auto manifest = pipeline::run_pipeline(mini_config(tmp.file("run")));
    auto j = manifest.to_json();

    CHECK(j["tool_version"] == pipeline::kToolVersion);
    CHECK(j["timestamp"].get<std::string>().size() == 20);  // 2026-01-02T03:04:05Z
    CHECK(j["config"]["min_support"] == 0.05);
    CHECK(j["config"]["txn_mode"] == "script");
    CHECK(j["inputs"]["corpus"].size() == 3);
    CHECK(j["inputs"]["corpus"].contains("seq_ndvi.js"));
    CHECK(j["inputs"].contains("syntax"));
    CHECK(j["counts"]["relations"] == 9);
    for (const char* name :
         {"syntax.csv", "relations.csv", "itemsets.csv", "rules.csv", "chains.csv"}) {
        CHECK(j["outputs"].contains(name));
        CHECK(j["outputs"][name].get<std::string>().size() == 64);  // sha256 hex
    }

    // written manifest parses back to the same document
    auto disk = nlohmann::json::parse(testsupport::read_file(tmp.file("run") / "manifest.json"));
    CHECK(disk["outputs"] == j["outputs"]);
    CHECK(disk["counts"]["itemsets"] == 131);
}

TEST_CASE("relation pair mining mode changes transactions, not extraction") {
    testsupport::TempDir tmp;
    auto cfg = mini_config(tmp.file("run"));
    cfg.txn_mode = pipeline::TxnMode::relation_pairs;
    auto manifest = pipeline::run_pipeline(cfg);
    CHECK(manifest.counts.relations == 9);
    // pair transactions are tiny, so itemsets collapse to pairs and singles
    CHECK(manifest.counts.itemsets < 131);
    CHECK(manifest.counts.itemsets > 0);
}
