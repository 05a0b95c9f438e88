#include <doctest.h>

#include <random>
#include <sstream>

#include "opskb/corpus.hpp"
#include "support/generators.hpp"
#include "support/testutil.hpp"

using namespace opskb;
using testsupport::TempDir;

TEST_CASE("stage transitions only move forward") {
    corpus::ScriptRecord rec;
    rec.script_id = "a.js";
    rec.transition(corpus::Stage::cleaned);
    rec.transition(corpus::Stage::validated);
    CHECK_THROWS_AS(rec.transition(corpus::Stage::raw), std::logic_error);
    CHECK_THROWS_AS(rec.transition(corpus::Stage::rejected, "late"), std::logic_error);

    corpus::ScriptRecord rej;
    rej.script_id = "b.js";
    CHECK_THROWS_AS(rej.transition(corpus::Stage::rejected), std::logic_error);  // no reason
    rej.transition(corpus::Stage::rejected, "oversize");
    CHECK(rej.reject_reason == "oversize");
}

TEST_CASE("ingest collects .js files sorted by relative path") {
    TempDir dir;
    testsupport::write_file(dir.file("b.js"), "var b = 1;\n");
    testsupport::write_file(dir.file("sub/a.js"), "var a = 2;\n");
    testsupport::write_file(dir.file("notes.txt"), "not a script");

    auto records = corpus::ingest(dir.path);
    REQUIRE(records.size() == 2);
    CHECK(records[0].script_id == "b.js");
    CHECK(records[1].script_id == "sub/a.js");
    CHECK(records[0].stage == corpus::Stage::raw);
    CHECK(records[0].byte_size == records[0].text.size());
}

TEST_CASE("ingest rejects oversize, bad encoding, and duplicates") {
    TempDir dir;
    testsupport::write_file(dir.file("big.js"), std::string(64, 'x'));
    testsupport::write_file(dir.file("bad.js"), std::string("var s = '\xff\xfe';"));
    testsupport::write_file(dir.file("one.js"), "var v = 1;\n");
    testsupport::write_file(dir.file("two.js"), "var v = 1;\n");

    corpus::IngestOptions opts;
    opts.max_bytes = 32;
    opts.dedup = true;
    auto records = corpus::ingest(dir.path, opts);
    REQUIRE(records.size() == 4);

    std::map<std::string, std::string> reasons;
    for (const auto& rec : records) reasons[rec.script_id] = rec.reject_reason;
    CHECK(reasons["big.js"] == "oversize");
    CHECK(reasons["bad.js"] == "encoding");
    CHECK(reasons["one.js"] == "");
    CHECK(reasons["two.js"] == "duplicate");

    for (const auto& rec : records) {
        if (rec.stage == corpus::Stage::rejected) CHECK(rec.text.empty());
    }
}

TEST_CASE("strip_comments removes comments but not literals") {
    auto strip = [](std::string_view s) { return corpus::strip_comments(s).text; };

    CHECK(strip("var a = 1; // tail\n") == "var a = 1;\n");
    CHECK(strip("var a /* mid */ = 1;") == "var a = 1;");
    CHECK(strip("var s = 'no // comment';") == "var s = 'no // comment';");
    CHECK(strip("var s = \"no /* comment */\";") == "var s = \"no /* comment */\";");
    // template text is untouched, but an interpolation is code again
    CHECK(strip("var t = `keep // ${x /* code comment */} tail`;") ==
          "var t = `keep // ${x} tail`;");
    CHECK(strip("var re = /https?:\\/\\//;") == "var re = /https?:\\/\\//;");
    CHECK(strip("var q = a / b; // divide\n") == "var q = a / b;\n");
}

TEST_CASE("strip_comments keeps a newline for multi-line block comments") {
    // removing the line break entirely would let ASI glue the statements
    auto res = corpus::strip_comments("var a = 1 /* c1\nc2 */\nvar b = 2\n");
    CHECK(res.text.find("var a = 1\n") != std::string::npos);
    CHECK_FALSE(res.unterminated_block);
}

TEST_CASE("strip_comments separates tokens a block comment held apart") {
    auto res = corpus::strip_comments("var a = 1+/*x*/+2;");
    // a '+ +' pair must not become '++'
    CHECK(res.text == "var a = 1+ +2;");
}

TEST_CASE("unterminated block comment strips to end and sets the flag") {
    auto res = corpus::strip_comments("var a = 1; /* goes on");
    CHECK(res.unterminated_block);
    CHECK(res.text == "var a = 1;");
}

TEST_CASE("strip_comments is idempotent on generated scripts") {
    std::mt19937 rng(7);
    for (int i = 0; i < 30; ++i) {
        auto script = testsupport::sprinkle_comments(testsupport::random_script(rng), rng);
        auto once = corpus::strip_comments(script).text;
        auto twice = corpus::strip_comments(once).text;
        CHECK(once == twice);
    }
}

TEST_CASE("jsonl round-trips records byte for byte") {
    TempDir dir;
    testsupport::write_file(dir.file("a.js"), "var a = 1; // note\n");
    testsupport::write_file(dir.file("b.js"), "bad syntax (");
    auto records = corpus::ingest(dir.path);
    for (auto& rec : records) corpus::clean_record(rec);

    std::ostringstream out;
    corpus::write_jsonl(out, records);
    std::istringstream in(out.str());
    auto loaded = corpus::read_jsonl(in);

    REQUIRE(loaded.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded[i].script_id == records[i].script_id);
        CHECK(loaded[i].text == records[i].text);
        CHECK(loaded[i].byte_size == records[i].byte_size);
        CHECK(loaded[i].stage == records[i].stage);
    }

    std::ostringstream again;
    corpus::write_jsonl(again, loaded);
    CHECK(again.str() == out.str());
}

TEST_CASE("corpus_stats aggregates counts and sizes") {
    TempDir dir;
    testsupport::write_file(dir.file("a.js"), "var a = 1;");
    testsupport::write_file(dir.file("b.js"), "var bb = 22;");
    auto records = corpus::ingest(dir.path);
    auto stats = corpus::corpus_stats(records);
    CHECK(stats.script_count == 2);
    CHECK(stats.total_bytes == 22);
    CHECK(stats.min_bytes == 10);
    CHECK(stats.max_bytes == 12);
    CHECK(stats.rejected_count == 0);
}

TEST_CASE("utf8 validation accepts multibyte and rejects stray continuation") {
    CHECK(corpus::utf8_valid("plain ascii"));
    CHECK(corpus::utf8_valid("caf\xc3\xa9"));
    CHECK_FALSE(corpus::utf8_valid("\x80"));
    CHECK_FALSE(corpus::utf8_valid("\xc3"));
}
