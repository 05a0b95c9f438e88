#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <variant>

#include "opskb/parser.hpp"
#include "opskb/relations.hpp"
#include "support/generators.hpp"
#include "support/testutil.hpp"

using namespace opskb;
using relations::RelationInstance;
using relations::RelationKind;

namespace {

ast::SyntaxTree parse_ok(const std::string& src) {
    auto result = ast::parse_source(src, "test.js");
    REQUIRE(std::holds_alternative<ast::SyntaxTree>(result));
    return std::get<ast::SyntaxTree>(std::move(result));
}

std::vector<RelationInstance> classify(const std::string& src,
                                       const relations::ExtractOptions& opts = {}) {
    auto tree = parse_ok(src);
    auto analysis = relations::analyze(tree);
    return relations::classify_relations(tree, analysis, opts);
}

std::string read_fixture(const std::string& rel) {
    return testsupport::read_file(testsupport::fixture_dir() / rel);
}

std::multiset<RelationInstance> as_multiset(const std::vector<RelationInstance>& v) {
    return {v.begin(), v.end()};
}

RelationInstance seq(std::string a, std::string b) {
    return {std::move(a), std::move(b), RelationKind::sequential};
}
RelationInstance par(std::string a, std::string b) {
    return {std::move(a), std::move(b), RelationKind::parallel};
}
RelationInstance nest(std::string a, std::string b) {
    return {std::move(a), std::move(b), RelationKind::nested};
}

}  // namespace

TEST_CASE("canonical names use the dotted path only under platform roots") {
    auto tree = parse_ok(
        "ee.Image('x');\n"
        "img.normalizedDifference(['B5', 'B4']);\n"
        "Export.image.toDrive(img);\n"
        "ui.Chart.image.series(col);\n"
        "foo.bar.baz(1);\n"
        "print(2);\n");
    auto occs = relations::extract_occurrences(tree);
    REQUIRE(occs.size() == 6);
    CHECK(occs[0].canonical == "ee.Image");
    CHECK(occs[0].short_name == "Image");
    CHECK(occs[1].canonical == "normalizedDifference");
    CHECK(occs[2].canonical == "Export.image.toDrive");
    CHECK(occs[3].canonical == "ui.Chart.image.series");
    CHECK(occs[4].canonical == "baz");
    CHECK(occs[5].canonical == "print");
    CHECK(occs[5].short_name == "print");
}

TEST_CASE("computed and indirect callees are dynamic") {
    auto tree = parse_ok("arr[i](1);\nfns.pick()(2);\n(f || g)(3);\n");
    auto occs = relations::extract_occurrences(tree);
    int dynamic_count = 0;
    for (const auto& occ : occs) {
        if (occ.dynamic) {
            CHECK(occ.canonical == "<dynamic>");
            ++dynamic_count;
        }
    }
    CHECK(dynamic_count >= 3);
    // dynamics never surface in relations
    auto analysis = relations::analyze(tree);
    for (const auto& inst : relations::classify_relations(tree, analysis)) {
        CHECK(inst.op_a != "<dynamic>");
        CHECK(inst.op_b != "<dynamic>");
    }
}

TEST_CASE("occurrences come in evaluation order within a statement") {
    auto tree = parse_ok("f(g(1), h(2));\n");
    auto occs = relations::extract_occurrences(tree);
    REQUIRE(occs.size() == 3);
    CHECK(occs[0].canonical == "g");
    CHECK(occs[1].canonical == "h");
    CHECK(occs[2].canonical == "f");
    CHECK(occs[0].stmt_id == occs[2].stmt_id);
    CHECK(occs[0].order_in_stmt == 0);
    CHECK(occs[2].order_in_stmt == 2);
}

TEST_CASE("same-statement rule links consecutive occurrences") {
    auto got = as_multiset(classify("f(g(1), h(2));\n"));
    std::multiset<RelationInstance> want{seq("g", "h"), seq("h", "f")};
    CHECK(got == want);
}

TEST_CASE("def-use links last producer to first consumer") {
    // select hangs off a call result, not an identifier chain, so it keeps
    // its short name
    auto got = as_multiset(classify(
        "var a = ee.Image('x').select('B4');\n"
        "var b = a.add(1);\n"
        "print(b, a);\n"));
    std::multiset<RelationInstance> want{
        seq("ee.Image", "select"),  // same statement
        seq("select", "add"),       // a: stmt1 -> stmt2
        seq("add", "print"),        // b: stmt2 -> stmt3
        seq("select", "print"),     // a: stmt1 -> stmt3
    };
    CHECK(got == want);
}

TEST_CASE("uses before the declaration do not count as dataflow") {
    // no def-use edge is recorded, which leaves the two statements
    // independent, so the sibling rule pairs them as parallel
    auto got = as_multiset(classify("print(a);\nvar a = ee.Image('x');\n"));
    std::multiset<RelationInstance> want{par("ee.Image", "print")};
    CHECK(got == want);
}

TEST_CASE("declarations without calls do not produce def-use relations") {
    auto got = as_multiset(classify("var a = 1;\nprint(a);\n"));
    CHECK(got.empty());
}

TEST_CASE("sequential fixture yields the pure def-use chain") {
    auto got = as_multiset(classify(read_fixture("corpus_mini/seq_ndvi.js")));
    std::multiset<RelationInstance> want{
        seq("ee.Image", "normalizedDifference"),
        seq("normalizedDifference", "Map.addLayer"),
    };
    CHECK(got == want);
}

TEST_CASE("parallel fixture links the two independent branches") {
    auto got = as_multiset(classify(read_fixture("corpus_mini/par_ndvi.js")));
    std::multiset<RelationInstance> want{
        seq("ee.Image", "normalizedDifference"),
        seq("normalizedDifference", "Map.addLayer"),
        seq("ee.Image", "normalizedDifference"),
        seq("normalizedDifference", "Map.addLayer"),
        par("ee.Image", "ee.Image"),
    };
    CHECK(got == want);
}

TEST_CASE("nested fixture captures the callback relation") {
    auto got = as_multiset(classify(read_fixture("corpus_mini/nested_mapped_ndvi.js")));
    std::multiset<RelationInstance> want{
        seq("ee.ImageCollection", "ee.Geometry.Point"),
        seq("ee.Geometry.Point", "filterBounds"),
        seq("filterBounds", "map"),
        seq("map", "qualityMosaic"),
        seq("qualityMosaic", "Map.addLayer"),
        nest("map", "normalizedDifference"),
    };
    CHECK(got == want);
}

TEST_CASE("control headers nest over their bodies") {
    auto got = as_multiset(classify(
        "if (ee.Image(1).gt(0)) { f(2); } else { g(3); }\n"));
    std::multiset<RelationInstance> want{
        seq("ee.Image", "gt"),
        nest("ee.Image", "f"),
        nest("gt", "f"),
        nest("ee.Image", "g"),
        nest("gt", "g"),
    };
    CHECK(got == want);
}

TEST_CASE("loop headers nest over loop bodies") {
    auto got = as_multiset(classify("while (col.size(1)) { shrink(col); }\n"));
    std::multiset<RelationInstance> want{nest("size", "shrink")};
    CHECK(got == want);
}

TEST_CASE("intersection rule pairs statements with disjoint operator sets") {
    relations::ExtractOptions opts;
    opts.parallel_rule = relations::ParallelRule::intersection;
    auto got = classify(read_fixture("corpus_mini/par_ndvi.js"), opts);
    int parallel_count = 0;
    for (const auto& inst : got) {
        if (inst.kind != RelationKind::parallel) continue;
        ++parallel_count;
        CHECK(inst.op_a <= inst.op_b);
        // statements naming the same operator never pair with each other
        CHECK(inst != par("ee.Image", "ee.Image"));
    }
    // 6 statements, C(6,2)=15 pairs, minus the 3 same-operator pairs
    CHECK(parallel_count == 12);
}

TEST_CASE("parallel instances are canonicalized and order-insensitive") {
    std::mt19937 rng(23);
    for (int i = 0; i < 40; ++i) {
        auto script = testsupport::random_script(rng);
        for (const auto& inst : classify(script)) {
            if (inst.kind == RelationKind::parallel) CHECK(inst.op_a <= inst.op_b);
        }
    }
}

TEST_CASE("aggregate counts triples and sorts deterministically") {
    std::vector<RelationInstance> a{seq("x", "y"), seq("x", "y"), par("p", "q"), nest("m", "n")};
    std::vector<RelationInstance> b{seq("x", "y"), seq("a", "b"), par("p", "q")};
    auto agg = relations::aggregate({a, b});
    REQUIRE(agg.size() == 4);
    CHECK(agg[0].op_a == "x");
    CHECK(agg[0].frequency == 3);
    CHECK(agg[1].op_a == "a");
    CHECK(agg[1].frequency == 1);
    CHECK(relations::to_string(agg[2].kind) == "parallel");
    CHECK(agg[2].frequency == 2);
    CHECK(relations::to_string(agg[3].kind) == "nested");

    // input order does not matter
    auto swapped = relations::aggregate({b, a});
    REQUIRE(swapped.size() == agg.size());
    for (std::size_t i = 0; i < agg.size(); ++i) {
        CHECK(swapped[i].op_a == agg[i].op_a);
        CHECK(swapped[i].op_b == agg[i].op_b);
        CHECK(swapped[i].kind == agg[i].kind);
        CHECK(swapped[i].frequency == agg[i].frequency);
    }
}

TEST_CASE("relations csv round-trips") {
    testsupport::TempDir tmp;
    std::vector<relations::OperatorRelation> rels{
        {"ee.Image", "normalizedDifference", RelationKind::sequential, 3},
        {"ee.Image", "ee.Image", RelationKind::parallel, 1},
        {"map", "with, comma \"and quote\"", RelationKind::nested, 2},
    };
    auto path = tmp.file("relations.csv");
    relations::write_relations_csv(path, rels);
    auto back = relations::read_relations_csv(path);
    REQUIRE(back.size() == rels.size());
    for (std::size_t i = 0; i < rels.size(); ++i) {
        CHECK(back[i].op_a == rels[i].op_a);
        CHECK(back[i].op_b == rels[i].op_b);
        CHECK(back[i].kind == rels[i].kind);
        CHECK(back[i].frequency == rels[i].frequency);
    }
}

TEST_CASE("per-script csv round-trips deduplicated triples") {
    testsupport::TempDir tmp;
    std::vector<std::pair<std::string, std::vector<RelationInstance>>> per_script{
        {"a.js", {seq("x", "y"), seq("x", "y"), par("p", "q")}},
        {"b.js", {nest("m", "n")}},
    };
    auto path = tmp.file("per_script.csv");
    relations::write_per_script_csv(path, per_script);
    auto back = relations::read_per_script_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back.at("a.js").size() == 2);  // duplicate collapsed
    CHECK(back.at("b.js") == std::vector<RelationInstance>{nest("m", "n")});
}
