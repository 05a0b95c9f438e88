// opskb: corpus-to-knowledge-base toolkit for geospatial scripts.
//
// Exit codes: 0 success, 2 configuration error, 3 input error,
// 4 stage failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <variant>

#include <CLI11.hpp>

#include "opskb/chains.hpp"
#include "opskb/corpus.hpp"
#include "opskb/evalkit.hpp"
#include "opskb/miner.hpp"
#include "opskb/parser.hpp"
#include "opskb/pipeline.hpp"
#include "opskb/relations.hpp"
#include "opskb/retrieval.hpp"
#include "opskb/syntax_kb.hpp"

namespace fs = std::filesystem;
using opskb::pipeline::InputError;

namespace {

void require_file(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw InputError("input file not found: " + path.string());
}

std::string read_text_file(const fs::path& path) {
    require_file(path);
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// readers throw plain runtime_error on malformed content; those are input
// problems from the CLI's point of view
template <typename Fn>
auto read_input(Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw InputError(e.what());
    }
}

struct ParsedScript {
    std::string script_id;
    opskb::ast::SyntaxTree tree;
};

std::vector<ParsedScript> parse_validated(const fs::path& path) {
    require_file(path);
    auto records = read_input([&] { return opskb::corpus::read_jsonl_file(path); });
    std::vector<ParsedScript> out;
    for (const auto& rec : records) {
        if (rec.stage != opskb::corpus::Stage::validated) continue;
        auto result = opskb::ast::parse_source(rec.text, rec.script_id);
        if (auto* failure = std::get_if<opskb::ast::ParseFailure>(&result)) {
            throw InputError("validated script " + rec.script_id +
                             " no longer parses: " + failure->message);
        }
        out.push_back({rec.script_id, std::move(std::get<opskb::ast::SyntaxTree>(result))});
    }
    return out;
}

int run_ingest(const fs::path& dir, const fs::path& out, std::vector<std::string> exts,
               std::uint64_t max_bytes, bool dedup) {
    if (!fs::is_directory(dir)) throw InputError("corpus directory not found: " + dir.string());
    opskb::corpus::IngestOptions opts;
    if (!exts.empty()) {
        for (auto& e : exts) {
            if (!e.empty() && e.front() != '.') e.insert(e.begin(), '.');
        }
        opts.extensions = std::move(exts);
    }
    opts.max_bytes = max_bytes;
    opts.dedup = dedup;
    auto records = opskb::corpus::ingest(dir, opts);
    opskb::corpus::write_jsonl_file(out, records);
    auto stats = opskb::corpus::corpus_stats(records);
    std::printf("ingested %llu scripts (%llu rejected) -> %s\n",
                static_cast<unsigned long long>(stats.script_count),
                static_cast<unsigned long long>(stats.rejected_count), out.string().c_str());
    return 0;
}

int run_clean(const fs::path& in, const fs::path& out) {
    require_file(in);
    auto records = read_input([&] { return opskb::corpus::read_jsonl_file(in); });
    std::uint64_t cleaned = 0;
    for (auto& rec : records) {
        if (rec.stage == opskb::corpus::Stage::raw) {
            opskb::corpus::clean_record(rec);
            ++cleaned;
        }
    }
    opskb::corpus::write_jsonl_file(out, records);
    std::printf("cleaned %llu scripts -> %s\n", static_cast<unsigned long long>(cleaned),
                out.string().c_str());
    return 0;
}

int run_validate(const fs::path& in, const fs::path& out, const fs::path& rejects_path,
                 const std::string& ast_dir) {
    require_file(in);
    auto records = read_input([&] { return opskb::corpus::read_jsonl_file(in); });
    std::vector<opskb::corpus::ScriptRecord> valid, rejects;
    for (auto& rec : records) {
        if (rec.stage == opskb::corpus::Stage::rejected) {
            rejects.push_back(rec);
            continue;
        }
        if (rec.stage != opskb::corpus::Stage::cleaned) continue;
        auto result = opskb::ast::parse(rec);
        if (auto* tree = std::get_if<opskb::ast::SyntaxTree>(&result)) {
            valid.push_back(rec);
            if (!ast_dir.empty()) {
                fs::path target = fs::path(ast_dir) / (rec.script_id + ".json");
                fs::create_directories(target.parent_path());
                opskb::ast::save_json_file(*tree, target);
            }
        } else {
            rejects.push_back(rec);
        }
    }
    opskb::corpus::write_jsonl_file(out, valid);
    opskb::corpus::write_jsonl_file(rejects_path, rejects);
    std::printf("validated %zu scripts, rejected %zu\n", valid.size(), rejects.size());
    return 0;
}

int run_extract(const fs::path& in, const fs::path& relations_out,
                const std::string& per_script_out, const std::string& chains_out,
                const std::string& txns_out, const std::string& parallel_rule,
                bool paper_style) {
    opskb::relations::ExtractOptions opts;
    if (parallel_rule == "dataflow") {
        opts.parallel_rule = opskb::relations::ParallelRule::dataflow;
    } else if (parallel_rule == "intersection") {
        opts.parallel_rule = opskb::relations::ParallelRule::intersection;
    } else {
        throw std::invalid_argument("unknown parallel rule: " + parallel_rule);
    }

    auto scripts = parse_validated(in);
    std::vector<std::vector<opskb::relations::RelationInstance>> per_script;
    std::vector<std::pair<std::string, std::vector<opskb::relations::RelationInstance>>> named;
    std::vector<std::pair<std::string, std::string>> chain_rows;
    std::vector<opskb::miner::TransactionRecord> txns;
    for (const auto& script : scripts) {
        auto analysis = opskb::relations::analyze(script.tree);
        auto instances = opskb::relations::classify_relations(script.tree, analysis, opts);
        if (!chains_out.empty()) {
            try {
                chain_rows.emplace_back(
                    script.script_id,
                    opskb::chains::serialize(opskb::chains::build_chain(script.tree, analysis),
                                             paper_style));
            } catch (const std::runtime_error&) {
                // zero-operator script: no chain row
            }
        }
        if (!txns_out.empty()) {
            opskb::miner::TransactionRecord rec;
            rec.script_id = script.script_id;
            std::set<std::string> items;
            for (const auto& occ : analysis.occurrences) {
                if (!occ.dynamic) items.insert(occ.canonical);
            }
            rec.items.assign(items.begin(), items.end());
            for (const auto& inst : instances) {
                rec.relation_items.push_back(
                    {inst.op_a, inst.op_b, opskb::relations::to_string(inst.kind)});
            }
            if (!rec.items.empty()) txns.push_back(std::move(rec));
        }
        named.emplace_back(script.script_id, instances);
        per_script.push_back(std::move(instances));
    }

    auto aggregated = opskb::relations::aggregate(per_script);
    opskb::relations::write_relations_csv(relations_out, aggregated);
    if (!per_script_out.empty()) opskb::relations::write_per_script_csv(per_script_out, named);
    if (!chains_out.empty()) opskb::chains::write_chains_csv(chains_out, chain_rows);
    if (!txns_out.empty()) opskb::miner::write_txns_jsonl(txns_out, txns);
    std::printf("extracted %zu relation rows from %zu scripts (%zu chains)\n", aggregated.size(),
                scripts.size(), chain_rows.size());
    return 0;
}

int run_mine(const fs::path& in, const fs::path& itemsets_out, const fs::path& rules_out,
             const opskb::miner::MinerConfig& cfg, const std::string& txn_mode,
             double min_confidence, bool plain) {
    require_file(in);
    cfg.validate();
    auto records = read_input([&] { return opskb::miner::read_txns_jsonl(in); });
    auto txns = opskb::pipeline::build_transactions(
        records, opskb::pipeline::txn_mode_from_string(txn_mode));
    auto itemsets = plain ? opskb::miner::fp_growth(txns, cfg)
                          : opskb::miner::mine_with_optimizations(txns, cfg);
    auto rules = opskb::miner::derive_rules(itemsets, txns.size(), min_confidence);
    opskb::miner::write_itemsets_csv(itemsets_out, itemsets, txns.size());
    opskb::miner::write_rules_csv(rules_out, rules);
    std::printf("mined %zu itemsets and %zu rules from %zu transactions\n", itemsets.size(),
                rules.size(), txns.size());
    return 0;
}

int run_check_names(const fs::path& in, const fs::path& syntax_path, const fs::path& report) {
    require_file(syntax_path);
    auto entries = read_input([&] { return opskb::syntax_kb::load_syntax(syntax_path); });
    auto scripts = parse_validated(in);
    std::vector<opskb::relations::OperatorOccurrence> all;
    for (const auto& script : scripts) {
        auto occs = opskb::relations::extract_occurrences(script.tree);
        all.insert(all.end(), occs.begin(), occs.end());
    }
    auto result = opskb::syntax_kb::check_known(all, entries);
    opskb::syntax_kb::write_name_report(report, result);
    std::printf("known %llu, unknown %llu (%zu distinct names)\n",
                static_cast<unsigned long long>(result.known),
                static_cast<unsigned long long>(result.unknown_count), result.unknown.size());
    return 0;
}

int run_query(const std::string& text, const fs::path& kb_dir, std::size_t top_k,
              const std::string& prompt_out, const std::string& template_path,
              std::size_t table_quota, bool generate) {
    if (!fs::is_directory(kb_dir)) {
        throw InputError("knowledge-base directory not found: " + kb_dir.string());
    }
    auto entries = read_input([&] { return opskb::retrieval::load_kb_entries(kb_dir); });
    auto embedder = opskb::retrieval::make_embedder();
    auto index = opskb::retrieval::build_index(std::move(entries), *embedder);

    std::vector<opskb::retrieval::RetrievalHit> hits;
    if (index.size() > 0) {
        auto query_vec = embedder->embed_one(text);
        if (table_quota == 0) {
            hits = index.search(query_vec, top_k);
        } else {
            // take the global ranking, capping each table's share
            auto ranked = index.search(query_vec, index.size());
            std::map<opskb::retrieval::Table, std::size_t> taken;
            for (const auto& hit : ranked) {
                if (hits.size() >= top_k) break;
                auto table = index.find(hit.entry_id)->table;
                if (taken[table] >= table_quota) continue;
                ++taken[table];
                hits.push_back(hit);
                hits.back().rank = static_cast<int>(hits.size());
            }
        }
    }

    for (const auto& hit : hits) {
        std::fprintf(stderr, "%d\t%.4f\t%s\t%s\n", hit.rank, hit.score, hit.entry_id.c_str(),
                     index.find(hit.entry_id)->text.c_str());
    }

    std::string prompt_template = template_path.empty()
                                      ? opskb::retrieval::default_prompt_template()
                                      : read_text_file(template_path);
    std::string prompt = opskb::retrieval::assemble_prompt(text, hits, index, prompt_template);
    if (!prompt_out.empty()) {
        std::ofstream out(prompt_out, std::ios::binary);
        out << prompt;
    } else if (!generate) {
        std::fputs(prompt.c_str(), stdout);
    }
    if (generate) {
        std::string answer = opskb::retrieval::llm_generate(prompt);
        std::fputs(answer.c_str(), stdout);
        std::fputc('\n', stdout);
    }
    return 0;
}

int run_eval_relations(const fs::path& pred, const fs::path& truth, const fs::path& report) {
    require_file(pred);
    require_file(truth);
    auto predicted = read_input([&] { return opskb::relations::read_per_script_csv(pred); });
    auto expected = read_input([&] { return opskb::relations::read_per_script_csv(truth); });
    auto json = opskb::evalkit::relations_report(predicted, expected);
    std::ofstream out(report, std::ios::binary);
    out << json.dump(2) << '\n';
    std::printf("scored %zu scripts -> %s\n", json["scripts"].size(), report.string().c_str());
    return 0;
}

int run_eval_chains(const fs::path& pred, const fs::path& truth, const fs::path& report,
                    std::size_t ngram_n, const std::string& ngram_coef,
                    const std::string& lcs_norm, bool with_embedding) {
    require_file(pred);
    require_file(truth);
    auto predicted = read_input([&] { return opskb::chains::read_chains_csv(pred); });
    auto expected = read_input([&] { return opskb::chains::read_chains_csv(truth); });

    opskb::evalkit::ChainEvalOptions opts;
    opts.ngram_n = ngram_n;
    if (ngram_coef == "dice") {
        opts.ngram_coef = opskb::evalkit::NgramCoef::dice;
    } else if (ngram_coef == "jaccard") {
        opts.ngram_coef = opskb::evalkit::NgramCoef::jaccard;
    } else {
        throw std::invalid_argument("unknown ngram coefficient: " + ngram_coef);
    }
    if (lcs_norm == "max") {
        opts.lcs_norm = opskb::evalkit::LcsNorm::max_len;
    } else if (lcs_norm == "mean") {
        opts.lcs_norm = opskb::evalkit::LcsNorm::mean_len;
    } else {
        throw std::invalid_argument("unknown lcs normalizer: " + lcs_norm);
    }
    std::unique_ptr<opskb::retrieval::Embedder> embedder;
    if (with_embedding) {
        embedder = opskb::retrieval::make_embedder();
        opts.embedder = embedder.get();
    }
    auto json = opskb::evalkit::chains_report(predicted, expected, opts);
    std::ofstream out(report, std::ios::binary);
    out << json.dump(2) << '\n';
    std::printf("scored %zu scripts -> %s\n", json["scripts"].size(), report.string().c_str());
    return 0;
}

int run_pipeline_cmd(const opskb::pipeline::PipelineConfig& config) {
    auto manifest = opskb::pipeline::run_pipeline(config);
    std::printf(
        "pipeline done: ingested %llu, validated %llu, rejected %llu, "
        "%llu relations, %llu itemsets, %llu chains -> %s\n",
        static_cast<unsigned long long>(manifest.counts.ingested),
        static_cast<unsigned long long>(manifest.counts.validated),
        static_cast<unsigned long long>(manifest.counts.rejected),
        static_cast<unsigned long long>(manifest.counts.relations),
        static_cast<unsigned long long>(manifest.counts.itemsets),
        static_cast<unsigned long long>(manifest.counts.chains),
        config.out_dir.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geospatial operator knowledge-base toolkit"};
    app.require_subcommand(1);
    std::function<int()> action;

    // ingest
    {
        auto* cmd = app.add_subcommand("ingest", "collect scripts from a directory");
        auto dir = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto exts = std::make_shared<std::vector<std::string>>();
        auto max_bytes = std::make_shared<std::uint64_t>(2 * 1024 * 1024);
        auto dedup = std::make_shared<bool>(false);
        cmd->add_option("dir", *dir, "corpus root directory")->required();
        cmd->add_option("--out", *out, "raw records jsonl")->required();
        cmd->add_option("--ext", *exts, "file extensions to collect (default .js)");
        cmd->add_option("--max-bytes", *max_bytes, "per-file size cap");
        cmd->add_flag("--dedup", *dedup, "reject exact duplicate contents");
        cmd->callback([=, &action] {
            action = [=] { return run_ingest(*dir, *out, *exts, *max_bytes, *dedup); };
        });
    }

    // clean
    {
        auto* cmd = app.add_subcommand("clean", "strip comments from raw records");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        cmd->add_option("input", *in, "raw records jsonl")->required();
        cmd->add_option("--out", *out, "cleaned records jsonl")->required();
        cmd->callback([=, &action] { action = [=] { return run_clean(*in, *out); }; });
    }

    // validate
    {
        auto* cmd = app.add_subcommand("validate", "parse cleaned records");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto rejects = std::make_shared<std::string>();
        auto ast_dir = std::make_shared<std::string>();
        cmd->add_option("input", *in, "cleaned records jsonl")->required();
        cmd->add_option("--out", *out, "validated records jsonl")->required();
        cmd->add_option("--rejects", *rejects, "rejected records jsonl")->required();
        cmd->add_option("--ast-dir", *ast_dir, "write one AST json per script here");
        cmd->callback(
            [=, &action] { action = [=] { return run_validate(*in, *out, *rejects, *ast_dir); }; });
    }

    // extract
    {
        auto* cmd = app.add_subcommand("extract", "extract operator relations and chains");
        auto in = std::make_shared<std::string>();
        auto relations_out = std::make_shared<std::string>();
        auto per_script = std::make_shared<std::string>();
        auto chains_out = std::make_shared<std::string>();
        auto txns_out = std::make_shared<std::string>();
        auto rule = std::make_shared<std::string>("dataflow");
        auto paper_style = std::make_shared<bool>(false);
        cmd->add_option("input", *in, "validated records jsonl")->required();
        cmd->add_option("--relations", *relations_out, "aggregated relations csv")->required();
        cmd->add_option("--per-script", *per_script, "per-script relation triples csv");
        cmd->add_option("--chains", *chains_out, "relationship chains csv");
        cmd->add_option("--txns", *txns_out, "transactions jsonl for mining");
        cmd->add_option("--parallel-rule", *rule, "dataflow|intersection");
        cmd->add_flag("--paper-style", *paper_style, "serialize chains with -> only");
        cmd->callback([=, &action] {
            action = [=] {
                return run_extract(*in, *relations_out, *per_script, *chains_out, *txns_out,
                                   *rule, *paper_style);
            };
        });
    }

    // mine
    {
        auto* cmd = app.add_subcommand("mine", "mine frequent itemsets and rules");
        auto in = std::make_shared<std::string>();
        auto itemsets_out = std::make_shared<std::string>();
        auto rules_out = std::make_shared<std::string>();
        auto cfg = std::make_shared<opskb::miner::MinerConfig>();
        auto txn_mode = std::make_shared<std::string>("script");
        auto min_confidence = std::make_shared<double>(0.0);
        auto plain = std::make_shared<bool>(false);
        cmd->add_option("input", *in, "transactions jsonl")->required();
        cmd->add_option("--itemsets", *itemsets_out, "frequent itemsets csv")->required();
        cmd->add_option("--rules", *rules_out, "association rules csv")->required();
        cmd->add_option("--min-support", cfg->min_support, "support threshold");
        cmd->add_option("--start-support", cfg->start_support, "descent ladder start");
        cmd->add_option("--low-freq-floor", cfg->low_freq_floor, "absolute count floor");
        cmd->add_option("--batch-size", cfg->batch_size, "transactions per counting batch");
        cmd->add_option("--txn-mode", *txn_mode, "script|relation_pairs");
        cmd->add_option("--min-confidence", *min_confidence, "rule confidence threshold");
        cmd->add_flag("--plain", *plain, "disable the mining optimizations");
        cmd->callback([=, &action] {
            action = [=] {
                return run_mine(*in, *itemsets_out, *rules_out, *cfg, *txn_mode, *min_confidence,
                                *plain);
            };
        });
    }

    // check-names
    {
        auto* cmd = app.add_subcommand("check-names", "check operators against the syntax table");
        auto in = std::make_shared<std::string>();
        auto syntax = std::make_shared<std::string>();
        auto report = std::make_shared<std::string>();
        cmd->add_option("input", *in, "validated records jsonl")->required();
        cmd->add_option("--syntax", *syntax, "operator syntax csv")->required();
        cmd->add_option("--report", *report, "unknown-name report json")->required();
        cmd->callback([=, &action] { action = [=] { return run_check_names(*in, *syntax, *report); }; });
    }

    // query
    {
        auto* cmd = app.add_subcommand("query", "retrieve knowledge and assemble a prompt");
        auto text = std::make_shared<std::string>();
        auto kb = std::make_shared<std::string>();
        auto top_k = std::make_shared<std::size_t>(5);
        auto prompt_out = std::make_shared<std::string>();
        auto template_path = std::make_shared<std::string>();
        auto quota = std::make_shared<std::size_t>(0);
        auto generate = std::make_shared<bool>(false);
        cmd->add_option("text", *text, "natural-language query")->required();
        cmd->add_option("--kb", *kb, "knowledge-base directory")->required();
        cmd->add_option("--top-k", *top_k, "number of entries to retrieve");
        cmd->add_option("--prompt-out", *prompt_out, "write the assembled prompt here");
        cmd->add_option("--template", *template_path, "prompt template with {context}/{query}");
        cmd->add_option("--table-quota", *quota, "max hits per table (0 = unlimited)");
        cmd->add_flag("--generate", *generate, "send the prompt to the configured LLM");
        cmd->callback([=, &action] {
            action = [=] {
                return run_query(*text, *kb, *top_k, *prompt_out, *template_path, *quota,
                                 *generate);
            };
        });
    }

    // eval
    {
        auto* cmd = app.add_subcommand("eval", "score predictions against ground truth");
        cmd->require_subcommand(1);
        {
            auto* sub = cmd->add_subcommand("relations", "set overlap metrics per script");
            auto pred = std::make_shared<std::string>();
            auto truth = std::make_shared<std::string>();
            auto report = std::make_shared<std::string>();
            sub->add_option("--pred", *pred, "per-script relation triples csv")->required();
            sub->add_option("--truth", *truth, "expert triples csv")->required();
            sub->add_option("--report", *report, "output report json")->required();
            sub->callback(
                [=, &action] { action = [=] { return run_eval_relations(*pred, *truth, *report); }; });
        }
        {
            auto* sub = cmd->add_subcommand("chains", "chain similarity metrics per script");
            auto pred = std::make_shared<std::string>();
            auto truth = std::make_shared<std::string>();
            auto report = std::make_shared<std::string>();
            auto ngram_n = std::make_shared<std::size_t>(3);
            auto ngram_coef = std::make_shared<std::string>("dice");
            auto lcs_norm = std::make_shared<std::string>("max");
            auto embedding = std::make_shared<bool>(false);
            sub->add_option("--pred", *pred, "predicted chains csv")->required();
            sub->add_option("--truth", *truth, "expert chains csv")->required();
            sub->add_option("--report", *report, "output report json")->required();
            sub->add_option("--ngram-n", *ngram_n, "character n-gram size");
            sub->add_option("--ngram-coef", *ngram_coef, "dice|jaccard");
            sub->add_option("--lcs-norm", *lcs_norm, "max|mean");
            sub->add_flag("--embedding", *embedding, "add embedding cosine column");
            sub->callback([=, &action] {
                action = [=] {
                    return run_eval_chains(*pred, *truth, *report, *ngram_n, *ngram_coef,
                                           *lcs_norm, *embedding);
                };
            });
        }
    }

    // pipeline
    {
        auto* cmd = app.add_subcommand("pipeline", "run all stages into one output directory");
        auto cfg = std::make_shared<opskb::pipeline::PipelineConfig>();
        auto corpus = std::make_shared<std::string>();
        auto syntax = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto rule = std::make_shared<std::string>("dataflow");
        auto txn_mode = std::make_shared<std::string>("script");
        cmd->add_option("--corpus", *corpus, "corpus root directory")->required();
        cmd->add_option("--syntax", *syntax, "operator syntax csv")->required();
        cmd->add_option("--out", *out, "output directory")->required();
        cmd->add_option("--min-support", cfg->min_support, "support threshold");
        cmd->add_option("--start-support", cfg->start_support, "descent ladder start");
        cmd->add_option("--min-confidence", cfg->min_confidence, "rule confidence threshold");
        cmd->add_option("--parallel-rule", *rule, "dataflow|intersection");
        cmd->add_option("--txn-mode", *txn_mode, "script|relation_pairs");
        cmd->add_option("--threads", cfg->threads, "worker threads for parse/extract");
        cmd->add_option("--max-bytes", cfg->max_bytes, "per-file size cap");
        cmd->add_flag("--paper-style", cfg->paper_style, "serialize chains with -> only");
        cmd->add_flag("--dedup", cfg->dedup, "reject exact duplicate contents");
        cmd->callback([=, &action] {
            action = [=] {
                opskb::pipeline::PipelineConfig config = *cfg;
                config.corpus_dir = *corpus;
                config.syntax_path = *syntax;
                config.out_dir = *out;
                if (*rule == "dataflow") {
                    config.parallel_rule = opskb::relations::ParallelRule::dataflow;
                } else if (*rule == "intersection") {
                    config.parallel_rule = opskb::relations::ParallelRule::intersection;
                } else {
                    throw std::invalid_argument("unknown parallel rule: " + *rule);
                }
                config.txn_mode = opskb::pipeline::txn_mode_from_string(*txn_mode);
                return run_pipeline_cmd(config);
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return action ? action() : 2;
    } catch (const opskb::pipeline::StageError& e) {
        std::fprintf(stderr, "stage failure: %s\n", e.what());
        return 4;
    } catch (const InputError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}
