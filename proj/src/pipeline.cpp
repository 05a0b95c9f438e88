#include "opskb/pipeline.hpp"

#include <algorithm>
#include <ctime>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include "opskb/chains.hpp"
#include "opskb/corpus.hpp"
#include "opskb/parser.hpp"
#include "opskb/syntax_kb.hpp"
#include "opskb/util/hash.hpp"

namespace opskb::pipeline {

namespace fs = std::filesystem;

namespace {

std::string iso_utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(data);
}

// chunked index-parallel loop; results land by index so order is stable
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
    if (count == 0) return;
    std::size_t workers = std::min<std::size_t>(threads == 0 ? 1 : threads, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::mutex mu;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t begin = count * w / workers;
        std::size_t end = count * (w + 1) / workers;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

template <typename Fn>
auto run_stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

nlohmann::ordered_json config_snapshot(const PipelineConfig& c) {
    nlohmann::ordered_json j;
    j["corpus_dir"] = c.corpus_dir.string();
    j["syntax"] = c.syntax_path.string();
    j["out_dir"] = c.out_dir.string();
    j["min_support"] = c.min_support;
    j["start_support"] = c.start_support;
    j["min_confidence"] = c.min_confidence;
    j["parallel_rule"] =
        c.parallel_rule == relations::ParallelRule::dataflow ? "dataflow" : "intersection";
    j["txn_mode"] = to_string(c.txn_mode);
    j["threads"] = c.threads;
    j["paper_style"] = c.paper_style;
    j["dedup"] = c.dedup;
    j["max_bytes"] = c.max_bytes;
    j["parse_timeout_ms"] = c.parse_timeout.count();
    return j;
}

}  // namespace

std::string to_string(TxnMode m) {
    return m == TxnMode::script ? "script" : "relation_pairs";
}

TxnMode txn_mode_from_string(const std::string& s) {
    if (s == "script") return TxnMode::script;
    if (s == "relation_pairs") return TxnMode::relation_pairs;
    throw std::invalid_argument("unknown transaction mode: " + s);
}

void atomic_write(const fs::path& path, const std::function<void(const fs::path&)>& writer) {
    fs::path partial = path;
    partial += ".partial";
    writer(partial);
    fs::rename(partial, path);
}

std::vector<miner::Transaction> build_transactions(
    const std::vector<miner::TransactionRecord>& records, TxnMode mode) {
    std::vector<miner::Transaction> txns;
    if (mode == TxnMode::script) {
        for (const auto& rec : records) {
            if (!rec.items.empty()) txns.push_back(rec.items);
        }
        return txns;
    }
    for (const auto& rec : records) {
        for (const auto& rel : rec.relation_items) {
            if (rel[0] == rel[1]) {
                txns.push_back({rel[0]});
            } else if (rel[0] < rel[1]) {
                txns.push_back({rel[0], rel[1]});
            } else {
                txns.push_back({rel[1], rel[0]});
            }
        }
    }
    return txns;
}

nlohmann::ordered_json RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["tool_version"] = tool_version;
    j["timestamp"] = timestamp;
    j["config"] = config;
    j["inputs"] = inputs;
    j["counts"] = {{"ingested", counts.ingested},   {"cleaned", counts.cleaned},
                   {"validated", counts.validated}, {"rejected", counts.rejected},
                   {"relations", counts.relations}, {"itemsets", counts.itemsets},
                   {"chains", counts.chains}};
    j["outputs"] = outputs;
    return j;
}

RunManifest run_pipeline(const PipelineConfig& config) {
    if (config.corpus_dir.empty() || config.syntax_path.empty() || config.out_dir.empty()) {
        throw std::invalid_argument("corpus, syntax, and output paths are all required");
    }
    if (!fs::is_directory(config.corpus_dir)) {
        throw InputError("corpus directory not found: " + config.corpus_dir.string());
    }
    if (!fs::is_regular_file(config.syntax_path)) {
        throw InputError("syntax table not found: " + config.syntax_path.string());
    }
    // validate the syntax table before spending time on the corpus
    std::vector<syntax_kb::SyntaxEntry> syntax_entries;
    try {
        syntax_entries = syntax_kb::load_syntax(config.syntax_path);
    } catch (const std::exception& e) {
        throw InputError(e.what());
    }
    miner::MinerConfig miner_cfg;
    miner_cfg.min_support = config.min_support;
    miner_cfg.start_support = std::max(config.start_support, config.min_support);
    miner_cfg.validate();
    fs::create_directories(config.out_dir);

    RunManifest manifest;
    manifest.timestamp = iso_utc_now();
    manifest.config = config_snapshot(config);

    // input digests before any processing
    {
        nlohmann::ordered_json corpus_digests;
        std::vector<fs::path> files;
        for (const auto& entry : fs::recursive_directory_iterator(config.corpus_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".js") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const fs::path& f : files) {
            corpus_digests[fs::relative(f, config.corpus_dir).generic_string()] = file_digest(f);
        }
        manifest.inputs["corpus"] = std::move(corpus_digests);
        manifest.inputs["syntax"] = file_digest(config.syntax_path);
    }

    // ingest
    std::vector<corpus::ScriptRecord> records = run_stage("ingest", [&] {
        corpus::IngestOptions opts;
        opts.max_bytes = config.max_bytes;
        opts.dedup = config.dedup;
        auto recs = corpus::ingest(config.corpus_dir, opts);
        atomic_write(config.out_dir / "raw.jsonl",
                     [&](const fs::path& p) { corpus::write_jsonl_file(p, recs); });
        return recs;
    });
    manifest.counts.ingested = records.size();

    // clean
    run_stage("clean", [&] {
        for (auto& rec : records) {
            if (rec.stage == corpus::Stage::raw) corpus::clean_record(rec);
        }
        atomic_write(config.out_dir / "cleaned.jsonl",
                     [&](const fs::path& p) { corpus::write_jsonl_file(p, records); });
        return 0;
    });
    for (const auto& rec : records) {
        if (rec.stage == corpus::Stage::cleaned) ++manifest.counts.cleaned;
    }

    // validate: parse every cleaned record, keeping trees for extraction
    std::vector<ast::SyntaxTree> trees = run_stage("validate", [&] {
        std::vector<std::optional<ast::SyntaxTree>> parsed(records.size());
        ast::ParseOptions popts;
        popts.timeout = config.parse_timeout;
        parallel_for(records.size(), config.threads, [&](std::size_t i) {
            if (records[i].stage != corpus::Stage::cleaned) return;
            auto result = ast::parse(records[i], popts);
            if (auto* tree = std::get_if<ast::SyntaxTree>(&result)) {
                parsed[i] = std::move(*tree);
            }
        });

        std::vector<corpus::ScriptRecord> valid, rejects;
        std::vector<ast::SyntaxTree> out;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (records[i].stage == corpus::Stage::validated) {
                valid.push_back(records[i]);
                out.push_back(std::move(*parsed[i]));
            } else if (records[i].stage == corpus::Stage::rejected) {
                rejects.push_back(records[i]);
            }
        }
        atomic_write(config.out_dir / "valid.jsonl",
                     [&](const fs::path& p) { corpus::write_jsonl_file(p, valid); });
        atomic_write(config.out_dir / "rejects.jsonl",
                     [&](const fs::path& p) { corpus::write_jsonl_file(p, rejects); });
        return out;
    });
    for (const auto& rec : records) {
        if (rec.stage == corpus::Stage::validated) ++manifest.counts.validated;
        if (rec.stage == corpus::Stage::rejected) ++manifest.counts.rejected;
    }

    // extract: relations, chains, and transactions per script
    std::vector<miner::TransactionRecord> txn_records = run_stage("extract", [&] {
        relations::ExtractOptions ropts;
        ropts.parallel_rule = config.parallel_rule;

        struct PerScript {
            std::vector<relations::RelationInstance> instances;
            std::optional<std::string> chain;
            miner::TransactionRecord txn;
        };
        std::vector<PerScript> results(trees.size());
        parallel_for(trees.size(), config.threads, [&](std::size_t i) {
            const ast::SyntaxTree& tree = trees[i];
            relations::ScriptAnalysis analysis = relations::analyze(tree);
            PerScript& r = results[i];
            r.instances = relations::classify_relations(tree, analysis, ropts);
            try {
                r.chain = chains::serialize(chains::build_chain(tree, analysis),
                                            config.paper_style);
            } catch (const std::runtime_error&) {
                // zero-operator script: no chain row
            }
            r.txn.script_id = tree.script_id;
            std::set<std::string> items;
            for (const auto& occ : analysis.occurrences) {
                if (!occ.dynamic) items.insert(occ.canonical);
            }
            r.txn.items.assign(items.begin(), items.end());
            for (const auto& inst : r.instances) {
                r.txn.relation_items.push_back(
                    {inst.op_a, inst.op_b, relations::to_string(inst.kind)});
            }
        });

        std::vector<std::vector<relations::RelationInstance>> per_script;
        std::vector<std::pair<std::string, std::string>> chain_rows;
        std::vector<miner::TransactionRecord> txns;
        for (std::size_t i = 0; i < results.size(); ++i) {
            per_script.push_back(std::move(results[i].instances));
            if (results[i].chain) {
                chain_rows.emplace_back(trees[i].script_id, std::move(*results[i].chain));
            }
            if (!results[i].txn.items.empty()) txns.push_back(std::move(results[i].txn));
        }

        auto aggregated = relations::aggregate(per_script);
        manifest.counts.relations = aggregated.size();
        manifest.counts.chains = chain_rows.size();
        atomic_write(config.out_dir / "relations.csv", [&](const fs::path& p) {
            relations::write_relations_csv(p, aggregated);
        });
        atomic_write(config.out_dir / "chains.csv", [&](const fs::path& p) {
            chains::write_chains_csv(p, chain_rows);
        });
        atomic_write(config.out_dir / "txns.jsonl",
                     [&](const fs::path& p) { miner::write_txns_jsonl(p, txns); });
        return txns;
    });

    // mine
    run_stage("mine", [&] {
        auto txns = build_transactions(txn_records, config.txn_mode);
        auto itemsets = miner::mine_with_optimizations(txns, miner_cfg);
        auto rules = miner::derive_rules(itemsets, txns.size(), config.min_confidence);
        manifest.counts.itemsets = itemsets.size();
        atomic_write(config.out_dir / "itemsets.csv", [&](const fs::path& p) {
            miner::write_itemsets_csv(p, itemsets, txns.size());
        });
        atomic_write(config.out_dir / "rules.csv",
                     [&](const fs::path& p) { miner::write_rules_csv(p, rules); });
        return 0;
    });

    // build-kb: canonical copy of the validated syntax table, then the manifest
    run_stage("build-kb", [&] {
        atomic_write(config.out_dir / "syntax.csv",
                     [&](const fs::path& p) { syntax_kb::write_syntax_csv(p, syntax_entries); });
        return 0;
    });

    for (const char* table : {"syntax.csv", "relations.csv", "itemsets.csv", "rules.csv",
                              "chains.csv"}) {
        manifest.outputs[table] = file_digest(config.out_dir / table);
    }
    atomic_write(config.out_dir / "manifest.json", [&](const fs::path& p) {
        std::ofstream out(p, std::ios::binary);
        out << manifest.to_json().dump(2) << '\n';
    });
    return manifest;
}

}  // namespace opskb::pipeline
