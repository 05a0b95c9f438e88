#pragma once

// End-to-end wiring: ingest -> clean -> validate -> extract -> mine ->
// build-kb, writing the four knowledge tables plus a reproducible run
// manifest into one output directory. Every artifact is written to a
// `.partial` file first and renamed on success, so a failing stage leaves
// its partial output behind for inspection without ever producing a
// half-written final file.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "opskb/miner.hpp"
#include "opskb/relations.hpp"

namespace opskb::pipeline {

inline constexpr const char* kToolVersion = "opskb 0.1.0";

enum class TxnMode { script, relation_pairs };
std::string to_string(TxnMode m);
TxnMode txn_mode_from_string(const std::string& s);

struct PipelineConfig {
    std::filesystem::path corpus_dir;
    std::filesystem::path syntax_path;
    std::filesystem::path out_dir;

    double min_support = 0.05;
    double start_support = 0.20;
    double min_confidence = 0.0;
    relations::ParallelRule parallel_rule = relations::ParallelRule::dataflow;
    TxnMode txn_mode = TxnMode::script;
    unsigned threads = 1;
    bool paper_style = false;  // chains serialized with "->" only
    bool dedup = false;
    std::uint64_t max_bytes = 2 * 1024 * 1024;
    std::chrono::milliseconds parse_timeout{10000};
};

/// Raised when a stage fails; carries the stage name for reporting.
struct StageError : std::runtime_error {
    std::string stage;
    StageError(std::string stage_name, const std::string& cause)
        : std::runtime_error(stage_name + ": " + cause), stage(std::move(stage_name)) {}
};

/// Missing or unreadable input, as opposed to bad configuration.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StageCounts {
    std::uint64_t ingested = 0;
    std::uint64_t cleaned = 0;
    std::uint64_t validated = 0;
    std::uint64_t rejected = 0;
    std::uint64_t relations = 0;
    std::uint64_t itemsets = 0;
    std::uint64_t chains = 0;
};

struct RunManifest {
    std::string tool_version = kToolVersion;
    std::string timestamp;  // ISO 8601 UTC
    nlohmann::ordered_json config;
    nlohmann::ordered_json inputs;   // content digests
    StageCounts counts;
    nlohmann::ordered_json outputs;  // table digests

    nlohmann::ordered_json to_json() const;
};

/// Writes to `path` + ".partial" via `writer`, renaming into place on
/// success. On exception the partial file is retained and `path` is not
/// touched.
void atomic_write(const std::filesystem::path& path,
                  const std::function<void(const std::filesystem::path&)>& writer);

/// Transactions for the miner: one per script (its distinct items) or one
/// per recorded relation instance (the unique sorted operator pair).
std::vector<miner::Transaction> build_transactions(
    const std::vector<miner::TransactionRecord>& records, TxnMode mode);

/// Runs all stages, writes syntax.csv, relations.csv, itemsets.csv,
/// rules.csv, chains.csv, the jsonl intermediates, and manifest.json into
/// config.out_dir. Throws StageError on stage failure and
/// std::invalid_argument on bad config.
RunManifest run_pipeline(const PipelineConfig& config);

}  // namespace opskb::pipeline
