#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace opskb::corpus {

enum class Stage { raw, cleaned, validated, rejected };

std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);

/// One source script as it moves through the pipeline. byte_size always
/// equals text.size(); stages only move forward (raw -> cleaned ->
/// validated, with rejection possible from raw or cleaned).
struct ScriptRecord {
    std::string script_id;     // relative path within the ingested corpus dir
    std::string source_path;   // original absolute or as-given path
    std::string text;
    std::uint64_t byte_size = 0;
    Stage stage = Stage::raw;
    std::string reject_reason;  // empty unless stage == rejected

    void set_text(std::string t);
    /// Enforces the forward-only stage transitions; throws on violation.
    void transition(Stage next, std::string reason = "");
};

struct CorpusStats {
    std::uint64_t script_count = 0;
    std::uint64_t total_bytes = 0;
    std::uint64_t min_bytes = 0;
    std::uint64_t max_bytes = 0;
    std::uint64_t rejected_count = 0;
};

struct IngestOptions {
    std::vector<std::string> extensions{".js"};
    std::uint64_t max_bytes = 2 * 1024 * 1024;
    bool dedup = false;
};

/// Recursively collects matching files under root (sorted by relative
/// path), reads them, and produces raw records. Files that are not valid
/// UTF-8 or exceed max_bytes come back as rejected records with reasons
/// "encoding" / "oversize" (text cleared). With dedup enabled, repeats of
/// an already-seen content hash are rejected as "duplicate".
std::vector<ScriptRecord> ingest(const std::filesystem::path& root, const IngestOptions& opts = {});

struct StripResult {
    std::string text;
    bool unterminated_block = false;
};

/// Removes // and /* */ comments while leaving string, template, and regex
/// literals untouched. A '/' opens a regex only where the last significant
/// token allows an operand (heuristic: after (,=,:,[..., a keyword, start
/// of input). Horizontal whitespace immediately before a removed comment
/// is removed with it; a removed block comment leaves one space behind iff
/// gluing its neighbors could join tokens. An unterminated block comment
/// strips to end of input and sets the flag.
StripResult strip_comments(std::string_view source);

/// Applies strip_comments to a raw record and advances it to cleaned.
void clean_record(ScriptRecord& rec);

bool utf8_valid(std::string_view text);

/// Aggregates over all records (rejected ones included; their byte_size
/// reflects stored text). Empty input yields all zeros.
CorpusStats corpus_stats(const std::vector<ScriptRecord>& records);

void write_jsonl(std::ostream& out, const std::vector<ScriptRecord>& records);
void write_jsonl_file(const std::filesystem::path& path, const std::vector<ScriptRecord>& records);
std::vector<ScriptRecord> read_jsonl(std::istream& in);
std::vector<ScriptRecord> read_jsonl_file(const std::filesystem::path& path);

}  // namespace opskb::corpus
