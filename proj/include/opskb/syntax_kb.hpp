#pragma once

// Operator syntax knowledge table: the authoritative list of operator
// signatures, used to validate extracted names against known operators.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "opskb/relations.hpp"

namespace opskb::syntax_kb {

struct Parameter {
    std::string name;
    std::string type;
    std::optional<std::string> default_value;
    std::string details;

    bool operator==(const Parameter&) const = default;
};

struct SyntaxEntry {
    std::string full_name;
    std::string short_name;
    std::string description;
    std::string output_type;
    std::vector<Parameter> parameters;

    bool operator==(const SyntaxEntry&) const = default;
};

/// Load entries from a .csv (header: index,full_name,short_name,description,
/// output_type,parameters; parameters cell is a JSON array) or a .json file
/// (array of entry objects). Throws std::runtime_error with the offending
/// row on schema violations and on duplicate full_name values.
std::vector<SyntaxEntry> load_syntax(const std::filesystem::path& path);

/// Write entries in the canonical CSV form load_syntax accepts.
void write_syntax_csv(const std::filesystem::path& path,
                      const std::vector<SyntaxEntry>& entries);

struct NameReport {
    std::uint64_t known = 0;          // occurrences matching the table
    std::uint64_t unknown_count = 0;  // occurrences not matching
    std::vector<std::string> unknown;  // distinct unknown canonical names, sorted
};

/// An occurrence is known when its canonical name equals some entry's
/// full_name, or its short name equals the final dotted segment of some
/// entry's short_name. Case-sensitive; no fuzzy matching.
NameReport check_known(const std::vector<relations::OperatorOccurrence>& occurrences,
                       const std::vector<SyntaxEntry>& entries);

/// JSON report: {"known": n, "unknown_count": m, "unknown": [names...]}.
void write_name_report(const std::filesystem::path& path, const NameReport& report);

}  // namespace opskb::syntax_kb
