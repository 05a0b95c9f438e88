#include "opskb/syntax_kb.hpp"

#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "opskb/util/csv.hpp"

namespace opskb::syntax_kb {

namespace {

std::string tail_segment(const std::string& dotted) {
    std::size_t dot = dotted.rfind('.');
    return dot == std::string::npos ? dotted : dotted.substr(dot + 1);
}

Parameter parameter_from_json(const nlohmann::json& obj, const std::string& where) {
    if (!obj.is_object()) throw std::runtime_error(where + ": parameter is not an object");
    Parameter p;
    p.name = obj.at("name").get<std::string>();
    p.type = obj.value("type", std::string{});
    if (obj.contains("default") && !obj.at("default").is_null()) {
        p.default_value = obj.at("default").get<std::string>();
    }
    p.details = obj.value("details", std::string{});
    return p;
}

nlohmann::ordered_json parameter_to_json(const Parameter& p) {
    nlohmann::ordered_json obj;
    obj["name"] = p.name;
    obj["type"] = p.type;
    if (p.default_value) obj["default"] = *p.default_value;
    obj["details"] = p.details;
    return obj;
}

void validate_entry(const SyntaxEntry& entry, const std::string& where) {
    if (entry.full_name.empty()) throw std::runtime_error(where + ": full_name is empty");
    if (entry.short_name.empty()) throw std::runtime_error(where + ": short_name is empty");
    std::set<std::string> names;
    for (const Parameter& p : entry.parameters) {
        if (!names.insert(p.name).second) {
            throw std::runtime_error(where + ": duplicate parameter name '" + p.name + "'");
        }
    }
}

std::vector<SyntaxEntry> load_syntax_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto rows = csv_parse(text);
    if (rows.empty()) throw std::runtime_error(path.string() + ": missing header");
    const std::vector<std::string> header = {"index",       "full_name",   "short_name",
                                             "description", "output_type", "parameters"};
    if (rows[0] != header) {
        throw std::runtime_error(path.string() + ": unexpected header");
    }
    std::vector<SyntaxEntry> entries;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::string where = path.string() + " row " + std::to_string(i + 1);
        if (rows[i].size() != header.size()) {
            throw std::runtime_error(where + ": expected " + std::to_string(header.size()) +
                                     " cells");
        }
        SyntaxEntry entry;
        entry.full_name = rows[i][1];
        entry.short_name = rows[i][2];
        entry.description = rows[i][3];
        entry.output_type = rows[i][4];
        nlohmann::json params;
        try {
            params = nlohmann::json::parse(rows[i][5]);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(where + ": parameters cell is not JSON: " + e.what());
        }
        if (!params.is_array()) throw std::runtime_error(where + ": parameters is not an array");
        for (const auto& p : params) entry.parameters.push_back(parameter_from_json(p, where));
        validate_entry(entry, where);
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::vector<SyntaxEntry> load_syntax_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    if (!doc.is_array()) throw std::runtime_error(path.string() + ": expected a JSON array");
    std::vector<SyntaxEntry> entries;
    std::size_t i = 0;
    for (const auto& obj : doc) {
        const std::string where = path.string() + " entry " + std::to_string(i++);
        SyntaxEntry entry;
        try {
            entry.full_name = obj.at("full_name").get<std::string>();
            entry.short_name = obj.at("short_name").get<std::string>();
            entry.description = obj.value("description", std::string{});
            entry.output_type = obj.value("output_type", std::string{});
            if (obj.contains("parameters")) {
                for (const auto& p : obj.at("parameters")) {
                    entry.parameters.push_back(parameter_from_json(p, where));
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(where + ": " + e.what());
        }
        validate_entry(entry, where);
        entries.push_back(std::move(entry));
    }
    return entries;
}

}  // namespace

std::vector<SyntaxEntry> load_syntax(const std::filesystem::path& path) {
    std::vector<SyntaxEntry> entries = path.extension() == ".json" ? load_syntax_json(path)
                                                                   : load_syntax_csv(path);
    std::map<std::string, std::size_t> seen;
    std::set<std::string> duplicates;
    for (const SyntaxEntry& e : entries) {
        if (++seen[e.full_name] > 1) duplicates.insert(e.full_name);
    }
    if (!duplicates.empty()) {
        std::string names;
        for (const std::string& d : duplicates) {
            if (!names.empty()) names += ", ";
            names += d;
        }
        throw std::runtime_error(path.string() + ": duplicate full_name entries: " + names);
    }
    return entries;
}

void write_syntax_csv(const std::filesystem::path& path,
                      const std::vector<SyntaxEntry>& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    csv_write_row(out, {"index", "full_name", "short_name", "description", "output_type",
                        "parameters"});
    std::size_t index = 1;
    for (const SyntaxEntry& e : entries) {
        nlohmann::ordered_json params = nlohmann::ordered_json::array();
        for (const Parameter& p : e.parameters) params.push_back(parameter_to_json(p));
        csv_write_row(out, {std::to_string(index++), e.full_name, e.short_name, e.description,
                            e.output_type, params.dump()});
    }
}

NameReport check_known(const std::vector<relations::OperatorOccurrence>& occurrences,
                       const std::vector<SyntaxEntry>& entries) {
    std::set<std::string> full_names;
    std::set<std::string> short_tails;
    for (const SyntaxEntry& e : entries) {
        full_names.insert(e.full_name);
        short_tails.insert(tail_segment(e.short_name));
    }
    NameReport report;
    std::set<std::string> unknown;
    for (const auto& occ : occurrences) {
        if (full_names.count(occ.canonical) > 0 || short_tails.count(occ.short_name) > 0) {
            ++report.known;
        } else {
            ++report.unknown_count;
            unknown.insert(occ.canonical);
        }
    }
    report.unknown.assign(unknown.begin(), unknown.end());
    return report;
}

void write_name_report(const std::filesystem::path& path, const NameReport& report) {
    nlohmann::ordered_json obj;
    obj["known"] = report.known;
    obj["unknown_count"] = report.unknown_count;
    obj["unknown"] = report.unknown;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << obj.dump(2) << '\n';
}

}  // namespace opskb::syntax_kb
