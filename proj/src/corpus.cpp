#include "opskb/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "opskb/util/hash.hpp"

namespace opskb::corpus {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string to_string(Stage s) {
    switch (s) {
        case Stage::raw: return "raw";
        case Stage::cleaned: return "cleaned";
        case Stage::validated: return "validated";
        case Stage::rejected: return "rejected";
    }
    throw std::logic_error("bad stage");
}

Stage stage_from_string(const std::string& s) {
    if (s == "raw") return Stage::raw;
    if (s == "cleaned") return Stage::cleaned;
    if (s == "validated") return Stage::validated;
    if (s == "rejected") return Stage::rejected;
    throw std::runtime_error("unknown stage: " + s);
}

void ScriptRecord::set_text(std::string t) {
    text = std::move(t);
    byte_size = text.size();
}

void ScriptRecord::transition(Stage next, std::string reason) {
    bool ok = (stage == Stage::raw && (next == Stage::cleaned || next == Stage::rejected)) ||
              (stage == Stage::cleaned && (next == Stage::validated || next == Stage::rejected));
    if (!ok) {
        throw std::logic_error("invalid stage transition " + to_string(stage) + " -> " +
                               to_string(next) + " for " + script_id);
    }
    if (next == Stage::rejected && reason.empty()) {
        throw std::logic_error("rejection requires a reason for " + script_id);
    }
    stage = next;
    reject_reason = next == Stage::rejected ? std::move(reason) : std::string();
}

bool utf8_valid(std::string_view text) {
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        unsigned char c = text[i];
        if (c < 0x80) {
            ++i;
            continue;
        }
        int len;
        std::uint32_t cp;
        if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > n) return false;
        for (int k = 1; k < len; ++k) {
            unsigned char cc = text[i + k];
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (len == 2 && cp < 0x80) return false;
        if (len == 3 && cp < 0x800) return false;
        if (len == 4 && cp < 0x10000) return false;
        if (cp > 0x10FFFF) return false;
        if (cp >= 0xD800 && cp <= 0xDFFF) return false;
        i += len;
    }
    return true;
}

std::vector<ScriptRecord> ingest(const fs::path& root, const IngestOptions& opts) {
    if (!fs::is_directory(root)) {
        throw std::runtime_error("ingest: not a directory: " + root.string());
    }
    std::vector<std::pair<std::string, fs::path>> files;  // (relative, absolute)
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::string rel = entry.path().lexically_relative(root).generic_string();
        bool match = false;
        for (const auto& ext : opts.extensions) {
            if (rel.size() >= ext.size() && rel.compare(rel.size() - ext.size(), ext.size(), ext) == 0) {
                match = true;
                break;
            }
        }
        if (match) files.emplace_back(std::move(rel), entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<ScriptRecord> records;
    records.reserve(files.size());
    std::set<std::string> seen_hashes;
    for (const auto& [rel, abs] : files) {
        ScriptRecord rec;
        rec.script_id = rel;
        rec.source_path = abs.string();
        std::uint64_t size = fs::file_size(abs);
        if (size > opts.max_bytes) {
            rec.transition(Stage::rejected, "oversize");
            records.push_back(std::move(rec));
            continue;
        }
        std::ifstream in(abs, std::ios::binary);
        if (!in) throw std::runtime_error("ingest: cannot read " + abs.string());
        std::string content(size, '\0');
        in.read(content.data(), static_cast<std::streamsize>(size));
        if (!utf8_valid(content)) {
            rec.transition(Stage::rejected, "encoding");
            records.push_back(std::move(rec));
            continue;
        }
        if (opts.dedup) {
            std::string h = sha256_hex(content);
            if (!seen_hashes.insert(h).second) {
                rec.transition(Stage::rejected, "duplicate");
                records.push_back(std::move(rec));
                continue;
            }
        }
        rec.set_text(std::move(content));
        records.push_back(std::move(rec));
    }
    return records;
}

namespace {

bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '$';
}

// Keywords after which a '/' starts a regex, not a division.
bool regex_preceding_keyword(const std::string& w) {
    static const std::set<std::string> kw = {
        "return", "typeof", "instanceof", "in",   "of",   "new",  "delete", "void",
        "throw",  "else",   "do",         "case", "yield", "await"};
    return kw.count(w) > 0;
}

// Characters next to which a removed block comment needs no separator.
bool glue_safe(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ';' || c == ',' ||
           c == '(' || c == ')' || c == '{' || c == '}' || c == '[' || c == ']' || c == ':';
}

void trim_trailing_hspace(std::string& s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
}

}  // namespace

StripResult strip_comments(std::string_view src) {
    StripResult res;
    std::string& out = res.text;
    out.reserve(src.size());

    enum class Mode { code, str_sq, str_dq, template_lit, regex, regex_class };
    Mode mode = Mode::code;
    // Each template literal being interpolated pushes its brace depth here;
    // a '}' at depth 0 resumes the template text.
    std::vector<int> template_depth;

    char last_sig = '\0';   // last significant code char ('\0' = none yet)
    char prev_sig = '\0';   // the one before it (detects ++/--)
    std::string cur_word;   // identifier/keyword ending at last_sig

    auto note_code_char = [&](char c) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') return;
        prev_sig = last_sig;
        last_sig = c;
        if (is_word_char(c)) {
            cur_word.push_back(c);
        } else {
            cur_word.clear();
        }
    };
    auto regex_allowed = [&]() {
        if (last_sig == '\0') return true;
        if (is_word_char(last_sig)) return regex_preceding_keyword(cur_word);
        if ((last_sig == '+' && prev_sig == '+') || (last_sig == '-' && prev_sig == '-')) {
            return false;  // postfix ++/-- leaves an operand
        }
        if (last_sig == ')' || last_sig == ']' || last_sig == '\'' || last_sig == '"' ||
            last_sig == '`') {
            return false;
        }
        return true;  // operators, punctuation, '}', start of input
    };

    std::size_t i = 0;
    const std::size_t n = src.size();
    while (i < n) {
        char c = src[i];
        switch (mode) {
            case Mode::code: {
                if (c == '/' && i + 1 < n && src[i + 1] == '/') {
                    trim_trailing_hspace(out);
                    i += 2;
                    while (i < n && src[i] != '\n' && src[i] != '\r') ++i;
                    continue;  // the terminator is emitted as code
                }
                if (c == '/' && i + 1 < n && src[i + 1] == '*') {
                    trim_trailing_hspace(out);
                    i += 2;
                    bool closed = false;
                    bool had_newline = false;
                    while (i < n) {
                        if (src[i] == '\n') had_newline = true;
                        if (src[i] == '*' && i + 1 < n && src[i + 1] == '/') {
                            i += 2;
                            closed = true;
                            break;
                        }
                        ++i;
                    }
                    if (!closed) {
                        res.unterminated_block = true;
                        break;  // stripped to end of input
                    }
                    if (had_newline) {
                        // A block comment spanning lines is a line terminator
                        // for semicolon insertion; keep that visible.
                        out.push_back('\n');
                        note_code_char('\n');
                    } else {
                        char left = out.empty() ? '\0' : out.back();
                        char right = i < n ? src[i] : '\0';
                        bool left_safe = left == '\0' || glue_safe(left);
                        bool right_safe = right == '\0' || glue_safe(right);
                        if (!left_safe && !right_safe) out.push_back(' ');
                    }
                    continue;
                }
                if (c == '/') {
                    if (regex_allowed()) {
                        mode = Mode::regex;
                    } else {
                        note_code_char(c);
                    }
                    out.push_back(c);
                    ++i;
                    continue;
                }
                if (c == '\'') {
                    mode = Mode::str_sq;
                } else if (c == '"') {
                    mode = Mode::str_dq;
                } else if (c == '`') {
                    mode = Mode::template_lit;
                } else if (c == '{' && !template_depth.empty()) {
                    ++template_depth.back();
                    note_code_char(c);
                } else if (c == '}' && !template_depth.empty()) {
                    if (template_depth.back() == 0) {
                        template_depth.pop_back();
                        mode = Mode::template_lit;
                    } else {
                        --template_depth.back();
                        note_code_char(c);
                    }
                } else {
                    note_code_char(c);
                }
                out.push_back(c);
                ++i;
                break;
            }
            case Mode::str_sq:
            case Mode::str_dq: {
                out.push_back(c);
                if (c == '\\' && i + 1 < n) {
                    out.push_back(src[i + 1]);
                    i += 2;
                    continue;
                }
                if ((mode == Mode::str_sq && c == '\'') || (mode == Mode::str_dq && c == '"') ||
                    c == '\n') {
                    mode = Mode::code;
                    prev_sig = last_sig;
                    last_sig = (c == '\n') ? '\'' : c;  // a string is an operand
                    cur_word.clear();
                }
                ++i;
                break;
            }
            case Mode::template_lit: {
                out.push_back(c);
                if (c == '\\' && i + 1 < n) {
                    out.push_back(src[i + 1]);
                    i += 2;
                    continue;
                }
                if (c == '`') {
                    mode = Mode::code;
                    prev_sig = last_sig;
                    last_sig = '`';
                    cur_word.clear();
                } else if (c == '$' && i + 1 < n && src[i + 1] == '{') {
                    out.push_back('{');
                    template_depth.push_back(0);
                    mode = Mode::code;
                    prev_sig = last_sig;
                    last_sig = '{';
                    cur_word.clear();
                    i += 2;
                    continue;
                }
                ++i;
                break;
            }
            case Mode::regex: {
                out.push_back(c);
                if (c == '\\' && i + 1 < n) {
                    out.push_back(src[i + 1]);
                    i += 2;
                    continue;
                }
                if (c == '[') {
                    mode = Mode::regex_class;
                } else if (c == '/' || c == '\n') {
                    mode = Mode::code;
                    prev_sig = last_sig;
                    last_sig = ')';  // regex value: next '/' is division
                    cur_word.clear();
                }
                ++i;
                break;
            }
            case Mode::regex_class: {
                out.push_back(c);
                if (c == '\\' && i + 1 < n) {
                    out.push_back(src[i + 1]);
                    i += 2;
                    continue;
                }
                if (c == ']' || c == '\n') mode = Mode::regex;
                ++i;
                break;
            }
        }
        if (res.unterminated_block) break;
    }
    return res;
}

void clean_record(ScriptRecord& rec) {
    StripResult r = strip_comments(rec.text);
    rec.set_text(std::move(r.text));
    rec.transition(Stage::cleaned);
}

CorpusStats corpus_stats(const std::vector<ScriptRecord>& records) {
    CorpusStats s;
    s.script_count = records.size();
    bool first = true;
    for (const auto& rec : records) {
        s.total_bytes += rec.byte_size;
        if (first) {
            s.min_bytes = s.max_bytes = rec.byte_size;
            first = false;
        } else {
            s.min_bytes = std::min(s.min_bytes, rec.byte_size);
            s.max_bytes = std::max(s.max_bytes, rec.byte_size);
        }
        if (rec.stage == Stage::rejected) ++s.rejected_count;
    }
    return s;
}

void write_jsonl(std::ostream& out, const std::vector<ScriptRecord>& records) {
    for (const auto& rec : records) {
        ordered_json j;
        j["script_id"] = rec.script_id;
        j["source_path"] = rec.source_path;
        j["text"] = rec.text;
        j["byte_size"] = rec.byte_size;
        j["stage"] = to_string(rec.stage);
        if (rec.stage == Stage::rejected) j["reject_reason"] = rec.reject_reason;
        out << j.dump() << '\n';
    }
}

void write_jsonl_file(const fs::path& path, const std::vector<ScriptRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_jsonl(out, records);
}

std::vector<ScriptRecord> read_jsonl(std::istream& in) {
    std::vector<ScriptRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error("jsonl line " + std::to_string(lineno) + ": " + e.what());
        }
        ScriptRecord rec;
        rec.script_id = j.at("script_id").get<std::string>();
        rec.source_path = j.value("source_path", "");
        rec.text = j.at("text").get<std::string>();
        rec.byte_size = j.at("byte_size").get<std::uint64_t>();
        rec.stage = stage_from_string(j.at("stage").get<std::string>());
        rec.reject_reason = j.value("reject_reason", "");
        if (rec.byte_size != rec.text.size()) {
            throw std::runtime_error("jsonl line " + std::to_string(lineno) +
                                     ": byte_size does not match text length");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<ScriptRecord> read_jsonl_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return read_jsonl(in);
}

}  // namespace opskb::corpus
