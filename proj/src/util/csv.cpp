#include "opskb/util/csv.hpp"

#include <charconv>
#include <stdexcept>

namespace opskb {

std::string csv_escape(std::string_view cell) {
    bool needs_quotes = cell.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quotes) return std::string(cell);
    std::string out;
    out.reserve(cell.size() + 2);
    out.push_back('"');
    for (char c : cell) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void csv_write_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) out.put(',');
        out << csv_escape(cells[i]);
    }
    out.put('\n');
}

std::vector<std::vector<std::string>> csv_parse(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    std::size_t i = 0;
    bool in_cell = false;  // true once the current row has any content
    while (i < text.size()) {
        char c = text[i];
        if (c == '"') {
            // Quoted cell: consume through the closing quote.
            ++i;
            in_cell = true;
            for (;;) {
                if (i >= text.size()) throw std::runtime_error("csv: unterminated quoted cell");
                if (text[i] == '"') {
                    if (i + 1 < text.size() && text[i + 1] == '"') {
                        cell.push_back('"');
                        i += 2;
                    } else {
                        ++i;
                        break;
                    }
                } else {
                    cell.push_back(text[i]);
                    ++i;
                }
            }
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
            in_cell = true;
            ++i;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            ++i;
            if (in_cell || !cell.empty()) {
                row.push_back(std::move(cell));
                cell.clear();
                rows.push_back(std::move(row));
                row.clear();
                in_cell = false;
            }
        } else {
            cell.push_back(c);
            in_cell = true;
            ++i;
        }
    }
    if (in_cell || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string double_repr(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace opskb
