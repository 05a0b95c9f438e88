#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace opskb {

/// Quotes a CSV cell per RFC 4180 when it contains a comma, quote, or
/// newline; returns it unchanged otherwise.
std::string csv_escape(std::string_view cell);

/// Writes one CSV row (escaped, comma-joined, "\n"-terminated).
void csv_write_row(std::ostream& out, const std::vector<std::string>& cells);

/// Parses an entire RFC 4180 document into rows of cells. Accepts both \n
/// and \r\n row breaks and quoted cells containing either. Throws
/// std::runtime_error on a malformed quote.
std::vector<std::vector<std::string>> csv_parse(std::string_view text);

/// Shortest round-trip decimal form of a double (std::to_chars).
std::string double_repr(double v);

}  // namespace opskb
