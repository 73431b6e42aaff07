#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

// Minimal RFC-4180 helpers: quoting on write, quoted-field parsing on read.
namespace deeptrust::csv {

std::string quote(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Parses one record. Embedded newlines inside quotes are not supported.
std::vector<std::string> parse_line(std::string_view line);

/// Shortest decimal form that reads back to the same double.
std::string format_number(double value);

}  // namespace deeptrust::csv
