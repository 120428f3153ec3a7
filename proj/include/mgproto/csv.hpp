#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mgproto::csv {

/// Shortest decimal representation that round-trips to the same double.
std::string format_number(double value);

/// Splits one CSV record on commas. Double-quoted fields may contain commas
/// and doubled quotes.
std::vector<std::string> split_record(std::string_view line);

/// Quotes a field when it contains a comma, quote or newline.
std::string escape_field(std::string_view field);

struct Table
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads a header-first CSV file; blank lines are skipped and a UTF-8 BOM is
/// dropped. Throws ParseError on ragged rows or an unreadable file.
Table read_file(const std::string& path);
Table parse(std::string_view text);

void write_file(const std::string& path, std::string_view contents);

} // namespace mgproto::csv
