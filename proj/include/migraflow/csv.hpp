#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace migraflow::csv {

// RFC-4180: comma separated, double-quote quoting, quotes escaped by
// doubling, fields may contain CR/LF when quoted. Input decoding accepts
// both \n and \r\n row endings; output always uses \n.

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name, -1 when absent.
  int column(std::string_view name) const;
};

Table parse(std::string_view text, bool has_header = true);
Table read(const std::string& path, bool has_header = true);

std::string escape_field(std::string_view field);
std::string format_row(const std::vector<std::string>& fields);
std::string format(const Table& table);
void write(const std::string& path, const Table& table);

}  // namespace migraflow::csv
