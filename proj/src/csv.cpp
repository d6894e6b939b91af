#include "migraflow/csv.hpp"

#include "migraflow/util.hpp"

namespace migraflow::csv {

int Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

Table parse(std::string_view text, bool has_header) {
  Table out;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_started = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    if (has_header && out.header.empty() && out.rows.empty())
      out.header = std::move(row);
    else
      out.rows.push_back(std::move(row));
    row.clear();
    row_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_started = true;
        break;
      case ',':
        end_field();
        row_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_started || !field.empty() || !row.empty()) end_row();
        break;
      default:
        field.push_back(c);
        row_started = true;
        break;
    }
  }
  if (in_quotes) throw Error("CSV_UNTERMINATED_QUOTE", "unterminated quoted field");
  if (row_started || !field.empty() || !row.empty()) end_row();
  return out;
}

Table read(const std::string& path, bool has_header) {
  return parse(read_file(path), has_header);
}

std::string escape_field(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line.push_back(',');
    line += escape_field(fields[i]);
  }
  line.push_back('\n');
  return line;
}

std::string format(const Table& table) {
  std::string out;
  if (!table.header.empty()) out += format_row(table.header);
  for (const auto& row : table.rows) out += format_row(row);
  return out;
}

void write(const std::string& path, const Table& table) {
  write_file(path, format(table));
}

}  // namespace migraflow::csv
