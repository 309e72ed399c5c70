#include "xconsist/text.hpp"

#include <charconv>
#include <fstream>
#include <istream>

#include "xconsist/errors.hpp"

namespace xconsist {

std::string format_real(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

double parse_real(std::string_view text, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ValidationError(what + ": '" + std::string(text) + "' is not a number");
  }
  return v;
}

long long parse_integer(std::string_view text, const std::string& what) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ValidationError(what + ": '" + std::string(text) + "' is not an integer");
  }
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ValidationError("unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvTable read_csv(std::istream& in, const std::string& source,
                  const std::vector<std::string>& expected_columns) {
  CsvTable table;
  std::vector<std::string> errs;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    std::vector<std::string> fields;
    try {
      fields = split_csv_line(line);
    } catch (const ValidationError& e) {
      errs.push_back(where + e.what());
      continue;
    }
    if (!have_header) {
      have_header = true;
      table.header = fields;
      if (fields != expected_columns) {
        std::string want;
        for (const auto& c : expected_columns) want += (want.empty() ? "" : ",") + c;
        throw ValidationError(where + "expected header '" + want + "'");
      }
      continue;
    }
    if (fields.size() != expected_columns.size()) {
      errs.push_back(where + "expected " + std::to_string(expected_columns.size()) +
                     " fields, found " + std::to_string(fields.size()));
      continue;
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(lineno);
  }
  if (!have_header) {
    // An empty file is an empty table.
    table.header = expected_columns;
  }
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return table;
}

CsvTable read_csv_file(const std::filesystem::path& path,
                       const std::vector<std::string>& expected_columns) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return read_csv(in, path.string(), expected_columns);
}

}  // namespace xconsist
