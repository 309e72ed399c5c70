#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace xconsist {

// Shortest decimal form that round-trips to the same double.
std::string format_real(double value);

// Strict number parse (whole field, scientific notation allowed).
// Throws ValidationError naming `what` on failure.
double parse_real(std::string_view text, const std::string& what);
long long parse_integer(std::string_view text, const std::string& what);

// Minimal RFC 4180 reader: comma separated, double-quoted fields with ""
// escapes; quoted fields may not span lines.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // source line of each row
};

// Reads a CSV with a header row and checks that it names `expected_columns`
// in order. Throws ValidationError with line-level diagnostics.
CsvTable read_csv(std::istream& in, const std::string& source,
                  const std::vector<std::string>& expected_columns);
CsvTable read_csv_file(const std::filesystem::path& path,
                       const std::vector<std::string>& expected_columns);

std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

}  // namespace xconsist
