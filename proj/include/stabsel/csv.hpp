#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stabsel {

/// Malformed file or request content (as opposed to a well-formed request
/// with out-of-range values, which raises std::invalid_argument).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace csv {

/// Header plus rows of raw cells. Rows keep their 1-based line number in the
/// source so diagnostics can point at them.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::ptrdiff_t column(std::string_view name) const;
};

/// Comma separated, header required, blank lines skipped, surrounding spaces
/// and CR trimmed. Ragged rows are rejected.
Table parse(std::string_view text, std::string_view source = "<memory>");
Table read(const std::filesystem::path& path);

double parse_double(std::string_view cell);
bool try_parse_double(std::string_view cell, double& out);

/// Shortest representation that round-trips.
std::string format_double(double v);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace csv
}  // namespace stabsel
