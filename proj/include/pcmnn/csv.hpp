#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pcmnn::csv {

/// A header plus data rows, each annotated with its 1-based file line.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;
  std::string source;

  /// Index of a header column; throws DataError if absent.
  std::size_t column(std::string_view name) const;
};

/// Strips surrounding blanks and a trailing CR.
std::string_view trim(std::string_view s);

std::vector<std::string> split(std::string_view line, char sep = ',');

/// Reads a comma-separated file with a mandatory header line. Blank lines
/// and a trailing CR are ignored.
Table read(const std::filesystem::path& path);

/// Throws DataError naming `where` when the field is not a number.
double parse_double(std::string_view field, std::string_view where);
long long parse_int(std::string_view field, std::string_view where);
std::uint64_t parse_seed(std::string_view field, std::string_view where);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

/// Exact hexadecimal float, used by checkpoints.
std::string format_hex(double value);
double parse_hex(std::string_view field, std::string_view where);

/// Writes header + rows; creates parent directories as needed.
void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace pcmnn::csv
