#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ccomp {

/// Shortest representation that parses back to the same double; "nan", "inf", "-inf".
std::string format_double(double v);
/// Throws ConfigError if the text is not a complete number.
double parse_double(std::string_view text);

using CsvRow = std::vector<std::string>;

/// Comma-separated, no quoting (fields never contain commas). Blank lines are skipped.
std::vector<CsvRow> parse_csv(std::string_view text);
std::string join_row(const std::vector<std::string>& fields);

std::string read_file(const std::filesystem::path& path);
/// Throws Error naming the path on failure.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace ccomp
