// Small file helpers shared by the experiment runner: round-trippable double
// formatting, CSV tables, and atomic (temp + rename) writes.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace perceptlab::io {

/// Shortest-faithful decimal form (%.17g); parsing it back restores the bits.
std::string format_double(double v);

double parse_double(std::string_view text, bool* ok = nullptr);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(std::string_view name) const;  // -1 when absent
};

std::string to_csv(const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& file);

/// Writes `content` to `file` via a temp file in the same directory followed
/// by a rename, creating parent directories as needed.
void write_file_atomic(const std::filesystem::path& file, std::string_view content);

std::string read_file(const std::filesystem::path& file);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace perceptlab::io
