// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace photonbench {

std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Shortest representation that round-trips to the same double.
std::string format_double(double v);

// Comma-separated table with '#'-prefixed comment lines. Comment lines of the
// form "# key: value" are collected as metadata.
struct CsvTable {
  std::map<std::string, std::string> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws if absent
};

CsvTable parse_csv(std::string_view text, const std::string& source_name);
CsvTable read_csv_file(const std::filesystem::path& path);

double parse_double(std::string_view cell, const std::string& context);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);

}  // namespace photonbench
