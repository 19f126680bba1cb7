// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "common/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "common/error.hpp"

namespace photonbench {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into place: " + path.string());
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) v = 0.0;  // no "-0"
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw InvalidArgument("missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text, const std::string& source_name) {
  CsvTable table;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line[0] == '#') {
      const std::string body = trim(std::string_view(line).substr(1));
      const auto colon = body.find(':');
      if (colon != std::string::npos)
        table.metadata[trim(std::string_view(body).substr(0, colon))] =
            trim(std::string_view(body).substr(colon + 1));
      continue;
    }
    auto cells = split(line, ',');
    for (auto& c : cells) c = trim(c);
    if (table.header.empty()) {
      table.header = std::move(cells);
    } else {
      if (cells.size() != table.header.size())
        throw InvalidArgument(source_name + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(table.header.size()) + " columns, found " +
                              std::to_string(cells.size()));
      table.rows.push_back(std::move(cells));
    }
    if (end == text.size()) break;
  }
  if (table.header.empty()) throw InvalidArgument(source_name + ": no header line");
  return table;
}

CsvTable read_csv_file(const fs::path& path) { return parse_csv(read_text_file(path), path.string()); }

double parse_double(std::string_view cell, const std::string& context) {
  const std::string s = trim(cell);
  if (s == "nan") return std::nan("");
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidArgument(context + ": not a number: '" + s + "'");
  return v;
}

}  // namespace photonbench
