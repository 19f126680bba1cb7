// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "materials/tabulated.hpp"

#include <algorithm>
#include <sstream>

#include "common/error.hpp"
#include "common/io.hpp"

namespace photonbench {

TabulatedIndex::TabulatedIndex(std::vector<IndexSample> rows,
                               std::map<std::string, std::string> metadata)
    : rows_(std::move(rows)), metadata_(std::move(metadata)) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    if (!(r.n > 0.0))
      throw InvalidArgument("index table: n must be positive at " +
                            format_double(r.wavelength_nm) + " nm");
    if (!(r.k >= 0.0))
      throw InvalidArgument("index table: k must be non-negative at " +
                            format_double(r.wavelength_nm) + " nm");
    if (i > 0 && !(r.wavelength_nm > rows_[i - 1].wavelength_nm))
      throw InvalidArgument("index table: wavelengths must be strictly increasing at " +
                            format_double(r.wavelength_nm) + " nm");
  }
}

std::complex<double> TabulatedIndex::index_at(double nm) const {
  if (rows_.empty()) throw InvalidArgument("index table is empty");
  if (nm <= rows_.front().wavelength_nm) return {rows_.front().n, rows_.front().k};
  if (nm >= rows_.back().wavelength_nm) return {rows_.back().n, rows_.back().k};
  auto it = std::upper_bound(rows_.begin(), rows_.end(), nm,
                             [](double v, const IndexSample& s) { return v < s.wavelength_nm; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = (nm - lo.wavelength_nm) / (hi.wavelength_nm - lo.wavelength_nm);
  return {lo.n + w * (hi.n - lo.n), lo.k + w * (hi.k - lo.k)};
}

TabulatedIndex parse_index_table(const std::string& text, const std::string& source_name) {
  const CsvTable csv = parse_csv(text, source_name);
  const auto cl = csv.column("wavelength_nm");
  const auto cn = csv.column("n");
  const auto ck = csv.column("k");
  std::vector<IndexSample> rows;
  rows.reserve(csv.rows.size());
  for (const auto& r : csv.rows)
    rows.push_back({parse_double(r[cl], source_name), parse_double(r[cn], source_name),
                    parse_double(r[ck], source_name)});
  return TabulatedIndex(std::move(rows), csv.metadata);
}

TabulatedIndex read_index_table(const std::filesystem::path& path) {
  return parse_index_table(read_text_file(path), path.string());
}

std::string format_index_table(const TabulatedIndex& table) {
  std::ostringstream out;
  for (const auto& [k, v] : table.metadata()) out << "# " << k << ": " << v << "\n";
  out << "wavelength_nm,n,k\n";
  for (const auto& r : table.rows())
    out << format_double(r.wavelength_nm) << ',' << format_double(r.n) << ','
        << format_double(r.k) << '\n';
  return out.str();
}

TabulatedIndex apply_extinction_offset(const TabulatedIndex& table, double offset) {
  if (!(offset >= 0.0)) throw InvalidArgument("extinction offset must be non-negative");
  std::vector<IndexSample> rows = table.rows();
  for (auto& r : rows) r.k += offset;
  auto meta = table.metadata();
  if (offset > 0.0) meta["extinction_offset"] = format_double(offset);
  return TabulatedIndex(std::move(rows), std::move(meta));
}

TabulatedIndex merge_tables(const TabulatedIndex& a_in, const TabulatedIndex& b_in,
                            double max_gap_nm) {
  if (a_in.empty()) return b_in;
  if (b_in.empty()) return a_in;
  // `a` is the source that starts at the shorter wavelength.
  const bool swap = b_in.min_wavelength() < a_in.min_wavelength();
  const TabulatedIndex& a = swap ? b_in : a_in;
  const TabulatedIndex& b = swap ? a_in : b_in;

  auto meta = a.metadata();
  for (const auto& [k, v] : b.metadata()) meta.emplace(k, v);

  std::vector<IndexSample> rows;
  const double lo = b.min_wavelength();
  const double hi = std::min(a.max_wavelength(), b.max_wavelength());

  if (lo > a.max_wavelength()) {
    const double gap = lo - a.max_wavelength();
    if (gap > max_gap_nm)
      throw InvalidArgument("cannot merge tables: gap of " + format_double(gap) +
                            " nm exceeds limit of " + format_double(max_gap_nm) + " nm");
    rows = a.rows();
    rows.insert(rows.end(), b.rows().begin(), b.rows().end());
    return TabulatedIndex(std::move(rows), std::move(meta));
  }

  for (const auto& r : a.rows())
    if (r.wavelength_nm < lo) rows.push_back(r);

  std::vector<double> grid;
  for (const auto& r : a.rows())
    if (r.wavelength_nm >= lo && r.wavelength_nm <= hi) grid.push_back(r.wavelength_nm);
  for (const auto& r : b.rows())
    if (r.wavelength_nm >= lo && r.wavelength_nm <= hi) grid.push_back(r.wavelength_nm);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double nm : grid) {
    const double w = hi > lo ? (nm - lo) / (hi - lo) : 0.5;
    const auto na = a.index_at(nm);
    const auto nb = b.index_at(nm);
    rows.push_back({nm, na.real() + w * (nb.real() - na.real()),
                    na.imag() + w * (nb.imag() - na.imag())});
  }

  // Whichever source extends further supplies the tail.
  const TabulatedIndex& tail = a.max_wavelength() > b.max_wavelength() ? a : b;
  for (const auto& r : tail.rows())
    if (r.wavelength_nm > hi) rows.push_back(r);
  return TabulatedIndex(std::move(rows), std::move(meta));
}

}  // namespace photonbench
