// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace photonbench {

struct IndexSample {
  double wavelength_nm = 0.0;
  double n = 1.0;
  double k = 0.0;

  bool operator==(const IndexSample&) const = default;
};

// Complex refractive index n + ik sampled on a strictly increasing wavelength grid.
class TabulatedIndex {
 public:
  TabulatedIndex() = default;
  // Throws InvalidArgument on non-increasing wavelengths, n <= 0 or k < 0.
  explicit TabulatedIndex(std::vector<IndexSample> rows,
                          std::map<std::string, std::string> metadata = {});

  const std::vector<IndexSample>& rows() const { return rows_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }
  std::map<std::string, std::string>& metadata() { return metadata_; }

  bool empty() const { return rows_.empty(); }
  std::size_t size() const { return rows_.size(); }
  double min_wavelength() const { return rows_.front().wavelength_nm; }
  double max_wavelength() const { return rows_.back().wavelength_nm; }
  bool covers(double lo_nm, double hi_nm) const {
    return !rows_.empty() && min_wavelength() <= lo_nm && max_wavelength() >= hi_nm;
  }

  // Linear interpolation of n and k; clamps outside the table.
  std::complex<double> index_at(double wavelength_nm) const;

  bool operator==(const TabulatedIndex& o) const { return rows_ == o.rows_; }

 private:
  std::vector<IndexSample> rows_;
  std::map<std::string, std::string> metadata_;
};

inline std::complex<double> sample_permittivity(const IndexSample& s) {
  const std::complex<double> nc(s.n, s.k);
  return nc * nc;
}

// CSV with header `wavelength_nm,n,k`; '#' comment lines carry metadata.
TabulatedIndex read_index_table(const std::filesystem::path& path);
TabulatedIndex parse_index_table(const std::string& text, const std::string& source_name);
std::string format_index_table(const TabulatedIndex& table);

// Adds `offset` to every extinction coefficient. Negative offsets are rejected.
TabulatedIndex apply_extinction_offset(const TabulatedIndex& table, double offset);

// Sorted union of two tables. Inside the overlap the two sources are
// crossfaded linearly by position; adjacent tables are concatenated when the
// gap between them does not exceed `max_gap_nm`.
TabulatedIndex merge_tables(const TabulatedIndex& a, const TabulatedIndex& b,
                            double max_gap_nm = 50.0);

}  // namespace photonbench
