// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

// Characteristic-matrix thin-film recursion at normal incidence, written
// independently of the solver so it can serve as a reference.

#pragma once

#include <complex>
#include <vector>

namespace tmm {

using cd = std::complex<double>;

struct Layer {
  cd n;
  double thickness_nm;
};

struct Result {
  double R = 0.0;
  double T = 0.0;
};

// Incidence from a lossless medium n_in onto `layers` (top first) backed by a
// semi-infinite medium n_out. Indices follow exp(-i w t), n = n' + i k; the
// matrices below are the textbook exp(+i w t) form, hence the conjugates.
inline Result stack(double n_in, const std::vector<Layer>& layers, cd n_out_index, double wavelength_nm) {
  const double pi = 3.14159265358979323846;
  const cd n_out = std::conj(n_out_index);
  cd m11 = 1.0, m12 = 0.0, m21 = 0.0, m22 = 1.0;
  for (const auto& L : layers) {
    const cd n = std::conj(L.n);
    const cd delta = 2.0 * pi * n * L.thickness_nm / wavelength_nm;
    const cd c = std::cos(delta), s = std::sin(delta);
    const cd a11 = c, a12 = cd(0, 1) * s / n, a21 = cd(0, 1) * n * s, a22 = c;
    const cd b11 = m11 * a11 + m12 * a21, b12 = m11 * a12 + m12 * a22;
    const cd b21 = m21 * a11 + m22 * a21, b22 = m21 * a12 + m22 * a22;
    m11 = b11;
    m12 = b12;
    m21 = b21;
    m22 = b22;
  }
  const cd B = m11 + m12 * n_out;
  const cd C = m21 + m22 * n_out;
  const cd denom = n_in * B + C;
  const cd r = (n_in * B - C) / denom;
  const cd t = 2.0 * n_in / denom;
  return {std::norm(r), std::real(n_out) / n_in * std::norm(t)};
}

inline double fresnel_reflectance(cd n1, cd n2) { return std::norm((n1 - n2) / (n1 + n2)); }

}  // namespace tmm
