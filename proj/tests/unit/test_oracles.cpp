// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

// The thin-film oracle is checked on its own before it judges the solver.

#include <cmath>
#include <complex>

#include "catch_amalgamated.hpp"

#include "tmm.hpp"

using Catch::Approx;

TEST_CASE("transfer matrix reduces to Fresnel for a bare interface", "[oracle]") {
  for (double n : {1.0, 1.33, 1.5, 2.4, 3.5}) {
    const auto r = tmm::stack(1.0, {}, n, 600.0);
    CHECK(r.R == Approx(tmm::fresnel_reflectance(1.0, n)).margin(1e-15));
    CHECK(r.R + r.T == Approx(1.0).margin(1e-14));
  }
  // Zero-thickness layers and index-matched layers are invisible.
  const auto bare = tmm::stack(1.0, {}, 1.5, 500.0);
  CHECK(tmm::stack(1.0, {{2.2, 0.0}}, 1.5, 500.0).R == Approx(bare.R).margin(1e-15));
  CHECK(tmm::stack(1.0, {{1.5, 137.0}}, 1.5, 500.0).R == Approx(bare.R).margin(1e-14));
}

TEST_CASE("absorbing interface matches the complex Fresnel formula", "[oracle]") {
  const std::complex<double> n(0.05, 3.4);  // silver-like
  const auto r = tmm::stack(1.0, {}, n, 550.0);
  CHECK(r.R == Approx(((1 - 0.05) * (1 - 0.05) + 3.4 * 3.4) / ((1 + 0.05) * (1 + 0.05) + 3.4 * 3.4)));
}

TEST_CASE("quarter and half wave layers", "[oracle]") {
  const double wl = 600.0, ns = 2.25, nf = std::sqrt(ns);
  CHECK(tmm::stack(1.0, {{nf, wl / (4 * nf)}}, ns, wl).R < 1e-20);
  // A half-wave layer is absent at its design wavelength.
  CHECK(tmm::stack(1.0, {{1.8, wl / (2 * 1.8)}}, ns, wl).R ==
        Approx(tmm::fresnel_reflectance(1.0, ns)).margin(1e-14));
}

TEST_CASE("lossless stacks conserve power and lossy stacks absorb", "[oracle]") {
  for (double t : {5.0, 40.0, 120.0, 333.0}) {
    const auto r = tmm::stack(1.0, {{2.0, t}, {1.4, 2 * t}, {2.6, t / 2}}, 1.5, 480.0);
    CHECK(r.R + r.T == Approx(1.0).margin(1e-13));
  }
  for (double k : {0.01, 0.1, 1.0}) {
    const auto r = tmm::stack(1.0, {{{2.0, k}, 60.0}}, 1.5, 550.0);
    CHECK(r.T > 0.0);
    CHECK(r.R + r.T < 1.0);
  }
  // Transmission through a metal film decays with thickness.
  const std::complex<double> ag(0.08, 3.3);
  double prev = 1.0;
  for (double t : {5.0, 10.0, 20.0, 40.0}) {
    const double T = tmm::stack(1.0, {{ag, t}}, 1.0, 550.0).T;
    CHECK(T < prev);
    prev = T;
  }
}
