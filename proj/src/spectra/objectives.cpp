// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spectra/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/units.hpp"

namespace photonbench {

namespace {

double lerp_at(const std::vector<double>& x, const std::vector<double>& y, double v) {
  if (x.size() == 1) return y.front();
  if (v <= x.front()) return y.front();
  if (v >= x.back()) return y.back();
  auto it = std::upper_bound(x.begin(), x.end(), v);
  const std::size_t hi = static_cast<std::size_t>(it - x.begin());
  const std::size_t lo = hi - 1;
  const double w = (v - x[lo]) / (x[hi] - x[lo]);
  return y[lo] + w * (y[hi] - y[lo]);
}

std::vector<double> union_grid(const std::vector<double>& a, const std::vector<double>& b,
                               double lo, double hi, std::optional<double> extra = {}) {
  std::vector<double> g{lo, hi};
  for (const auto* v : {&a, &b})
    for (double x : *v)
      if (x > lo && x < hi) g.push_back(x);
  if (extra && *extra > lo && *extra < hi) g.push_back(*extra);
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

template <typename F>
double trapezoid(const std::vector<double>& grid, F f) {
  double acc = 0.0;
  double prev = f(grid.front());
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double cur = f(grid[k]);
    acc += 0.5 * (grid[k] - grid[k - 1]) * (cur + prev);
    prev = cur;
  }
  return acc;
}

void require_broadband(const RatSpectra& s, const char* what) {
  if (s.wavelengths.size() < 2)
    throw InvalidArgument(std::string(what) + " needs a broadband spectrum");
}

// Spectrum values re-expressed on an ascending energy grid.
struct EnergySeries {
  std::vector<double> e, v;
};

EnergySeries to_energy(const std::vector<double>& wl, const std::vector<double>& v) {
  EnergySeries s;
  for (std::size_t k = wl.size(); k-- > 0;) {
    s.e.push_back(units::wavelength_to_ev(wl[k]));
    s.v.push_back(v[k]);
  }
  return s;
}

struct SolarIntegrals {
  double numerator_flux = 0.0;     // int_{E > Eg} b_s A dE
  double numerator_ue = 0.0;       // int_{E > Eg} I A Eg / E dE
  double denominator_flux = 0.0;   // int b_s dE
  double denominator_irr = 0.0;    // int I dE
};

SolarIntegrals solar_integrals(const RatSpectra& s, const SpectralWeight& w, double eg) {
  require_broadband(s, "solar absorption");
  if (!(eg > 0)) throw InvalidArgument("band gap must be positive");
  if (eg < w.min_energy() - 1e-12 || eg > w.max_energy() + 1e-12)
    throw InvalidArgument("band gap " + format_double(eg) + " eV lies outside the weight table (" +
                          format_double(w.min_energy()) + " to " + format_double(w.max_energy()) +
                          " eV)");
  if (!w.covers(s.min_wavelength(), s.max_wavelength()))
    throw InvalidArgument("solar weight table does not cover the spectrum range");
  const auto a = to_energy(s.wavelengths, s.A);
  const double lo = a.e.front(), hi = a.e.back();
  const auto grid = union_grid(a.e, w.energy_nodes(), lo, hi, eg);
  SolarIntegrals r;
  double prev_flux = 0.0, prev_ue = 0.0, prev_b = 0.0, prev_i = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double e = grid[k];
    const double b = w.photon_flux_per_ev(e);
    const double irr = w.irradiance_per_ev(e);
    const double av = lerp_at(a.e, a.v, e);
    const bool above = e >= eg;
    const double f_flux = above ? b * av : 0.0;
    // I(E) A Eg / E with I(E) = E b_s(E): keep the algebra exact at every node.
    const double f_ue = above ? (e * b) * av * eg / e : 0.0;
    if (k > 0) {
      const double h = e - grid[k - 1];
      // The gap is a grid node, so every panel lies entirely above or below it.
      if (grid[k - 1] >= eg) {
        r.numerator_flux += 0.5 * h * (f_flux + prev_flux);
        r.numerator_ue += 0.5 * h * (f_ue + prev_ue);
      }
      r.denominator_flux += 0.5 * h * (b + prev_b);
      r.denominator_irr += 0.5 * h * (irr + prev_i);
    }
    prev_flux = f_flux;
    prev_ue = f_ue;
    prev_b = b;
    prev_i = irr;
  }
  return r;
}

}  // namespace

std::string objective_name(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::Transmittance550: return "transmittance_550";
    case ObjectiveKind::VisibleTransmission: return "visible_transmission";
    case ObjectiveKind::SolarReflection: return "solar_reflection";
    case ObjectiveKind::SolarAbsorption: return "solar_absorption";
    case ObjectiveKind::UltimateEfficiency: return "ultimate_efficiency";
    case ObjectiveKind::ShieldingEffectiveness: return "shielding_effectiveness";
  }
  return "";
}

ObjectiveKind parse_objective(const std::string& s) {
  for (auto k : {ObjectiveKind::Transmittance550, ObjectiveKind::VisibleTransmission,
                 ObjectiveKind::SolarReflection, ObjectiveKind::SolarAbsorption,
                 ObjectiveKind::UltimateEfficiency, ObjectiveKind::ShieldingEffectiveness})
    if (objective_name(k) == s) return k;
  throw InvalidArgument("unknown objective '" + s + "'");
}

Band objective_band(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::Transmittance550:
    case ObjectiveKind::ShieldingEffectiveness: return Band::Single550;
    case ObjectiveKind::VisibleTransmission: return Band::Visible;
    default: return Band::Solar;
  }
}

bool objective_maximized(ObjectiveKind k) { return k != ObjectiveKind::SolarReflection; }

std::string objective_units(ObjectiveKind k) {
  return k == ObjectiveKind::ShieldingEffectiveness ? "dB" : "1";
}

double weighted_integral(const std::vector<double>& fx, const std::vector<double>& fy,
                         const std::vector<double>& wx, const std::vector<double>& wy, double lo,
                         double hi) {
  const auto grid = union_grid(fx, wx, lo, hi);
  return trapezoid(grid, [&](double x) { return lerp_at(fx, fy, x) * lerp_at(wx, wy, x); });
}

double solar_reflection(const RatSpectra& s, const SpectralWeight& w) {
  require_broadband(s, "solar reflection");
  const double lo = s.min_wavelength(), hi = s.max_wavelength();
  if (!w.covers(lo, hi)) throw InvalidArgument("solar weight table does not cover the spectrum range");
  const auto grid = union_grid(s.wavelengths, w.wavelengths(), lo, hi);
  const double num = trapezoid(
      grid, [&](double l) { return w.photon_flux_per_nm(l) * lerp_at(s.wavelengths, s.R, l); });
  const double den = trapezoid(grid, [&](double l) { return w.photon_flux_per_nm(l); });
  return num / den;
}

double solar_absorption(const RatSpectra& s, const SpectralWeight& w, double eg) {
  const auto r = solar_integrals(s, w, eg);
  return r.numerator_flux / r.denominator_flux;
}

double ultimate_efficiency(const RatSpectra& s, const SpectralWeight& w, double eg) {
  const auto r = solar_integrals(s, w, eg);
  return r.numerator_ue / r.denominator_irr;
}

double visible_transmission(const RatSpectra& s, const SpectralWeight& d65) {
  constexpr double lo = 380.0, hi = 750.0;
  require_broadband(s, "visible transmission");
  if (s.min_wavelength() > lo + 1e-9 || s.max_wavelength() < hi - 1e-9)
    throw InvalidArgument("spectrum does not cover 380-750 nm");
  if (!d65.covers(lo, hi)) throw InvalidArgument("D65 table does not cover 380-750 nm");
  const auto grid = union_grid(s.wavelengths, d65.wavelengths(), lo, hi);
  const double num =
      trapezoid(grid, [&](double l) { return d65.value(l) * lerp_at(s.wavelengths, s.T, l); });
  const double den = trapezoid(grid, [&](double l) { return d65.value(l); });
  return num / den;
}

double transmittance_550(const RatSpectra& s) {
  for (std::size_t k = 0; k < s.wavelengths.size(); ++k)
    if (std::abs(s.wavelengths[k] - 550.0) < 1e-9) return s.T[k];
  if (s.wavelengths.size() >= 2 && s.min_wavelength() <= 550.0 && s.max_wavelength() >= 550.0)
    return lerp_at(s.wavelengths, s.T, 550.0);
  throw InvalidArgument("spectrum does not contain 550 nm");
}

double shielding_effectiveness(double t2_nm, double rho) {
  if (!(rho > 0)) throw InvalidArgument("resistivity must be positive");
  if (!(t2_nm >= 0)) throw InvalidArgument("metal thickness must be non-negative");
  return 20.0 * std::log10(1.0 + units::kFreeSpaceImpedance * (t2_nm * 1e-9) / (2.0 * rho));
}

double band_gap_cutoff_nm(double eg) {
  if (!(eg > 0)) throw InvalidArgument("band gap must be positive");
  return units::ev_to_wavelength(eg);
}

std::vector<std::size_t> pareto_filter(const std::vector<std::pair<double, double>>& pts) {
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pts[a].first > pts[b].first;
  });
  std::vector<char> keep(pts.size(), 0);
  // Sweep in decreasing x; a point is dominated iff some point with larger x
  // has y >= its y, or a point with equal x has strictly larger y.
  double best_y_strict = -std::numeric_limits<double>::infinity();
  std::size_t k = 0;
  while (k < order.size()) {
    std::size_t end = k;
    double group_max = -std::numeric_limits<double>::infinity();
    while (end < order.size() && pts[order[end]].first == pts[order[k]].first) {
      group_max = std::max(group_max, pts[order[end]].second);
      ++end;
    }
    for (std::size_t q = k; q < end; ++q) {
      const double y = pts[order[q]].second;
      keep[order[q]] = (y > best_y_strict && y == group_max) ? 1 : 0;
    }
    best_y_strict = std::max(best_y_strict, group_max);
    k = end;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (keep[i]) out.push_back(i);
  return out;
}

}  // namespace photonbench
