// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fdtd/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/units.hpp"

namespace photonbench {

namespace {

constexpr double kEnvelopeSigmas = 6.1;  // exp(-6.1^2 / 2) < 1e-8

}  // namespace

std::string fidelity_name(Fidelity f) {
  switch (f) {
    case Fidelity::Low: return "low";
    case Fidelity::Medium: return "medium";
    case Fidelity::High: return "high";
  }
  return "medium";
}

Fidelity parse_fidelity(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "low") return Fidelity::Low;
  if (s == "medium") return Fidelity::Medium;
  if (s == "high") return Fidelity::High;
  throw InvalidArgument("unknown fidelity '" + name + "' (expected low, medium or high)");
}

double fidelity_dx(Fidelity f) {
  switch (f) {
    case Fidelity::Low: return 10.0;
    case Fidelity::Medium: return 5.0;
    case Fidelity::High: return 1.0;
  }
  return 5.0;
}

double GaussianSource::envelope(double t) const {
  const double s = (t - t0) / sigma_t();
  return std::exp(-0.5 * s * s);
}

double GaussianSource::value(double t) const {
  if (t > cutoff()) return 0.0;
  return amplitude * std::sin(2.0 * units::kPi * center * (t - t0)) * envelope(t);
}

GaussianSource source_for_wavelengths(const std::vector<double>& wavelengths_nm) {
  if (wavelengths_nm.empty()) throw InvalidArgument("frequency list is empty");
  double fmin = INFINITY, fmax = 0.0;
  for (double l : wavelengths_nm) {
    if (!(l > 0)) throw InvalidArgument("wavelengths must be positive");
    const double f = units::wavelength_to_freq(l);
    fmin = std::min(fmin, f);
    fmax = std::max(fmax, f);
  }
  GaussianSource s;
  s.center = 0.5 * (fmin + fmax);
  s.width = fmax > fmin ? 1.2 * (fmax - fmin) : 0.1 * s.center;
  s.t0 = kEnvelopeSigmas * s.sigma_t();
  return s;
}

std::vector<double> monitor_flux(const DftMonitor& m) {
  std::vector<double> p(m.omega.size(), 0.0);
  for (std::size_t k = 0; k < m.omega.size(); ++k) {
    double acc = 0.0;
    for (int i = 0; i < m.nx; ++i) acc += std::real(std::conj(m.ez_at(k, i)) * m.hx_at(k, i));
    p[k] = 0.5 * acc * m.dx;
  }
  return p;
}

std::vector<double> monitor_flux_difference(const DftMonitor& a, const DftMonitor& b) {
  if (a.nx != b.nx || a.omega != b.omega || a.hx_row != b.hx_row)
    throw InvalidArgument("monitors do not share a grid line and frequency list");
  std::vector<double> p(a.omega.size(), 0.0);
  for (std::size_t k = 0; k < a.omega.size(); ++k) {
    double acc = 0.0;
    for (int i = 0; i < a.nx; ++i)
      acc += std::real(std::conj(a.ez_at(k, i) - b.ez_at(k, i)) * (a.hx_at(k, i) - b.hx_at(k, i)));
    p[k] = 0.5 * acc * a.dx;
  }
  return p;
}

std::vector<DispersiveMaterial> resolve_palette(const MaterialGrid& grid,
                                                const MaterialLibrary& library) {
  std::vector<DispersiveMaterial> out;
  out.reserve(grid.palette.size());
  for (std::size_t k = 0; k < grid.palette.size(); ++k)
    out.push_back(k == 0 ? vacuum_material() : library.get(grid.palette[k]));
  return out;
}

SimulationRun::SimulationRun(const MaterialGrid& grid,
                             const std::vector<DispersiveMaterial>& materials,
                             const std::vector<double>& wavelengths_nm, const RunConfig& config)
    : grid_(grid), config_(config), wavelengths_(wavelengths_nm) {
  if (wavelengths_nm.empty()) throw InvalidArgument("frequency list is empty");
  if (materials.size() != grid.palette.size())
    throw InvalidArgument("material list does not match the grid palette");
  if (!(config.courant > 0 && config.courant <= 1.0))
    throw InvalidArgument("Courant factor must lie in (0, 1]");
  if (!(config.decay_ratio > 0 && config.decay_ratio < 1))
    throw InvalidArgument("decay ratio must lie in (0, 1)");
  if (config.check_every < 1) throw InvalidArgument("check window must be at least one step");
  if (std::abs(grid.dx - config.dx()) > 1e-9 * grid.dx)
    throw InvalidArgument("grid spacing " + format_double(grid.dx) +
                          " nm does not match the run configuration (" +
                          format_double(config.dx()) + " nm)");

  nx_ = grid.nx;
  ny_ = grid.ny;
  dx_ = units::nm_to_length(grid.dx);
  dt_ = config.courant * dx_ / std::sqrt(2.0);
  const std::size_t n = static_cast<std::size_t>(nx_) * ny_;
  ez_.assign(n, 0.0);
  dz_.assign(n, 0.0);
  hx_.assign(n, 0.0);
  hy_.assign(n, 0.0);

  // Layout rows.
  const double m = grid.cell.unit_depth;
  const double height_nm = ny_ * grid.dx;
  const auto row_of = [&](double y_nm) { return static_cast<int>(std::floor(y_nm / grid.dx)); };
  const auto hx_row_of = [&](double y_nm) {
    return static_cast<int>(std::lround(y_nm / grid.dx)) - 1;
  };
  const int pml_top_end = row_of(m);  // first non-PML Ez row
  const int pml_bottom_start = static_cast<int>(std::ceil((height_nm - m) / grid.dx - 1e-9));
  source_ = source_for_wavelengths(wavelengths_nm);
  if (config.source_center) source_.center = *config.source_center;
  if (config.source_width) {
    source_.width = *config.source_width;
    source_.t0 = kEnvelopeSigmas * source_.sigma_t();
  }
  source_.amplitude = config.source_amplitude;
  source_.row = row_of(grid.cell.source_y());
  const int refl_row = hx_row_of(grid.cell.reflection_monitor_y());
  const int trans_row = hx_row_of(height_nm - 2.0 * m);
  if (!(pml_top_end >= 1 && source_.row >= pml_top_end && refl_row > source_.row &&
        trans_row > refl_row && trans_row + 1 < pml_bottom_start && pml_bottom_start < ny_))
    throw InvalidArgument("cell too small to hold absorbers, source and monitors at dx = " +
                          format_double(grid.dx) + " nm");

  // PML profiles (quartic grading, target normal-incidence reflection).
  const double L = units::nm_to_length(m);
  const double sigma_max =
      -(config.pml_order + 1.0) * std::log(config.pml_reflection) / (2.0 * L);
  const auto sigma_at = [&](double y_nm) {
    double d = 0.0;
    if (y_nm < m) d = m - y_nm;
    else if (y_nm > height_nm - m) d = y_nm - (height_nm - m);
    if (d <= 0.0) return 0.0;
    return sigma_max * std::pow(std::min(d / m, 1.0), config.pml_order);
  };
  const auto coeffs = [&](double sigma, double& ca, double& cb) {
    if (sigma > 0.0) {
      ca = std::exp(-sigma * dt_);
      cb = (1.0 - ca) / (sigma * dx_);
    } else {
      ca = 1.0;
      cb = dt_ / dx_;
    }
  };
  ca_e_.resize(ny_);
  cb_e_.resize(ny_);
  ca_h_.resize(ny_);
  cb_h_.resize(ny_);
  pml_row_.assign(ny_, 0);
  for (int j = 0; j < ny_; ++j) {
    const double se = sigma_at((j + 0.5) * grid.dx);
    coeffs(se, ca_e_[j], cb_e_[j]);
    coeffs(sigma_at((j + 1.0) * grid.dx), ca_h_[j], cb_h_[j]);
    pml_row_[j] = (j < pml_top_end || j >= pml_bottom_start) ? 1 : 0;
  }
  dzy_.assign(n, 0.0);

  // Materials.
  inv_eps_.assign(n, 1.0);
  std::vector<int> block_of(materials.size(), -1);
  for (std::size_t k = 0; k < materials.size(); ++k) {
    const auto& mat = materials[k];
    if (!(mat.eps_inf > 0)) throw InvalidArgument("material " + mat.name + " has eps_inf <= 0");
    if (!mat.dispersive()) continue;
    validate_terms(mat);
    DispersiveBlock b;
    b.inv_eps_inf = 1.0 / mat.eps_inf;
    for (const auto& t : mat.terms) {
      const double w2 = t.omega * t.omega * dt_ * dt_;
      const double a = 1.0 + 0.5 * t.gamma * dt_;
      b.c1.push_back((2.0 - w2) / a);
      b.c2.push_back(-(1.0 - 0.5 * t.gamma * dt_) / a);
      b.c3.push_back(t.sigma * w2 / a);
    }
    block_of[k] = static_cast<int>(dispersive_.size());
    dispersive_.push_back(std::move(b));
  }
  for (std::size_t c = 0; c < n; ++c) {
    const auto id = grid.ids[c];
    if (id >= materials.size()) throw InvalidArgument("grid references an unknown palette entry");
    if (block_of[id] >= 0) {
      inv_eps_[c] = 0.0;
      dispersive_[static_cast<std::size_t>(block_of[id])].cells.push_back(c);
    } else {
      inv_eps_[c] = 1.0 / materials[id].eps_inf;
    }
  }
  for (auto& b : dispersive_) {
    b.p.assign(b.c1.size(), std::vector<double>(b.cells.size(), 0.0));
    b.pm = b.p;
  }

  // Monitors and probe.
  std::vector<double> omega;
  for (double l : wavelengths_nm) omega.push_back(units::wavelength_to_omega(l));
  for (DftMonitor* mon : {&refl_, &trans_}) {
    mon->nx = nx_;
    mon->dx = dx_;
    mon->omega = omega;
    mon->ez.assign(omega.size() * nx_, {0.0, 0.0});
    mon->hx.assign(omega.size() * nx_, {0.0, 0.0});
  }
  refl_.hx_row = refl_row;
  trans_.hx_row = trans_row;
  probe_i_ = nx_ / 2;
  probe_j_ = trans_row;
}

void SimulationRun::update_h() {
  const double c = dt_ / dx_;
  for (int j = 0; j < ny_; ++j) {
    double* hx = &hx_[static_cast<std::size_t>(j) * nx_];
    double* hy = &hy_[static_cast<std::size_t>(j) * nx_];
    const double* e = &ez_[static_cast<std::size_t>(j) * nx_];
    const double* e_below = j + 1 < ny_ ? e + nx_ : nullptr;
    const double ca = ca_h_[j], cb = cb_h_[j];
    for (int i = 0; i < nx_; ++i) {
      const double curl = (e_below ? e_below[i] : 0.0) - e[i];
      hx[i] = ca * hx[i] - cb * curl;
    }
    for (int i = 0; i + 1 < nx_; ++i) hy[i] += c * (e[i + 1] - e[i]);
    hy[nx_ - 1] += c * (e[0] - e[nx_ - 1]);
  }
}

void SimulationRun::update_d() {
  const double c = dt_ / dx_;
  const double t_half = (static_cast<double>(steps_) + 0.5) * dt_;
  const double j_src = source_.value(t_half) / dx_;
  for (int j = 0; j < ny_; ++j) {
    const std::size_t row = static_cast<std::size_t>(j) * nx_;
    double* d = &dz_[row];
    const double* hx = &hx_[row];
    const double* hx_up = j > 0 ? hx - nx_ : nullptr;
    const double* hy = &hy_[row];
    const double src = j == source_.row ? dt_ * j_src : 0.0;
    if (!pml_row_[j]) {
      for (int i = 0; i < nx_; ++i) {
        const double dhy = hy[i] - hy[i == 0 ? nx_ - 1 : i - 1];
        const double dhx = hx[i] - (hx_up ? hx_up[i] : 0.0);
        d[i] += c * (dhy - dhx) - src;
      }
    } else {
      double* dzy = &dzy_[row];
      const double ca = ca_e_[j], cb = cb_e_[j];
      for (int i = 0; i < nx_; ++i) {
        const double dhy = hy[i] - hy[i == 0 ? nx_ - 1 : i - 1];
        const double dhx = hx[i] - (hx_up ? hx_up[i] : 0.0);
        const double dzy_new = ca * dzy[i] - cb * dhx;
        d[i] += c * dhy + (dzy_new - dzy[i]) - src;
        dzy[i] = dzy_new;
      }
    }
  }
}

void SimulationRun::update_e() {
  const std::size_t n = ez_.size();
  for (auto& b : dispersive_) {
    const std::size_t nc = b.cells.size();
    const std::size_t nt = b.c1.size();
    for (std::size_t t = 0; t < nt; ++t) {
      double* p = b.p[t].data();
      double* pm = b.pm[t].data();
      const double c1 = b.c1[t], c2 = b.c2[t], c3 = b.c3[t];
      for (std::size_t k = 0; k < nc; ++k) {
        const double e_old = ez_[b.cells[k]];
        const double pn = c1 * p[k] + c2 * pm[k] + c3 * e_old;
        pm[k] = p[k];
        p[k] = pn;
      }
    }
    for (std::size_t k = 0; k < nc; ++k) {
      double ptot = 0.0;
      for (std::size_t t = 0; t < nt; ++t) ptot += b.p[t][k];
      const std::size_t c = b.cells[k];
      ez_[c] = (dz_[c] - ptot) * b.inv_eps_inf;
    }
  }
  for (std::size_t c = 0; c < n; ++c)
    if (inv_eps_[c] != 0.0) ez_[c] = dz_[c] * inv_eps_[c];
}

void SimulationRun::accumulate(DftMonitor& m) {
  const double te = static_cast<double>(steps_) * dt_;
  const double th = te - 0.5 * dt_;
  const std::size_t r0 = static_cast<std::size_t>(m.hx_row) * nx_;
  const double* e0 = &ez_[r0];
  const double* e1 = &ez_[r0 + nx_];
  const double* h = &hx_[r0];
  for (std::size_t k = 0; k < m.omega.size(); ++k) {
    const std::complex<double> pe = std::polar(dt_, m.omega[k] * te);
    const std::complex<double> ph = std::polar(dt_, m.omega[k] * th);
    std::complex<double>* ez = &m.ez[k * nx_];
    std::complex<double>* hx = &m.hx[k * nx_];
    for (int i = 0; i < nx_; ++i) {
      ez[i] += 0.5 * (e0[i] + e1[i]) * pe;
      hx[i] += h[i] * ph;
    }
  }
}

void SimulationRun::step() {
  update_h();
  update_d();
  update_e();
  ++steps_;
  accumulate(refl_);
  accumulate(trans_);
  if (!std::isfinite(probe_value()) || (steps_ % config_.check_every == 0)) check_finite();
  if (snapshot_stride_ > 0 && steps_ % snapshot_stride_ == 0) record_snapshot();
}

void SimulationRun::run_steps(std::int64_t n) {
  for (std::int64_t k = 0; k < n; ++k) step();
}

void SimulationRun::check_finite() {
  for (double v : ez_)
    if (!std::isfinite(v)) throw DivergenceError("field diverged at step " + std::to_string(steps_), steps_);
  for (double v : hx_)
    if (!std::isfinite(v)) throw DivergenceError("field diverged at step " + std::to_string(steps_), steps_);
}

double SimulationRun::probe_value() const {
  return ez_[static_cast<std::size_t>(probe_j_) * nx_ + probe_i_];
}

double SimulationRun::max_abs_field() const {
  double m = 0.0;
  for (const auto* f : {&ez_, &hx_, &hy_})
    for (double v : *f) m = std::max(m, std::abs(v));
  return m;
}

void SimulationRun::run_until_decay() {
  double peak = 0.0;
  int below = 0;
  double ratio = 1.0;
  const double t_off = source_.cutoff();
  while (true) {
    if (steps_ >= config_.max_steps)
      throw TimeoutError("fields did not decay within " + std::to_string(config_.max_steps) +
                             " steps (last ratio " + format_double(ratio) + ")",
                         ratio);
    step();
    const double v = std::abs(probe_value());
    peak = std::max(peak, v);
    ratio = peak > 0.0 ? v / peak : 0.0;
    if (time() <= t_off) continue;
    if (source_.amplitude == 0.0) return;
    if (peak > 0.0 && v < config_.decay_ratio * peak) {
      if (++below >= config_.check_every) return;
    } else {
      below = 0;
    }
  }
}

void SimulationRun::enable_snapshots(std::int64_t stride) {
  if (stride < 1) throw InvalidArgument("snapshot stride must be at least 1");
  snapshot_stride_ = stride;
  snapshots_.clear();
  if (steps_ == 0) record_snapshot();
}

void SimulationRun::record_snapshot() {
  FieldSnapshot s;
  s.step = steps_;
  s.time = time();
  s.ez.assign(ez_.begin(), ez_.end());
  s.hx.assign(hx_.begin(), hx_.end());
  s.hy.assign(hy_.begin(), hy_.end());
  snapshots_.push_back(std::move(s));
}

void export_snapshots(const SimulationRun& run, const std::filesystem::path& path,
                      SnapshotFormat format) {
  const auto& snaps = run.snapshots();
  std::ostringstream os;
  if (format == SnapshotFormat::Binary) {
    const auto put = [&](const auto& v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); };
    os.write("PBSNAP01", 8);
    put(static_cast<std::int32_t>(run.nx()));
    put(static_cast<std::int32_t>(run.ny()));
    put(run.grid().dx);
    put(run.dt());
    put(static_cast<std::int64_t>(run.snapshot_stride()));
    put(static_cast<std::int64_t>(snaps.size()));
    for (const auto& s : snaps) {
      put(static_cast<std::int64_t>(s.step));
      put(s.time);
      for (const auto* f : {&s.ez, &s.hx, &s.hy})
        os.write(reinterpret_cast<const char*>(f->data()),
                 static_cast<std::streamsize>(f->size() * sizeof(float)));
    }
  } else {
    os << "# nx: " << run.nx() << "\n# ny: " << run.ny() << "\n# dx_nm: "
       << format_double(run.grid().dx) << "\n# dt: " << format_double(run.dt())
       << "\n# stride: " << run.snapshot_stride() << "\n# count: " << snaps.size() << "\n";
    os << "step,time,j,i,ez,hx,hy\n";
    for (const auto& s : snaps)
      for (int j = 0; j < run.ny(); ++j)
        for (int i = 0; i < run.nx(); ++i) {
          const std::size_t c = static_cast<std::size_t>(j) * run.nx() + i;
          os << s.step << ',' << format_double(s.time) << ',' << j << ',' << i << ','
             << format_double(s.ez[c]) << ',' << format_double(s.hx[c]) << ','
             << format_double(s.hy[c]) << '\n';
        }
  }
  write_file_atomic(path, os.str());
}

}  // namespace photonbench
