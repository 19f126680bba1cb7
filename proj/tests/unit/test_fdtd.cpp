// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include "catch_amalgamated.hpp"

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/rng.hpp"
#include "common/units.hpp"
#include "fdtd/simulation.hpp"
#include "spectra/rat.hpp"
#include "tmm.hpp"

using namespace photonbench;
using Catch::Approx;

namespace {

struct Slab {
  std::string material;
  double y0, y1;
};

Layout slab_layout(double width, double height, const std::vector<Slab>& slabs) {
  Layout l;
  l.cell.width = width;
  l.cell.height = height;
  l.cell.unit_depth = 50.0;
  for (const auto& s : slabs) l.add_rect(s.material, 0, width, s.y0, s.y1);
  return l;
}

DispersiveMaterial dielectric(const std::string& name, double eps) {
  DispersiveMaterial m;
  m.name = name;
  m.eps_inf = eps;
  return m;
}

std::vector<DispersiveMaterial> palette_materials(const MaterialGrid& g,
                                                  const std::map<std::string, DispersiveMaterial>& mats) {
  std::vector<DispersiveMaterial> out{vacuum_material()};
  for (std::size_t k = 1; k < g.palette.size(); ++k) out.push_back(mats.at(g.palette[k]));
  return out;
}

RunConfig config_for(Fidelity f) {
  RunConfig c;
  c.fidelity = f;
  return c;
}

// Empty-cell normalization followed by a structure run; returns R and T.
RatSpectra run_rat(const Layout& l, const std::map<std::string, DispersiveMaterial>& mats,
                   const std::vector<double>& wl, const RunConfig& cfg) {
  const auto empty = rasterize(empty_layout(l.cell), cfg.dx());
  SimulationRun norm(empty, {vacuum_material()}, wl, cfg);
  norm.run_until_decay();
  const auto nr = normalization_from_run(norm, "norm");
  const auto g = rasterize(l, cfg.dx());
  SimulationRun run(g, palette_materials(g, mats), wl, cfg);
  run.run_until_decay();
  return rat_from_runs(nr, run);
}

}  // namespace

TEST_CASE("run construction places source and monitors inside the cell", "[fdtd]") {
  SimulationCell cell{10, 390, 50};
  const auto low = rasterize(empty_layout(cell), 10.0);
  SimulationRun run(low, {vacuum_material()}, {550.0}, config_for(Fidelity::Low));
  CHECK(run.nx() == 1);
  CHECK(run.ny() == 39);
  CHECK(run.source().row == 7);
  CHECK(run.reflection_monitor().hx_row > run.source().row);
  CHECK(run.transmission_monitor().hx_row > run.reflection_monitor().hx_row);
  CHECK(run.transmission_monitor().hx_row + 1 < run.ny() - 5);

  const auto high = rasterize(empty_layout(cell), 1.0);
  SimulationRun fine(high, {vacuum_material()}, {550.0}, config_for(Fidelity::High));
  CHECK(fine.nx() == 10 * run.nx());
  CHECK(fine.ny() == 10 * run.ny());
  CHECK(fine.dx() == Approx(run.dx() / 10));
}

TEST_CASE("run construction rejects bad inputs", "[fdtd]") {
  SimulationCell cell{10, 390, 50};
  const auto g = rasterize(empty_layout(cell), 10.0);
  CHECK_THROWS_AS(SimulationRun(g, {vacuum_material()}, {}, config_for(Fidelity::Low)),
                  InvalidArgument);
  CHECK_THROWS_AS(SimulationRun(g, {vacuum_material()}, {550.0}, config_for(Fidelity::Medium)),
                  InvalidArgument);
  const auto small = rasterize(empty_layout(SimulationCell{10, 200, 50}), 10.0);
  CHECK_THROWS_AS(SimulationRun(small, {vacuum_material()}, {550.0}, config_for(Fidelity::Low)),
                  InvalidArgument);
}

TEST_CASE("fidelity map orders grid spacing", "[fdtd]") {
  CHECK(fidelity_dx(Fidelity::High) < fidelity_dx(Fidelity::Medium));
  CHECK(fidelity_dx(Fidelity::Medium) < fidelity_dx(Fidelity::Low));
  CHECK(parse_fidelity("HIGH") == Fidelity::High);
  CHECK_THROWS_AS(parse_fidelity("ultra"), InvalidArgument);
}

TEST_CASE("source envelope starts below 1e-8 and spans the band", "[fdtd]") {
  for (Band b : {Band::Visible, Band::Solar, Band::Single550}) {
    const auto wl = band_wavelengths(b);
    const auto s = source_for_wavelengths(wl);
    CHECK(s.envelope(0.0) < 1e-8);
    CHECK(s.envelope(s.t0) == 1.0);
    const double fmin = units::wavelength_to_freq(wl.back());
    const double fmax = units::wavelength_to_freq(wl.front());
    CHECK(s.center == Approx(0.5 * (fmin + fmax)));
    CHECK(s.width >= 1.1 * (fmax - fmin));
    CHECK(s.value(s.cutoff() + 1e-9) == 0.0);
  }
}

TEST_CASE("zero fields with zero source stay zero", "[fdtd]") {
  const auto g = rasterize(empty_layout(SimulationCell{50, 500, 50}), 5.0);
  auto cfg = config_for(Fidelity::Medium);
  cfg.source_amplitude = 0.0;
  SimulationRun run(g, {vacuum_material()}, {550.0}, cfg);
  run.run_steps(500);
  CHECK(run.max_abs_field() == 0.0);
  for (double p : monitor_flux(run.transmission_monitor())) CHECK(p == 0.0);
  run.run_until_decay();  // zero amplitude: returns once the source window has passed
  CHECK(run.time() > run.source().cutoff());
}

TEST_CASE("vacuum impulse stays inside the light cone", "[fdtd]") {
  // A point impulse excites grid-scale modes whose discrete tails leak ahead
  // of the cone at the 1e-4 level, so the impulse is a Gaussian two cells wide
  // and support is measured where |Ez| exceeds 1e-4 of its initial peak.
  const auto g = rasterize(empty_layout(SimulationCell{800, 1200, 50}), 5.0);
  auto cfg = config_for(Fidelity::Medium);
  cfg.source_amplitude = 0.0;
  SimulationRun run(g, {vacuum_material()}, {550.0}, cfg);
  const int ci = run.nx() / 2, cj = run.ny() / 2;
  const auto support = [&](const std::vector<double>& f) {
    double radius = 0.0;
    for (int j = 0; j < run.ny(); ++j)
      for (int i = 0; i < run.nx(); ++i)
        if (std::abs(f[static_cast<std::size_t>(j) * run.nx() + i]) > 1e-4)
          radius = std::max(radius, std::hypot(i - ci, j - cj) * run.dx());
    return radius;
  };
  for (int j = 0; j < run.ny(); ++j)
    for (int i = 0; i < run.nx(); ++i) {
      const double r2 = (i - ci) * (i - ci) + (j - cj) * (j - cj);
      const std::size_t c = static_cast<std::size_t>(j) * run.nx() + i;
      run.mutable_dz()[c] = run.mutable_ez()[c] = std::exp(-r2 / 8.0);
    }
  const double r0 = support(run.ez());
  for (int n : {20, 60, 120}) {
    run.run_steps(n - run.steps());
    const double radius = support(run.ez());
    CAPTURE(n, r0, radius);
    CHECK(radius <= r0 + n * run.dt() + 2 * run.dx());
    CHECK(radius > 0.5 * n * run.dt());
  }
}

TEST_CASE("pulse travels at c/1.5 in a uniform eps=2.25 medium", "[fdtd]") {
  const double H = 4000;
  const auto l = slab_layout(10, H, {{"glass", 0, H}});
  auto cfg = config_for(Fidelity::Medium);
  cfg.source_width = 5.0;
  const auto g = rasterize(l, 5.0);
  SimulationRun run(g, {vacuum_material(), dielectric("glass", 2.25)}, {550.0}, cfg);
  const int j1 = 100, j2 = 500;  // 2000 nm apart
  double w1 = 0, w2 = 0, t1 = 0, t2 = 0;
  const std::int64_t n = static_cast<std::int64_t>((run.source().cutoff() + 6.0) / run.dt());
  for (std::int64_t k = 0; k < n; ++k) {
    run.step();
    const double a = run.ez()[static_cast<std::size_t>(j1) * run.nx()];
    const double b = run.ez()[static_cast<std::size_t>(j2) * run.nx()];
    w1 += a * a;
    t1 += a * a * run.time();
    w2 += b * b;
    t2 += b * b * run.time();
  }
  const double speed = (j2 - j1) * run.dx() / (t2 / w2 - t1 / w1);
  CHECK(speed == Approx(1.0 / 1.5).epsilon(0.01));
}

TEST_CASE("vacuum transmission matches incident flux", "[fdtd]") {
  const auto wl = band_wavelengths(Band::Visible);
  const auto g = rasterize(empty_layout(SimulationCell{10, 400, 50}), 5.0);
  SimulationRun run(g, {vacuum_material()}, wl, config_for(Fidelity::Medium));
  run.run_until_decay();
  const auto inc = monitor_flux(run.reflection_monitor());
  const auto tr = monitor_flux(run.transmission_monitor());
  for (std::size_t k = 0; k < wl.size(); ++k) {
    CAPTURE(wl[k]);
    CHECK(inc[k] > 0.0);
    CHECK(tr[k] / inc[k] == Approx(1.0).margin(0.01));
  }
}

TEST_CASE("bottom absorber reflects at most 1e-4 of the incident flux", "[fdtd]") {
  const auto wl = band_wavelengths(Band::Visible);
  const auto cfg = config_for(Fidelity::Medium);
  const auto g = rasterize(empty_layout(SimulationCell{10, 400, 50}), 5.0);
  SimulationRun run(g, {vacuum_material()}, wl, cfg);
  run.run_until_decay();
  // Same source and monitor rows, bottom absorber far enough that nothing
  // returns within the same number of steps.
  const double travel = run.time() * 1000.0;
  const auto tall = rasterize(empty_layout(SimulationCell{10, 400 + travel, 50}), 5.0);
  SimulationRun ref(tall, {vacuum_material()}, wl, cfg);
  ref.run_steps(run.steps());
  REQUIRE(ref.reflection_monitor().hx_row == run.reflection_monitor().hx_row);
  const auto inc = monitor_flux(ref.reflection_monitor());
  const auto back = monitor_flux_difference(run.reflection_monitor(), ref.reflection_monitor());
  for (std::size_t k = 0; k < wl.size(); ++k) {
    CAPTURE(wl[k]);
    CHECK(std::abs(back[k]) / inc[k] <= 1e-4);
  }
}

TEST_CASE("doubling the source doubles accumulators and quadruples flux", "[fdtd]") {
  const auto wl = band_wavelengths(Band::Visible, 8);
  const auto l = slab_layout(10, 500, {{"glass", 150, 250}});
  auto cfg = config_for(Fidelity::Medium);
  const auto g = rasterize(l, 5.0);
  const std::vector<DispersiveMaterial> mats{vacuum_material(), dielectric("glass", 2.25)};
  SimulationRun a(g, mats, wl, cfg);
  cfg.source_amplitude = 2.0;
  SimulationRun b(g, mats, wl, cfg);
  a.run_steps(3000);
  b.run_steps(3000);
  const auto& ma = a.transmission_monitor();
  const auto& mb = b.transmission_monitor();
  for (std::size_t c = 0; c < ma.ez.size(); ++c) {
    CHECK(std::abs(mb.ez[c] - 2.0 * ma.ez[c]) <= 1e-12 * std::abs(mb.ez[c]));
    CHECK(std::abs(mb.hx[c] - 2.0 * ma.hx[c]) <= 1e-12 * std::abs(mb.hx[c]));
  }
  const auto pa = monitor_flux(ma), pb = monitor_flux(mb);
  for (std::size_t k = 0; k < pa.size(); ++k)
    CHECK(std::abs(pb[k] - 4.0 * pa[k]) <= 1e-12 * std::abs(pb[k]));
}

TEST_CASE("shifting the structure along the periodic axis leaves fluxes unchanged", "[fdtd]") {
  const auto wl = band_wavelengths(Band::Visible, 8);
  Layout l;
  l.cell = SimulationCell{200, 500, 50};
  l.add_rect("glass", 20, 90, 160, 260);
  const auto g = rasterize(l, 5.0);
  const std::vector<DispersiveMaterial> mats{vacuum_material(), dielectric("glass", 4.0)};
  const auto roll = [&](int shift) {
    auto out = g;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        out.ids[static_cast<std::size_t>(j) * g.nx + (i + shift) % g.nx] = g.at(i, j);
    return out;
  };
  const auto cfg = config_for(Fidelity::Medium);
  const auto fluxes = [&](const MaterialGrid& grid) {
    SimulationRun run(grid, mats, wl, cfg);
    run.run_steps(2500);
    auto p = monitor_flux(run.transmission_monitor());
    const auto r = monitor_flux(run.reflection_monitor());
    p.insert(p.end(), r.begin(), r.end());
    return p;
  };
  const auto base = fluxes(g);
  CHECK(fluxes(roll(g.nx)) == base);
  const auto shifted = fluxes(roll(7));
  for (std::size_t k = 0; k < base.size(); ++k)
    CHECK(shifted[k] == Approx(base[k]).epsilon(1e-9).margin(1e-15));
}

TEST_CASE("long vacuum runs stay bounded", "[fdtd][slow]") {
  const auto g = rasterize(empty_layout(SimulationCell{10, 390, 50}), 10.0);
  SimulationRun run(g, {vacuum_material()}, band_wavelengths(Band::Visible, 4),
                    config_for(Fidelity::Low));
  double peak = 0.0;
  for (int k = 0; k < 1000; ++k) {
    run.run_steps(100);
    peak = std::max(peak, run.max_abs_field());
  }
  CHECK(run.steps() == 100000);
  CHECK(peak <= 10.0 * run.source().amplitude);
  CHECK(run.max_abs_field() < 1e-6 * peak);
}

TEST_CASE("Drude metal film runs to decay without diverging", "[fdtd]") {
  DispersiveMaterial metal;
  metal.name = "metal";
  metal.eps_inf = 1.0;
  const double wp = 45.0;  // plasma frequency, ~9 eV
  metal.terms.push_back({wp * wp / (kDrudeOmega * kDrudeOmega), kDrudeOmega, 0.1});
  metal.terms.push_back({2.0, 30.0, 5.0});
  const auto l = slab_layout(10, 500, {{"metal", 200, 260}});
  const auto wl = band_wavelengths(Band::Visible, 16);
  const auto s = run_rat(l, {{"metal", metal}}, wl, config_for(Fidelity::Medium));
  for (std::size_t k = 0; k < wl.size(); ++k) {
    CHECK(std::isfinite(s.R[k]));
    CHECK(s.R[k] > 0.5);  // a good mirror
    CHECK(s.A[k] > -0.02);
  }
}

TEST_CASE("high-Q slab cavity exceeds a small step cap", "[fdtd]") {
  const auto l = slab_layout(10, 800, {{"highn", 200, 500}});
  auto cfg = config_for(Fidelity::Medium);
  cfg.max_steps = 10000;
  const auto g = rasterize(l, 5.0);
  SimulationRun run(g, {vacuum_material(), dielectric("highn", 100.0)},
                    band_wavelengths(Band::Visible, 4), cfg);
  try {
    run.run_until_decay();
    FAIL("expected a timeout");
  } catch (const TimeoutError& e) {
    CHECK(e.last_ratio() > 1e-6);
    CHECK(run.steps() == 10000);
  }
}

TEST_CASE("a loose decay ratio stops soon after the source switches off", "[fdtd]") {
  auto cfg = config_for(Fidelity::Medium);
  cfg.decay_ratio = 0.999;
  const auto g = rasterize(empty_layout(SimulationCell{10, 400, 50}), 5.0);
  SimulationRun run(g, {vacuum_material()}, band_wavelengths(Band::Visible), cfg);
  run.run_until_decay();
  const double off_steps = run.source().cutoff() / run.dt();
  CHECK(run.steps() > off_steps);
  CHECK(run.steps() <= off_steps + 2 * cfg.check_every + 1);
}

TEST_CASE("snapshot counts follow the stride", "[fdtd]") {
  const auto g = rasterize(empty_layout(SimulationCell{10, 390, 50}), 10.0);
  const auto cfg = config_for(Fidelity::Low);
  {
    SimulationRun run(g, {vacuum_material()}, {550.0}, cfg);
    run.enable_snapshots(1);
    run.run_steps(100);
    CHECK(run.snapshots().size() == 101);
    CHECK(run.snapshots().front().step == 0);
    CHECK(run.snapshots().back().step == 100);
  }
  {
    SimulationRun run(g, {vacuum_material()}, {550.0}, cfg);
    run.enable_snapshots(250);
    run.run_steps(250);
    CHECK(run.snapshots().size() == 2);
  }
  {
    SimulationRun run(g, {vacuum_material()}, {550.0}, cfg);
    run.enable_snapshots(7);
    run.run_steps(100);
    CHECK(run.snapshots().size() == 100 / 7 + 1);
  }
}

TEST_CASE("vacuum pulse moves monotonically downward", "[fdtd]") {
  auto cfg = config_for(Fidelity::Medium);
  cfg.source_width = 5.0;
  const double H = 4000;
  const auto g = rasterize(empty_layout(SimulationCell{10, H, 50}), 5.0);
  SimulationRun run(g, {vacuum_material()}, {550.0}, cfg);
  run.enable_snapshots(20);
  const double sigma_nm = run.source().sigma_t() * 1000.0;
  const double bottom = H - 50.0;
  run.run_steps(static_cast<std::int64_t>((run.source().cutoff() + 2.0) / run.dt()));
  double last = -1.0;
  int checked = 0;
  for (const auto& s : run.snapshots()) {
    if (s.time <= run.source().cutoff()) continue;
    double w = 0.0, wy = 0.0;
    for (int j = 0; j < run.ny(); ++j) {
      const double e = s.ez[static_cast<std::size_t>(j) * run.nx()];
      w += e * e;
      wy += e * e * (j + 0.5) * g.dx;
    }
    const double centroid = wy / w;
    if (centroid + 4.0 * sigma_nm > bottom) break;
    CHECK(centroid > last);
    last = centroid;
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("snapshot export writes the documented layout", "[fdtd]") {
  const auto g = rasterize(empty_layout(SimulationCell{20, 390, 50}), 10.0);
  SimulationRun run(g, {vacuum_material()}, {550.0}, config_for(Fidelity::Low));
  run.enable_snapshots(10);
  run.run_steps(30);
  const auto dir = std::filesystem::temp_directory_path() / "photonbench_snap_test";
  std::filesystem::create_directories(dir);
  export_snapshots(run, dir / "s.bin", SnapshotFormat::Binary);
  const std::string bin = read_text_file(dir / "s.bin");
  REQUIRE(bin.substr(0, 8) == "PBSNAP01");
  std::int32_t nx, ny;
  std::int64_t stride, count;
  std::memcpy(&nx, bin.data() + 8, 4);
  std::memcpy(&ny, bin.data() + 12, 4);
  std::memcpy(&stride, bin.data() + 32, 8);
  std::memcpy(&count, bin.data() + 40, 8);
  CHECK(nx == 2);
  CHECK(ny == 39);
  CHECK(stride == 10);
  CHECK(count == 4);
  CHECK(bin.size() == 48 + 4 * (16 + 3 * 4 * 2 * 39));

  export_snapshots(run, dir / "s.csv", SnapshotFormat::Csv);
  const std::string csv = read_text_file(dir / "s.csv");
  CHECK(csv.rfind("# nx: 2\n# ny: 39\n", 0) == 0);
  CHECK(csv.find("step,time,j,i,ez,hx,hy\n") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7 + 4 * 2 * 39);
  std::filesystem::remove_all(dir);
}

TEST_CASE("flux is zero for empty accumulators and invariant under conjugation", "[fdtd]") {
  DftMonitor m;
  m.nx = 3;
  m.dx = 0.005;
  m.omega = {1.0, 2.0};
  m.ez.assign(6, {0.0, 0.0});
  m.hx.assign(6, {0.0, 0.0});
  for (double p : monitor_flux(m)) CHECK(p == 0.0);
  Rng rng(3);
  for (std::size_t c = 0; c < 6; ++c) {
    m.ez[c] = {rng.normal(), rng.normal()};
    m.hx[c] = {rng.normal(), rng.normal()};
  }
  auto conj = m;
  for (auto& v : conj.ez) v = std::conj(v);
  for (auto& v : conj.hx) v = std::conj(v);
  const auto a = monitor_flux(m), b = monitor_flux(conj);
  for (std::size_t k = 0; k < 2; ++k) CHECK(b[k] == Approx(a[k]).epsilon(1e-14));
  const auto d = monitor_flux_difference(m, m);
  for (double p : d) CHECK(p == 0.0);
}

TEST_CASE("quarter-wave coating minimum sits at the design wavelength", "[fdtd]") {
  // n=1.5 coating on an n=2.25 substrate: zero reflection at 4 n d = 540 nm.
  const double H = 700;
  const auto l = slab_layout(10, H, {{"coat", 150, 240}, {"sub", 240, H}});
  const auto wl = band_wavelengths(Band::Visible);
  const std::map<std::string, DispersiveMaterial> mats{{"coat", dielectric("coat", 2.25)},
                                                       {"sub", dielectric("sub", 2.25 * 2.25)}};
  const auto s = run_rat(l, mats, wl, config_for(Fidelity::Medium));
  const auto best = std::min_element(s.R.begin(), s.R.end()) - s.R.begin();
  CHECK(wl[best] == Approx(540.0).epsilon(0.02));
  for (std::size_t k = 0; k < wl.size(); ++k) {
    const auto ref = tmm::stack(1.0, {{1.5, 90.0}}, 2.25, wl[k]);
    CHECK(s.R[k] == Approx(ref.R).margin(0.01));
  }
}
