// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <limits>

#include "catch_amalgamated.hpp"

#include "common/error.hpp"
#include "common/rng.hpp"
#include "materials/library.hpp"
#include "optimize/algorithms.hpp"
#include "optimize/benchmark.hpp"
#include "optimize/gp.hpp"
#include "spectra/evaluate.hpp"

using namespace photonbench;
using Catch::Approx;

namespace {

using Fn = std::function<double(std::span<const double>)>;

ObjectiveHandle box(std::vector<double> lo, std::vector<double> hi, Fn f,
                    Direction dir = Direction::Minimize) {
  return ObjectiveHandle::function(std::move(lo), std::move(hi), std::move(f), dir);
}

// Non-separable convex quadratic with minimizer (1, -2).
double quadratic(std::span<const double> x) {
  const double a = x[0] - 1.0, b = x[1] + 2.0;
  return a * a + 10.0 * b * b + 3.0 * a * b;
}

// Two Gaussian wells: local minimum near (-1, 0), global near (1.5, 0).
double two_wells(std::span<const double> x) {
  const double r1 = (x[0] + 1.0) * (x[0] + 1.0) + x[1] * x[1];
  const double r2 = (x[0] - 1.5) * (x[0] - 1.5) + x[1] * x[1];
  return -(std::exp(-r1 / 0.3) + 2.0 * std::exp(-r2 / 0.3));
}

// Smooth, mildly multimodal score on [0, 1]^3 (maximized), values near 0.8.
double smooth3(std::span<const double> x) {
  const double a = x[0] - 0.3, b = x[1] - 0.6, c = x[2] - 0.45;
  return 0.8 - 0.3 * (a * a + b * b + c * c) + 0.05 * std::sin(5 * x[0]) * std::cos(3 * x[1]);
}

double grid_best3(int n) {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      for (int k = 0; k <= n; ++k) {
        const double x[3] = {double(i) / n, double(j) / n, double(k) / n};
        best = std::max(best, smooth3(x));
      }
  return best;
}

bool same_records(const OptimizationTrace& a, const OptimizationTrace& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& p = a.records[i];
    const auto& q = b.records[i];
    if (p.point != q.point) return false;
    if (!(p.value == q.value || (std::isnan(p.value) && std::isnan(q.value)))) return false;
    if (!(p.best_so_far == q.best_so_far || (std::isnan(p.best_so_far) && std::isnan(q.best_so_far))))
      return false;
  }
  return true;
}

void check_invariants(const OptimizationTrace& t, const ObjectiveHandle& h, int budget) {
  CHECK(t.size() <= static_cast<std::size_t>(budget));
  CHECK(t.size() == h.cost());
  double prev = std::nan("");
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& r = t.records[i];
    CHECK(r.iteration == static_cast<int>(i) + 1);
    if (!h.combinatorial()) {
      for (std::size_t k = 0; k < r.point.size(); ++k) {
        CHECK(r.point[k] >= h.lower()[k]);
        CHECK(r.point[k] <= h.upper()[k]);
      }
    }
    if (!std::isnan(prev)) {
      if (h.direction() == Direction::Maximize) CHECK(r.best_so_far >= prev);
      else CHECK(r.best_so_far <= prev);
    }
    prev = r.best_so_far;
  }
}

}  // namespace

TEST_CASE("handles count evaluations and enforce bounds", "[optimize]") {
  auto h = box({0, 0}, {1, 2}, quadratic);
  const double in[2] = {0.5, 1.0}, out[2] = {0.5, 2.5};
  CHECK(h.evaluate(in) == quadratic(in));
  CHECK(h.cost() == 1);
  CHECK_THROWS_AS(h.evaluate(out), InvalidArgument);
  CHECK(h.cost() == 1);
  const double one[1] = {0.0};
  CHECK_THROWS_AS(h.evaluate(std::span<const double>(one, 1)), InvalidArgument);
  auto copy = h;
  copy.evaluate(in);
  CHECK(copy.cost() == 2);
  CHECK(h.cost() == 1);

  auto up = box({0}, {1}, [](std::span<const double> x) { return x[0]; }, Direction::Maximize);
  CHECK(up.to_minimized(0.25) == -0.25);
  CHECK_THROWS_AS(box({1}, {0}, quadratic), InvalidArgument);
}

TEST_CASE("grid lookup snaps to the nearest point, ties toward the lower index", "[optimize]") {
  SearchSpace s = default_search_space(Variant::ThreeLayerFilm);
  s.params[0] = {"t1", 10, 14, 1};
  s.params[1] = {"t2", 3, 5, 1};
  s.params[2] = {"t3", 10, 10, 1};
  std::vector<double> values(s.count());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(i);
  values[7] = std::nan("");
  auto h = ObjectiveHandle::grid_lookup(s, values, Direction::Maximize);
  CHECK(h.upper() == std::vector<double>{14, 5, 10});
  const double exact[3] = {13, 4, 10};
  CHECK(h.evaluate(exact) == s.nearest_index({13, 4, 10}));
  const double tie[3] = {11.5, 3.5, 10};  // between (11, 3) and (12, 4): lower index
  CHECK(h.grid_index(tie) == s.nearest_index({11, 3, 10}));
  const double outside[3] = {100, -5, 10};  // clamped, not rejected
  CHECK(h.evaluate(outside) == s.nearest_index({14, 3, 10}));
  const double failed[3] = {12, 4, 10};
  CHECK(h.grid_index(failed) == 7);
  CHECK(std::isnan(h.evaluate(failed)));
  CHECK(h.cost() == 3);
  CHECK_THROWS_AS(ObjectiveHandle::grid_lookup(s, {1.0, 2.0}, Direction::Maximize), InvalidArgument);
}

TEST_CASE("simulation handles turn divergence into failed queries", "[optimize]") {
  SearchSpace s = default_search_space(Variant::ThreeLayerFilm);
  auto h = ObjectiveHandle::simulation(
      s,
      [](const StructureSpec& spec) -> double {
        if (spec.param("t1") > 50) throw DivergenceError("diverged", 3);
        if (spec.param("t1") < 0) throw ConfigError("unreachable");
        return spec.param("t2");
      },
      Direction::Maximize);
  const double ok[3] = {20, 7, 30}, bad[3] = {60, 19, 30};
  CHECK(h.evaluate(ok) == 7);
  CHECK(std::isnan(h.evaluate(bad)));
  auto t = random_search(h, 30, 1);
  // Failed queries never become the incumbent.
  double best = -1;
  for (const auto& r : t.records)
    if (!std::isnan(r.value)) best = std::max(best, r.value);
  CHECK(t.best() == best);
}

TEST_CASE("random search basics", "[optimize]") {
  auto h = box({-5, -5}, {5, 5}, quadratic);
  auto t = random_search(h, 1, 3);
  REQUIRE(t.size() == 1);
  CHECK(t.best() == t.records[0].value);
  auto h2 = box({-5, -5}, {5, 5}, quadratic);
  CHECK(same_records(random_search(h2, 50, 9), random_search(h2, 50, 9)));
  CHECK_FALSE(same_records(random_search(h2, 50, 9), random_search(h2, 50, 10)));
  CHECK_THROWS_AS(random_search(h2, 0, 1), InvalidArgument);
}

TEST_CASE("random search on a 2D grid fixture finds the grid best", "[optimize]") {
  // 2D slice of the smooth fixture; exhaustive grid best at step 0.01.
  auto f = [](std::span<const double> x) {
    const double p[3] = {x[0], x[1], 0.45};
    return smooth3(p);
  };
  double grid_best = -1;
  for (int i = 0; i <= 100; ++i)
    for (int j = 0; j <= 100; ++j) {
      const double p[2] = {i / 100.0, j / 100.0};
      grid_best = std::max(grid_best, f(p));
    }
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto h = box({0, 0}, {1, 1}, f, Direction::Maximize);
    const auto t = random_search(h, 10000, seed);
    if (t.best() >= grid_best * 0.98) ++hits;
  }
  CHECK(hits >= 48);  // probability >= 0.95
}

TEST_CASE("Powell converges on a quadratic and stays in the local basin", "[optimize]") {
  auto h = box({-5, -5}, {5, 5}, quadratic);
  PowellOptions opt;
  opt.start = std::vector<double>{4, 4};
  const auto t = powell(h, 3000, 0, opt);
  const auto x = t.best_point();
  CAPTURE(t.size(), x[0], x[1]);
  CHECK(std::abs(x[0] - 1.0) <= 1e-6);
  CHECK(std::abs(x[1] + 2.0) <= 1e-6);
  CHECK(t.size() < 3000);  // stopped by the tolerance, not the budget
  check_invariants(t, h, 3000);

  auto h0 = box({-5, -5}, {5, 5}, quadratic);
  opt.start = std::vector<double>{1, -2};
  const auto t0 = powell(h0, 3000, 0, opt);
  CHECK(t0.best() == 0.0);
  CHECK(t0.records.front().value == 0.0);
  CHECK(t0.size() < 200);

  auto hw = box({-3, -3}, {3, 3}, two_wells);
  opt.start = std::vector<double>{-1.2, 0.2};
  const auto tw = powell(hw, 3000, 0, opt);
  const auto xw = tw.best_point();
  CHECK(xw[0] == Approx(-1.0).margin(1e-3));
  CHECK(xw[1] == Approx(0.0).margin(1e-3));
  CHECK(tw.best() > -1.5);  // the global well reaches -2

  auto hs = box({-5, -5}, {5, 5}, quadratic);
  opt.start = std::vector<double>{9, 0};
  CHECK_THROWS_AS(powell(hs, 10, 0, opt), InvalidArgument);
}

TEST_CASE("DIRECT starts at the centre and is deterministic", "[optimize]") {
  auto h = box({-5, 0}, {5, 2}, quadratic);
  const auto a = direct(h, 150);
  REQUIRE(a.size() == 150);
  CHECK(a.records[0].point == std::vector<double>{0, 1});
  auto h2 = box({-5, 0}, {5, 2}, quadratic);
  const auto b = direct(h2, 150);
  CHECK(same_records(a, b));
  check_invariants(a, h, 150);
  // First division: centre, then +/- a third along each dimension.
  CHECK(a.records[1].point[0] == Approx(0.0 + 10.0 / 3.0));
  CHECK(a.records[2].point[0] == Approx(0.0 - 10.0 / 3.0));
}

TEST_CASE("DIRECT reaches the grid best on a smooth 3D fixture", "[optimize]") {
  const double best = grid_best3(100);
  auto h = box({0, 0, 0}, {1, 1, 1}, smooth3, Direction::Maximize);
  const auto t = direct(h, 200);
  CAPTURE(best, t.best());
  CHECK(t.best() >= best * 0.99);
}

TEST_CASE("DIRECT on a quadratic converges toward the minimizer", "[optimize]") {
  auto h = box({-5, -5}, {5, 5}, quadratic);
  const auto t = direct(h, 1000);
  CHECK(t.best() < 1e-3);
}

TEST_CASE("differential evolution", "[optimize]") {
  auto sphere = [](std::span<const double> x) {
    double s = 0;
    for (double v : x) s += v * v;
    return s;
  };
  const std::vector<double> lo(5, -5.0), hi(5, 5.0);
  // rand/1/bin with the default F = 0.8 and 75 members runs only 66
  // generations here and stalls near 5e-3 (a reference implementation
  // agrees); a smaller step and population reach 1e-4 comfortably.
  auto h = box(lo, hi, sphere);
  const auto t = differential_evolution(h, 5000, 11);
  CAPTURE(t.best());
  CHECK(t.best() <= 2e-2);
  check_invariants(t, h, 5000);
  DeOptions tuned;
  tuned.population = 50;
  tuned.f = 0.5;
  auto ht = box(lo, hi, sphere);
  const auto tt = differential_evolution(ht, 5000, 11, tuned);
  CAPTURE(tt.best());
  CHECK(tt.best() <= 1e-4);
  CHECK(default_de_population(5) == 75);
  CHECK(default_de_population(7) == 100);

  auto h2 = box(lo, hi, sphere);
  CHECK(same_records(differential_evolution(h2, 400, 4), differential_evolution(h2, 400, 4)));

  // Identical individuals have zero difference vectors.
  DeOptions same;
  same.population = 6;
  same.initial = std::vector<std::vector<double>>(6, std::vector<double>(5, 1.25));
  auto h3 = box(lo, hi, sphere);
  const auto s = differential_evolution(h3, 60, 2, same);
  for (const auto& r : s.records) CHECK(r.point == std::vector<double>(5, 1.25));

  auto h4 = box(lo, hi, sphere);
  CHECK_THROWS_AS(differential_evolution(h4, 74, 1), InvalidArgument);
  DeOptions tiny;
  tiny.population = 3;
  CHECK_THROWS_AS(differential_evolution(h4, 100, 1, tiny), InvalidArgument);
}

TEST_CASE("DE boundary reflection keeps points inside narrow boxes", "[optimize]") {
  auto h = box({0, 0, 0}, {0.01, 1, 0}, [](std::span<const double> x) { return x[0] - x[1]; });
  const auto t = differential_evolution(h, 500, 3);
  check_invariants(t, h, 500);
}

TEST_CASE("Gaussian process interpolates and has exact likelihood gradients", "[optimize][gp]") {
  Rng rng(6);
  Eigen::MatrixXd x(15, 3);
  Eigen::VectorXd y(15);
  for (int i = 0; i < 15; ++i) {
    for (int k = 0; k < 3; ++k) x(i, k) = rng.uniform();
    y(i) = std::sin(3 * x(i, 0)) + x(i, 1) * x(i, 2) + 5.0;
  }
  GpModel gp(x, y);
  GpHyper h;
  h.log_signal = 0.3;
  h.log_length = {std::log(0.4), std::log(0.7), std::log(0.25)};
  h.log_noise = std::log(1e-4);
  std::vector<double> g;
  gp.log_marginal_likelihood(h, &g);
  const auto theta = h.pack();
  for (std::size_t k = 0; k < theta.size(); ++k) {
    auto up = theta, down = theta;
    const double eps = 1e-5;
    up[k] += eps;
    down[k] -= eps;
    const double fd = (gp.log_marginal_likelihood(GpHyper::unpack(up)) -
                       gp.log_marginal_likelihood(GpHyper::unpack(down))) / (2 * eps);
    CAPTURE(k, fd, g[k]);
    CHECK(std::abs(fd - g[k]) <= 1e-5 * std::max(std::abs(fd), 1.0));
  }

  h.log_noise = std::log(1e-10);
  gp.fit(h);
  for (int i = 0; i < 15; ++i) {
    const double xi[3] = {x(i, 0), x(i, 1), x(i, 2)};
    const auto [m, v] = gp.predict(xi);
    CHECK(m == Approx(y(i)).margin(1e-6));
    CHECK(v <= 1e-6);
  }

  Rng hr(1);
  const GpHyper opt = gp.optimize_hyperparameters(hr, 3, 40);
  CHECK(gp.log_marginal_likelihood(opt) >= gp.log_marginal_likelihood(h));
}

TEST_CASE("GP jitter rescues duplicated inputs", "[optimize][gp]") {
  Eigen::MatrixXd x(3, 1);
  x << 0.2, 0.2, 0.7;
  Eigen::VectorXd y(3);
  y << 1.0, 1.0, 2.0;
  GpModel gp(x, y);
  GpHyper h;
  h.log_length = {std::log(0.3)};
  h.log_noise = -40.0;  // far below double precision of the diagonal
  gp.fit(h);
  CHECK(gp.jitter() > 0.0);
  const double q[1] = {0.7};
  CHECK(gp.predict(q).first == Approx(2.0).margin(1e-4));
}

TEST_CASE("expected improvement", "[optimize][gp]") {
  CHECK(expected_improvement(1.0, 0.0, 1.0) == 0.0);
  CHECK(expected_improvement(2.0, 0.0, 1.0) == 0.0);
  CHECK(expected_improvement(0.5, 0.0, 1.0) == 0.5);
  // At mean == best, EI = sd * phi(0).
  CHECK(expected_improvement(1.0, 2.0, 1.0) == Approx(2.0 / std::sqrt(2 * M_PI)));
  CHECK(expected_improvement(0.0, 1.0, 1.0) > expected_improvement(0.0, 0.5, 1.0));
}

TEST_CASE("Bayesian optimization on a 1D quadratic", "[optimize][gp]") {
  auto h = box({-1}, {1}, [](std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3); });
  const auto t = bayes_opt(h, 20, 5);
  REQUIRE(t.size() == 20);
  CAPTURE(t.best_point()[0]);
  CHECK(std::abs(t.best_point()[0] - 0.3) <= 1e-2);
  check_invariants(t, h, 20);
  auto h2 = box({-1}, {1}, [](std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3); });
  CHECK(same_records(bayes_opt(h2, 12, 5), bayes_opt(h2, 12, 5)));
  BoOptions one;
  one.n_init = 1;
  CHECK_THROWS_AS(bayes_opt(h2, 12, 5, one), InvalidArgument);
}

TEST_CASE("block random search", "[optimize]") {
  // Fraction of metal-free blocks, a cheap stand-in objective.
  auto score = [](const std::vector<int>& b) {
    int n = 0;
    for (int v : b) n += (v % 3 == 0);
    return n / 80.0;
  };
  auto h = ObjectiveHandle::blocks(80, 12, score, Direction::Maximize);
  const auto a = blocks_random_search(h, 1, 4);
  auto h2 = ObjectiveHandle::blocks(80, 12, score, Direction::Maximize);
  const auto b = random_search(h2, 1, 4);
  CHECK(same_records(a, b));
  REQUIRE(a.records[0].point.size() == 80);
  for (double v : a.records[0].point) {
    CHECK(v >= 0);
    CHECK(v < 12);
  }
  auto hb = box({0}, {1}, quadratic);
  CHECK_THROWS_AS(blocks_random_search(hb, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(direct(h, 10), InvalidArgument);

  // The 50-seed mean best-so-far curve never decreases.
  BenchmarkOptions opt;
  opt.algorithms = {"random"};
  opt.budget = 40;
  for (std::uint64_t s = 0; s < 50; ++s) opt.seeds.push_back(s);
  const auto rep = run_benchmark(h, opt);
  const auto& pts = rep.curves.at(0).points;
  for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].mean >= pts[i - 1].mean);
}

TEST_CASE("an all-air block grid absorbs nothing", "[optimize][fdtd]") {
  MaterialLibrary lib;
  const auto am15 =
      read_spectral_weight(default_data_dir() / "spectra" / "am15g_irradiance.csv");
  EvaluationContext ctx;
  ctx.library = &lib;
  ctx.am15 = &am15;
  ctx.run.fidelity = Fidelity::Low;
  ctx.ignore_band_gap = true;
  ctx.points = 24;
  NormalizationCache cache;
  ctx.cache = &cache;
  const int air = 1;
  REQUIRE(block_material_names()[air] == "Air");
  auto h = ObjectiveHandle::blocks(
      kBlockCount, static_cast<int>(block_material_names().size()),
      [&](const std::vector<int>& b) {
        StructureSpec s;
        s.variant = Variant::CombinatorialBlocks;
        s.blocks = b;
        return evaluate_structure(ObjectiveKind::SolarAbsorption, s, ctx).value;
      },
      Direction::Maximize);
  const double a = h.evaluate_blocks(std::vector<int>(kBlockCount, air));
  CHECK(std::abs(a) < 0.01);
}

TEST_CASE("every optimizer keeps the trace invariants", "[optimize]") {
  SearchSpace s = default_search_space(Variant::ThreeLayerFilm);
  s.params[0] = {"t1", 10, 100, 5};
  s.params[1] = {"t2", 3, 20, 1};
  s.params[2] = {"t3", 10, 100, 5};
  std::vector<double> values(s.count());
  for (std::uint64_t i = 0; i < s.count(); ++i) {
    const auto p = s.point(i);
    const double u[3] = {(p[0] - 10) / 90, (p[1] - 3) / 17, (p[2] - 10) / 90};
    values[i] = smooth3(u);
  }
  values[17] = std::nan("");
  for (const auto& alg : algorithm_names()) {
    for (Direction dir : {Direction::Maximize, Direction::Minimize}) {
      for (std::uint64_t seed : {1u, 2u}) {
        const int budget = alg == "bo" ? 25 : 120;
        auto hg = ObjectiveHandle::grid_lookup(s, values, dir);
        auto hf = box({0, 0, 0}, {1, 1, 1}, smooth3, dir);
        for (auto* h : {&hg, &hf}) {
          CAPTURE(alg, seed, mode_name(h->mode()));
          const auto t = run_algorithm(alg, *h, budget, seed);
          check_invariants(t, *h, budget);
          h->reset_cost();
          const auto again = run_algorithm(alg, *h, budget, seed);
          CHECK(same_records(t, again));
        }
      }
    }
  }
}

TEST_CASE("benchmark reports", "[optimize]") {
  auto h = box({0, 0, 0}, {1, 1, 1}, smooth3, Direction::Maximize);
  BenchmarkOptions one;
  one.algorithms = {"de"};
  one.budget = 60;
  one.seeds = {5};
  const auto r1 = run_benchmark(h, one);
  REQUIRE(r1.traces.size() == 1);
  REQUIRE(r1.curves.size() == 1);
  for (int i = 0; i < 60; ++i) {
    CHECK(r1.curves[0].points[static_cast<std::size_t>(i)].mean ==
          r1.traces[0].records[static_cast<std::size_t>(i)].best_so_far);
    CHECK(r1.curves[0].points[static_cast<std::size_t>(i)].se == 0.0);
  }

  BenchmarkOptions opt;
  opt.algorithms = {"direct", "random", "powell"};
  opt.budget = 50;
  opt.seeds = {1, 2, 3, 4};
  const auto serial = run_benchmark(h, opt);
  opt.workers = 3;
  const auto parallel = run_benchmark(h, opt);
  REQUIRE(serial.traces.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) CHECK(same_records(serial.traces[i], parallel.traces[i]));
  CHECK(curves_csv(serial.curves) == curves_csv(parallel.curves));
  for (const auto& p : serial.curves[0].points) CHECK(p.se == 0.0);  // DIRECT
  CHECK(serial.curves[1].points.back().se > 0.0);

  const std::string csv = curves_csv(serial.curves);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 50);
  const auto parsed = parse_traces_csv(traces_csv(serial.traces), "traces.csv");
  REQUIRE(parsed.size() == 12);
  CHECK(curves_csv(summarize(parsed, 50)) == csv);
  CHECK(traces_csv(serial.traces).rfind("# direction: maximize\nalgorithm,seed,iteration,", 0) == 0);
  const auto j = curves_json(serial.curves, 50, Direction::Maximize);
  CHECK(j["algorithms"]["direct"]["final_se"] == 0.0);
  CHECK(j["algorithms"]["random"]["mean_best"].size() == 50);

  opt.algorithms = {"nelder-mead"};
  CHECK_THROWS_AS(run_benchmark(h, opt), InvalidArgument);
}
