// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "catch_amalgamated.hpp"

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/rng.hpp"
#include "spectra/evaluate.hpp"
#include "surrogate/dataset.hpp"
#include "surrogate/mlp.hpp"

using namespace photonbench;
using Catch::Approx;

namespace {

SearchSpace toy_space() {
  SearchSpace toy = default_search_space(Variant::ThreeLayerFilm);
  toy.params[0] = {"t1", 10, 14, 1};
  toy.params[1] = {"t2", 3, 5, 1};
  toy.params[2] = {"t3", 10, 10, 1};
  return toy;
}

double toy_value(std::uint64_t, const StructureSpec& s) {
  return 0.01 * s.param("t1") + 0.001 * s.param("t2");
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "photonbench_surrogate_test" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Noiseless smooth function on [0, 1]^2 with values inside (0.2, 0.8).
double smooth(double a, double b) {
  return 0.5 + 0.2 * std::sin(3.0 * a) * std::cos(2.0 * b) + 0.1 * a * b;
}

TrainingSet synthetic(int rows, std::uint64_t seed) {
  Rng rng(seed);
  TrainingSet t;
  t.x.resize(rows, 2);
  t.y.resize(rows);
  for (int r = 0; r < rows; ++r) {
    t.x(r, 0) = rng.uniform(0, 1);
    t.x(r, 1) = rng.uniform(0, 1);
    t.y(r) = smooth(t.x(r, 0), t.x(r, 1));
  }
  return t;
}

TrainingSet take(const TrainingSet& all, const std::vector<std::size_t>& rows) {
  TrainingSet t;
  t.x.resize(static_cast<Eigen::Index>(rows.size()), all.x.cols());
  t.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    t.x.row(static_cast<Eigen::Index>(k)) = all.x.row(static_cast<Eigen::Index>(rows[k]));
    t.y(static_cast<Eigen::Index>(k)) = all.y(static_cast<Eigen::Index>(rows[k]));
  }
  return t;
}

}  // namespace

TEST_CASE("subsampling is seeded, distinct and sorted", "[surrogate]") {
  const auto total = default_search_space(Variant::ThreeLayerFilm).count();
  const auto a = subsample_indices(total, 100, 42);
  const auto b = subsample_indices(total, 100, 42);
  CHECK(a == b);
  CHECK(a.size() == 100);
  CHECK(std::set<std::uint64_t>(a.begin(), a.end()).size() == 100);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(a.back() < total);
  CHECK(subsample_indices(total, 100, 43) != a);
  CHECK(subsample_indices(15, 15, 1).size() == 15);
  CHECK_THROWS_AS(subsample_indices(15, 16, 1), InvalidArgument);
}

TEST_CASE("toy space yields one row per configuration", "[surrogate]") {
  const auto rows = evaluate_dataset(toy_space(), toy_value, {});
  REQUIRE(rows.size() == 15);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].index == k);
    CHECK(rows[k].value == Approx(0.01 * rows[k].params[0] + 0.001 * rows[k].params[1]));
  }
}

TEST_CASE("dataset files are complete, ordered and resumable", "[surrogate]") {
  const auto dir = scratch("resume");
  DatasetOptions opt;
  const auto full = generate_dataset(toy_space(), toy_value, opt, dir / "full.csv");
  CHECK(full.complete);
  CHECK(full.evaluated == 15);
  const std::string reference = read_text_file(dir / "full.csv");
  CHECK(std::count(reference.begin(), reference.end(), '\n') == 16);
  CHECK(reference.rfind("index,t1,t2,t3,material_combo,fidelity,objective_kind,value\n", 0) == 0);
  CHECK(std::filesystem::exists(dir / "full.csv.manifest.json"));
  CHECK_FALSE(std::filesystem::exists(dir / "full.csv.partial"));

  // Interrupted run, with a torn final line, then resumed in parallel.
  opt.stop_after = 6;
  const auto part = generate_dataset(toy_space(), toy_value, opt, dir / "resumed.csv");
  CHECK_FALSE(part.complete);
  CHECK(part.evaluated == 6);
  CHECK_FALSE(std::filesystem::exists(dir / "resumed.csv"));
  {
    std::ofstream j(dir / "resumed.csv.partial", std::ios::app);
    j << "13,14,";
  }
  opt.stop_after.reset();
  opt.workers = 3;
  const auto rest = generate_dataset(toy_space(), toy_value, opt, dir / "resumed.csv");
  CHECK(rest.complete);
  CHECK(rest.resumed == 6);
  CHECK(rest.evaluated == 9);
  CHECK(read_text_file(dir / "resumed.csv") == reference);

  // A journal from a different sweep is refused.
  opt.stop_after = 2;
  generate_dataset(toy_space(), toy_value, opt, dir / "other.csv");
  opt.seed = 99;
  opt.stop_after.reset();
  CHECK_THROWS_AS(generate_dataset(toy_space(), toy_value, opt, dir / "other.csv"), ConfigError);
}

TEST_CASE("parallel evaluation does not change dataset contents", "[surrogate]") {
  const auto dir = scratch("parallel");
  DatasetOptions opt;
  opt.subsample = 40;
  opt.seed = 7;
  const auto space = default_search_space(Variant::ThreeLayerFilm);
  generate_dataset(space, toy_value, opt, dir / "a.csv");
  opt.workers = 4;
  generate_dataset(space, toy_value, opt, dir / "b.csv");
  CHECK(read_text_file(dir / "a.csv") == read_text_file(dir / "b.csv"));
  const auto rows = read_dataset(dir / "a.csv");
  CHECK(rows.size() == 40);
  std::vector<std::uint64_t> idx;
  for (const auto& r : rows) idx.push_back(r.index);
  CHECK(idx == subsample_indices(space.count(), 40, 7));
}

TEST_CASE("diverged simulations become failed rows", "[surrogate]") {
  const auto dir = scratch("failures");
  const PointEvaluator eval = [](std::uint64_t i, const StructureSpec& s) {
    if (i == 3) throw DivergenceError("field diverged at step 10", 10);
    if (i == 5) throw TimeoutError("no decay", 0.5);
    return toy_value(i, s);
  };
  const auto rep = generate_dataset(toy_space(), eval, {}, dir / "d.csv");
  CHECK(rep.complete);
  REQUIRE(rep.failures.size() == 2);
  CHECK(rep.failures[0].first == 3);
  const auto rows = read_dataset(dir / "d.csv");
  CHECK(rows[3].failed());
  CHECK(rows[5].failed());
  CHECK_FALSE(rows[4].failed());
  const auto manifest = nlohmann::json::parse(read_text_file(dir / "d.csv.manifest.json"));
  CHECK(manifest["failures"].size() == 2);

  const PointEvaluator broken = [](std::uint64_t, const StructureSpec&) -> double {
    throw ConfigError("bad input");
  };
  CHECK_THROWS_AS(evaluate_dataset(toy_space(), broken, {}), ConfigError);
}

TEST_CASE("simulated control rows of an empty structure transmit everything", "[surrogate]") {
  // Every material resolves to vacuum, so each film is an empty cell.
  MaterialLibrary lib(scratch("lib"));
  for (const char* name : {"TiO2", "Ag"}) {
    DispersiveMaterial m = vacuum_material();
    m.name = name;
    lib.add(m);
  }
  EvaluationContext ctx;
  ctx.library = &lib;
  ctx.run.fidelity = Fidelity::Low;
  NormalizationCache cache;
  ctx.cache = &cache;
  auto space = toy_space();
  space.params[0] = {"t1", 10, 20, 10};
  DatasetOptions opt;
  opt.fidelity = Fidelity::Low;
  const auto rows = evaluate_dataset(
      space,
      [&](std::uint64_t, const StructureSpec& s) {
        return evaluate_structure(ObjectiveKind::Transmittance550, s, ctx).value;
      },
      opt);
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) CHECK(r.value == Approx(1.0).margin(0.01));
}

TEST_CASE("splits are 70/10/20, disjoint and reproducible", "[surrogate]") {
  const auto s = split_rows(100, {});
  CHECK(s.train.size() == 70);
  CHECK(s.validation.size() == 10);
  CHECK(s.test.size() == 20);
  const auto again = split_rows(100, {});
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SplitSpec spec;
    spec.seed = seed;
    const std::size_t n = 10 + seed * 7;
    const auto p = split_rows(n, spec);
    std::multiset<std::size_t> all(p.train.begin(), p.train.end());
    all.insert(p.validation.begin(), p.validation.end());
    all.insert(p.test.begin(), p.test.end());
    CHECK(all.size() == n);
    CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == n);
    CHECK(std::abs(static_cast<double>(p.train.size()) - 0.7 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(p.validation.size()) - 0.1 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(p.test.size()) - 0.2 * n) <= 1.0);
  }
  CHECK_THROWS_AS(split_rows(9, {}), InvalidArgument);
  CHECK_THROWS_AS(split_rows(100, {0.5, 0.5, 0.5, 0}), InvalidArgument);
}

TEST_CASE("backpropagation matches finite differences", "[surrogate]") {
  MlpConfig cfg;
  cfg.seed = 3;
  MlpSurrogate model({"a", "b", "c"}, {0, 0, 0}, {1, 2, 3}, cfg);
  // Perturb batch-norm scales and shifts away from their initial values.
  auto p = model.parameters();
  Rng rng(4);
  for (auto& v : p) v += 0.05 * rng.normal();
  model.set_parameters(p);
  Eigen::MatrixXd x(10, 3);
  Eigen::VectorXd y(10);
  for (int r = 0; r < 10; ++r) {
    x(r, 0) = rng.uniform(0, 1);
    x(r, 1) = rng.uniform(0, 2);
    x(r, 2) = rng.uniform(0, 3);
    y(r) = rng.uniform(0.1, 0.9);
  }
  std::vector<double> grad;
  model.loss_and_gradient(x, y, &grad);
  REQUIRE(grad.size() == model.parameter_count());
  // Every bias/scale plus a strided sample of weights.
  int checked = 0, bad = 0;
  double worst = 0.0, worst_fd = 0.0, worst_bp = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k % 7 != 0 && k + 200 < p.size() && k > 600) continue;
    const double h = 1e-6 * std::max(1.0, std::abs(p[k]));
    auto q = p;
    q[k] = p[k] + h;
    model.set_parameters(q);
    const double up = model.loss_and_gradient(x, y, nullptr);
    q[k] = p[k] - h;
    model.set_parameters(q);
    const double down = model.loss_and_gradient(x, y, nullptr);
    const double fd = (up - down) / (2 * h);
    const double scale = std::max(std::abs(fd), std::abs(grad[k]));
    ++checked;
    // Central differences carry ~1e-11 of rounding noise (and biases ahead of
    // batch norm have exactly zero gradient); the floor keeps
    // near-zero components from reporting it as a relative error.
    const double rel = std::abs(fd - grad[k]) / std::max(scale, 1e-5);
    worst = std::max(worst, rel);
    if (rel > 1e-5) {
      ++bad;
      worst_fd = fd;
      worst_bp = grad[k];
    }
  }
  model.set_parameters(p);
  CAPTURE(checked, worst, worst_fd, worst_bp);
  CHECK(checked > 400);
  CHECK(bad == 0);
}

TEST_CASE("constant targets are learned", "[surrogate]") {
  Rng rng(8);
  TrainingSet all;
  all.x.resize(500, 2);
  all.y = Eigen::VectorXd::Constant(500, 0.5);
  for (int r = 0; r < 500; ++r) all.x.row(r) << rng.uniform(0, 10), rng.uniform(-1, 1);
  const auto s = split_rows(500, {});
  MlpConfig cfg;
  cfg.seed = 5;
  const auto model = train_mlp(take(all, s.train), take(all, s.validation), {"u", "v"}, {0, -1},
                               {10, 1}, cfg);
  CHECK(model.mse(take(all, s.test)) <= 1e-4);
  const double x0[2] = {all.x(s.train[0], 0), all.x(s.train[0], 1)};
  CHECK(model.predict(x0) == Approx(0.5).margin(0.02));
  CHECK(model.record().epochs_run <= 200);
}

TEST_CASE("smooth two-parameter function reaches test MSE 1e-3", "[surrogate][slow]") {
  const auto all = synthetic(5000, 21);
  const auto s = split_rows(5000, {});
  MlpConfig cfg;
  cfg.seed = 9;
  const auto model = train_mlp(take(all, s.train), take(all, s.validation), {"a", "b"}, {0, 0},
                               {1, 1}, cfg);
  const double test_mse = model.mse(take(all, s.test));
  CAPTURE(test_mse, model.record().epochs_run, model.record().best_epoch);
  CHECK(test_mse <= 1e-3);
  const auto& vl = model.record().validation_loss;
  CHECK(static_cast<int>(vl.size()) == model.record().epochs_run);
  CHECK(model.record().epochs_run <= 200);
  CHECK(vl[model.record().best_epoch - 1] <= vl.back());
  CHECK(model.mse(take(all, s.validation)) == Approx(vl[model.record().best_epoch - 1]));
}

TEST_CASE("training is seed-deterministic", "[surrogate]") {
  const auto all = synthetic(400, 2);
  const auto s = split_rows(400, {});
  MlpConfig cfg;
  cfg.seed = 77;
  cfg.max_epochs = 15;
  const auto a = train_mlp(take(all, s.train), take(all, s.validation), {"a", "b"}, {0, 0}, {1, 1}, cfg);
  const auto b = train_mlp(take(all, s.train), take(all, s.validation), {"a", "b"}, {0, 0}, {1, 1}, cfg);
  CHECK(a.parameter_hash() == b.parameter_hash());
  cfg.seed = 78;
  const auto c = train_mlp(take(all, s.train), take(all, s.validation), {"a", "b"}, {0, 0}, {1, 1}, cfg);
  CHECK(c.parameter_hash() != a.parameter_hash());
}

TEST_CASE("predictions stay inside (0, 1) and survive serialization", "[surrogate]") {
  const auto all = synthetic(300, 5);
  const auto s = split_rows(300, {});
  MlpConfig cfg;
  cfg.max_epochs = 10;
  const auto model = train_mlp(take(all, s.train), take(all, s.validation), {"a", "b"}, {0, 0},
                               {1, 1}, cfg);
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    const double x[2] = {rng.uniform(-50, 50), rng.uniform(-50, 50)};
    const double v = model.predict(x);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    CHECK(model.predict(x) == v);
  }
  const double inside[2] = {0.5, 0.5}, outside[2] = {1.5, 0.5};
  CHECK(model.in_bounds(inside));
  CHECK_FALSE(model.in_bounds(outside));
  const double three[3] = {0, 0, 0};
  CHECK_THROWS_AS(model.predict(std::span<const double>(three, 3)), InvalidArgument);

  const auto dir = scratch("model");
  model.save(dir / "m.json");
  const auto back = MlpSurrogate::load(dir / "m.json");
  CHECK(back.parameter_hash() == model.parameter_hash());
  CHECK(back.predict(all.x) == model.predict(all.x));
  CHECK(back.record().epochs_run == model.record().epochs_run);
  auto j = model.to_json();
  j["layers"][1]["bias"].erase(0);
  CHECK_THROWS_AS(MlpSurrogate::from_json(j), InvalidArgument);
}

TEST_CASE("non-finite training data reports the epoch", "[surrogate]") {
  auto all = synthetic(100, 3);
  all.x(4, 0) = INFINITY;
  try {
    train_mlp(all, all, {"a", "b"}, {0, 0}, {1, 1}, {});
    FAIL("expected a training error");
  } catch (const TrainingError& e) {
    CHECK(e.epoch() == 1);
  }
  auto bad = synthetic(100, 3);
  bad.y(0) = 1.5;
  CHECK_THROWS_AS(train_mlp(bad, bad, {"a", "b"}, {0, 0}, {1, 1}, {}), InvalidArgument);
}

TEST_CASE("dataset rows convert to surrogate inputs", "[surrogate]") {
  auto space = toy_space();
  const auto rows = evaluate_dataset(space, toy_value, {});
  const auto t = training_set(space, rows, {0, 1, 2});
  CHECK(t.x.cols() == 3);
  CHECK(t.x(1, 2) == 10.0);
  space.material_cross_product = true;
  space.slot_choices = {{"TiO2", "ZnO"}, {"Ag"}};
  const auto in = surrogate_inputs(space);
  CHECK(in.names.back() == "material_combo");
  CHECK(in.upper.back() == 1.0);
}
