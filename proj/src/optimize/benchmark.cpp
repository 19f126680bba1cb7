// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "optimize/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "common/error.hpp"
#include "common/io.hpp"

namespace photonbench {

const std::vector<std::string>& algorithm_names() {
  static const std::vector<std::string> names = {"random", "powell", "direct", "de", "bo"};
  return names;
}

OptimizationTrace run_algorithm(const std::string& name, ObjectiveHandle& handle, int budget,
                                std::uint64_t seed) {
  if (name == "random") return random_search(handle, budget, seed);
  if (name == "powell") return powell(handle, budget, seed);
  if (name == "direct") return direct(handle, budget);
  if (name == "de") return differential_evolution(handle, budget, seed);
  if (name == "bo") return bayes_opt(handle, budget, seed);
  throw InvalidArgument("unknown algorithm '" + name + "' (expected random, powell, direct, de or bo)");
}

BenchmarkReport run_benchmark(const ObjectiveHandle& handle, const BenchmarkOptions& options) {
  if (options.algorithms.empty()) throw InvalidArgument("benchmark needs at least one algorithm");
  if (options.seeds.empty()) throw InvalidArgument("benchmark needs at least one repeat");
  if (options.budget < 1) throw InvalidArgument("benchmark budget must be at least 1");
  for (const auto& a : options.algorithms)
    if (std::find(algorithm_names().begin(), algorithm_names().end(), a) == algorithm_names().end())
      throw InvalidArgument("unknown algorithm '" + a + "'");

  const std::size_t n_seeds = options.seeds.size();
  const std::size_t tasks = options.algorithms.size() * n_seeds;
  BenchmarkReport report;
  report.direction = handle.direction();
  report.budget = options.budget;
  report.traces.resize(tasks);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    while (true) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks) return;
      try {
        ObjectiveHandle h = handle;
        h.reset_cost();
        const auto& alg = options.algorithms[t / n_seeds];
        report.traces[t] = run_algorithm(alg, h, options.budget, options.seeds[t % n_seeds]);
        report.traces[t].algorithm = alg;
        report.traces[t].seed = options.seeds[t % n_seeds];  // also for seedless DIRECT
        if (h.cost() != report.traces[t].size())
          throw InvalidArgument("evaluation count of " + alg + " disagrees with its trace");
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(tasks);
      }
    }
  };
  const int n_workers = std::clamp(options.workers, 1, static_cast<int>(tasks));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  report.curves = summarize(report.traces, options.budget);
  return report;
}

std::vector<AlgorithmCurve> summarize(const std::vector<OptimizationTrace>& traces, int budget) {
  std::vector<AlgorithmCurve> curves;
  std::map<std::string, std::size_t> slot;
  std::vector<std::vector<const OptimizationTrace*>> members;
  for (const auto& t : traces) {
    auto [it, fresh] = slot.emplace(t.algorithm, curves.size());
    if (fresh) {
      curves.push_back({t.algorithm, {}});
      members.emplace_back();
    }
    members[it->second].push_back(&t);
  }
  std::vector<double> vals;
  for (std::size_t a = 0; a < curves.size(); ++a) {
    for (int i = 1; i <= budget; ++i) {
      vals.clear();
      for (const auto* t : members[a]) {
        if (t->records.empty()) continue;
        const auto idx = static_cast<std::size_t>(std::min<int>(i, static_cast<int>(t->size())) - 1);
        const double b = t->records[idx].best_so_far;
        if (!std::isnan(b)) vals.push_back(b);
      }
      CurvePoint p;
      p.iteration = i;
      p.count = static_cast<int>(vals.size());
      if (vals.empty()) {
        p.mean = p.se = std::nan("");
      } else if (std::all_of(vals.begin(), vals.end(), [&](double v) { return v == vals[0]; })) {
        p.mean = vals[0];  // exact for identical repeats
        p.se = 0.0;
      } else {
        double sum = 0.0;
        for (double v : vals) sum += v;
        p.mean = sum / static_cast<double>(vals.size());
        double ss = 0.0;
        for (double v : vals) ss += (v - p.mean) * (v - p.mean);
        const double n = static_cast<double>(vals.size());
        p.se = vals.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
      }
      curves[a].points.push_back(p);
    }
  }
  return curves;
}

namespace {

std::string cell(double v) { return std::isnan(v) ? "nan" : format_double(v); }

double parse_cell(const std::string& s, const std::string& context) {
  if (s == "nan") return std::nan("");
  return parse_double(s, context);
}

}  // namespace

std::string traces_csv(const std::vector<OptimizationTrace>& traces) {
  std::ostringstream out;
  if (!traces.empty())
    out << "# direction: "
        << (traces.front().direction == Direction::Maximize ? "maximize" : "minimize") << "\n";
  out << "algorithm,seed,iteration,best_so_far,value,wall_ms\n";
  for (const auto& t : traces)
    for (const auto& r : t.records) {
      char wall[32];
      std::snprintf(wall, sizeof wall, "%.3f", r.wall_ms);
      out << t.algorithm << ',' << t.seed << ',' << r.iteration << ',' << cell(r.best_so_far) << ','
          << cell(r.value) << ',' << wall << '\n';
    }
  return out.str();
}

std::vector<OptimizationTrace> parse_traces_csv(const std::string& text, const std::string& source) {
  const CsvTable table = parse_csv(text, source);
  const std::vector<std::string> expected = {"algorithm", "seed", "iteration",
                                             "best_so_far", "value", "wall_ms"};
  if (table.header != expected)
    throw IoError(source + ": expected header algorithm,seed,iteration,best_so_far,value,wall_ms");
  Direction dir = Direction::Maximize;
  if (auto it = table.metadata.find("direction"); it != table.metadata.end()) {
    if (it->second == "minimize") dir = Direction::Minimize;
    else if (it->second != "maximize") throw IoError(source + ": unknown direction " + it->second);
  }
  std::vector<OptimizationTrace> traces;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string ctx = source + " row " + std::to_string(r + 1);
    if (row.size() != expected.size()) throw IoError(ctx + ": expected 6 columns");
    const std::uint64_t seed = std::stoull(row[1]);
    const int iteration = std::stoi(row[2]);
    if (traces.empty() || traces.back().algorithm != row[0] || traces.back().seed != seed ||
        iteration == 1) {
      traces.emplace_back();
      traces.back().algorithm = row[0];
      traces.back().seed = seed;
      traces.back().direction = dir;
    }
    TraceRecord rec;
    rec.iteration = iteration;
    if (rec.iteration != static_cast<int>(traces.back().size()) + 1)
      throw IoError(ctx + ": iterations must be consecutive within a trace");
    rec.best_so_far = parse_cell(row[3], ctx);
    rec.value = parse_cell(row[4], ctx);
    rec.wall_ms = parse_cell(row[5], ctx);
    traces.back().records.push_back(std::move(rec));
  }
  return traces;
}

std::string curves_csv(const std::vector<AlgorithmCurve>& curves) {
  std::ostringstream out;
  out << "algorithm,iteration,mean_best,se_best,count\n";
  for (const auto& c : curves)
    for (const auto& p : c.points)
      out << c.algorithm << ',' << p.iteration << ',' << cell(p.mean) << ',' << cell(p.se) << ','
          << p.count << '\n';
  return out.str();
}

nlohmann::ordered_json curves_json(const std::vector<AlgorithmCurve>& curves, int budget,
                                   Direction direction) {
  nlohmann::ordered_json j;
  j["direction"] = direction == Direction::Maximize ? "maximize" : "minimize";
  j["budget"] = budget;
  nlohmann::ordered_json algs = nlohmann::ordered_json::object();
  for (const auto& c : curves) {
    nlohmann::ordered_json a;
    const auto& last = c.points.back();
    a["final_mean"] = std::isnan(last.mean) ? nlohmann::ordered_json() : nlohmann::ordered_json(last.mean);
    a["final_se"] = std::isnan(last.se) ? nlohmann::ordered_json() : nlohmann::ordered_json(last.se);
    a["repeats"] = last.count;
    nlohmann::ordered_json mean = nlohmann::ordered_json::array(), se = nlohmann::ordered_json::array();
    for (const auto& p : c.points) {
      mean.push_back(std::isnan(p.mean) ? nlohmann::ordered_json() : nlohmann::ordered_json(p.mean));
      se.push_back(std::isnan(p.se) ? nlohmann::ordered_json() : nlohmann::ordered_json(p.se));
    }
    a["mean_best"] = mean;
    a["se_best"] = se;
    algs[c.algorithm] = a;
  }
  j["algorithms"] = algs;
  return j;
}

}  // namespace photonbench
