// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "optimize/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "optimize/recorder.hpp"

namespace photonbench {

using detail::BudgetExhausted;
using detail::Recorder;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_budget(int budget) {
  if (budget < 1) throw InvalidArgument("optimizer budget must be at least 1");
}

void require_box(const ObjectiveHandle& h, const char* algorithm) {
  if (h.combinatorial())
    throw InvalidArgument(std::string(algorithm) + " needs a continuous box, not a block space");
}

std::vector<double> uniform_point(const ObjectiveHandle& h, Rng& rng) {
  std::vector<double> x(static_cast<std::size_t>(h.dim()));
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = rng.uniform(h.lower()[k], h.upper()[k]);
  return x;
}

// Folds v back into [lo, hi] by repeated reflection at the walls.
double reflect(double v, double lo, double hi) {
  const double w = hi - lo;
  if (!(w > 0)) return lo;
  double t = std::fmod(v - lo, 2 * w);
  if (t < 0) t += 2 * w;
  return std::clamp(t <= w ? lo + t : hi - (t - w), lo, hi);
}

}  // namespace

// ---------------------------------------------------------------------------
// Random search

OptimizationTrace random_search(ObjectiveHandle& handle, int budget, std::uint64_t seed) {
  if (handle.combinatorial()) return blocks_random_search(handle, budget, seed);
  require_budget(budget);
  Recorder rec(handle, budget, "random", seed);
  Rng rng(seed);
  for (int i = 0; i < budget; ++i) rec(uniform_point(handle, rng));
  return rec.take();
}

OptimizationTrace blocks_random_search(ObjectiveHandle& handle, int budget, std::uint64_t seed) {
  require_budget(budget);
  if (!handle.combinatorial())
    throw InvalidArgument("block random search needs a combinatorial handle");
  Recorder rec(handle, budget, "random", seed);
  Rng rng(seed);
  std::vector<int> b(static_cast<std::size_t>(handle.block_count()));
  for (int i = 0; i < budget; ++i) {
    for (auto& v : b) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(handle.block_choices())));
    rec.blocks(b);
  }
  return rec.take();
}

// ---------------------------------------------------------------------------
// Powell's conjugate directions

namespace {

class LineSearch {
 public:
  LineSearch(Recorder& rec, const std::vector<double>& lo, const std::vector<double>& hi,
             double xtol)
      : rec_(rec), lo_(lo), hi_(hi), xtol_(xtol) {}

  // Moves (x, fx) to the best point found along x + t d, bracketing locally
  // first so the search stays in the current basin.
  void minimize(std::vector<double>& x, double& fx, const std::vector<double>& d) {
    double tmin = -kInf, tmax = kInf;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (d[k] == 0.0) continue;
      double a = (lo_[k] - x[k]) / d[k], b = (hi_[k] - x[k]) / d[k];
      if (a > b) std::swap(a, b);
      tmin = std::max(tmin, a);
      tmax = std::min(tmax, b);
    }
    if (!(tmax > tmin) || !std::isfinite(tmin) || !std::isfinite(tmax)) return;
    tmin = std::min(tmin, 0.0);
    tmax = std::max(tmax, 0.0);
    x0_ = x;
    d_ = d;
    best_t_ = 0.0;
    best_f_ = fx;

    const double h = 0.02 * (tmax - tmin);
    double lo, hi;
    const double fb = tmax > 0 ? eval(std::min(h, tmax)) : kInf;
    if (fb < fx) {
      std::tie(lo, hi) = expand(0.0, std::min(h, tmax), fb, tmax);
    } else {
      const double fc = tmin < 0 ? eval(std::max(-h, tmin)) : kInf;
      if (fc < fx) {
        std::tie(lo, hi) = expand(0.0, std::max(-h, tmin), fc, tmin);
      } else {
        lo = std::max(-h, tmin);
        hi = std::min(h, tmax);
      }
    }
    golden(lo, hi, (tmax - tmin) * xtol_);
    if (best_f_ < fx) {
      x = at(best_t_);
      fx = best_f_;
    }
  }

 private:
  std::vector<double> at(double t) const {
    std::vector<double> y(x0_.size());
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = std::clamp(x0_[k] + t * d_[k], lo_[k], hi_[k]);
    return y;
  }

  double eval(double t) {
    const double f = rec_(at(t));
    if (f < best_f_) {
      best_f_ = f;
      best_t_ = t;
    }
    return f;
  }

  // Steps downhill from `prev` through `cur` with golden growth until the
  // objective rises or `bound` is reached; returns the bracketing interval.
  std::pair<double, double> expand(double prev, double cur, double fcur, double bound) {
    constexpr double kGrow = 1.618033988749895;
    while (true) {
      if (cur == bound) return std::minmax(prev, cur);
      double next = cur + kGrow * (cur - prev);
      next = bound > 0 ? std::min(next, bound) : std::max(next, bound);
      const double fn = eval(next);
      if (fn >= fcur) return std::minmax(prev, next);
      prev = cur;
      cur = next;
      fcur = fn;
    }
  }

  void golden(double a, double b, double tol) {
    constexpr double g = 0.6180339887498949;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = eval(x1), f2 = eval(x2);
    while (b - a > tol) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - g * (b - a);
        f1 = eval(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + g * (b - a);
        f2 = eval(x2);
      }
    }
  }

  Recorder& rec_;
  const std::vector<double>& lo_;
  const std::vector<double>& hi_;
  double xtol_;
  std::vector<double> x0_, d_;
  double best_t_ = 0.0, best_f_ = kInf;
};

}  // namespace

OptimizationTrace powell(ObjectiveHandle& handle, int budget, std::uint64_t seed,
                         const PowellOptions& options) {
  require_budget(budget);
  require_box(handle, "Powell's method");
  const auto& lo = handle.lower();
  const auto& hi = handle.upper();
  const auto n = static_cast<std::size_t>(handle.dim());
  Rng rng(seed);
  std::vector<double> x = options.start ? *options.start : uniform_point(handle, rng);
  if (x.size() != n) throw InvalidArgument("Powell start point has the wrong dimension");
  for (std::size_t k = 0; k < n; ++k)
    if (!(x[k] >= lo[k] && x[k] <= hi[k]))
      throw InvalidArgument("Powell start point lies outside the bounds");

  Recorder rec(handle, budget, "powell", seed);
  try {
    double fx = rec(x);
    // Coordinate directions scaled to the box.
    std::vector<std::vector<double>> dirs;
    for (std::size_t k = 0; k < n; ++k) {
      if (!(hi[k] > lo[k])) continue;
      std::vector<double> d(n, 0.0);
      d[k] = hi[k] - lo[k];
      dirs.push_back(std::move(d));
    }
    if (dirs.empty()) return rec.take();
    LineSearch line(rec, lo, hi, options.xtol);
    while (true) {
      const double f_start = fx;
      const std::vector<double> x_start = x;
      for (const auto& d : dirs) line.minimize(x, fx, d);
      if (!(f_start > fx)) break;
      if (std::isfinite(f_start) &&
          2.0 * (f_start - fx) <= options.ftol * (std::abs(f_start) + std::abs(fx)) + 1e-300)
        break;
      // Basic procedure: drop the oldest direction, add the net displacement.
      std::vector<double> nd(n);
      double norm = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        nd[k] = x[k] - x_start[k];
        norm += nd[k] * nd[k];
      }
      if (norm > 0) {
        dirs.erase(dirs.begin());
        dirs.push_back(nd);
        line.minimize(x, fx, nd);
      }
    }
  } catch (const BudgetExhausted&) {
  }
  return rec.take();
}

// ---------------------------------------------------------------------------
// DIRECT

namespace {

struct Rect {
  std::vector<double> c;  // centre in the unit cube
  std::vector<int> level;  // side length along k is 3^-level[k]
  double f = 0.0;
  double size = 0.0;  // half diagonal over active dimensions
  int id = 0;
};

double rect_size(const std::vector<int>& level, const std::vector<bool>& active) {
  std::vector<int> l;
  for (std::size_t k = 0; k < level.size(); ++k)
    if (active[k]) l.push_back(level[k]);
  // Sorted summation: rectangles with equal level multisets get equal sizes.
  std::sort(l.begin(), l.end());
  double s = 0.0;
  for (int v : l) s += std::pow(9.0, -v);
  return 0.5 * std::sqrt(s);
}

}  // namespace

OptimizationTrace direct(ObjectiveHandle& handle, int budget, const DirectOptions& options) {
  require_budget(budget);
  require_box(handle, "DIRECT");
  const auto& lo = handle.lower();
  const auto& hi = handle.upper();
  const auto n = static_cast<std::size_t>(handle.dim());
  std::vector<bool> active(n);
  bool any_active = false;
  for (std::size_t k = 0; k < n; ++k) any_active |= (active[k] = hi[k] > lo[k]);

  Recorder rec(handle, budget, "direct", 0);
  auto eval = [&](const std::vector<double>& c) {
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = std::clamp(lo[k] + c[k] * (hi[k] - lo[k]), lo[k], hi[k]);
    return rec(x);
  };

  std::vector<Rect> rects;
  int next_id = 0;
  try {
    Rect root;
    root.c.assign(n, 0.5);
    root.level.assign(n, 0);
    root.f = eval(root.c);
    root.size = rect_size(root.level, active);
    root.id = next_id++;
    rects.push_back(root);
    if (!any_active) return rec.take();

    while (true) {
      // Failed points take the worst finite value so the hull stays finite.
      double worst = -kInf, fmin = kInf;
      for (const auto& r : rects)
        if (std::isfinite(r.f)) {
          worst = std::max(worst, r.f);
          fmin = std::min(fmin, r.f);
        }
      if (!std::isfinite(worst)) worst = fmin = 0.0;
      auto value = [&](const Rect& r) { return std::isfinite(r.f) ? r.f : worst; };

      // Lowest rectangle of each size (ties: oldest).
      std::map<double, std::size_t> group;
      for (std::size_t i = 0; i < rects.size(); ++i) {
        auto [it, fresh] = group.emplace(rects[i].size, i);
        if (!fresh && value(rects[i]) < value(rects[it->second])) it->second = i;
      }
      std::vector<std::size_t> reps;
      for (const auto& [size, i] : group) reps.push_back(i);  // ascending size

      std::vector<std::size_t> chosen;
      for (std::size_t j = 0; j < reps.size(); ++j) {
        const Rect& rj = rects[reps[j]];
        const double fj = value(rj), dj = rj.size;
        double k_low = 0.0, k_high = kInf;
        for (std::size_t i = 0; i < reps.size(); ++i) {
          if (i == j) continue;
          const Rect& ri = rects[reps[i]];
          const double slope = (fj - value(ri)) / (dj - ri.size);
          if (i < j) k_low = std::max(k_low, slope);
          else k_high = std::min(k_high, slope);
        }
        if (k_low > k_high || !(k_high > 0)) continue;
        if (std::isfinite(k_high) && fj - k_high * dj > fmin - options.epsilon * std::abs(fmin))
          continue;
        chosen.push_back(reps[j]);
      }
      // Largest first; the cap keeps the biggest rectangles.
      std::reverse(chosen.begin(), chosen.end());
      if (static_cast<int>(chosen.size()) > options.max_divisions)
        chosen.resize(static_cast<std::size_t>(options.max_divisions));

      for (std::size_t idx : chosen) {
        const Rect parent = rects[idx];
        int min_level = std::numeric_limits<int>::max();
        for (std::size_t k = 0; k < n; ++k)
          if (active[k]) min_level = std::min(min_level, parent.level[k]);
        const double delta = std::pow(3.0, -(min_level + 1));
        struct Probe {
          std::size_t k;
          double w;
          Rect plus, minus;
        };
        std::vector<Probe> probes;
        for (std::size_t k = 0; k < n; ++k) {
          if (!active[k] || parent.level[k] != min_level) continue;
          Probe p{k, 0.0, parent, parent};
          p.plus.c[k] += delta;
          p.minus.c[k] -= delta;
          p.plus.f = eval(p.plus.c);
          p.minus.f = eval(p.minus.c);
          p.w = std::min(p.plus.f, p.minus.f);
          probes.push_back(std::move(p));
        }
        std::stable_sort(probes.begin(), probes.end(),
                         [](const Probe& a, const Probe& b) { return a.w < b.w; });
        // Best probe direction first, so its children keep the largest boxes.
        for (auto& p : probes) {
          rects[idx].level[p.k] += 1;
          const std::vector<int> level = rects[idx].level;
          for (Rect* child : {&p.plus, &p.minus}) {
            child->level = level;
            child->size = rect_size(level, active);
            child->id = next_id++;
            rects.push_back(*child);
          }
        }
        rects[idx].size = rect_size(rects[idx].level, active);
      }
    }
  } catch (const BudgetExhausted&) {
  }
  return rec.take();
}

// ---------------------------------------------------------------------------
// Differential evolution, rand/1/bin

int default_de_population(int dim) { return std::min(15 * dim, 100); }

OptimizationTrace differential_evolution(ObjectiveHandle& handle, int budget, std::uint64_t seed,
                                         const DeOptions& options) {
  require_budget(budget);
  require_box(handle, "differential evolution");
  const auto n = static_cast<std::size_t>(handle.dim());
  const int np = options.population > 0 ? options.population
                                        : std::max(4, default_de_population(handle.dim()));
  if (np < 4) throw InvalidArgument("differential evolution needs a population of at least 4");
  if (budget < np)
    throw InvalidArgument("budget " + std::to_string(budget) +
                          " cannot initialize a population of " + std::to_string(np));
  if (options.initial && options.initial->size() != static_cast<std::size_t>(np))
    throw InvalidArgument("initial population size does not match");
  const auto& lo = handle.lower();
  const auto& hi = handle.upper();

  Recorder rec(handle, budget, "de", seed);
  Rng rng(seed);
  std::vector<std::vector<double>> pop(static_cast<std::size_t>(np));
  std::vector<double> fit(static_cast<std::size_t>(np));
  try {
    for (std::size_t i = 0; i < pop.size(); ++i) {
      pop[i] = options.initial ? (*options.initial)[i] : uniform_point(handle, rng);
      fit[i] = rec(pop[i]);
    }
    std::vector<double> trial(n);
    while (true) {
      auto next = pop;
      auto next_fit = fit;
      for (std::size_t i = 0; i < pop.size(); ++i) {
        std::size_t a, b, c;
        do a = rng.below(pop.size()); while (a == i);
        do b = rng.below(pop.size()); while (b == i || b == a);
        do c = rng.below(pop.size()); while (c == i || c == a || c == b);
        const std::size_t jrand = rng.below(n);
        for (std::size_t k = 0; k < n; ++k) {
          const bool cross = rng.uniform() < options.cr || k == jrand;
          const double v = pop[a][k] + options.f * (pop[b][k] - pop[c][k]);
          trial[k] = cross ? reflect(v, lo[k], hi[k]) : pop[i][k];
        }
        const double ft = rec(trial);
        if (ft <= fit[i]) {
          next[i] = trial;
          next_fit[i] = ft;
        }
      }
      pop = std::move(next);
      fit = std::move(next_fit);
    }
  } catch (const BudgetExhausted&) {
  }
  return rec.take();
}

}  // namespace photonbench
