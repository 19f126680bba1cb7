// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "optimize/algorithms.hpp"
#include "optimize/gp.hpp"
#include "optimize/recorder.hpp"

namespace photonbench {

namespace {

// Compass search on EI inside the unit cube, from `u`.
double refine(const GpModel& gp, double best, std::vector<double>& u, double ei) {
  std::vector<double> trial;
  for (double step = 0.05; step > 1e-4; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t k = 0; k < u.size(); ++k)
        for (double sign : {1.0, -1.0}) {
          trial = u;
          trial[k] = std::clamp(trial[k] + sign * step, 0.0, 1.0);
          const auto [m, v] = gp.predict(trial);
          const double e = expected_improvement(m, std::sqrt(v), best);
          if (e > ei) {
            ei = e;
            u = trial;
            improved = true;
          }
        }
    }
  }
  return ei;
}

}  // namespace

OptimizationTrace bayes_opt(ObjectiveHandle& handle, int budget, std::uint64_t seed,
                            const BoOptions& options) {
  if (budget < 1) throw InvalidArgument("optimizer budget must be at least 1");
  if (handle.combinatorial())
    throw InvalidArgument("Bayesian optimization needs a continuous box, not a block space");
  const int d = handle.dim();
  const int n_init = options.n_init > 0 ? options.n_init : std::max(2, std::min(budget, 2 * d + 1));
  if (n_init < 2) throw InvalidArgument("Bayesian optimization needs at least 2 initial points");
  const auto& lo = handle.lower();
  const auto& hi = handle.upper();
  auto to_box = [&](const std::vector<double>& u) {
    std::vector<double> x(u.size());
    for (std::size_t k = 0; k < u.size(); ++k)
      x[k] = std::clamp(lo[k] + u[k] * (hi[k] - lo[k]), lo[k], hi[k]);
    return x;
  };

  detail::Recorder rec(handle, budget, "bo", seed);
  Rng rng(seed);
  std::vector<std::vector<double>> us;
  std::vector<double> ys;
  auto draw = [&] {
    std::vector<double> u(static_cast<std::size_t>(d));
    for (auto& v : u) v = rng.uniform();
    return u;
  };
  auto observe = [&](std::vector<double> u) {
    ys.push_back(rec(to_box(u)));
    us.push_back(std::move(u));
  };

  try {
    for (int i = 0; i < n_init; ++i) observe(draw());
    std::optional<GpHyper> warm;
    while (true) {
      double worst = -std::numeric_limits<double>::infinity();
      for (double y : ys)
        if (std::isfinite(y)) worst = std::max(worst, y);
      if (!std::isfinite(worst)) {
        observe(draw());
        continue;
      }
      // Failed evaluations enter the model at the worst observed value.
      Eigen::MatrixXd x(static_cast<Eigen::Index>(us.size()), d);
      Eigen::VectorXd y(static_cast<Eigen::Index>(us.size()));
      for (std::size_t i = 0; i < us.size(); ++i) {
        for (int k = 0; k < d; ++k) x(static_cast<Eigen::Index>(i), k) = us[i][static_cast<std::size_t>(k)];
        y(static_cast<Eigen::Index>(i)) = std::isfinite(ys[i]) ? ys[i] : worst;
      }
      GpModel gp(x, y);
      const GpHyper h =
          gp.optimize_hyperparameters(rng, options.hyper_starts, options.hyper_iterations, warm);
      gp.fit(h);
      warm = h;
      const double best = y.minCoeff();

      std::vector<std::vector<double>> cand(static_cast<std::size_t>(options.candidates));
      std::vector<double> ei(cand.size());
      for (std::size_t c = 0; c < cand.size(); ++c) {
        cand[c] = draw();
        const auto [m, v] = gp.predict(cand[c]);
        ei[c] = expected_improvement(m, std::sqrt(v), best);
      }
      std::vector<std::size_t> order(cand.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return ei[a] > ei[b]; });
      std::vector<double> next;
      double next_ei = -1.0;
      const std::size_t starts =
          std::min(order.size(), static_cast<std::size_t>(std::max(options.local_starts, 1)));
      for (std::size_t s = 0; s < starts; ++s) {
        auto u = cand[order[s]];
        const double e = refine(gp, best, u, ei[order[s]]);
        if (e > next_ei) {
          next_ei = e;
          next = std::move(u);
        }
      }
      // No expected gain or a repeat of an observed point: explore instead.
      bool repeat = false;
      for (const auto& u : us) {
        double dist = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) dist = std::max(dist, std::abs(u[k] - next[k]));
        repeat |= dist < 1e-9;
      }
      if (!(next_ei > 0.0) || repeat) next = draw();
      observe(std::move(next));
    }
  } catch (const detail::BudgetExhausted&) {
  }
  return rec.take();
}

}  // namespace photonbench
