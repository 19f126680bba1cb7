// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "common/rng.hpp"

namespace photonbench {

// Log-scale kernel hyperparameters; packed as
// [log signal variance, log length scales..., log noise variance].
struct GpHyper {
  double log_signal = 0.0;
  std::vector<double> log_length;
  double log_noise = -13.8;  // ~1e-6

  std::vector<double> pack() const;
  static GpHyper unpack(std::span<const double> theta);
};

// Box limits on the packed hyperparameters, for inputs scaled to [0, 1] and
// standardized targets.
struct GpLimits {
  double log_signal_lo = -4.6, log_signal_hi = 4.6;
  double log_length_lo = -6.9, log_length_hi = 2.3;
  double log_noise_lo = -23.0, log_noise_hi = -2.3;
};

// Zero-mean GP with an ARD Matern-5/2 kernel on standardized targets.
class GpModel {
 public:
  GpModel(Eigen::MatrixXd x, Eigen::VectorXd y);

  int size() const { return static_cast<int>(x_.rows()); }
  int dim() const { return static_cast<int>(x_.cols()); }

  static double kernel(std::span<const double> a, std::span<const double> b, const GpHyper& h);

  // Log marginal likelihood of the standardized targets and, optionally, its
  // gradient with respect to the packed hyperparameters.
  double log_marginal_likelihood(const GpHyper& h, std::vector<double>* grad = nullptr) const;

  // Multi-start projected gradient ascent; `warm` joins the starts.
  GpHyper optimize_hyperparameters(Rng& rng, int starts, int iterations,
                                   const std::optional<GpHyper>& warm = std::nullopt,
                                   const GpLimits& limits = {}) const;

  // Factorizes the covariance, adding diagonal jitter (up to 1e-2 of the
  // signal variance) when needed; throws NotConvergedError if that fails.
  void fit(const GpHyper& h);
  const GpHyper& hyper() const { return hyper_; }
  double jitter() const { return jitter_; }

  // Posterior mean and variance in the original target units.
  std::pair<double, double> predict(std::span<const double> x) const;

  double y_mean() const { return y_mean_; }
  double y_scale() const { return y_scale_; }

 private:
  Eigen::MatrixXd covariance(const GpHyper& h) const;

  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;  // standardized
  double y_mean_ = 0.0, y_scale_ = 1.0;
  GpHyper hyper_;
  double jitter_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  bool fitted_ = false;
};

// Expected improvement below `best` for a Gaussian prediction (minimization).
double expected_improvement(double mean, double sd, double best);

}  // namespace photonbench
