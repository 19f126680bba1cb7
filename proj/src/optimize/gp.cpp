// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "optimize/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.hpp"
#include "common/units.hpp"

namespace photonbench {

namespace {

const double kSqrt5 = std::sqrt(5.0);

void clip(std::vector<double>& theta, const GpLimits& l) {
  const std::size_t n = theta.size();
  theta[0] = std::clamp(theta[0], l.log_signal_lo, l.log_signal_hi);
  for (std::size_t k = 1; k + 1 < n; ++k)
    theta[k] = std::clamp(theta[k], l.log_length_lo, l.log_length_hi);
  theta[n - 1] = std::clamp(theta[n - 1], l.log_noise_lo, l.log_noise_hi);
}

}  // namespace

std::vector<double> GpHyper::pack() const {
  std::vector<double> t;
  t.push_back(log_signal);
  t.insert(t.end(), log_length.begin(), log_length.end());
  t.push_back(log_noise);
  return t;
}

GpHyper GpHyper::unpack(std::span<const double> theta) {
  if (theta.size() < 3) throw InvalidArgument("GP hyperparameter vector is too short");
  GpHyper h;
  h.log_signal = theta.front();
  h.log_length.assign(theta.begin() + 1, theta.end() - 1);
  h.log_noise = theta.back();
  return h;
}

GpModel::GpModel(Eigen::MatrixXd x, Eigen::VectorXd y) : x_(std::move(x)) {
  if (x_.rows() < 1 || x_.rows() != y.size())
    throw InvalidArgument("GP needs matching, non-empty inputs and targets");
  if (!x_.allFinite() || !y.allFinite()) throw InvalidArgument("GP training data must be finite");
  y_mean_ = y.mean();
  const double var = (y.array() - y_mean_).square().mean();
  y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
  y_ = (y.array() - y_mean_) / y_scale_;
  hyper_.log_length.assign(static_cast<std::size_t>(x_.cols()), std::log(0.3));
}

double GpModel::kernel(std::span<const double> a, std::span<const double> b, const GpHyper& h) {
  double r2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = (a[k] - b[k]) / std::exp(h.log_length[k]);
    r2 += d * d;
  }
  const double r = std::sqrt(r2);
  return std::exp(h.log_signal) * (1.0 + kSqrt5 * r + 5.0 / 3.0 * r2) * std::exp(-kSqrt5 * r);
}

Eigen::MatrixXd GpModel::covariance(const GpHyper& h) const {
  const Eigen::Index n = x_.rows();
  const auto d = static_cast<std::size_t>(x_.cols());
  Eigen::MatrixXd k(n, n);
  std::vector<double> a(d), b(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) a[c] = x_(i, static_cast<Eigen::Index>(c));
    for (Eigen::Index j = 0; j <= i; ++j) {
      for (std::size_t c = 0; c < d; ++c) b[c] = x_(j, static_cast<Eigen::Index>(c));
      k(i, j) = k(j, i) = kernel(a, b, h);
    }
  }
  return k;
}

double GpModel::log_marginal_likelihood(const GpHyper& h, std::vector<double>* grad) const {
  if (h.log_length.size() != static_cast<std::size_t>(x_.cols()))
    throw InvalidArgument("GP length-scale count does not match the input dimension");
  const Eigen::Index n = x_.rows();
  const Eigen::MatrixXd kf = covariance(h);
  const double noise = std::exp(h.log_noise);
  Eigen::MatrixXd k = kf;
  k.diagonal().array() += noise;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    if (grad) grad->assign(h.log_length.size() + 2, 0.0);
    return -std::numeric_limits<double>::max();
  }
  const Eigen::VectorXd alpha = llt.solve(y_);
  const Eigen::MatrixXd& l = llt.matrixLLT();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(l(i, i));
  const double lml = -0.5 * y_.dot(alpha) - logdet - 0.5 * n * std::log(2.0 * units::kPi);
  if (!grad) return lml;

  // d lml / d theta = 1/2 tr(W dK/dtheta), W = alpha alpha^T - K^-1.
  const Eigen::MatrixXd w =
      alpha * alpha.transpose() - llt.solve(Eigen::MatrixXd::Identity(n, n));
  const auto d = static_cast<std::size_t>(x_.cols());
  grad->assign(d + 2, 0.0);
  (*grad)[0] = 0.5 * (w.array() * kf.array()).sum();
  (*grad)[d + 1] = 0.5 * noise * w.trace();
  const double s2 = std::exp(h.log_signal);
  std::vector<double> inv_l2(d);
  for (std::size_t c = 0; c < d; ++c) inv_l2[c] = std::exp(-2.0 * h.log_length[c]);
  std::vector<double> diff2(d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) {
      double r2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double dx = x_(i, static_cast<Eigen::Index>(c)) - x_(j, static_cast<Eigen::Index>(c));
        diff2[c] = dx * dx * inv_l2[c];
        r2 += diff2[c];
      }
      const double r = std::sqrt(r2);
      // dk/d log l_c = s2 (5/3)(1 + sqrt5 r) exp(-sqrt5 r) (dx_c / l_c)^2
      const double common = s2 * (5.0 / 3.0) * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
      const double wij = w(i, j);  // symmetric: counts (i, j) and (j, i)
      for (std::size_t c = 0; c < d; ++c) (*grad)[c + 1] += wij * common * diff2[c];
    }
  return lml;
}

GpHyper GpModel::optimize_hyperparameters(Rng& rng, int starts, int iterations,
                                          const std::optional<GpHyper>& warm,
                                          const GpLimits& limits) const {
  const auto d = static_cast<std::size_t>(x_.cols());
  std::vector<std::vector<double>> inits;
  if (warm) inits.push_back(warm->pack());
  {
    GpHyper h0;
    h0.log_length.assign(d, std::log(0.3));
    inits.push_back(h0.pack());
  }
  for (int s = 0; s < starts; ++s) {
    std::vector<double> t(d + 2);
    t[0] = rng.uniform(-1.0, 1.0);
    for (std::size_t c = 0; c < d; ++c) t[c + 1] = rng.uniform(std::log(0.05), std::log(2.0));
    t[d + 1] = rng.uniform(-18.0, -6.0);
    inits.push_back(std::move(t));
  }

  std::vector<double> best_theta;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> g, trial;
  for (auto theta : inits) {
    clip(theta, limits);
    double f = log_marginal_likelihood(GpHyper::unpack(theta), &g);
    double step = 0.1;
    for (int it = 0; it < iterations && step > 1e-8; ++it) {
      double gnorm = 0.0;
      for (double v : g) gnorm += v * v;
      gnorm = std::sqrt(gnorm);
      if (!(gnorm > 1e-10)) break;
      // Backtracking along the normalized gradient, projected onto the box.
      bool moved = false;
      while (step > 1e-8) {
        trial = theta;
        for (std::size_t k = 0; k < trial.size(); ++k) trial[k] += step * g[k] / gnorm;
        clip(trial, limits);
        const double ft = log_marginal_likelihood(GpHyper::unpack(trial), nullptr);
        if (ft > f) {
          const double gain = ft - f;
          theta = trial;
          f = log_marginal_likelihood(GpHyper::unpack(theta), &g);
          step *= 1.5;
          moved = gain > 1e-9 * (1.0 + std::abs(f));
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (f > best) {
      best = f;
      best_theta = theta;
    }
  }
  return GpHyper::unpack(best_theta);
}

void GpModel::fit(const GpHyper& h) {
  if (h.log_length.size() != static_cast<std::size_t>(x_.cols()))
    throw InvalidArgument("GP length-scale count does not match the input dimension");
  Eigen::MatrixXd k = covariance(h);
  k.diagonal().array() += std::exp(h.log_noise);
  const double s2 = std::exp(h.log_signal);
  jitter_ = 0.0;
  llt_.compute(k);
  for (double j = 1e-10 * s2; llt_.info() != Eigen::Success; j *= 10.0) {
    if (j > 1e-2 * s2)
      throw NotConvergedError("GP covariance is not positive definite even with jitter", jitter_);
    jitter_ = j;
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += j;
    llt_.compute(kj);
  }
  alpha_ = llt_.solve(y_);
  hyper_ = h;
  fitted_ = true;
}

std::pair<double, double> GpModel::predict(std::span<const double> x) const {
  if (!fitted_) throw InvalidArgument("GP has not been fitted");
  if (x.size() != static_cast<std::size_t>(x_.cols()))
    throw InvalidArgument("GP query has the wrong dimension");
  const Eigen::Index n = x_.rows();
  Eigen::VectorXd ks(n);
  std::vector<double> row(x.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = x_(i, static_cast<Eigen::Index>(c));
    ks(i) = kernel(row, x, hyper_);
  }
  const double mean = ks.dot(alpha_);
  const Eigen::VectorXd v = llt_.matrixL().solve(ks);
  const double var = std::max(0.0, std::exp(hyper_.log_signal) - v.squaredNorm());
  return {mean * y_scale_ + y_mean_, var * y_scale_ * y_scale_};
}

double expected_improvement(double mean, double sd, double best) {
  const double gain = best - mean;
  if (!(sd > 0)) return std::max(gain, 0.0);
  const double z = gain / sd;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * units::kPi);
  return gain * cdf + sd * pdf;
}

}  // namespace photonbench
