// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "materials/fit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/rng.hpp"

namespace photonbench {

namespace {

using cplx = std::complex<double>;

// Parameter layout: [log(eps_inf - eps_inf_min), then per term
// log(sigma), log(omega) (Lorentz terms only), log(gamma)].
class Model {
 public:
  Model(int n_terms, int n_drude, double eps_inf_min)
      : n_terms_(n_terms), n_drude_(n_drude), eps_inf_min_(eps_inf_min) {
    offsets_.push_back(1);
    for (int t = 0; t < n_terms_; ++t)
      offsets_.push_back(offsets_.back() + (is_drude(t) ? 2 : 3));
  }

  int size() const { return offsets_.back(); }
  bool is_drude(int t) const { return t < n_drude_; }

  DispersiveMaterial to_material(const Eigen::VectorXd& p) const {
    DispersiveMaterial m;
    m.eps_inf = eps_inf_min_ + std::exp(p[0]);
    for (int t = 0; t < n_terms_; ++t) {
      const int o = offsets_[t];
      LorentzTerm term;
      term.drude = is_drude(t);
      term.sigma = std::exp(p[o]);
      if (term.drude) {
        term.omega = kDrudeOmega;
        term.gamma = std::exp(p[o + 1]);
      } else {
        term.omega = std::exp(p[o + 1]);
        term.gamma = std::exp(p[o + 2]);
      }
      m.terms.push_back(term);
    }
    return m;
  }

  // Model value and complex Jacobian row at angular frequency w.
  cplx evaluate(const Eigen::VectorXd& p, double w, cplx* jac) const {
    const double einf_excess = std::exp(p[0]);
    cplx eps = eps_inf_min_ + einf_excess;
    if (jac) jac[0] = einf_excess;
    for (int t = 0; t < n_terms_; ++t) {
      const int o = offsets_[t];
      const double sigma = std::exp(p[o]);
      const double omega = is_drude(t) ? kDrudeOmega : std::exp(p[o + 1]);
      const double gamma = std::exp(p[o + (is_drude(t) ? 1 : 2)]);
      const double w02 = omega * omega;
      const cplx denom(w02 - w * w, -w * gamma);
      const cplx term = sigma * w02 / denom;
      eps += term;
      if (jac) {
        jac[o] = term;  // d/dlog(sigma)
        const cplx d2 = denom * denom;
        if (!is_drude(t)) {
          // d/domega = 2 sigma omega (-w^2 - i w gamma) / denom^2, times omega.
          jac[o + 1] = 2.0 * sigma * w02 * cplx(-w * w, -w * gamma) / d2;
          jac[o + 2] = sigma * w02 * cplx(0.0, w) / d2 * gamma;
        } else {
          jac[o + 1] = sigma * w02 * cplx(0.0, w) / d2 * gamma;
        }
      }
    }
    return eps;
  }

  void clamp(Eigen::VectorXd& p, const FitConfig& cfg) const {
    const double lw_lo = std::log(cfg.min_resonance_omega);
    const double lw_hi = std::log(cfg.max_resonance_omega);
    p[0] = std::clamp(p[0], -30.0, std::log(200.0));
    for (int t = 0; t < n_terms_; ++t) {
      const int o = offsets_[t];
      p[o] = std::clamp(p[o], -40.0, 40.0);
      if (!is_drude(t)) {
        p[o + 1] = std::clamp(p[o + 1], lw_lo, lw_hi);
        p[o + 2] = std::clamp(p[o + 2], -25.0, lw_hi + 3.0);
      } else {
        p[o + 1] = std::clamp(p[o + 1], -25.0, lw_hi + 3.0);
      }
    }
  }

  const std::vector<int>& offsets() const { return offsets_; }

 private:
  int n_terms_;
  int n_drude_;
  double eps_inf_min_;
  std::vector<int> offsets_;
};

struct Samples {
  std::vector<double> omega;
  std::vector<cplx> eps;
  double mean_sq = 0.0;
};

double loss(const Model& model, const Samples& s, const Eigen::VectorXd& p,
            Eigen::VectorXd* grad) {
  const int n = static_cast<int>(s.omega.size());
  std::vector<cplx> jac(grad ? model.size() : 0);
  if (grad) grad->setZero(model.size());
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const cplx r = model.evaluate(p, s.omega[i], grad ? jac.data() : nullptr) - s.eps[i];
    acc += std::norm(r);
    if (grad)
      for (int k = 0; k < model.size(); ++k) (*grad)[k] += 2.0 * std::real(std::conj(r) * jac[k]);
  }
  if (grad) *grad /= n;
  return acc / n;
}

Eigen::VectorXd random_start(const Model& model, const Samples& s, const FitConfig& cfg,
                             Rng& rng) {
  Eigen::VectorXd p(model.size());
  p[0] = std::log(rng.uniform(0.1, 4.0));
  const double w_lo = std::max(cfg.min_resonance_omega,
                               0.5 * *std::min_element(s.omega.begin(), s.omega.end()));
  const double w_hi = cfg.max_resonance_omega;
  for (int t = 0; t < cfg.n_terms; ++t) {
    const int o = model.offsets()[t];
    if (model.is_drude(t)) {
      const double wp = std::exp(rng.uniform(std::log(1.0), std::log(80.0)));
      p[o] = std::log(wp * wp / (kDrudeOmega * kDrudeOmega));
      p[o + 1] = rng.uniform(std::log(0.01), std::log(5.0));
    } else {
      p[o] = rng.uniform(std::log(0.05), std::log(5.0));
      p[o + 1] = rng.uniform(std::log(w_lo), std::log(w_hi));
      p[o + 2] = rng.uniform(std::log(0.01), std::log(5.0));
    }
  }
  model.clamp(p, cfg);
  return p;
}

void adam(const Model& model, const Samples& s, const FitConfig& cfg, Eigen::VectorXd& p) {
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(p.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(p.size());
  Eigen::VectorXd g(p.size());
  Eigen::VectorXd best = p;
  double best_loss = loss(model, s, p, nullptr);
  for (int it = 1; it <= cfg.adam_iterations; ++it) {
    const double l = loss(model, s, p, &g);
    if (!std::isfinite(l)) break;
    if (l < best_loss) {
      best_loss = l;
      best = p;
    }
    // Normalising by the data scale keeps the step size meaningful for metals.
    g /= std::max(s.mean_sq, 1e-12);
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g.cwiseProduct(g);
    const double lr = cfg.learning_rate * 0.5 *
                      (1.0 + std::cos(units::kPi * it / static_cast<double>(cfg.adam_iterations)));
    const double c1 = 1.0 - std::pow(b1, it);
    const double c2 = 1.0 - std::pow(b2, it);
    for (int k = 0; k < p.size(); ++k)
      p[k] -= (lr + 1e-4) * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
    model.clamp(p, cfg);
  }
  if (loss(model, s, p, nullptr) > best_loss) p = best;
}

// Levenberg-Marquardt on the stacked real/imaginary residuals.
void polish(const Model& model, const Samples& s, const FitConfig& cfg, Eigen::VectorXd& p) {
  const int n = static_cast<int>(s.omega.size());
  const int np = model.size();
  Eigen::MatrixXd J(2 * n, np);
  Eigen::VectorXd r(2 * n);
  std::vector<cplx> jac(np);
  double lambda = 1e-3;
  double current = loss(model, s, p, nullptr);
  for (int it = 0; it < cfg.polish_iterations; ++it) {
    for (int i = 0; i < n; ++i) {
      const cplx e = model.evaluate(p, s.omega[i], jac.data()) - s.eps[i];
      r[2 * i] = e.real();
      r[2 * i + 1] = e.imag();
      for (int k = 0; k < np; ++k) {
        J(2 * i, k) = jac[k].real();
        J(2 * i + 1, k) = jac[k].imag();
      }
    }
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd Jtr = J.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 12; ++tries) {
      Eigen::MatrixXd A = JtJ;
      for (int k = 0; k < np; ++k) A(k, k) += lambda * (JtJ(k, k) + 1e-12);
      const Eigen::VectorXd step = A.ldlt().solve(-Jtr);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      Eigen::VectorXd trial = p + step;
      model.clamp(trial, cfg);
      const double l = loss(model, s, trial, nullptr);
      if (std::isfinite(l) && l < current) {
        const double gain = current - l;
        p = trial;
        current = l;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (gain <= 1e-15 * (current + 1e-300)) return;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) return;
  }
}

}  // namespace

FitResult fit_drude_lorentz(const TabulatedIndex& table, const FitConfig& cfg,
                            const std::string& name) {
  if (table.empty()) throw InvalidArgument("fit_drude_lorentz: empty table");
  if (cfg.n_terms < 1) throw InvalidArgument("fit_drude_lorentz: n_terms must be >= 1");
  if (cfg.n_drude < 0 || cfg.n_drude > cfg.n_terms)
    throw InvalidArgument("fit_drude_lorentz: n_drude must lie in [0, n_terms]");
  if (cfg.restarts < 1) throw InvalidArgument("fit_drude_lorentz: restarts must be >= 1");

  Samples s;
  for (const auto& row : table.rows()) {
    if (row.wavelength_nm < cfg.min_wavelength_nm || row.wavelength_nm > cfg.max_wavelength_nm)
      continue;
    s.omega.push_back(units::wavelength_to_omega(row.wavelength_nm));
    s.eps.push_back(sample_permittivity(row));
  }
  if (s.omega.empty())
    throw InvalidArgument("fit_drude_lorentz: no samples inside [" +
                          format_double(cfg.min_wavelength_nm) + ", " +
                          format_double(cfg.max_wavelength_nm) + "] nm");
  for (const auto& e : s.eps) s.mean_sq += std::norm(e);
  s.mean_sq /= static_cast<double>(s.eps.size());

  const Model model(cfg.n_terms, cfg.n_drude, cfg.eps_inf_min);
  Rng rng(cfg.seed);
  Eigen::VectorXd best;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < cfg.restarts; ++r) {
    Eigen::VectorXd p = random_start(model, s, cfg, rng);
    adam(model, s, cfg, p);
    polish(model, s, cfg, p);
    const double l = loss(model, s, p, nullptr);
    if (std::isfinite(l) && l < best_loss) {
      best_loss = l;
      best = p;
    }
  }
  if (!std::isfinite(best_loss))
    throw NotConvergedError("fit_drude_lorentz: no restart produced a finite residual",
                            best_loss);

  FitResult result;
  result.material = model.to_material(best);
  result.material.name = name;
  result.material.residual = best_loss;
  result.material.fit_min_nm = std::max(cfg.min_wavelength_nm, table.min_wavelength());
  result.material.fit_max_nm = std::min(cfg.max_wavelength_nm, table.max_wavelength());
  result.residual = best_loss;
  result.relative_residual = best_loss / std::max(s.mean_sq, 1e-300);
  result.samples = static_cast<int>(s.omega.size());
  if (result.relative_residual > cfg.max_relative_residual)
    throw NotConvergedError("fit_drude_lorentz: relative residual " +
                                format_double(result.relative_residual) + " above ceiling " +
                                format_double(cfg.max_relative_residual),
                            best_loss);
  return result;
}

}  // namespace photonbench
