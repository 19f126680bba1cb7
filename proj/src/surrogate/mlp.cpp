// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "surrogate/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/io.hpp"
#include "common/rng.hpp"

namespace photonbench {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void uniform_fill(Rng& rng, double bound, double* p, Eigen::Index n) {
  for (Eigen::Index k = 0; k < n; ++k) p[k] = rng.uniform(-bound, bound);
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct BatchNorm {
  MatrixXd xhat;
  VectorXd mean, var, inv_std;
};

MatrixXd bn_forward(const MatrixXd& z, const VectorXd& gamma, const VectorXd& beta, double eps,
                    BatchNorm& s) {
  const double n = static_cast<double>(z.rows());
  s.mean = z.colwise().mean().transpose();
  const MatrixXd c = z.rowwise() - s.mean.transpose();
  s.var = c.array().square().colwise().sum().transpose() / n;
  s.inv_std = (s.var.array() + eps).rsqrt();
  s.xhat = c * s.inv_std.asDiagonal();
  return (s.xhat * gamma.asDiagonal()).rowwise() + beta.transpose();
}

// Gradient through batch norm; returns dL/dz and fills dgamma, dbeta.
MatrixXd bn_backward(const MatrixXd& dy, const VectorXd& gamma, const BatchNorm& s,
                     VectorXd& dgamma, VectorXd& dbeta) {
  const double n = static_cast<double>(dy.rows());
  dgamma = (dy.array() * s.xhat.array()).colwise().sum().transpose();
  dbeta = dy.colwise().sum().transpose();
  const MatrixXd dxhat = dy * gamma.asDiagonal();
  const VectorXd sum_dxhat = dxhat.colwise().sum().transpose();
  const VectorXd sum_dxhat_xhat = (dxhat.array() * s.xhat.array()).colwise().sum().transpose();
  MatrixXd dz = (n * dxhat).rowwise() - sum_dxhat.transpose();
  dz -= s.xhat * sum_dxhat_xhat.asDiagonal();
  return dz * (s.inv_std / n).asDiagonal();
}

nlohmann::json matrix_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::json vector_json(const VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

MatrixXd matrix_from(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                     const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw InvalidArgument(std::string("model field ") + what + " has the wrong shape");
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& r = j[static_cast<std::size_t>(i)];
    if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != cols)
      throw InvalidArgument(std::string("model field ") + what + " has the wrong shape");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = r[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

VectorXd vector_from(const nlohmann::json& j, Eigen::Index n, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != n)
    throw InvalidArgument(std::string("model field ") + what + " has the wrong length");
  return Eigen::Map<const VectorXd>(v.data(), n);
}

}  // namespace

struct MlpSurrogate::Cache {
  MatrixXd x, z1, a1, z2, a2;
  VectorXd out;
  BatchNorm bn1, bn2;
};

MlpSurrogate::MlpSurrogate(std::vector<std::string> names, std::vector<double> lower,
                           std::vector<double> upper, const MlpConfig& config)
    : names_(std::move(names)), lower_(std::move(lower)), upper_(std::move(upper)),
      bn_eps_(config.bn_eps) {
  const int d = static_cast<int>(lower_.size());
  if (d < 1 || upper_.size() != lower_.size() || names_.size() != lower_.size())
    throw InvalidArgument("surrogate needs matching names and bounds for at least one input");
  for (int k = 0; k < d; ++k)
    if (!(upper_[k] >= lower_[k])) throw InvalidArgument("surrogate bounds are inverted");
  if (config.hidden1 < 1 || config.hidden2 < 1) throw InvalidArgument("hidden layers must be nonempty");
  const int h1 = config.hidden1, h2 = config.hidden2;
  Rng rng(config.seed);
  // Uniform fan-in scaling for weights and biases.
  w1_.resize(h1, d);
  b1_.resize(h1);
  uniform_fill(rng, 1.0 / std::sqrt(d), w1_.data(), w1_.size());
  uniform_fill(rng, 1.0 / std::sqrt(d), b1_.data(), b1_.size());
  w2_.resize(h2, h1);
  b2_.resize(h2);
  uniform_fill(rng, 1.0 / std::sqrt(h1), w2_.data(), w2_.size());
  uniform_fill(rng, 1.0 / std::sqrt(h1), b2_.data(), b2_.size());
  w3_.resize(1, h2);
  b3_.resize(1);
  uniform_fill(rng, 1.0 / std::sqrt(h2), w3_.data(), w3_.size());
  uniform_fill(rng, 1.0 / std::sqrt(h2), b3_.data(), b3_.size());
  g1_ = VectorXd::Ones(h1);
  be1_ = VectorXd::Zero(h1);
  g2_ = VectorXd::Ones(h2);
  be2_ = VectorXd::Zero(h2);
  mean1_ = VectorXd::Zero(h1);
  var1_ = VectorXd::Ones(h1);
  mean2_ = VectorXd::Zero(h2);
  var2_ = VectorXd::Ones(h2);
  record_.seed = config.seed;
}

MatrixXd MlpSurrogate::normalize(const MatrixXd& x) const {
  if (x.cols() != input_dim())
    throw InvalidArgument("surrogate expects " + std::to_string(input_dim()) + " inputs, got " +
                          std::to_string(x.cols()));
  MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double span = upper_[c] - lower_[c];
    if (span > 0) out.col(c) = (x.col(c).array() - lower_[c]) / span;
    else out.col(c).setConstant(0.5);
  }
  return out;
}

VectorXd MlpSurrogate::predict(const MatrixXd& x) const {
  const MatrixXd xn = normalize(x);
  const auto bn = [&](MatrixXd z, const VectorXd& mean, const VectorXd& var, const VectorXd& g,
                      const VectorXd& b) {
    const VectorXd scale = g.array() * (var.array() + bn_eps_).rsqrt();
    z.rowwise() -= mean.transpose();
    return MatrixXd((z * scale.asDiagonal()).rowwise() + b.transpose());
  };
  MatrixXd z1 = (xn * w1_.transpose()).rowwise() + b1_.transpose();
  const MatrixXd a1 = bn(std::move(z1), mean1_, var1_, g1_, be1_).cwiseMax(0.0);
  MatrixXd z2 = (a1 * w2_.transpose()).rowwise() + b2_.transpose();
  const MatrixXd a2 = bn(std::move(z2), mean2_, var2_, g2_, be2_).cwiseMax(0.0);
  const VectorXd z3 = (a2 * w3_.transpose()).col(0).array() + b3_(0);
  return z3.unaryExpr([](double z) { return sigmoid(z); });
}

double MlpSurrogate::predict(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dim())
    throw InvalidArgument("surrogate expects " + std::to_string(input_dim()) + " inputs, got " +
                          std::to_string(x.size()));
  const MatrixXd row = Eigen::Map<const Eigen::RowVectorXd>(x.data(), input_dim());
  return predict(row)(0);
}

bool MlpSurrogate::in_bounds(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dim()) return false;
  for (int k = 0; k < input_dim(); ++k)
    if (x[k] < lower_[k] || x[k] > upper_[k]) return false;
  return true;
}

double MlpSurrogate::mse(const TrainingSet& data) const {
  if (data.rows() == 0) throw InvalidArgument("empty data set");
  return (predict(data.x) - data.y).squaredNorm() / static_cast<double>(data.rows());
}

double MlpSurrogate::forward_train(const MatrixXd& xn, const VectorXd& y, Cache& c) const {
  c.x = xn;
  c.z1 = (xn * w1_.transpose()).rowwise() + b1_.transpose();
  c.a1 = bn_forward(c.z1, g1_, be1_, bn_eps_, c.bn1).cwiseMax(0.0);
  c.z2 = (c.a1 * w2_.transpose()).rowwise() + b2_.transpose();
  c.a2 = bn_forward(c.z2, g2_, be2_, bn_eps_, c.bn2).cwiseMax(0.0);
  const VectorXd z3 = (c.a2 * w3_.transpose()).col(0).array() + b3_(0);
  c.out = z3.unaryExpr([](double z) { return sigmoid(z); });
  return (c.out - y).squaredNorm() / static_cast<double>(y.size());
}

void MlpSurrogate::backward(const Cache& c, const VectorXd& y, std::vector<double>& grad) const {
  const double n = static_cast<double>(y.size());
  const VectorXd dz3 = (2.0 / n) * (c.out - y).array() * c.out.array() * (1.0 - c.out.array());
  const MatrixXd dw3 = dz3.transpose() * c.a2;
  const double db3 = dz3.sum();
  MatrixXd da2 = dz3 * w3_;
  // ReLU mask on the batch-norm output (a2 > 0 exactly where it passed).
  da2 = da2.cwiseProduct((c.a2.array() > 0.0).cast<double>().matrix());
  VectorXd dg2, dbe2;
  const MatrixXd dz2 = bn_backward(da2, g2_, c.bn2, dg2, dbe2);
  const MatrixXd dw2 = dz2.transpose() * c.a1;
  const VectorXd db2 = dz2.colwise().sum().transpose();
  MatrixXd da1 = dz2 * w2_;
  da1 = da1.cwiseProduct((c.a1.array() > 0.0).cast<double>().matrix());
  VectorXd dg1, dbe1;
  const MatrixXd dz1 = bn_backward(da1, g1_, c.bn1, dg1, dbe1);
  const MatrixXd dw1 = dz1.transpose() * c.x;
  const VectorXd db1 = dz1.colwise().sum().transpose();

  grad.clear();
  grad.reserve(parameter_count());
  const auto put = [&](const auto& m) { grad.insert(grad.end(), m.data(), m.data() + m.size()); };
  put(dw1);
  put(db1);
  put(dg1);
  put(dbe1);
  put(dw2);
  put(db2);
  put(dg2);
  put(dbe2);
  put(dw3);
  grad.push_back(db3);
}

double MlpSurrogate::loss_and_gradient(const MatrixXd& x, const VectorXd& y,
                                       std::vector<double>* grad) const {
  if (x.rows() != y.size() || x.rows() < 2)
    throw InvalidArgument("training batches need at least two matching rows");
  Cache c;
  const double loss = forward_train(normalize(x), y, c);
  if (grad) backward(c, y, *grad);
  return loss;
}

std::size_t MlpSurrogate::parameter_count() const {
  return static_cast<std::size_t>(w1_.size() + b1_.size() + g1_.size() + be1_.size() +
                                  w2_.size() + b2_.size() + g2_.size() + be2_.size() +
                                  w3_.size() + b3_.size());
}

std::vector<double> MlpSurrogate::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  const auto put = [&](const auto& m) { p.insert(p.end(), m.data(), m.data() + m.size()); };
  put(w1_);
  put(b1_);
  put(g1_);
  put(be1_);
  put(w2_);
  put(b2_);
  put(g2_);
  put(be2_);
  put(w3_);
  put(b3_);
  return p;
}

void MlpSurrogate::set_parameters(const std::vector<double>& p) {
  if (p.size() != parameter_count()) throw InvalidArgument("parameter vector has the wrong length");
  std::size_t off = 0;
  const auto take = [&](auto& m) {
    std::copy(p.begin() + static_cast<std::ptrdiff_t>(off),
              p.begin() + static_cast<std::ptrdiff_t>(off + m.size()), m.data());
    off += static_cast<std::size_t>(m.size());
  };
  take(w1_);
  take(b1_);
  take(g1_);
  take(be1_);
  take(w2_);
  take(b2_);
  take(g2_);
  take(be2_);
  take(w3_);
  take(b3_);
}

std::uint64_t MlpSurrogate::parameter_hash() const {
  Fnv1a h;
  const auto p = parameters();
  h.add(std::span<const double>(p));
  for (const auto* v : {&mean1_, &var1_, &mean2_, &var2_})
    h.add(v->data(), static_cast<std::size_t>(v->size()) * sizeof(double));
  return h.value();
}

nlohmann::ordered_json MlpSurrogate::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "photonbench-mlp-1";
  j["architecture"] = {{"inputs", input_dim()},
                       {"hidden", {hidden1(), hidden2()}},
                       {"activations", {"relu", "relu", "logistic"}},
                       {"batch_norm_eps", bn_eps_}};
  j["input_names"] = names_;
  j["input_lower"] = lower_;
  j["input_upper"] = upper_;
  j["layers"] = nlohmann::ordered_json::array(
      {{{"weight", matrix_json(w1_)},
        {"bias", vector_json(b1_)},
        {"bn_gamma", vector_json(g1_)},
        {"bn_beta", vector_json(be1_)},
        {"bn_running_mean", vector_json(mean1_)},
        {"bn_running_var", vector_json(var1_)}},
       {{"weight", matrix_json(w2_)},
        {"bias", vector_json(b2_)},
        {"bn_gamma", vector_json(g2_)},
        {"bn_beta", vector_json(be2_)},
        {"bn_running_mean", vector_json(mean2_)},
        {"bn_running_var", vector_json(var2_)}},
       {{"weight", matrix_json(w3_)}, {"bias", vector_json(b3_)}}});
  j["training"] = {{"seed", record_.seed},
                   {"epochs_run", record_.epochs_run},
                   {"best_epoch", record_.best_epoch},
                   {"stopped_early", record_.stopped_early},
                   {"train_loss", record_.train_loss},
                   {"validation_loss", record_.validation_loss}};
  j["parameter_hash"] = std::to_string(parameter_hash());
  return j;
}

MlpSurrogate MlpSurrogate::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "photonbench-mlp-1") throw InvalidArgument("unknown surrogate format");
    MlpSurrogate m;
    m.names_ = j.at("input_names").get<std::vector<std::string>>();
    m.lower_ = j.at("input_lower").get<std::vector<double>>();
    m.upper_ = j.at("input_upper").get<std::vector<double>>();
    const auto& arch = j.at("architecture");
    const int d = arch.at("inputs").get<int>();
    const int h1 = arch.at("hidden").at(0).get<int>();
    const int h2 = arch.at("hidden").at(1).get<int>();
    m.bn_eps_ = arch.at("batch_norm_eps").get<double>();
    if (d != m.input_dim() || m.names_.size() != m.lower_.size() || m.upper_.size() != m.lower_.size())
      throw InvalidArgument("surrogate input description is inconsistent");
    const auto& L = j.at("layers");
    if (L.size() != 3) throw InvalidArgument("surrogate must have three layers");
    m.w1_ = matrix_from(L[0].at("weight"), h1, d, "layers[0].weight");
    m.b1_ = vector_from(L[0].at("bias"), h1, "layers[0].bias");
    m.g1_ = vector_from(L[0].at("bn_gamma"), h1, "layers[0].bn_gamma");
    m.be1_ = vector_from(L[0].at("bn_beta"), h1, "layers[0].bn_beta");
    m.mean1_ = vector_from(L[0].at("bn_running_mean"), h1, "layers[0].bn_running_mean");
    m.var1_ = vector_from(L[0].at("bn_running_var"), h1, "layers[0].bn_running_var");
    m.w2_ = matrix_from(L[1].at("weight"), h2, h1, "layers[1].weight");
    m.b2_ = vector_from(L[1].at("bias"), h2, "layers[1].bias");
    m.g2_ = vector_from(L[1].at("bn_gamma"), h2, "layers[1].bn_gamma");
    m.be2_ = vector_from(L[1].at("bn_beta"), h2, "layers[1].bn_beta");
    m.mean2_ = vector_from(L[1].at("bn_running_mean"), h2, "layers[1].bn_running_mean");
    m.var2_ = vector_from(L[1].at("bn_running_var"), h2, "layers[1].bn_running_var");
    m.w3_ = matrix_from(L[2].at("weight"), 1, h2, "layers[2].weight");
    m.b3_ = vector_from(L[2].at("bias"), 1, "layers[2].bias");
    if (j.contains("training")) {
      const auto& t = j.at("training");
      m.record_.seed = t.value("seed", std::uint64_t{0});
      m.record_.epochs_run = t.value("epochs_run", 0);
      m.record_.best_epoch = t.value("best_epoch", 0);
      m.record_.stopped_early = t.value("stopped_early", false);
      m.record_.train_loss = t.value("train_loss", std::vector<double>{});
      m.record_.validation_loss = t.value("validation_loss", std::vector<double>{});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed surrogate model: ") + e.what());
  }
}

void MlpSurrogate::save(const std::filesystem::path& path) const {
  write_file_atomic(path, to_json().dump(1) + "\n");
}

MlpSurrogate MlpSurrogate::load(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

MlpSurrogate train_mlp(const TrainingSet& train, const TrainingSet& validation,
                       std::vector<std::string> names, std::vector<double> lower,
                       std::vector<double> upper, const MlpConfig& config) {
  if (train.rows() < 2 || validation.rows() < 1)
    throw InvalidArgument("training needs at least two training rows and one validation row");
  if (train.x.rows() != train.y.size() || validation.x.rows() != validation.y.size())
    throw InvalidArgument("inputs and targets differ in length");
  if (config.batch_size < 2) throw InvalidArgument("batch size must be at least 2");
  if (config.max_epochs < 1) throw InvalidArgument("max_epochs must be positive");
  for (const auto* d : {&train, &validation})
    for (Eigen::Index k = 0; k < d->y.size(); ++k)
      if (!(d->y(k) >= 0.0 && d->y(k) <= 1.0))
        throw InvalidArgument("surrogate targets must lie in [0, 1]");

  MlpSurrogate model(std::move(names), std::move(lower), std::move(upper), config);
  const MatrixXd xn = model.normalize(train.x);
  const std::size_t np = model.parameter_count();
  std::vector<double> m1(np, 0.0), m2(np, 0.0), grad;
  std::int64_t t = 0;
  Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.rows()));
  std::iota(order.begin(), order.end(), 0);

  MlpSurrogate best = model;
  double best_val = INFINITY;
  auto& rec = model.record_;
  rec = TrainingRecord{};
  rec.seed = config.seed;
  MlpSurrogate::Cache cache;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    double epoch_loss = 0.0;
    Eigen::Index seen = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const auto b = static_cast<Eigen::Index>(end - start);
      if (b < 2) continue;  // batch statistics need two rows
      MatrixXd xb(b, xn.cols());
      VectorXd yb(b);
      for (Eigen::Index r = 0; r < b; ++r) {
        xb.row(r) = xn.row(order[start + r]);
        yb(r) = train.y(order[start + r]);
      }
      const double loss = model.forward_train(xb, yb, cache);
      if (!std::isfinite(loss))
        throw TrainingError("training loss became non-finite in epoch " + std::to_string(epoch),
                            epoch);
      model.backward(cache, yb, grad);
      epoch_loss += loss * static_cast<double>(b);
      seen += b;

      // Running statistics use the unbiased batch variance.
      const double mom = config.bn_momentum;
      const double unbias = static_cast<double>(b) / static_cast<double>(b - 1);
      model.mean1_ = (1 - mom) * model.mean1_ + mom * cache.bn1.mean;
      model.var1_ = (1 - mom) * model.var1_ + mom * unbias * cache.bn1.var;
      model.mean2_ = (1 - mom) * model.mean2_ + mom * cache.bn2.mean;
      model.var2_ = (1 - mom) * model.var2_ + mom * unbias * cache.bn2.var;

      ++t;
      auto p = model.parameters();
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
      for (std::size_t k = 0; k < np; ++k) {
        m1[k] = config.beta1 * m1[k] + (1 - config.beta1) * grad[k];
        m2[k] = config.beta2 * m2[k] + (1 - config.beta2) * grad[k] * grad[k];
        p[k] -= config.learning_rate * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + config.adam_eps);
      }
      model.set_parameters(p);
    }
    const double val = model.mse(validation);
    if (!std::isfinite(val))
      throw TrainingError("validation loss became non-finite in epoch " + std::to_string(epoch),
                          epoch);
    rec.train_loss.push_back(seen > 0 ? epoch_loss / static_cast<double>(seen) : 0.0);
    rec.validation_loss.push_back(val);
    rec.epochs_run = epoch;
    if (val < best_val) {
      best_val = val;
      rec.best_epoch = epoch;
      best = model;
    }
    const auto& vl = rec.validation_loss;
    const std::size_t w = static_cast<std::size_t>(config.stop_window);
    if (vl.size() > w) {
      const double avg =
          std::accumulate(vl.end() - 1 - static_cast<std::ptrdiff_t>(w), vl.end() - 1, 0.0) /
          static_cast<double>(w);
      if (val > avg) {
        rec.stopped_early = true;
        break;
      }
    }
  }
  best.record_ = rec;
  return best;
}

}  // namespace photonbench
