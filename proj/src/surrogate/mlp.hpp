// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace photonbench {

struct MlpConfig {
  int hidden1 = 128;
  int hidden2 = 64;
  int max_epochs = 200;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  int stop_window = 5;  // validation losses averaged by the early-stopping test
  std::uint64_t seed = 1;
};

// Rows of raw inputs (physical units) and targets in [0, 1].
struct TrainingSet {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;

  Eigen::Index rows() const { return x.rows(); }
};

struct TrainingRecord {
  std::uint64_t seed = 0;
  int epochs_run = 0;
  int best_epoch = 0;  // 1-based
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  bool stopped_early = false;
};

// d -> h1 -> h2 -> 1 perceptron: dense, batch norm, ReLU twice, then a
// logistic output. Inputs are scaled to [0, 1] with per-parameter bounds.
class MlpSurrogate {
 public:
  MlpSurrogate() = default;
  MlpSurrogate(std::vector<std::string> names, std::vector<double> lower, std::vector<double> upper,
               const MlpConfig& config);

  int input_dim() const { return static_cast<int>(lower_.size()); }
  int hidden1() const { return static_cast<int>(b1_.size()); }
  int hidden2() const { return static_cast<int>(b2_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  // Inference with stored batch-norm statistics. Output lies in (0, 1).
  double predict(std::span<const double> x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
  bool in_bounds(std::span<const double> x) const;

  // Mean squared error in inference mode.
  double mse(const TrainingSet& data) const;

  // Training-mode loss (batch statistics) and its gradient with respect to the
  // flattened parameters. Running statistics are left untouched.
  double loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           std::vector<double>* grad) const;

  // Order: W1, b1, gamma1, beta1, W2, b2, gamma2, beta2, W3, b3.
  std::vector<double> parameters() const;
  void set_parameters(const std::vector<double>& p);
  std::size_t parameter_count() const;
  std::uint64_t parameter_hash() const;

  const TrainingRecord& record() const { return record_; }
  TrainingRecord& record() { return record_; }

  nlohmann::ordered_json to_json() const;
  static MlpSurrogate from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static MlpSurrogate load(const std::filesystem::path& path);

 private:
  friend MlpSurrogate train_mlp(const TrainingSet&, const TrainingSet&, std::vector<std::string>,
                                std::vector<double>, std::vector<double>, const MlpConfig&);

  struct Cache;
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& x) const;
  double forward_train(const Eigen::MatrixXd& xn, const Eigen::VectorXd& y, Cache& c) const;
  void backward(const Cache& c, const Eigen::VectorXd& y, std::vector<double>& grad) const;

  std::vector<std::string> names_;
  std::vector<double> lower_, upper_;
  double bn_eps_ = 1e-5;

  Eigen::MatrixXd w1_, w2_, w3_;
  Eigen::VectorXd b1_, g1_, be1_, b2_, g2_, be2_, b3_;
  Eigen::VectorXd mean1_, var1_, mean2_, var2_;  // running batch-norm statistics

  TrainingRecord record_;
};

// Adam on mean squared error with mini-batches drawn from a seeded shuffle.
// Stops when a validation loss exceeds the mean of the previous `stop_window`
// losses or after max_epochs, and returns the lowest-validation checkpoint.
MlpSurrogate train_mlp(const TrainingSet& train, const TrainingSet& validation,
                       std::vector<std::string> names, std::vector<double> lower,
                       std::vector<double> upper, const MlpConfig& config);

}  // namespace photonbench
