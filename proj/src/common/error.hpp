// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace photonbench {

enum class ErrorKind {
  InvalidArgument,
  Config,
  Io,
  Divergence,
  Timeout,
  ResourceCap,
  NotConverged,
  Training,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::InvalidArgument, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

// Raised when a field update produces a non-finite value.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t step)
      : Error(ErrorKind::Divergence, what), step_(step) {}
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

// Raised when a run hits its step cap before the probe field decayed.
class TimeoutError : public Error {
 public:
  TimeoutError(const std::string& what, double last_ratio)
      : Error(ErrorKind::Timeout, what), last_ratio_(last_ratio) {}
  double last_ratio() const noexcept { return last_ratio_; }

 private:
  double last_ratio_;
};

// A run would exceed the configured memory budget.
class ResourceCapError : public Error {
 public:
  explicit ResourceCapError(const std::string& what) : Error(ErrorKind::ResourceCap, what) {}
};

class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, double best_residual)
      : Error(ErrorKind::NotConverged, what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch) : Error(ErrorKind::Training, what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace photonbench
