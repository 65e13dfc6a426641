#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace funnelctl {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite data, singular quantities, unsupported shapes.
class NumericError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A structural assumption (rank, relative degree, normal-form shape) does
// not hold at the evaluated time.
class StructureError : public Error {
 public:
  StructureError(const std::string& what, double t) : Error(what), time_(t) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Raised when the error e_i reaches its funnel boundary (within the guard).
class FunnelViolation : public Error {
 public:
  FunnelViolation(int index, double t, double margin)
      : Error("funnel violation: level " + std::to_string(index) + " at t=" +
              std::to_string(t) + " (margin " + std::to_string(margin) + ")"),
        index_(index),
        time_(t),
        margin_(margin) {}

  int index() const noexcept { return index_; }
  double time() const noexcept { return time_; }
  double margin() const noexcept { return margin_; }

  // Last accepted integrator state, filled in by the integrator.
  Eigen::VectorXd last_state;
  double last_time = 0.0;

 private:
  int index_;
  double time_;
  double margin_;
};

class IntegrationStalled : public Error {
 public:
  IntegrationStalled(double t, double h, Eigen::VectorXd state)
      : Error("integration stalled at t=" + std::to_string(t) +
              " (step size " + std::to_string(h) + ")"),
        time_(t),
        step_(h),
        state_(std::move(state)) {}

  double time() const noexcept { return time_; }
  double step() const noexcept { return step_; }
  const Eigen::VectorXd& state() const noexcept { return state_; }

 private:
  double time_;
  double step_;
  Eigen::VectorXd state_;
};

// Scenario input that fails validation. `path` is the JSON field path.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace funnelctl
