#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stoptime {

// All numerics are 64-bit floating point.
using State = Eigen::VectorXd;
using ParamVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Denominator guard used by every relative-error quotient in the library.
inline constexpr double kRelGuard = 1e-12;

inline bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return v.allFinite();
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition or malformed argument.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// A state (or criterion value) became non-finite during integration.
// The partial trajectory up to the last finite state is kept for diagnosis.
class DivergenceError;

// Continuous solve reached t_max without the criterion crossing its target.
class NoStopError : public Error {
 public:
  using Error::Error;
};

// Adaptive step size underflowed.
class StiffnessError : public Error {
 public:
  using Error::Error;
};

// The criterion's time derivative vanished at the crossing, so the
// stopping-time gradient quotient is ill-posed.
class GrazingContactError : public Error {
 public:
  using Error::Error;
};

// Stopping-time sensitivity requested for a run that stopped at the
// initial state (no step across the target exists).
class UndefinedSensitivityError : public Error {
 public:
  using Error::Error;
};

// A check whose statement assumes monotone decrease was handed a
// non-monotone run.
class HypothesisViolatedError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, long line) : Error(msg), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// One stored forward pass: uniform time grid t0 + k*h, states x_0..x_N,
// criterion values at each state when a criterion drove the run, and the
// count of dynamics-field evaluations.
struct Trajectory {
  double t0 = 0.0;
  double h = 0.0;
  std::vector<State> states;
  std::vector<double> j_values;  // empty for fixed-horizon runs without a criterion
  long nfe = 0;

  long steps() const { return static_cast<long>(states.size()) - 1; }
  double time_at(long k) const { return t0 + static_cast<double>(k) * h; }
};

struct StopReport {
  bool stopped = false;
  long n = 0;
  long n_max = 0;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& msg, long last_finite_index, Trajectory partial)
      : Error(msg), last_finite_index_(last_finite_index), partial_(std::move(partial)) {}

  long last_finite_index() const { return last_finite_index_; }
  const Trajectory& partial() const { return partial_; }

 private:
  long last_finite_index_;
  Trajectory partial_;
};

// Stopping-time sensitivities: dj_* are gradients of the final criterion
// value at a fixed step count, dn_* the derived gradients of the
// (continuized) step count itself.
struct Sensitivities {
  ParamVector dj_dtheta;
  State dj_dx0;
  ParamVector dn_dtheta;
  State dn_dx0;
};

}  // namespace stoptime
