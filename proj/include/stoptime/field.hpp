#pragma once

#include <cstdint>
#include <functional>

#include "stoptime/types.hpp"

namespace stoptime {

// Right-hand side of x' = -field(theta, x, t), with the vector-Jacobian
// products reverse-mode sensitivity needs. Implementations must be
// stateless and deterministic: identical inputs give bit-identical outputs.
class DynamicsField {
 public:
  virtual ~DynamicsField() = default;

  virtual int param_dim() const = 0;
  virtual int state_dim() const = 0;

  virtual State eval(const ParamVector& theta, const State& x, double t) const = 0;

  // (d field / d x)^T lambda
  virtual State vjp_state(const ParamVector& theta, const State& x, double t,
                          const State& lambda) const = 0;

  // (d field / d theta)^T lambda
  virtual ParamVector vjp_param(const ParamVector& theta, const State& x, double t,
                                const State& lambda) const = 0;

  // Dense Jacobians, assembled row-wise from VJPs on basis co-states by
  // default. Fields with cheap analytic forms override these; forward
  // sensitivity propagation calls them once per right-hand-side evaluation.
  virtual Matrix jac_state(const ParamVector& theta, const State& x, double t) const;
  virtual Matrix jac_param(const ParamVector& theta, const State& x, double t) const;
};

// Scalar progress measure J with target level: a run terminates once
// J(x) <= target.
struct StoppingCriterion {
  std::function<double(const State&)> eval;
  std::function<State(const State&)> grad;
  double target = 0.0;
};

// Directional finite-difference check of both VJPs against eval. Draws
// `trials` random co-state/direction pairs and compares the two scalars
//   lambda . d/ds eval(... + s v)   vs   vjp(lambda) . v
// under the guarded relative error. Non-finite field output counts as a
// failure, not a crash.
bool check_vjp_consistency(const DynamicsField& field, const ParamVector& theta,
                           const State& x, double t, int trials, double tol,
                           std::uint64_t seed = 0);

}  // namespace stoptime
