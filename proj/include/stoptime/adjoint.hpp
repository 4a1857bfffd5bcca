#pragma once

#include "stoptime/field.hpp"
#include "stoptime/types.hpp"

namespace stoptime {

// Gradients of J(x_N) at fixed step count N, produced by the backward
// co-state recursion.
struct AdjointResult {
  ParamVector dj_dtheta;
  State dj_dx0;
};

// Backward sweep over a stored forward trajectory. Initializes the co-state
// to grad J(x_N), then for k = N-1..0 accumulates the parameter gradient
// through vjp_param and transports the co-state through vjp_state. Auxiliary
// storage beyond the trajectory is one co-state and one parameter vector.
AdjointResult discrete_adjoint(const DynamicsField& field, const ParamVector& theta,
                               const Trajectory& traj, const StoppingCriterion& criterion);

// Turns the fixed-N gradients into stopping-time sensitivities by dividing
// by the last criterion decrement. Requires the run to have crossed the
// target (N >= 1) with a strictly negative decrement.
Sensitivities assemble_sensitivity(const Trajectory& traj, const StoppingCriterion& criterion,
                                   const AdjointResult& adjoint);

// Dense forward-mode propagation of the full state Jacobians through n
// Euler steps. Oracle-grade: refuses when param_dim * state_dim > 1e6.
struct UnrolledJacobians {
  Matrix dx_dtheta;  // d x p
  Matrix dx_dx0;     // d x d
};
UnrolledJacobians unrolled_forward_sensitivity(const DynamicsField& field,
                                               const ParamVector& theta, const State& x0,
                                               double t0, double h, long n);

// Central finite differences of J(x_n) in theta with the step count held
// fixed at n; x_n is recomputed by n Euler steps per perturbation. The
// per-component step is delta * max(1, |theta_j|).
ParamVector finite_difference_dj_dtheta(const DynamicsField& field, const ParamVector& theta,
                                        const State& x0, double t0, double h, long n,
                                        const StoppingCriterion& criterion, double delta);

}  // namespace stoptime
