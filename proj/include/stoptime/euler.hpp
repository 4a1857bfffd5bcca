#pragma once

#include "stoptime/field.hpp"
#include "stoptime/types.hpp"

namespace stoptime {

struct StopRun {
  Trajectory trajectory;
  StopReport report;
};

// Forward Euler x_{k+1} = x_k - h field(theta, x_k, t_k), halting at the
// first k with J(x_k) <= target or at n_max. A run that starts at or below
// the target stops with n = 0. Ties (J exactly at target) count as stopped.
StopRun integrate_until_stop(const DynamicsField& field, const ParamVector& theta,
                             const State& x0, double t0, double h,
                             const StoppingCriterion& criterion, long n_max);

// Exactly k_steps Euler steps, no stopping test. When a criterion is given
// its values are recorded along the way.
Trajectory integrate_fixed(const DynamicsField& field, const ParamVector& theta,
                           const State& x0, double t0, double h, long k_steps,
                           const StoppingCriterion* criterion = nullptr);

}  // namespace stoptime
