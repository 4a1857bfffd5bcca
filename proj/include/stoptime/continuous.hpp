#pragma once

#include "stoptime/field.hpp"
#include "stoptime/types.hpp"

namespace stoptime {

struct ContinuousOptions {
  double rtol = 1e-9;
  double atol = 1e-9;
  double event_tol = 1e-10;  // time-window width for crossing localization
  double t_max = 1e4;
};

struct ContinuousStopResult {
  double t_stop = 0.0;
  State x_at_stop;
  State xdot_at_stop;
  Matrix dx_dtheta_at_stop;  // d x p, populated by the sensitivity solve only
  ParamVector dt_dtheta;     // gradient of the stopping time, ditto
  long nfe_forward = 0;      // trajectory right-hand-side evaluations
  long nfe_sensitivity = 0;  // variational right-hand-side evaluations
  bool has_gradient = false;
};

// Integrates x' = -field(theta, x, t) with an embedded Dormand-Prince 4(5)
// pair until J(x) first crosses its target, then localizes the crossing by
// bisection on the accepted step's cubic Hermite interpolant.
ContinuousStopResult solve_continuous_stop(const DynamicsField& field, const ParamVector& theta,
                                           const State& x0, double t0,
                                           const StoppingCriterion& criterion,
                                           const ContinuousOptions& opts);

// Same solve with the state augmented by the columns of dx/dtheta, giving
// the stopping-time gradient through the crossing-condition quotient.
ContinuousStopResult solve_with_forward_sensitivity(const DynamicsField& field,
                                                    const ParamVector& theta, const State& x0,
                                                    double t0, const StoppingCriterion& criterion,
                                                    const ContinuousOptions& opts);

}  // namespace stoptime
