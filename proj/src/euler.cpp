#include "stoptime/euler.hpp"

#include <cmath>

namespace stoptime {

namespace {

void require_inputs(const DynamicsField& field, const ParamVector& theta, const State& x0,
                    double t0, double h) {
  if (theta.size() != field.param_dim())
    throw ContractViolation("integrate: theta length does not match field.param_dim");
  if (x0.size() != field.state_dim())
    throw ContractViolation("integrate: x0 length does not match field.state_dim");
  if (!(h > 0.0)) throw ContractViolation("integrate: h must be > 0");
  if (!std::isfinite(t0) || !all_finite(theta) || !all_finite(x0))
    throw ContractViolation("integrate: inputs must be finite");
}

[[noreturn]] void throw_divergence(Trajectory partial, long k) {
  throw DivergenceError("state became non-finite at step " + std::to_string(k + 1), k,
                        std::move(partial));
}

}  // namespace

StopRun integrate_until_stop(const DynamicsField& field, const ParamVector& theta,
                             const State& x0, double t0, double h,
                             const StoppingCriterion& criterion, long n_max) {
  require_inputs(field, theta, x0, t0, h);
  if (n_max < 1) throw ContractViolation("integrate_until_stop: n_max must be >= 1");

  StopRun run;
  Trajectory& traj = run.trajectory;
  traj.t0 = t0;
  traj.h = h;
  traj.states.push_back(x0);
  traj.j_values.push_back(criterion.eval(x0));

  if (traj.j_values.back() <= criterion.target) {
    run.report = {true, 0, n_max};
    return run;
  }

  State x = x0;
  for (long k = 0; k < n_max; ++k) {
    const double tk = traj.time_at(k);
    x -= h * field.eval(theta, x, tk);
    ++traj.nfe;
    if (!all_finite(x)) throw_divergence(std::move(traj), k);
    const double j = criterion.eval(x);
    if (!std::isfinite(j)) throw_divergence(std::move(traj), k);
    traj.states.push_back(x);
    traj.j_values.push_back(j);
    if (j <= criterion.target) {
      run.report = {true, k + 1, n_max};
      return run;
    }
  }
  run.report = {false, n_max, n_max};
  return run;
}

Trajectory integrate_fixed(const DynamicsField& field, const ParamVector& theta,
                           const State& x0, double t0, double h, long k_steps,
                           const StoppingCriterion* criterion) {
  require_inputs(field, theta, x0, t0, h);
  if (k_steps < 0) throw ContractViolation("integrate_fixed: k_steps must be >= 0");

  Trajectory traj;
  traj.t0 = t0;
  traj.h = h;
  traj.states.push_back(x0);
  if (criterion) traj.j_values.push_back(criterion->eval(x0));

  State x = x0;
  for (long k = 0; k < k_steps; ++k) {
    const double tk = traj.time_at(k);
    x -= h * field.eval(theta, x, tk);
    ++traj.nfe;
    if (!all_finite(x)) throw_divergence(std::move(traj), k);
    double j = 0.0;
    if (criterion) {
      j = criterion->eval(x);
      if (!std::isfinite(j)) throw_divergence(std::move(traj), k);
    }
    traj.states.push_back(x);
    if (criterion) traj.j_values.push_back(j);
  }
  return traj;
}

}  // namespace stoptime
