#include "stoptime/adjoint.hpp"

#include <cmath>

#include "stoptime/euler.hpp"

namespace stoptime {

AdjointResult discrete_adjoint(const DynamicsField& field, const ParamVector& theta,
                               const Trajectory& traj, const StoppingCriterion& criterion) {
  const long n = traj.steps();
  if (n < 1) throw ContractViolation("discrete_adjoint: trajectory needs at least one step");
  if (theta.size() != field.param_dim())
    throw ContractViolation("discrete_adjoint: theta length does not match field.param_dim");
  if (traj.states.front().size() != field.state_dim())
    throw ContractViolation("discrete_adjoint: trajectory dimension does not match field");

  const double h = traj.h;
  State costate = criterion.grad(traj.states[static_cast<std::size_t>(n)]);
  ParamVector dj_dtheta = ParamVector::Zero(field.param_dim());

  for (long k = n - 1; k >= 0; --k) {
    const State& xk = traj.states[static_cast<std::size_t>(k)];
    const double tk = traj.time_at(k);
    dj_dtheta -= h * field.vjp_param(theta, xk, tk, costate);
    const State transported = field.vjp_state(theta, xk, tk, costate);
    costate -= h * transported;
  }
  return {std::move(dj_dtheta), std::move(costate)};
}

Sensitivities assemble_sensitivity(const Trajectory& traj, const StoppingCriterion& criterion,
                                   const AdjointResult& adjoint) {
  (void)criterion;
  const long n = traj.steps();
  if (n < 1)
    throw UndefinedSensitivityError(
        "assemble_sensitivity: run stopped at initialization, no crossing step exists");
  if (traj.j_values.size() != traj.states.size())
    throw ContractViolation("assemble_sensitivity: trajectory has no recorded criterion values");

  const double denom = traj.j_values[static_cast<std::size_t>(n)] -
                       traj.j_values[static_cast<std::size_t>(n - 1)];
  if (!(denom < 0.0))
    throw ContractViolation("assemble_sensitivity: last criterion decrement must be negative");
  if (std::abs(denom) < 1e-14)
    throw ContractViolation("assemble_sensitivity: criterion decrement too close to zero");

  Sensitivities out;
  out.dj_dtheta = adjoint.dj_dtheta;
  out.dj_dx0 = adjoint.dj_dx0;
  out.dn_dtheta = (-traj.h / denom) * adjoint.dj_dtheta;
  out.dn_dx0 = (-traj.h / denom) * adjoint.dj_dx0;
  return out;
}

UnrolledJacobians unrolled_forward_sensitivity(const DynamicsField& field,
                                               const ParamVector& theta, const State& x0,
                                               double t0, double h, long n) {
  const int d = field.state_dim();
  const int p = field.param_dim();
  if (static_cast<long long>(d) * p > 1'000'000)
    throw ContractViolation("unrolled_forward_sensitivity: dense propagation cap exceeded");
  if (n < 0) throw ContractViolation("unrolled_forward_sensitivity: n must be >= 0");

  UnrolledJacobians jac;
  jac.dx_dtheta = Matrix::Zero(d, p);
  jac.dx_dx0 = Matrix::Identity(d, d);

  State x = x0;
  for (long k = 0; k < n; ++k) {
    const double tk = t0 + static_cast<double>(k) * h;
    const Matrix jx = field.jac_state(theta, x, tk);
    const Matrix jp = field.jac_param(theta, x, tk);
    jac.dx_dtheta -= h * (jx * jac.dx_dtheta + jp);
    jac.dx_dx0 -= h * (jx * jac.dx_dx0);
    x -= h * field.eval(theta, x, tk);
    if (!all_finite(x))
      throw DivergenceError("unrolled_forward_sensitivity: state became non-finite", k, {});
  }
  return jac;
}

ParamVector finite_difference_dj_dtheta(const DynamicsField& field, const ParamVector& theta,
                                        const State& x0, double t0, double h, long n,
                                        const StoppingCriterion& criterion, double delta) {
  if (!(delta > 0.0)) throw ContractViolation("finite_difference_dj_dtheta: delta must be > 0");
  const int p = field.param_dim();
  ParamVector grad(p);
  for (int j = 0; j < p; ++j) {
    const double dj = delta * std::max(1.0, std::abs(theta[j]));
    ParamVector tp = theta;
    tp[j] += dj;
    const Trajectory plus = integrate_fixed(field, tp, x0, t0, h, n);
    tp[j] = theta[j] - dj;
    const Trajectory minus = integrate_fixed(field, tp, x0, t0, h, n);
    grad[j] = (criterion.eval(plus.states.back()) - criterion.eval(minus.states.back())) /
              (2.0 * dj);
  }
  return grad;
}

}  // namespace stoptime
