#include "stoptime/field.hpp"

#include <cmath>

#include "stoptime/random.hpp"

namespace stoptime {

Matrix DynamicsField::jac_state(const ParamVector& theta, const State& x, double t) const {
  const int d = state_dim();
  Matrix jac(d, d);
  State basis = State::Zero(d);
  for (int i = 0; i < d; ++i) {
    basis[i] = 1.0;
    jac.row(i) = vjp_state(theta, x, t, basis).transpose();
    basis[i] = 0.0;
  }
  return jac;
}

Matrix DynamicsField::jac_param(const ParamVector& theta, const State& x, double t) const {
  const int d = state_dim();
  const int p = param_dim();
  Matrix jac(d, p);
  State basis = State::Zero(d);
  for (int i = 0; i < d; ++i) {
    basis[i] = 1.0;
    jac.row(i) = vjp_param(theta, x, t, basis).transpose();
    basis[i] = 0.0;
  }
  return jac;
}

namespace {

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) / (std::abs(a) + std::abs(b) + kRelGuard) <= tol;
}

}  // namespace

bool check_vjp_consistency(const DynamicsField& field, const ParamVector& theta,
                           const State& x, double t, int trials, double tol,
                           std::uint64_t seed) {
  if (trials < 1) throw ContractViolation("check_vjp_consistency: trials must be >= 1");
  if (!(tol > 0.0)) throw ContractViolation("check_vjp_consistency: tol must be > 0");

  const int d = field.state_dim();
  const int p = field.param_dim();
  std::mt19937_64 rng(mix_seed(seed, 0xc0de));

  const double dx = 1e-6 * (1.0 + x.norm());
  const double dp = 1e-6 * (1.0 + theta.norm());

  for (int trial = 0; trial < trials; ++trial) {
    const State lambda = gaussian_vector(d, rng);

    {
      State v = gaussian_vector(d, rng);
      v /= v.norm();
      const State fp = field.eval(theta, x + dx * v, t);
      const State fm = field.eval(theta, x - dx * v, t);
      if (!all_finite(fp) || !all_finite(fm)) return false;
      const double fd = lambda.dot(fp - fm) / (2.0 * dx);
      const State vjp = field.vjp_state(theta, x, t, lambda);
      if (!all_finite(vjp)) return false;
      if (!close_rel(fd, vjp.dot(v), tol)) return false;
    }

    {
      ParamVector w = gaussian_vector(p, rng);
      w /= w.norm();
      const State fp = field.eval(theta + dp * w, x, t);
      const State fm = field.eval(theta - dp * w, x, t);
      if (!all_finite(fp) || !all_finite(fm)) return false;
      const double fd = lambda.dot(fp - fm) / (2.0 * dp);
      const ParamVector vjp = field.vjp_param(theta, x, t, lambda);
      if (!all_finite(vjp)) return false;
      if (!close_rel(fd, vjp.dot(w), tol)) return false;
    }
  }
  return true;
}

}  // namespace stoptime
