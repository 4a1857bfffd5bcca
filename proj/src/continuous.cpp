#include "stoptime/continuous.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace stoptime {

namespace {

using Rhs = std::function<void(double, const State&, State&)>;

// Dormand-Prince 5(4) tableau, FSAL.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
// Difference between the 5th-order weights and the embedded 4th-order ones.
constexpr double kE[7] = {35.0 / 384 - 5179.0 / 57600,
                          0.0,
                          500.0 / 1113 - 7571.0 / 16695,
                          125.0 / 192 - 393.0 / 640,
                          -2187.0 / 6784 + 92097.0 / 339200,
                          11.0 / 84 - 187.0 / 2100,
                          -1.0 / 40};

State hermite(double s, const State& ya, const State& fa, const State& yb, const State& fb,
              double h) {
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * ya + (h10 * h) * fa + h01 * yb + (h11 * h) * fb;
}

struct EventOutcome {
  double t_event = 0.0;
  State y_event;
};

// Adaptive loop with first-crossing detection of event_value(y) <= 0 at
// accepted step endpoints, refined on the bracketing step's interpolant.
EventOutcome integrate_until_event(const Rhs& rhs, const State& y0, double t0, double h0,
                                   const ContinuousOptions& opts,
                                   const std::function<double(const State&)>& event_value) {
  constexpr double kSafety = 0.9;
  constexpr double kShrink = 0.2;
  constexpr double kGrow = 5.0;

  const auto n = y0.size();
  State y = y0;
  double t = t0;
  State f_now(n);
  rhs(t, y, f_now);

  State k[7];
  for (auto& ki : k) ki.resize(n);
  State y_stage(n), y_new(n), err_vec(n);

  double h = h0;
  double err_prev = 1.0;

  while (true) {
    if (t >= opts.t_max)
      throw NoStopError("continuous solve reached t_max without crossing the target");
    h = std::min(h, opts.t_max - t);
    if (!(h > 1e-14 * std::max(1.0, std::abs(t))))
      throw StiffnessError("continuous solve: step size underflow");

    k[0] = f_now;
    for (int stage = 1; stage < 7; ++stage) {
      y_stage = y;
      for (int j = 0; j < stage; ++j)
        if (kA[stage][j] != 0.0) y_stage += (h * kA[stage][j]) * k[j];
      if (stage == 6) y_new = y_stage;  // 7th stage sits at the 5th-order solution
      rhs(t + kC[stage] * h, y_stage, k[stage]);
    }

    err_vec.setZero();
    for (int stage = 0; stage < 7; ++stage)
      if (kE[stage] != 0.0) err_vec += (h * kE[stage]) * k[stage];
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double scale =
          opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      const double r = err_vec[i] / scale;
      acc += r * r;
    }
    const double err = std::sqrt(acc / static_cast<double>(n));

    if (!std::isfinite(err) || err > 1.0) {
      const double fac = std::isfinite(err)
                             ? std::clamp(kSafety * std::pow(err, -0.2), kShrink, 1.0)
                             : kShrink;
      h *= fac;
      continue;
    }

    const double g_new = event_value(y_new);
    if (g_new <= 0.0) {
      // First crossing lies in this step; bisect on the Hermite interpolant.
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 60 && (hi - lo) * h > opts.event_tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const State y_mid = hermite(mid, y, f_now, y_new, k[6], h);
        (event_value(y_mid) > 0.0 ? lo : hi) = mid;
      }
      EventOutcome out;
      out.t_event = t + hi * h;
      out.y_event = hermite(hi, y, f_now, y_new, k[6], h);
      return out;
    }

    t += h;
    y.swap(y_new);
    f_now.swap(k[6]);
    const double fac =
        std::clamp(kSafety * std::pow(std::max(err, 1e-16), -0.7 / 5.0) *
                       std::pow(err_prev, 0.4 / 5.0),
                   kShrink, kGrow);
    h *= fac;
    err_prev = std::max(err, 1e-4);
  }
}

void require_options(const ContinuousOptions& opts) {
  if (!(opts.rtol > 0.0) || !(opts.atol > 0.0) || !(opts.event_tol > 0.0))
    throw ContractViolation("continuous solve: tolerances must be > 0");
}

double initial_step(const State& x0, const State& rate0) {
  return 1e-3 * (1.0 + x0.norm()) / (1.0 + rate0.norm());
}

}  // namespace

ContinuousStopResult solve_continuous_stop(const DynamicsField& field, const ParamVector& theta,
                                           const State& x0, double t0,
                                           const StoppingCriterion& criterion,
                                           const ContinuousOptions& opts) {
  require_options(opts);
  if (!(criterion.eval(x0) > criterion.target))
    throw ContractViolation("continuous solve: criterion already at or below target at x0");

  long nfe = 0;
  const Rhs rhs = [&](double t, const State& y, State& dy) {
    dy = -field.eval(theta, y, t);
    ++nfe;
  };
  const State rate0 = field.eval(theta, x0, t0);
  ++nfe;

  const auto out = integrate_until_event(
      rhs, x0, t0, initial_step(x0, rate0), opts,
      [&](const State& y) { return criterion.eval(y) - criterion.target; });

  ContinuousStopResult result;
  result.t_stop = out.t_event;
  result.x_at_stop = out.y_event;
  result.xdot_at_stop = -field.eval(theta, result.x_at_stop, result.t_stop);
  ++nfe;
  result.nfe_forward = nfe;
  return result;
}

ContinuousStopResult solve_with_forward_sensitivity(const DynamicsField& field,
                                                    const ParamVector& theta, const State& x0,
                                                    double t0, const StoppingCriterion& criterion,
                                                    const ContinuousOptions& opts) {
  require_options(opts);
  const int d = field.state_dim();
  const int p = field.param_dim();
  if (static_cast<long long>(d) * p > 1'000'000)
    throw ContractViolation("solve_with_forward_sensitivity: sensitivity column cap exceeded");
  if (!(criterion.eval(x0) > criterion.target))
    throw ContractViolation("continuous solve: criterion already at or below target at x0");

  long nfe_forward = 0;
  long nfe_sensitivity = 0;
  const Rhs rhs = [&](double t, const State& y, State& dy) {
    dy.resize(y.size());
    const auto x = y.head(d);
    dy.head(d) = -field.eval(theta, x, t);
    ++nfe_forward;
    const Eigen::Map<const Matrix> u(y.data() + d, d, p);
    Eigen::Map<Matrix> du(dy.data() + d, d, p);
    du = -(field.jac_param(theta, x, t) + field.jac_state(theta, x, t) * u);
    ++nfe_sensitivity;
  };

  State y0 = State::Zero(d + static_cast<long>(d) * p);
  y0.head(d) = x0;
  const State rate0 = field.eval(theta, x0, t0);
  ++nfe_forward;

  const auto out = integrate_until_event(
      rhs, y0, t0, initial_step(x0, rate0), opts,
      [&](const State& y) { return criterion.eval(y.head(d)) - criterion.target; });

  ContinuousStopResult result;
  result.t_stop = out.t_event;
  result.x_at_stop = out.y_event.head(d);
  result.dx_dtheta_at_stop = Eigen::Map<const Matrix>(out.y_event.data() + d, d, p);
  result.xdot_at_stop = -field.eval(theta, result.x_at_stop, result.t_stop);
  ++nfe_forward;

  const State grad_j = criterion.grad(result.x_at_stop);
  const double slope = grad_j.dot(result.xdot_at_stop);
  if (std::abs(slope) <= 1e-12 * grad_j.norm() * result.xdot_at_stop.norm())
    throw GrazingContactError(
        "stopping-time gradient undefined: criterion slope vanishes at the crossing");
  result.dt_dtheta = -(result.dx_dtheta_at_stop.transpose() * grad_j) / slope;
  result.has_gradient = true;
  result.nfe_forward = nfe_forward;
  result.nfe_sensitivity = nfe_sensitivity;
  return result;
}

}  // namespace stoptime
