#include "stoptime/fields.hpp"

#include <cmath>

#include "stoptime/scalars.hpp"

namespace stoptime {

ScheduleFamily schedule_family_from_string(const std::string& name) {
  if (name == "constant") return ScheduleFamily::Constant;
  if (name == "exp-decay") return ScheduleFamily::ExpDecay;
  if (name == "fig1-diag") return ScheduleFamily::Fig1Diag;
  throw ContractViolation("unknown schedule family: " + name);
}

RescaledGradientField::RescaledGradientField(Problem problem, ScheduleFamily family, double t0)
    : problem_(std::move(problem)), family_(family), t0_(t0) {
  if (family_ == ScheduleFamily::Fig1Diag && problem_.dim != 2)
    throw ContractViolation("fig1-diag schedule requires a 2-d problem");
}

int RescaledGradientField::param_dim() const {
  return family_ == ScheduleFamily::ExpDecay ? 2 : 1;
}

void RescaledGradientField::check_theta(const ParamVector& theta) const {
  if (theta.size() != param_dim())
    throw ContractViolation("rescaled gradient field: wrong theta length");
}

State RescaledGradientField::eval(const ParamVector& theta, const State& x, double t) const {
  check_theta(theta);
  const State g = problem_.gradient(x);
  switch (family_) {
    case ScheduleFamily::Constant:
      return theta[0] * g;
    case ScheduleFamily::ExpDecay:
      return (theta[0] * std::exp(-theta[1] * (t - t0_))) * g;
    case ScheduleFamily::Fig1Diag:
      return State(Eigen::Vector2d(g[0], theta[0] * g[1]));
  }
  throw ContractViolation("unreachable schedule family");
}

State RescaledGradientField::vjp_state(const ParamVector& theta, const State& x, double t,
                                       const State& lambda) const {
  check_theta(theta);
  switch (family_) {
    case ScheduleFamily::Constant:
      return theta[0] * problem_hvp(problem_, x, lambda);
    case ScheduleFamily::ExpDecay:
      return (theta[0] * std::exp(-theta[1] * (t - t0_))) * problem_hvp(problem_, x, lambda);
    case ScheduleFamily::Fig1Diag: {
      State scaled = lambda;
      scaled[1] *= theta[0];
      return problem_hvp(problem_, x, scaled);
    }
  }
  throw ContractViolation("unreachable schedule family");
}

ParamVector RescaledGradientField::vjp_param(const ParamVector& theta, const State& x, double t,
                                             const State& lambda) const {
  check_theta(theta);
  const State g = problem_.gradient(x);
  ParamVector out(param_dim());
  switch (family_) {
    case ScheduleFamily::Constant:
      out[0] = lambda.dot(g);
      return out;
    case ScheduleFamily::ExpDecay: {
      const double dt = t - t0_;
      const double decay = std::exp(-theta[1] * dt);
      const double base = lambda.dot(g);
      out[0] = decay * base;
      out[1] = -theta[0] * dt * decay * base;
      return out;
    }
    case ScheduleFamily::Fig1Diag:
      out[0] = lambda[1] * g[1];
      return out;
  }
  throw ContractViolation("unreachable schedule family");
}

namespace {

// Full Hessian, exact when the problem exposes hessian_vec, otherwise
// column-by-column Hessian-vector products.
Matrix dense_hessian(const Problem& problem, const State& x) {
  const int d = problem.dim;
  Matrix h(d, d);
  State basis = State::Zero(d);
  for (int i = 0; i < d; ++i) {
    basis[i] = 1.0;
    h.col(i) = problem_hvp(problem, x, basis);
    basis[i] = 0.0;
  }
  return h;
}

// Per-coordinate feature map of (x_i, g_i, t) and its partials in x_i, g_i.
struct Features {
  double phi[10];
  double dphi_dx[10];
  double dphi_dg[10];
};

Features feature_map(double x, double g, double exp_neg_t, double t_frac) {
  Features f{};
  const double t1 = std::tanh(x);
  const double t2 = std::tanh(g);
  const double t3 = std::tanh(x * g);
  const double t4 = std::tanh(std::abs(g));
  const double t7 = std::tanh(x * x);
  const double t8 = std::tanh(g * g);
  const double t9 = std::tanh(x + g);
  f.phi[0] = 1.0;
  f.phi[1] = t1;
  f.phi[2] = t2;
  f.phi[3] = t3;
  f.phi[4] = t4;
  f.phi[5] = exp_neg_t;
  f.phi[6] = t_frac;
  f.phi[7] = t7;
  f.phi[8] = t8;
  f.phi[9] = t9;
  f.dphi_dx[1] = 1.0 - t1 * t1;
  f.dphi_dx[3] = g * (1.0 - t3 * t3);
  f.dphi_dx[7] = 2.0 * x * (1.0 - t7 * t7);
  f.dphi_dx[9] = 1.0 - t9 * t9;
  f.dphi_dg[2] = 1.0 - t2 * t2;
  f.dphi_dg[3] = x * (1.0 - t3 * t3);
  f.dphi_dg[4] = (g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0)) * (1.0 - t4 * t4);
  f.dphi_dg[8] = 2.0 * g * (1.0 - t8 * t8);
  f.dphi_dg[9] = 1.0 - t9 * t9;
  return f;
}

// Everything the preconditioner VJPs need at one (theta, x, t).
struct PreconEval {
  State g;          // objective gradient
  State scale;      // softplus(w_i . phi_i)
  State sig;        // logistic(w_i . phi_i)
  State dsdx;       // w_i . dphi/dx_i
  State dsdg;       // w_i . dphi/dg_i
  std::vector<Features> feats;
};

PreconEval precon_eval(const Problem& problem, const ParamVector& theta, const State& x,
                       double t) {
  const int d = problem.dim;
  PreconEval e;
  e.g = problem.gradient(x);
  e.scale.resize(d);
  e.sig.resize(d);
  e.dsdx.resize(d);
  e.dsdg.resize(d);
  e.feats.resize(static_cast<std::size_t>(d));
  const double exp_neg_t = std::exp(-t);
  const double t_frac = t / (1.0 + t);
  for (int i = 0; i < d; ++i) {
    auto& f = e.feats[static_cast<std::size_t>(i)];
    f = feature_map(x[i], e.g[i], exp_neg_t, t_frac);
    double s = 0.0, ax = 0.0, ag = 0.0;
    for (int j = 0; j < 10; ++j) {
      const double w = theta[10 * i + j];
      s += w * f.phi[j];
      ax += w * f.dphi_dx[j];
      ag += w * f.dphi_dg[j];
    }
    e.scale[i] = softplus(s);
    e.sig[i] = logistic(s);
    e.dsdx[i] = ax;
    e.dsdg[i] = ag;
  }
  return e;
}

}  // namespace

DiagPreconditionerField::DiagPreconditionerField(Problem problem)
    : problem_(std::move(problem)) {
  if (problem_.dim < 1) throw ContractViolation("preconditioner field: empty problem");
}

State DiagPreconditionerField::eval(const ParamVector& theta, const State& x, double t) const {
  if (theta.size() != param_dim())
    throw ContractViolation("preconditioner field: theta length must be 10 * state_dim");
  const auto e = precon_eval(problem_, theta, x, t);
  return e.scale.cwiseProduct(e.g);
}

State DiagPreconditionerField::vjp_state(const ParamVector& theta, const State& x, double t,
                                         const State& lambda) const {
  if (theta.size() != param_dim())
    throw ContractViolation("preconditioner field: theta length must be 10 * state_dim");
  const auto e = precon_eval(problem_, theta, x, t);
  // Row i of d(field)/dx is (scale_i + g_i sig_i dsdg_i) H_i. + g_i sig_i dsdx_i e_i.
  const State c = lambda.cwiseProduct(e.g).cwiseProduct(e.sig);
  const State through_hessian = e.scale.cwiseProduct(lambda) + e.dsdg.cwiseProduct(c);
  return problem_hvp(problem_, x, through_hessian) + e.dsdx.cwiseProduct(c);
}

ParamVector DiagPreconditionerField::vjp_param(const ParamVector& theta, const State& x,
                                               double t, const State& lambda) const {
  if (theta.size() != param_dim())
    throw ContractViolation("preconditioner field: theta length must be 10 * state_dim");
  const auto e = precon_eval(problem_, theta, x, t);
  const int d = problem_.dim;
  ParamVector out(param_dim());
  for (int i = 0; i < d; ++i) {
    const double coeff = lambda[i] * e.sig[i] * e.g[i];
    for (int j = 0; j < 10; ++j)
      out[10 * i + j] = coeff * e.feats[static_cast<std::size_t>(i)].phi[j];
  }
  return out;
}

Matrix DiagPreconditionerField::jac_state(const ParamVector& theta, const State& x,
                                          double t) const {
  if (theta.size() != param_dim())
    throw ContractViolation("preconditioner field: theta length must be 10 * state_dim");
  const auto e = precon_eval(problem_, theta, x, t);
  const State row_scale = e.scale + e.g.cwiseProduct(e.sig).cwiseProduct(e.dsdg);
  Matrix jac = row_scale.asDiagonal() * dense_hessian(problem_, x);
  jac.diagonal() += e.g.cwiseProduct(e.sig).cwiseProduct(e.dsdx);
  return jac;
}

Matrix DiagPreconditionerField::jac_param(const ParamVector& theta, const State& x,
                                          double t) const {
  if (theta.size() != param_dim())
    throw ContractViolation("preconditioner field: theta length must be 10 * state_dim");
  const auto e = precon_eval(problem_, theta, x, t);
  const int d = problem_.dim;
  Matrix jac = Matrix::Zero(d, param_dim());
  for (int i = 0; i < d; ++i) {
    const double coeff = e.sig[i] * e.g[i];
    for (int j = 0; j < 10; ++j)
      jac(i, 10 * i + j) = coeff * e.feats[static_cast<std::size_t>(i)].phi[j];
  }
  return jac;
}

StoppingCriterion grad_norm_sq_criterion(const Problem& problem, double target) {
  StoppingCriterion criterion;
  criterion.target = target;
  criterion.eval = [problem](const State& x) { return problem.gradient(x).squaredNorm(); };
  criterion.grad = [problem](const State& x) {
    return State(2.0 * problem_hvp(problem, x, problem.gradient(x)));
  };
  return criterion;
}

}  // namespace stoptime
