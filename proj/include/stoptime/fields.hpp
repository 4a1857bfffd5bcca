#pragma once

#include <string>

#include "stoptime/field.hpp"
#include "stoptime/problems.hpp"

namespace stoptime {

enum class ScheduleFamily {
  Constant,  // rate theta_1, p = 1
  ExpDecay,  // rate theta_1 * exp(-theta_2 (t - t0)), p = 2
  Fig1Diag,  // per-axis rates (1, theta_1) on a 2-d problem, p = 1
};

ScheduleFamily schedule_family_from_string(const std::string& name);

// Gradient flow scaled by a parametric schedule: field = rate * grad f(x).
// State VJPs go through Hessian-vector products of the problem.
class RescaledGradientField final : public DynamicsField {
 public:
  RescaledGradientField(Problem problem, ScheduleFamily family, double t0 = 0.0);

  int param_dim() const override;
  int state_dim() const override { return problem_.dim; }
  State eval(const ParamVector& theta, const State& x, double t) const override;
  State vjp_state(const ParamVector& theta, const State& x, double t,
                  const State& lambda) const override;
  ParamVector vjp_param(const ParamVector& theta, const State& x, double t,
                        const State& lambda) const override;

  const Problem& problem() const { return problem_; }

 private:
  void check_theta(const ParamVector& theta) const;

  Problem problem_;
  ScheduleFamily family_;
  double t0_;
};

// Coordinate-wise preconditioned gradient flow with 10 parameters per
// coordinate: scale_i = softplus(w_i . phi(x_i, g_i, t)) where g = grad f(x)
// and phi is a fixed 10-feature map. field = scale (.) g.
class DiagPreconditionerField final : public DynamicsField {
 public:
  explicit DiagPreconditionerField(Problem problem);

  int param_dim() const override { return 10 * problem_.dim; }
  int state_dim() const override { return problem_.dim; }
  State eval(const ParamVector& theta, const State& x, double t) const override;
  State vjp_state(const ParamVector& theta, const State& x, double t,
                  const State& lambda) const override;
  ParamVector vjp_param(const ParamVector& theta, const State& x, double t,
                        const State& lambda) const override;
  Matrix jac_state(const ParamVector& theta, const State& x, double t) const override;
  Matrix jac_param(const ParamVector& theta, const State& x, double t) const override;

  const Problem& problem() const { return problem_; }

 private:
  Problem problem_;
};

// Non-owning wrapper multiplying a field by a constant; equivalent to
// measuring time in rescaled units. The inner field must outlive this one.
class ScaledField final : public DynamicsField {
 public:
  ScaledField(const DynamicsField& inner, double scale) : inner_(&inner), scale_(scale) {}

  int param_dim() const override { return inner_->param_dim(); }
  int state_dim() const override { return inner_->state_dim(); }
  State eval(const ParamVector& theta, const State& x, double t) const override {
    return scale_ * inner_->eval(theta, x, t);
  }
  State vjp_state(const ParamVector& theta, const State& x, double t,
                  const State& lambda) const override {
    return scale_ * inner_->vjp_state(theta, x, t, lambda);
  }
  ParamVector vjp_param(const ParamVector& theta, const State& x, double t,
                        const State& lambda) const override {
    return scale_ * inner_->vjp_param(theta, x, t, lambda);
  }
  Matrix jac_state(const ParamVector& theta, const State& x, double t) const override {
    return scale_ * inner_->jac_state(theta, x, t);
  }
  Matrix jac_param(const ParamVector& theta, const State& x, double t) const override {
    return scale_ * inner_->jac_param(theta, x, t);
  }

 private:
  const DynamicsField* inner_;
  double scale_;
};

// Squared gradient norm criterion |grad f(x)|^2 <= target.
StoppingCriterion grad_norm_sq_criterion(const Problem& problem, double target);

}  // namespace stoptime
