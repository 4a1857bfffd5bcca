#pragma once

#include <cmath>

#include "stoptime/field.hpp"
#include "stoptime/fields.hpp"
#include "stoptime/problems.hpp"

namespace testsupport {

using stoptime::ParamVector;
using stoptime::State;

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / (std::abs(a) + std::abs(b) + 1e-12);
}

inline double rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / (a.norm() + b.norm() + 1e-12);
}

// field(theta, x, t) = theta_1 * x on f(x) = x^2 / 2.
inline stoptime::RescaledGradientField linear_field_1d() {
  return {stoptime::make_quadratic(1, 1.0, false, 0), stoptime::ScheduleFamily::Constant};
}

// J(x) = x^2 in one dimension.
inline stoptime::StoppingCriterion square_criterion(double target) {
  stoptime::StoppingCriterion criterion;
  criterion.target = target;
  criterion.eval = [](const State& x) { return x[0] * x[0]; };
  criterion.grad = [](const State& x) { return State(2.0 * x); };
  return criterion;
}

// Value independent of the state: eval = theta_1 * c.
class ConstantField final : public stoptime::DynamicsField {
 public:
  explicit ConstantField(State c) : c_(std::move(c)) {}
  int param_dim() const override { return 1; }
  int state_dim() const override { return static_cast<int>(c_.size()); }
  State eval(const ParamVector& theta, const State&, double) const override {
    return theta[0] * c_;
  }
  State vjp_state(const ParamVector&, const State&, double, const State&) const override {
    return State::Zero(c_.size());
  }
  ParamVector vjp_param(const ParamVector&, const State&, double,
                        const State& lambda) const override {
    ParamVector out(1);
    out[0] = c_.dot(lambda);
    return out;
  }

 private:
  State c_;
};

// Deliberately wrong parameter VJP (doubled), for fault-detection tests.
class BrokenParamVjp final : public stoptime::DynamicsField {
 public:
  explicit BrokenParamVjp(const stoptime::DynamicsField& inner) : inner_(&inner) {}
  int param_dim() const override { return inner_->param_dim(); }
  int state_dim() const override { return inner_->state_dim(); }
  State eval(const ParamVector& theta, const State& x, double t) const override {
    return inner_->eval(theta, x, t);
  }
  State vjp_state(const ParamVector& theta, const State& x, double t,
                  const State& lambda) const override {
    return inner_->vjp_state(theta, x, t, lambda);
  }
  ParamVector vjp_param(const ParamVector& theta, const State& x, double t,
                        const State& lambda) const override {
    return 2.0 * inner_->vjp_param(theta, x, t, lambda);
  }

 private:
  const stoptime::DynamicsField* inner_;
};

}  // namespace testsupport
