#include "stoptime/meta.hpp"

#include <cmath>
#include <future>
#include <limits>

#include "stoptime/adjoint.hpp"
#include "stoptime/euler.hpp"
#include "stoptime/fields.hpp"
#include "stoptime/optimizers.hpp"
#include "stoptime/random.hpp"

namespace stoptime {

namespace {

void require_config(const MetaConfig& config) {
  if (config.k_max < 1) throw ContractViolation("meta: k_max must be >= 1");
  if (config.weights.size() != 0 && config.weights.size() != config.k_max + 1)
    throw ContractViolation("meta: weights must have k_max + 1 entries");
  if (config.weights.size() != 0 && (config.weights.array() < 0.0).any())
    throw ContractViolation("meta: weights must be nonnegative");
  if (!(config.h > 0.0)) throw ContractViolation("meta: h must be > 0");
  if (config.n_max < 1) throw ContractViolation("meta: n_max must be >= 1");
  if (config.batch < 1) throw ContractViolation("meta: batch must be >= 1");
}

// Doubled-state dynamics whose trajectory carries (x_{k+1}, x_k); lets the
// per-step-decrease criterion run through the standard stopping machinery.
class DoubledStateField final : public DynamicsField {
 public:
  DoubledStateField(const DynamicsField& inner, double h) : inner_(&inner), h_(h) {}

  int param_dim() const override { return inner_->param_dim(); }
  int state_dim() const override { return 2 * inner_->state_dim(); }

  State eval(const ParamVector& theta, const State& z, double t) const override {
    const int d = inner_->state_dim();
    State out(2 * d);
    out.head(d) = inner_->eval(theta, z.head(d), t);
    out.tail(d) = (z.tail(d) - z.head(d)) / h_;
    return out;
  }

  State vjp_state(const ParamVector& theta, const State& z, double t,
                  const State& lambda) const override {
    const int d = inner_->state_dim();
    State out(2 * d);
    out.head(d) = inner_->vjp_state(theta, z.head(d), t, lambda.head(d)) - lambda.tail(d) / h_;
    out.tail(d) = lambda.tail(d) / h_;
    return out;
  }

  ParamVector vjp_param(const ParamVector& theta, const State& z, double t,
                        const State& lambda) const override {
    return inner_->vjp_param(theta, z.head(inner_->state_dim()), t,
                             lambda.head(inner_->state_dim()));
  }

 private:
  const DynamicsField* inner_;
  double h_;
};

StoppingCriterion progress_criterion(const Problem& problem, double target) {
  StoppingCriterion criterion;
  criterion.target = target;
  const int d = problem.dim;
  criterion.eval = [problem, d](const State& z) {
    return problem.value(z.tail(d)) - problem.value(z.head(d));
  };
  criterion.grad = [problem, d](const State& z) {
    State g(2 * d);
    g.head(d) = -problem.gradient(z.head(d));
    g.tail(d) = problem.gradient(z.tail(d));
    return g;
  };
  return criterion;
}

struct StopSolve {
  long n_total = 0;  // x-updates until the criterion fired (n_max if never)
  bool stopped = false;
  ParamVector dn_dtheta;  // empty when the sensitivity is undefined
};

StopSolve solve_stopping(const DynamicsField& field, const ParamVector& theta,
                         const Problem& problem, const State& x0, const MetaConfig& config,
                         bool want_gradient) {
  StopSolve out;
  if (config.criterion == MetaStopKind::GradNormSq) {
    const StoppingCriterion criterion = grad_norm_sq_criterion(problem, config.epsilon);
    const StopRun run = integrate_until_stop(field, theta, x0, config.t0, config.h, criterion,
                                             config.n_max);
    out.stopped = run.report.stopped;
    out.n_total = run.report.n;
    if (want_gradient && run.report.stopped && run.report.n >= 1) {
      const AdjointResult adj = discrete_adjoint(field, theta, run.trajectory, criterion);
      out.dn_dtheta = assemble_sensitivity(run.trajectory, criterion, adj).dn_dtheta;
    }
    return out;
  }

  // Per-step-decrease criterion: one priming step, then the doubled state.
  const int d = field.state_dim();
  const State x1 = x0 - config.h * field.eval(theta, x0, config.t0);
  if (!all_finite(x1)) throw DivergenceError("meta: priming step diverged", 0, {});
  State z0(2 * d);
  z0.head(d) = x1;
  z0.tail(d) = x0;

  const DoubledStateField doubled(field, config.h);
  const StoppingCriterion criterion = progress_criterion(problem, config.epsilon);
  const StopRun run = integrate_until_stop(doubled, theta, z0, config.t0 + config.h, config.h,
                                           criterion, std::max<long>(config.n_max - 1, 1));
  out.stopped = run.report.stopped;
  out.n_total = run.report.stopped ? run.report.n + 1 : config.n_max;
  if (want_gradient && run.report.stopped && run.report.n >= 1) {
    const AdjointResult adj = discrete_adjoint(doubled, theta, run.trajectory, criterion);
    // The doubled start depends on theta through the priming step.
    ParamVector dj_dtheta =
        adj.dj_dtheta - config.h * field.vjp_param(theta, x0, config.t0, adj.dj_dx0.head(d));
    AdjointResult corrected{std::move(dj_dtheta), adj.dj_dx0};
    out.dn_dtheta = assemble_sensitivity(run.trajectory, criterion, corrected).dn_dtheta;
  }
  return out;
}

}  // namespace

Eigen::VectorXd resolve_meta_weights(const MetaConfig& config) {
  if (config.weights.size() != 0) return config.weights;
  return Eigen::VectorXd::Constant(config.k_max + 1, 1.0 / static_cast<double>(config.k_max));
}

MetaLossParts meta_loss(const DynamicsField& field, const ParamVector& theta,
                        const Problem& problem, const State& x0, const MetaConfig& config) {
  require_config(config);
  MetaLossParts parts;
  try {
    const Eigen::VectorXd weights = resolve_meta_weights(config);
    const Trajectory traj =
        integrate_fixed(field, theta, x0, config.t0, config.h, config.k_max);
    for (int k = 0; k <= config.k_max; ++k)
      parts.weighted_sum += weights[k] * problem.value(traj.states[static_cast<std::size_t>(k)]);

    const StopSolve stop = solve_stopping(field, theta, problem, x0, config, false);
    parts.n_j = stop.stopped ? stop.n_total : config.n_max;
    parts.stopped = stop.stopped;
    parts.loss = parts.weighted_sum + config.lambda * static_cast<double>(parts.n_j);
    if (!std::isfinite(parts.loss)) {
      parts.diverged = true;
      parts.loss = std::numeric_limits<double>::infinity();
    }
  } catch (const DivergenceError&) {
    parts.diverged = true;
    parts.loss = std::numeric_limits<double>::infinity();
    parts.n_j = config.n_max;
  }
  return parts;
}

ParamVector running_cost_adjoint(const DynamicsField& field, const ParamVector& theta,
                                 const Trajectory& traj, const Problem& problem,
                                 const Eigen::VectorXd& weights) {
  const long k_max = traj.steps();
  if (weights.size() != k_max + 1)
    throw ContractViolation("running_cost_adjoint: weights must have one entry per state");

  const double h = traj.h;
  State costate = weights[k_max] * problem.gradient(traj.states[static_cast<std::size_t>(k_max)]);
  ParamVector grad = ParamVector::Zero(field.param_dim());
  for (long k = k_max - 1; k >= 0; --k) {
    const State& xk = traj.states[static_cast<std::size_t>(k)];
    const double tk = traj.time_at(k);
    grad -= h * field.vjp_param(theta, xk, tk, costate);
    costate -= h * field.vjp_state(theta, xk, tk, costate);
    costate += weights[k] * problem.gradient(xk);
  }
  return grad;
}

ParamVector meta_gradient(const DynamicsField& field, const ParamVector& theta,
                          const Problem& problem, const State& x0, const MetaConfig& config) {
  require_config(config);
  const Eigen::VectorXd weights = resolve_meta_weights(config);
  const Trajectory traj = integrate_fixed(field, theta, x0, config.t0, config.h, config.k_max);
  ParamVector grad = running_cost_adjoint(field, theta, traj, problem, weights);

  if (config.lambda != 0.0) {
    const StopSolve stop = solve_stopping(field, theta, problem, x0, config, true);
    if (stop.dn_dtheta.size() != 0) grad += config.lambda * stop.dn_dtheta;
  }
  return grad;
}

MetaTrainResult meta_train(const DynamicsField& field, const ParamVector& theta0,
                           const MetaConfig& config, const ProblemSampler& sampler) {
  require_config(config);
  if (config.steps < 0) throw ContractViolation("meta_train: steps must be >= 0");

  ParamVector theta = theta0;
  MetaTrainResult result;
  State meta_m = State::Zero(theta.size());
  State meta_v = State::Zero(theta.size());

  for (int step = 0; step < config.steps; ++step) {
    struct InstanceOutcome {
      MetaLossParts parts;
      ParamVector grad;
      bool ok = false;
    };
    std::vector<InstanceOutcome> outcomes(static_cast<std::size_t>(config.batch));

    auto run_instance = [&](int i) {
      const std::uint64_t inst_seed =
          mix_seed(config.seed, static_cast<std::uint64_t>(step) * config.batch + i);
      const MetaInstance instance = sampler(inst_seed);
      InstanceOutcome& out = outcomes[static_cast<std::size_t>(i)];
      out.parts = meta_loss(field, theta, instance.problem, instance.x0, config);
      if (out.parts.diverged) return;
      try {
        out.grad = meta_gradient(field, theta, instance.problem, instance.x0, config);
        out.ok = all_finite(out.grad);
      } catch (const DivergenceError&) {
        out.ok = false;
      }
    };

    if (config.threads > 1) {
      std::vector<std::future<void>> futures;
      futures.reserve(static_cast<std::size_t>(config.batch));
      for (int i = 0; i < config.batch; ++i)
        futures.push_back(std::async(std::launch::async, run_instance, i));
      for (auto& f : futures) f.get();
    } else {
      for (int i = 0; i < config.batch; ++i) run_instance(i);
    }

    ParamVector mean_grad = ParamVector::Zero(theta.size());
    double loss_sum = 0.0, n_sum = 0.0;
    int valid = 0;
    for (const auto& out : outcomes) {
      if (!out.ok) continue;
      mean_grad += out.grad;
      loss_sum += out.parts.loss;
      n_sum += static_cast<double>(out.parts.n_j);
      ++valid;
    }
    if (valid == 0) {
      result.aborted = true;
      break;
    }
    mean_grad /= static_cast<double>(valid);

    result.log.push_back({step, loss_sum / valid, n_sum / valid, mean_grad.norm()});
    if (config.adam_meta) {
      theta -= config.eta * adam_direction(meta_m, meta_v, mean_grad, step, 0.9, 0.999, 1e-8);
    } else {
      theta -= config.eta * mean_grad;
    }
  }
  result.theta_final = theta;
  return result;
}

std::vector<MetaLossParts> evaluate_instances(const DynamicsField& field,
                                              const ParamVector& theta,
                                              const MetaConfig& config,
                                              const ProblemSampler& sampler, int count,
                                              std::uint64_t seed_salt) {
  std::vector<MetaLossParts> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const MetaInstance instance =
        sampler(mix_seed(config.seed, seed_salt + static_cast<std::uint64_t>(i)));
    out.push_back(meta_loss(field, theta, instance.problem, instance.x0, config));
  }
  return out;
}

DecompositionReport verify_decomposition_identity(const DynamicsField& field,
                                                  const ParamVector& theta,
                                                  const Problem& problem, const State& x0,
                                                  int k_max, double h, double t0) {
  if (k_max < 1) throw ContractViolation("verify_decomposition_identity: k_max must be >= 1");
  const Trajectory traj = integrate_fixed(field, theta, x0, t0, h, k_max);

  std::vector<double> f_vals(traj.states.size());
  for (std::size_t k = 0; k < traj.states.size(); ++k)
    f_vals[k] = problem.value(traj.states[k]);
  for (std::size_t k = 0; k + 1 < f_vals.size(); ++k)
    if (!(f_vals[k + 1] < f_vals[k]))
      throw HypothesisViolatedError(
          "verify_decomposition_identity: objective is not strictly decreasing");

  DecompositionReport report;
  report.lhs = running_cost_adjoint(field, theta, traj, problem,
                                    Eigen::VectorXd::Ones(k_max + 1));

  // Forward route: each bracket is a one-step stopping-time sensitivity at
  // level f(x_k); the objective decrements weight them back together.
  const int d = field.state_dim();
  const int p = field.param_dim();
  Matrix u = Matrix::Zero(d, p);
  report.rhs = ParamVector::Zero(p);
  for (int k = 1; k <= k_max; ++k) {
    const State& x_prev = traj.states[static_cast<std::size_t>(k - 1)];
    const double t_prev = traj.time_at(k - 1);
    u = u - h * (field.jac_state(theta, x_prev, t_prev) * u +
                 field.jac_param(theta, x_prev, t_prev));
    const double decrement = f_vals[static_cast<std::size_t>(k)] -
                             f_vals[static_cast<std::size_t>(k - 1)];
    const ParamVector per_step =
        (u.transpose() * problem.gradient(traj.states[static_cast<std::size_t>(k)])) /
        decrement;
    report.rhs += decrement * per_step;
  }
  report.abs_diff = (report.lhs - report.rhs).norm();
  return report;
}

ParamVector expand_theta_tiled(const ParamVector& theta, int d_from, int d_to) {
  if (theta.size() != 10 * d_from)
    throw ContractViolation("expand_theta_tiled: theta length must be 10 * d_from");
  ParamVector out(10 * d_to);
  for (int i = 0; i < d_to; ++i) out.segment(10 * i, 10) = theta.segment(10 * (i % d_from), 10);
  return out;
}

}  // namespace stoptime
