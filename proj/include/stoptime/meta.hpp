#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "stoptime/field.hpp"
#include "stoptime/problems.hpp"
#include "stoptime/types.hpp"

namespace stoptime {

enum class MetaStopKind {
  GradNormSq,        // |grad f(x)|^2 <= epsilon
  ProgressDecrease,  // f(x_{k-1}) - f(x_k) <= epsilon, on the doubled state
};

struct MetaConfig {
  int k_max = 100;          // fixed horizon for the weighted objective sum
  Eigen::VectorXd weights;  // k_max + 1 entries; empty means uniform 1/k_max
  double lambda = 1.0;      // stopping-time penalty weight
  double epsilon = 1e-5;    // stopping target
  double eta = 1e-2;        // meta learning rate
  int batch = 8;
  int steps = 200;
  std::uint64_t seed = 0;
  double h = 1.0;
  double t0 = 0.0;
  long n_max = 1000;  // cap on iterations of the inner stopping run
  MetaStopKind criterion = MetaStopKind::ProgressDecrease;
  bool adam_meta = false;  // Adam instead of a plain gradient step on theta
  int threads = 1;
};

Eigen::VectorXd resolve_meta_weights(const MetaConfig& config);

struct MetaLossParts {
  double loss = 0.0;
  double weighted_sum = 0.0;
  long n_j = 0;
  bool stopped = false;
  bool diverged = false;
};

// Weighted objective sum over the fixed horizon plus lambda times the
// stopping iteration count (n_max when the run never stops). Divergence
// yields an infinite-loss sentinel instead of an exception.
MetaLossParts meta_loss(const DynamicsField& field, const ParamVector& theta,
                        const Problem& problem, const State& x0, const MetaConfig& config);

// Backward sweep for d/dtheta sum_k w_k f(x_k) over a fixed-horizon
// trajectory: the co-state picks up w_k grad f(x_k) as it passes step k.
ParamVector running_cost_adjoint(const DynamicsField& field, const ParamVector& theta,
                                 const Trajectory& traj, const Problem& problem,
                                 const Eigen::VectorXd& weights);

// Gradient of meta_loss in theta: running-cost sweep plus lambda times the
// stopping-time sensitivity (zero when the run never stopped).
ParamVector meta_gradient(const DynamicsField& field, const ParamVector& theta,
                          const Problem& problem, const State& x0, const MetaConfig& config);

struct MetaInstance {
  Problem problem;
  State x0;
};
using ProblemSampler = std::function<MetaInstance(std::uint64_t seed)>;

struct MetaTrainRecord {
  int step = 0;
  double mean_loss = 0.0;
  double mean_n = 0.0;
  double grad_norm = 0.0;
};

struct MetaTrainResult {
  ParamVector theta_final;
  std::vector<MetaTrainRecord> log;
  bool aborted = false;  // a whole batch diverged
};

MetaTrainResult meta_train(const DynamicsField& field, const ParamVector& theta0,
                           const MetaConfig& config, const ProblemSampler& sampler);

// Stopping-run metrics of `count` freshly sampled instances at fixed theta.
std::vector<MetaLossParts> evaluate_instances(const DynamicsField& field,
                                              const ParamVector& theta,
                                              const MetaConfig& config,
                                              const ProblemSampler& sampler, int count,
                                              std::uint64_t seed_salt);

// Checks that the summed-objective gradient from the backward sweep equals
// its reassembly from per-step forward sensitivities weighted by the
// per-step objective decrements. Requires strictly decreasing f(x_k).
struct DecompositionReport {
  ParamVector lhs;
  ParamVector rhs;
  double abs_diff = 0.0;
};
DecompositionReport verify_decomposition_identity(const DynamicsField& field,
                                                  const ParamVector& theta,
                                                  const Problem& problem, const State& x0,
                                                  int k_max, double h, double t0 = 0.0);

// Maps per-coordinate parameter blocks onto a larger problem by tiling.
ParamVector expand_theta_tiled(const ParamVector& theta, int d_from, int d_to);

}  // namespace stoptime
