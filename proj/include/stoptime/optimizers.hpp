#pragma once

#include <cmath>
#include <string>

#include "stoptime/problems.hpp"
#include "stoptime/types.hpp"

namespace stoptime {

enum class OptimizerTag { GD, HeavyBall, NAG, NAGSC, Adam, Adagrad, AdamHD };

OptimizerTag optimizer_tag_from_string(const std::string& name);
std::string to_string(OptimizerTag tag);

struct OptimizerHyper {
  double alpha = 1e-3;      // base learning rate
  double momentum = 0.9;    // heavy ball / strongly-convex Nesterov
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_stab = 1e-8;
  double hyper_rate = 1e-3; // Adam-HD learning-rate adaptation coefficient
};

// Bias-corrected Adam direction; updates the moment buffers in place.
// Shared between the Adam stepper and the online-adaptation loop so both
// produce bit-identical iterates for the same inputs.
inline State adam_direction(State& m, State& v, const State& g, long k, double beta1,
                            double beta2, double eps_stab) {
  m = beta1 * m + (1.0 - beta1) * g;
  v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(k + 1));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(k + 1));
  return ((m / bc1).array() / ((v / bc2).array().sqrt() + eps_stab)).matrix();
}

// One optimizer run's worth of state; step() advances the iterate it is fed.
class BaselineOptimizer {
 public:
  BaselineOptimizer(OptimizerTag tag, OptimizerHyper hyper, int dim);

  State step(const Problem& problem, const State& x);
  double learning_rate() const { return alpha_; }
  long iteration() const { return k_; }

 private:
  OptimizerTag tag_;
  OptimizerHyper hyper_;
  double alpha_;
  long k_ = 0;
  State m_, v_;       // Adam moments / Adagrad accumulator
  State x_prev_;      // momentum methods
  State y_;           // Nesterov lookahead point
  State dir_prev_;    // Adam-HD
  double nag_t_ = 1.0;
  bool started_ = false;
};

}  // namespace stoptime
