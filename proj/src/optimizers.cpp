#include "stoptime/optimizers.hpp"

namespace stoptime {

OptimizerTag optimizer_tag_from_string(const std::string& name) {
  if (name == "gd") return OptimizerTag::GD;
  if (name == "hb") return OptimizerTag::HeavyBall;
  if (name == "nag") return OptimizerTag::NAG;
  if (name == "nag-sc") return OptimizerTag::NAGSC;
  if (name == "adam") return OptimizerTag::Adam;
  if (name == "adagrad") return OptimizerTag::Adagrad;
  if (name == "adam-hd") return OptimizerTag::AdamHD;
  throw ContractViolation("unknown optimizer tag: " + name);
}

std::string to_string(OptimizerTag tag) {
  switch (tag) {
    case OptimizerTag::GD: return "gd";
    case OptimizerTag::HeavyBall: return "hb";
    case OptimizerTag::NAG: return "nag";
    case OptimizerTag::NAGSC: return "nag-sc";
    case OptimizerTag::Adam: return "adam";
    case OptimizerTag::Adagrad: return "adagrad";
    case OptimizerTag::AdamHD: return "adam-hd";
  }
  throw ContractViolation("unknown optimizer tag");
}

BaselineOptimizer::BaselineOptimizer(OptimizerTag tag, OptimizerHyper hyper, int dim)
    : tag_(tag), hyper_(hyper), alpha_(hyper.alpha) {
  m_ = State::Zero(dim);
  v_ = State::Zero(dim);
  dir_prev_ = State::Zero(dim);
}

State BaselineOptimizer::step(const Problem& problem, const State& x) {
  State next;
  switch (tag_) {
    case OptimizerTag::GD: {
      next = x - alpha_ * problem.gradient(x);
      break;
    }
    case OptimizerTag::HeavyBall: {
      const State g = problem.gradient(x);
      next = started_ ? State(x - alpha_ * g + hyper_.momentum * (x - x_prev_))
                      : State(x - alpha_ * g);
      x_prev_ = x;
      break;
    }
    case OptimizerTag::NAG: {
      // Lookahead sequence with the classical t_k momentum schedule.
      if (!started_) y_ = x;
      next = y_ - alpha_ * problem.gradient(y_);
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * nag_t_ * nag_t_));
      const double mu = (nag_t_ - 1.0) / t_next;
      y_ = next + mu * (next - x);
      nag_t_ = t_next;
      break;
    }
    case OptimizerTag::NAGSC: {
      const State y = started_ ? State(x + hyper_.momentum * (x - x_prev_)) : x;
      next = y - alpha_ * problem.gradient(y);
      x_prev_ = x;
      break;
    }
    case OptimizerTag::Adam: {
      const State g = problem.gradient(x);
      next = x - alpha_ * adam_direction(m_, v_, g, k_, hyper_.beta1, hyper_.beta2,
                                         hyper_.eps_stab);
      break;
    }
    case OptimizerTag::Adagrad: {
      const State g = problem.gradient(x);
      v_ += g.cwiseProduct(g);
      next = x - alpha_ * (g.array() / (v_.array().sqrt() + hyper_.eps_stab)).matrix();
      break;
    }
    case OptimizerTag::AdamHD: {
      const State g = problem.gradient(x);
      // Hypergradient of f(x_k) in the learning rate is -g . dir_prev.
      if (started_) alpha_ += hyper_.hyper_rate * g.dot(dir_prev_);
      const State dir =
          adam_direction(m_, v_, g, k_, hyper_.beta1, hyper_.beta2, hyper_.eps_stab);
      next = x - alpha_ * dir;
      dir_prev_ = dir;
      break;
    }
  }
  started_ = true;
  ++k_;
  return next;
}

}  // namespace stoptime
