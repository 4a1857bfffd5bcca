#pragma once

#include <optional>
#include <vector>

#include "stoptime/problems.hpp"
#include "stoptime/types.hpp"

namespace stoptime {

struct OlaHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_stab = 1e-8;
  double eta_adapt = 1e-2;  // learning-rate adaptation magnitude
  double eps_desc = 1e-5;   // sufficient-decrease threshold per adaptation
};

struct OlaState {
  State m, v;          // Adam moment buffers
  long k = 0;
  double alpha_curr = 0.0;
  State x;
  double f_curr = 0.0;  // f(x), reused as the previous value next step
  State x_ref;
  double f_ref = 0.0;
  long n_updates = 0;
};

struct OlaStepRecord {
  long k = 0;
  double f_before = 0.0;
  double f_after = 0.0;
  double alpha_before = 0.0;
  double alpha_after = 0.0;
  bool triggered = false;
  std::optional<double> s_value;  // one-step sensitivity, when computed
};

OlaState ola_init(const Problem& problem, const State& x0, double alpha0);

// One Adam step followed by the adaptation test: when the decrease since the
// reference point exceeds eps_desc * n_updates, the one-step stopping-time
// sensitivity S = grad f(x_new) . dir / (f(x_new) - f(x_old)) updates the
// learning rate as alpha <- alpha - eta_adapt * S (floored at 1e-12).
OlaStepRecord ola_step(OlaState& state, const Problem& problem, const OlaHyper& hyper);

struct OlaRun {
  std::vector<State> iterates;
  std::vector<double> f_history;
  std::vector<double> alpha_history;
  std::vector<OlaStepRecord> records;
};

// Runs until |grad f| <= grad_tol or max_iters. Histories include the
// initial point, so all three have records.size() + 1 entries.
OlaRun ola_run(const Problem& problem, const State& x0, double alpha0, const OlaHyper& hyper,
               long max_iters = 1000, double grad_tol = 1e-4);

}  // namespace stoptime
