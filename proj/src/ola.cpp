#include "stoptime/ola.hpp"

#include <cmath>

#include "stoptime/optimizers.hpp"

namespace stoptime {

OlaState ola_init(const Problem& problem, const State& x0, double alpha0) {
  OlaState state;
  state.m = State::Zero(problem.dim);
  state.v = State::Zero(problem.dim);
  state.alpha_curr = alpha0;
  state.x = x0;
  state.f_curr = problem.value(x0);
  state.x_ref = x0;
  state.f_ref = state.f_curr;
  return state;
}

OlaStepRecord ola_step(OlaState& state, const Problem& problem, const OlaHyper& hyper) {
  OlaStepRecord record;
  record.k = state.k;
  record.alpha_before = state.alpha_curr;

  const State g = problem.gradient(state.x);
  if (!all_finite(g))
    throw DivergenceError("ola_step: non-finite gradient at iteration " +
                              std::to_string(state.k),
                          state.k, {});
  const State dir =
      adam_direction(state.m, state.v, g, state.k, hyper.beta1, hyper.beta2, hyper.eps_stab);

  const double f_prev = state.f_curr;  // one objective evaluation per iteration
  const State x_next = state.x - state.alpha_curr * dir;
  const double f_next = problem.value(x_next);
  if (!std::isfinite(f_next))
    throw DivergenceError("ola_step: non-finite objective at iteration " +
                              std::to_string(state.k),
                          state.k, {});
  record.f_before = f_prev;
  record.f_after = f_next;

  const bool triggered =
      state.f_ref - f_next > hyper.eps_desc * static_cast<double>(state.n_updates);
  record.triggered = triggered;
  if (triggered) {
    const State g_next = problem.gradient(x_next);
    const double df_step = f_next - f_prev;
    if (df_step != 0.0) {
      const double s = g_next.dot(dir) / df_step;
      record.s_value = s;
      state.alpha_curr = std::max(state.alpha_curr - hyper.eta_adapt * s, 1e-12);
    }
    state.x_ref = x_next;
    state.f_ref = f_next;
    ++state.n_updates;
  }

  state.x = x_next;
  state.f_curr = f_next;
  ++state.k;
  record.alpha_after = state.alpha_curr;
  return record;
}

OlaRun ola_run(const Problem& problem, const State& x0, double alpha0, const OlaHyper& hyper,
               long max_iters, double grad_tol) {
  if (max_iters < 1) throw ContractViolation("ola_run: max_iters must be >= 1");

  OlaState state = ola_init(problem, x0, alpha0);
  OlaRun run;
  run.iterates.push_back(state.x);
  run.f_history.push_back(state.f_curr);
  run.alpha_history.push_back(state.alpha_curr);

  for (long k = 0; k < max_iters; ++k) {
    if (problem.gradient(state.x).norm() <= grad_tol) break;
    run.records.push_back(ola_step(state, problem, hyper));
    run.iterates.push_back(state.x);
    run.f_history.push_back(state.f_curr);
    run.alpha_history.push_back(state.alpha_curr);
  }
  return run;
}

}  // namespace stoptime
