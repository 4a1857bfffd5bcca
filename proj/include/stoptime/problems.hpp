#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "stoptime/types.hpp"

namespace stoptime {

// A differentiable objective. hessian_vec is optional; when absent,
// Hessian-vector products fall back to central differences of the gradient.
struct Problem {
  std::function<double(const State&)> value;
  std::function<State(const State&)> gradient;
  int dim = 0;
  std::optional<double> lipschitz_hint;
  std::function<State(const State&, const State&)> hessian_vec;
};

// H(x) v, exact when the problem carries one, otherwise central differences
// of the gradient with step 1e-6 * (1 + |x|).
State problem_hvp(const Problem& problem, const State& x, const State& v);

struct Dataset {
  Matrix features;        // n x d, rows are samples
  Eigen::VectorXd labels;  // entries in {-1, +1}
  long n() const { return features.rows(); }
  long d() const { return features.cols(); }
};

// Convex quadratic 0.5 x^T Q x with eigenvalues log-uniformly spaced in
// [1, cond]; rotated conjugates Q by a seeded random orthogonal matrix.
Problem make_quadratic(int d, double cond, bool rotated, std::uint64_t seed);

// Synthetic binary logistic regression: sparse gaussian ground truth,
// gaussian features, sign labels with independent flips. The mean
// log-loss over the n samples is the objective.
struct LogisticInstance {
  Problem problem;
  Dataset dataset;
};
LogisticInstance make_logistic(int d, long n, double sparsity, double flip_prob,
                               std::uint64_t seed);

// Squared-hinge SVM objective 0.5 sum_i max(0, 1 - y_i w.x_i)^2
// + 0.5 reg |w|^2 on the given dataset.
Problem smooth_svm(const Dataset& dataset, double reg);

// Largest Hessian eigenvalue magnitude at x0 by 50 power iterations on
// finite-difference Hessian-vector products; floors at 1e-12 when the
// Hessian action is zero.
double estimate_lipschitz(const Problem& problem, const State& x0);

}  // namespace stoptime
