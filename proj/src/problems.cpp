#include "stoptime/problems.hpp"

#include <cmath>
#include <memory>
#include <random>

#include "stoptime/random.hpp"
#include "stoptime/scalars.hpp"

namespace stoptime {

State problem_hvp(const Problem& problem, const State& x, const State& v) {
  if (problem.hessian_vec) return problem.hessian_vec(x, v);
  const double vnorm = v.norm();
  if (vnorm == 0.0) return State::Zero(x.size());
  const double step = 1e-6 * (1.0 + x.norm());
  const State dir = v / vnorm;
  return (vnorm / (2.0 * step)) *
         (problem.gradient(x + step * dir) - problem.gradient(x - step * dir));
}

Problem make_quadratic(int d, double cond, bool rotated, std::uint64_t seed) {
  if (d < 1) throw ContractViolation("make_quadratic: d must be >= 1");
  if (!(cond >= 1.0)) throw ContractViolation("make_quadratic: cond must be >= 1");

  Eigen::VectorXd eigs(d);
  if (d == 1) {
    eigs[0] = cond;
  } else {
    const double log_cond = std::log(cond);
    for (int i = 0; i < d; ++i)
      eigs[i] = std::exp(log_cond * static_cast<double>(i) / static_cast<double>(d - 1));
  }

  Matrix q;
  if (!rotated) {
    q = eigs.asDiagonal();
  } else {
    std::mt19937_64 rng(mix_seed(seed, 0x9d));
    Matrix g(d, d);
    for (int i = 0; i < d; ++i) g.row(i) = gaussian_vector(d, rng).transpose();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix orth = qr.householderQ();
    // Fix column signs so the factorization is unique given the seed.
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < d; ++i)
      if (r(i, i) < 0.0) orth.col(i) = -orth.col(i);
    q = orth * eigs.asDiagonal() * orth.transpose();
    q = 0.5 * (q + q.transpose());
  }

  auto qmat = std::make_shared<Matrix>(std::move(q));
  Problem problem;
  problem.dim = d;
  problem.lipschitz_hint = cond;
  problem.value = [qmat](const State& x) { return 0.5 * x.dot(*qmat * x); };
  problem.gradient = [qmat](const State& x) { return State(*qmat * x); };
  problem.hessian_vec = [qmat](const State&, const State& v) { return State(*qmat * v); };
  return problem;
}

LogisticInstance make_logistic(int d, long n, double sparsity, double flip_prob,
                               std::uint64_t seed) {
  if (d < 1 || n < 1) throw ContractViolation("make_logistic: d and n must be >= 1");
  if (sparsity < 0.0 || sparsity > 1.0)
    throw ContractViolation("make_logistic: sparsity must be in [0, 1]");
  if (flip_prob < 0.0 || flip_prob >= 0.5)
    throw ContractViolation("make_logistic: flip_prob must be in [0, 0.5)");

  std::mt19937_64 rng(mix_seed(seed, 0x10c));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  // Sparse ground truth: a random subset of ceil(sparsity * d) coordinates.
  const int nnz = static_cast<int>(std::ceil(sparsity * d));
  State truth = State::Zero(d);
  std::vector<int> order(d);
  for (int i = 0; i < d; ++i) order[i] = i;
  for (int i = 0; i < nnz; ++i) {
    std::uniform_int_distribution<int> pick(i, d - 1);
    std::swap(order[i], order[pick(rng)]);
    truth[order[i]] = normal(rng);
  }

  Dataset data;
  data.features.resize(n, d);
  data.labels.resize(n);
  for (long i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) data.features(i, j) = normal(rng);
  for (long i = 0; i < n; ++i) {
    double y = data.features.row(i).dot(truth) >= 0.0 ? 1.0 : -1.0;
    if (uniform(rng) < flip_prob) y = -y;
    data.labels[i] = y;
  }

  auto shared = std::make_shared<Dataset>(data);
  Problem problem;
  problem.dim = d;
  problem.value = [shared](const State& x) {
    const Eigen::VectorXd margins =
        shared->labels.cwiseProduct(shared->features * x);
    double acc = 0.0;
    for (long i = 0; i < margins.size(); ++i) acc += log1p_exp_neg(margins[i]);
    return acc / static_cast<double>(shared->n());
  };
  problem.gradient = [shared](const State& x) {
    const Eigen::VectorXd margins =
        shared->labels.cwiseProduct(shared->features * x);
    Eigen::VectorXd coeff(margins.size());
    for (long i = 0; i < margins.size(); ++i)
      coeff[i] = -shared->labels[i] * logistic(-margins[i]);
    return State(shared->features.transpose() * coeff / static_cast<double>(shared->n()));
  };
  return {std::move(problem), std::move(data)};
}

Problem smooth_svm(const Dataset& dataset, double reg) {
  if (!(reg >= 0.0)) throw ContractViolation("smooth_svm: reg must be >= 0");
  auto shared = std::make_shared<Dataset>(dataset);
  Problem problem;
  problem.dim = static_cast<int>(dataset.d());
  problem.value = [shared, reg](const State& w) {
    const Eigen::VectorXd slack =
        (Eigen::VectorXd::Ones(shared->n()) -
         shared->labels.cwiseProduct(shared->features * w))
            .cwiseMax(0.0);
    return 0.5 * slack.squaredNorm() + 0.5 * reg * w.squaredNorm();
  };
  problem.gradient = [shared, reg](const State& w) {
    const Eigen::VectorXd slack =
        (Eigen::VectorXd::Ones(shared->n()) -
         shared->labels.cwiseProduct(shared->features * w))
            .cwiseMax(0.0);
    return State(-shared->features.transpose() * shared->labels.cwiseProduct(slack) +
                 reg * w);
  };
  return problem;
}

double estimate_lipschitz(const Problem& problem, const State& x0) {
  const int d = problem.dim;
  std::mt19937_64 rng(mix_seed(0, 0x11b));
  State v = gaussian_vector(d, rng);
  v /= v.norm();

  const double step = 1e-6 * (1.0 + x0.norm());
  double eig = 0.0;
  for (int it = 0; it < 50; ++it) {
    const State hv =
        (problem.gradient(x0 + step * v) - problem.gradient(x0 - step * v)) / (2.0 * step);
    const double norm = hv.norm();
    if (norm < 1e-12) return 1e-12;
    eig = norm;
    v = hv / norm;
  }
  return eig;
}

}  // namespace stoptime
