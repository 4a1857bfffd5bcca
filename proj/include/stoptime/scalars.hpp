#pragma once

#include <cmath>

namespace stoptime {

inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double softplus(double z) {
  if (z > 30.0) return z;
  return std::log1p(std::exp(z));
}

// log(1 + exp(-z)) without overflow for large |z|.
inline double log1p_exp_neg(double z) {
  if (z >= 0.0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

}  // namespace stoptime
