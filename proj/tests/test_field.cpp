#include <doctest.h>

#include <random>

#include "stoptime/field.hpp"
#include "stoptime/random.hpp"
#include "support.hpp"

using namespace stoptime;
using testsupport::ConstantField;
using testsupport::linear_field_1d;

TEST_CASE("vjp consistency accepts a field constant in the state") {
  const ConstantField field((State(3) << 1.0, -2.0, 0.5).finished());
  const ParamVector theta = ParamVector::Constant(1, 0.7);
  const State x = (State(3) << 0.3, 0.1, -0.9).finished();
  CHECK(check_vjp_consistency(field, theta, x, 0.0, 5, 1e-5));

  // Zero Jacobian in x: the state VJP is identically zero.
  const State lambda = (State(3) << 1.0, 2.0, 3.0).finished();
  CHECK(field.vjp_state(theta, x, 0.0, lambda).norm() == 0.0);
}

TEST_CASE("vjp consistency accepts the hand-differentiated linear field") {
  const auto field = linear_field_1d();
  const ParamVector theta = ParamVector::Constant(1, 1.3);
  const State x = State::Constant(1, -0.4);
  const State lambda = State::Constant(1, 2.0);

  CHECK(field.vjp_state(theta, x, 0.0, lambda)[0] == doctest::Approx(theta[0] * lambda[0]));
  CHECK(field.vjp_param(theta, x, 0.0, lambda)[0] == doctest::Approx(x[0] * lambda[0]));
  CHECK(check_vjp_consistency(field, theta, x, 0.0, 10, 1e-5));
}

TEST_CASE("vjp consistency rejects an injected parameter-vjp fault") {
  const auto inner = linear_field_1d();
  const testsupport::BrokenParamVjp field(inner);
  const ParamVector theta = ParamVector::Constant(1, 1.0);
  const State x = State::Constant(1, 0.5);
  CHECK_FALSE(check_vjp_consistency(field, theta, x, 0.0, 5, 1e-5));
}

TEST_CASE("vjp consistency validates its arguments") {
  const auto field = linear_field_1d();
  const ParamVector theta = ParamVector::Ones(1);
  const State x = State::Ones(1);
  CHECK_THROWS_AS(check_vjp_consistency(field, theta, x, 0.0, 0, 1e-5), ContractViolation);
  CHECK_THROWS_AS(check_vjp_consistency(field, theta, x, 0.0, 3, 0.0), ContractViolation);
}

TEST_CASE("vjps are linear in the co-state") {
  const auto field = linear_field_1d();
  const ParamVector theta = ParamVector::Constant(1, 0.8);
  const State x = State::Constant(1, 1.7);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const State l1 = gaussian_vector(1, rng);
    const State l2 = gaussian_vector(1, rng);
    const double a = gaussian_vector(1, rng)[0];
    const double b = gaussian_vector(1, rng)[0];
    const State mixed = field.vjp_state(theta, x, 0.0, a * l1 + b * l2);
    const State split = a * field.vjp_state(theta, x, 0.0, l1) +
                        b * field.vjp_state(theta, x, 0.0, l2);
    CHECK(testsupport::rel_diff(mixed, split) < 1e-10);
  }
}

TEST_CASE("field evaluation is deterministic") {
  const auto field = linear_field_1d();
  const ParamVector theta = ParamVector::Constant(1, 0.9);
  const State x = State::Constant(1, 0.123456789);
  const State first = field.eval(theta, x, 0.5);
  const State second = field.eval(theta, x, 0.5);
  CHECK(first[0] == second[0]);
}

TEST_CASE("default jacobians match the vjps row by row") {
  const auto field = linear_field_1d();
  const ParamVector theta = ParamVector::Constant(1, 1.1);
  const State x = State::Constant(1, 0.6);
  CHECK(field.jac_state(theta, x, 0.0)(0, 0) == doctest::Approx(1.1));
  CHECK(field.jac_param(theta, x, 0.0)(0, 0) == doctest::Approx(0.6));
}
