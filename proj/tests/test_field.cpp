#include "dlab/field.hpp"
#include "dlab/errors.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace dlab;

namespace {

WeightVector scalar_net(double k1, double k2, double b1, double b2) {
  return WeightVector::from_parts(MatrixXd::Constant(1, 1, k1), MatrixXd::Constant(1, 1, k2),
                                  VectorXd::Constant(1, b1), VectorXd::Constant(1, b2));
}

}  // namespace

TEST_CASE("zero outer layer gives the zero field") {
  std::mt19937_64 rng(3);
  const FieldShape shape{3, 5};
  MatrixXd k2 = MatrixXd::Random(5, 3);
  const auto theta = WeightVector::from_parts(MatrixXd::Zero(3, 5), k2, VectorXd::Zero(3), VectorXd::Random(5));
  for (int i = 0; i < 10; ++i) {
    const VectorXd x = oracle::gaussian(rng, 3, 2.0);
    CHECK(eval_field(Activation::tanh, theta, x).norm() == 0.0);
    CHECK(jacobians(Activation::tanh, theta, x).dx.norm() == 0.0);
  }
  CHECK(theta.shape() == shape);
}

TEST_CASE("scalar examples") {
  CHECK(eval_field(Activation::relu, scalar_net(1, 1, 0, 0), VectorXd::Constant(1, 1.0))[0] == 1.0);
  const auto theta = scalar_net(2.0, 1.0, -1.0, 0.5);
  const VectorXd x = VectorXd::Constant(1, 0.3);
  CHECK(eval_field(Activation::tanh, theta, x)[0] == doctest::Approx(2.0 * std::tanh(0.8) - 1.0).epsilon(1e-15));
  const double t = std::tanh(0.8);
  CHECK(jacobians(Activation::tanh, theta, x).dx(0, 0) == doctest::Approx(2.0 * (1.0 - t * t)).epsilon(1e-15));
}

TEST_CASE("relu derivative at the kink is zero") {
  CHECK(activate_prime(Activation::relu, 0.0) == 0.0);
  CHECK(activate_prime(Activation::relu, 1e-300) == 1.0);
}

TEST_CASE("analytic jacobians match central differences for smooth activations") {
  std::mt19937_64 rng(11);
  for (Activation act : {Activation::tanh, Activation::swish}) {
    for (int trial = 0; trial < 10; ++trial) {
      const FieldShape shape{2 + trial % 3, 3 + trial % 4};
      const WeightVector theta(shape, oracle::gaussian(rng, shape.param_count(), 0.7));
      const VectorXd x = oracle::gaussian(rng, shape.dim, 1.0);
      const FieldJacobians j = jacobians(act, theta, x);
      const MatrixXd fd_x =
          oracle::central_jacobian([&](const VectorXd& p) { return eval_field(act, theta, p); }, x);
      const MatrixXd fd_t = oracle::central_jacobian(
          [&](const VectorXd& p) { return eval_field(act, WeightVector(shape, p), x); }, theta.flat());
      CHECK(oracle::rel_err(j.dx, fd_x) < 1e-6);
      CHECK(oracle::rel_err(j.dtheta, fd_t) < 1e-6);
    }
  }
}

TEST_CASE("flat view round trip is bit exact") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const FieldShape shape{1 + trial % 4, 1 + trial % 7};
    const WeightVector theta(shape, oracle::gaussian(rng, shape.param_count(), 1.0));
    const auto back = WeightVector::from_parts(theta.k1(), theta.k2(), theta.b1(), theta.b2());
    CHECK((back.flat().array() == theta.flat().array()).all());
  }
}

TEST_CASE("dimension and finiteness errors") {
  const FieldShape shape{2, 3};
  CHECK_THROWS_AS(WeightVector(shape, VectorXd::Zero(4)), DimensionError);
  VectorXd bad = VectorXd::Zero(shape.param_count());
  bad[0] = std::nan("");
  CHECK_THROWS_AS(WeightVector(shape, bad), std::invalid_argument);
  CHECK_THROWS_AS(eval_field(Activation::tanh, WeightVector(shape), VectorXd::Zero(3)), DimensionError);
  CHECK_THROWS(parse_activation("sigmoid"));
  CHECK(parse_activation("swish") == Activation::swish);
  CHECK(has_second_derivative(Activation::tanh));
  CHECK_FALSE(has_second_derivative(Activation::relu));
}
