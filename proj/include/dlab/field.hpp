#pragma once

// Parametric residual vector field f_theta(x) = K1 sigma(K2 x + b2) + b1.

#include <Eigen/Dense>

#include <string_view>

namespace dlab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Activation { tanh, swish, relu };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation a);

/// relu is only differentiable once (a.e.); the others are smooth.
constexpr bool has_second_derivative(Activation a) { return a != Activation::relu; }

double activate(Activation a, double z);
double activate_prime(Activation a, double z);

struct FieldShape {
  Index dim = 1;
  Index hidden = 1;

  Index param_count() const { return 2 * dim * hidden + dim + hidden; }
  Index k1_offset() const { return 0; }
  Index k2_offset() const { return dim * hidden; }
  Index b1_offset() const { return 2 * dim * hidden; }
  Index b2_offset() const { return 2 * dim * hidden + dim; }

  friend bool operator==(const FieldShape&, const FieldShape&) = default;
};

struct VectorFieldSpec {
  Activation activation = Activation::tanh;
  FieldShape shape;

  bool second_order() const { return has_second_derivative(activation); }
};

/// Flat parameter vector theta with structured views of (K1, K2, b1, b2).
/// K1 is dim x hidden, K2 is hidden x dim, both stored column-major.
class WeightVector {
 public:
  explicit WeightVector(FieldShape shape);
  WeightVector(FieldShape shape, VectorXd flat);

  static WeightVector from_parts(const MatrixXd& k1, const MatrixXd& k2, const VectorXd& b1,
                                 const VectorXd& b2);

  const FieldShape& shape() const { return shape_; }
  const VectorXd& flat() const { return flat_; }
  Index size() const { return flat_.size(); }
  double norm() const { return flat_.norm(); }

  Eigen::Map<const MatrixXd> k1() const;
  Eigen::Map<const MatrixXd> k2() const;
  Eigen::Map<const VectorXd> b1() const;
  Eigen::Map<const VectorXd> b2() const;

 private:
  FieldShape shape_;
  VectorXd flat_;
};

/// Evaluates f_theta and its derivatives with preallocated scratch space.
/// One instance per thread; the weights are copied in.
class FieldEvaluator {
 public:
  FieldEvaluator(Activation activation, const WeightVector& theta);

  Index dim() const { return shape_.dim; }
  Index param_count() const { return shape_.param_count(); }

  /// f(x) into out; caches the hidden pre-activation for the derivative calls below.
  void value(const VectorXd& x, VectorXd& out);

  /// d_x f at the point of the last value() call.
  void dx(MatrixXd& out) const;

  /// d_theta f at the point of the last value() call (dim x param_count).
  void dtheta(MatrixXd& out) const;

  /// out += scale * (d_x f * S + d_theta f), the sensitivity right-hand side,
  /// at the point of the last value() call.
  void accumulate_tangent(const MatrixXd& sens, double scale, MatrixXd& out);

 private:
  Activation act_;
  FieldShape shape_;
  MatrixXd k1_, k2_;
  VectorXd b1_, b2_;
  VectorXd x_, z_, s_, ds_;
  MatrixXd k1d_, jx_, tmp_;
};

VectorXd eval_field(Activation activation, const WeightVector& theta, const VectorXd& x);

struct FieldJacobians {
  MatrixXd dx;      // dim x dim
  MatrixXd dtheta;  // dim x param_count
};

FieldJacobians jacobians(Activation activation, const WeightVector& theta, const VectorXd& x);

}  // namespace dlab
