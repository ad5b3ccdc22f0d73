#include "dlab/field.hpp"

#include "dlab/errors.hpp"

#include <cmath>
#include <string>

namespace dlab {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void require_dim(const FieldShape& shape, const VectorXd& x) {
  if (x.size() != shape.dim) {
    throw DimensionError("state has dimension " + std::to_string(x.size()) + ", field expects " +
                         std::to_string(shape.dim));
  }
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "swish") return Activation::swish;
  if (name == "relu") return Activation::relu;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::swish: return "swish";
    case Activation::relu: return "relu";
  }
  return "?";
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::tanh: return std::tanh(z);
    case Activation::swish: return z * sigmoid(z);
    case Activation::relu: return z > 0.0 ? z : 0.0;
  }
  return 0.0;
}

double activate_prime(Activation a, double z) {
  switch (a) {
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::swish: {
      const double s = sigmoid(z);
      return s + z * s * (1.0 - s);
    }
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;  // sigma'(0) = 0
  }
  return 0.0;
}

WeightVector::WeightVector(FieldShape shape)
    : shape_(shape), flat_(VectorXd::Zero(shape.param_count())) {
  if (shape.dim < 1 || shape.hidden < 1) throw DimensionError("field dims must be positive");
}

WeightVector::WeightVector(FieldShape shape, VectorXd flat) : shape_(shape), flat_(std::move(flat)) {
  if (shape.dim < 1 || shape.hidden < 1) throw DimensionError("field dims must be positive");
  if (flat_.size() != shape.param_count()) {
    throw DimensionError("weight vector has " + std::to_string(flat_.size()) + " entries, shape needs " +
                         std::to_string(shape.param_count()));
  }
  if (!flat_.allFinite()) throw std::invalid_argument("weight vector has non-finite entries");
}

WeightVector WeightVector::from_parts(const MatrixXd& k1, const MatrixXd& k2, const VectorXd& b1,
                                      const VectorXd& b2) {
  const FieldShape shape{k1.rows(), k1.cols()};
  if (k2.rows() != shape.hidden || k2.cols() != shape.dim || b1.size() != shape.dim ||
      b2.size() != shape.hidden) {
    throw DimensionError("inconsistent K1/K2/b1/b2 shapes");
  }
  VectorXd flat(shape.param_count());
  flat.segment(shape.k1_offset(), k1.size()) = k1.reshaped();
  flat.segment(shape.k2_offset(), k2.size()) = k2.reshaped();
  flat.segment(shape.b1_offset(), shape.dim) = b1;
  flat.segment(shape.b2_offset(), shape.hidden) = b2;
  return WeightVector(shape, std::move(flat));
}

Eigen::Map<const MatrixXd> WeightVector::k1() const {
  return {flat_.data() + shape_.k1_offset(), shape_.dim, shape_.hidden};
}
Eigen::Map<const MatrixXd> WeightVector::k2() const {
  return {flat_.data() + shape_.k2_offset(), shape_.hidden, shape_.dim};
}
Eigen::Map<const VectorXd> WeightVector::b1() const {
  return {flat_.data() + shape_.b1_offset(), shape_.dim};
}
Eigen::Map<const VectorXd> WeightVector::b2() const {
  return {flat_.data() + shape_.b2_offset(), shape_.hidden};
}

FieldEvaluator::FieldEvaluator(Activation activation, const WeightVector& theta)
    : act_(activation),
      shape_(theta.shape()),
      k1_(theta.k1()),
      k2_(theta.k2()),
      b1_(theta.b1()),
      b2_(theta.b2()),
      x_(shape_.dim),
      z_(shape_.hidden),
      s_(shape_.hidden),
      ds_(shape_.hidden),
      k1d_(shape_.dim, shape_.hidden),
      jx_(shape_.dim, shape_.dim),
      tmp_(shape_.dim, shape_.param_count()) {}

void FieldEvaluator::value(const VectorXd& x, VectorXd& out) {
  require_dim(shape_, x);
  x_ = x;
  z_.noalias() = k2_ * x;
  z_ += b2_;
  for (Index j = 0; j < shape_.hidden; ++j) {
    s_[j] = activate(act_, z_[j]);
    ds_[j] = activate_prime(act_, z_[j]);
  }
  out.resize(shape_.dim);
  out.noalias() = k1_ * s_;
  out += b1_;
  k1d_ = k1_ * ds_.asDiagonal();
}

void FieldEvaluator::dx(MatrixXd& out) const {
  out.resize(shape_.dim, shape_.dim);
  out.noalias() = k1d_ * k2_;
}

void FieldEvaluator::dtheta(MatrixXd& out) const {
  out.setZero(shape_.dim, shape_.param_count());
  const Index d = shape_.dim;
  const Index h = shape_.hidden;
  for (Index b = 0; b < h; ++b) {
    for (Index a = 0; a < d; ++a) out(a, shape_.k1_offset() + a + b * d) = s_[b];
    for (Index c = 0; c < d; ++c) out.col(shape_.k2_offset() + b + c * h) = k1d_.col(b) * x_[c];
    out.col(shape_.b2_offset() + b) = k1d_.col(b);
  }
  for (Index a = 0; a < d; ++a) out(a, shape_.b1_offset() + a) = 1.0;
}

void FieldEvaluator::accumulate_tangent(const MatrixXd& sens, double scale, MatrixXd& out) {
  const Index d = shape_.dim;
  const Index h = shape_.hidden;
  jx_.noalias() = k1d_ * k2_;
  tmp_.noalias() = jx_ * sens;
  out += scale * tmp_;
  for (Index b = 0; b < h; ++b) {
    for (Index a = 0; a < d; ++a) out(a, shape_.k1_offset() + a + b * d) += scale * s_[b];
    for (Index c = 0; c < d; ++c) {
      out.col(shape_.k2_offset() + b + c * h) += (scale * x_[c]) * k1d_.col(b);
    }
    out.col(shape_.b2_offset() + b) += scale * k1d_.col(b);
  }
  for (Index a = 0; a < d; ++a) out(a, shape_.b1_offset() + a) += scale;
}

VectorXd eval_field(Activation activation, const WeightVector& theta, const VectorXd& x) {
  FieldEvaluator ev(activation, theta);
  VectorXd out;
  ev.value(x, out);
  return out;
}

FieldJacobians jacobians(Activation activation, const WeightVector& theta, const VectorXd& x) {
  FieldEvaluator ev(activation, theta);
  VectorXd f;
  ev.value(x, f);
  FieldJacobians j;
  ev.dx(j.dx);
  ev.dtheta(j.dtheta);
  return j;
}

}  // namespace dlab
