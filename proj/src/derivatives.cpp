#include "ocpvars/derivatives.hpp"

#include <cmath>

namespace ocpvars {

namespace {

void check_arity(const DiffFunction& f, std::size_t n) {
  if (n != f.inputs()) {
    throw Error(ErrorCode::kSizeMismatch, "function takes " + std::to_string(f.inputs()) +
                                              " inputs, got " + std::to_string(n));
  }
}

}  // namespace

Eigen::VectorXd DiffFunction::evaluate(std::span<const double> at) const {
  check_arity(*this, at.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(outputs_));
  plain_(at, std::span<double>(out.data(), outputs_));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out(i))) {
      throw Error(ErrorCode::kEvaluation, "non-finite output " + std::to_string(i));
    }
  }
  return out;
}

void DiffFunction::evaluate(std::span<const Dual> at, std::span<Dual> out) const {
  check_arity(*this, at.size());
  if (out.size() != outputs_) {
    throw Error(ErrorCode::kSizeMismatch, "output buffer of " + std::to_string(out.size()));
  }
  dual_(at, out);
}

Eigen::VectorXd directional_derivative(const DiffFunction& f, std::span<const double> at,
                                       std::span<const double> direction) {
  check_arity(f, at.size());
  check_arity(f, direction.size());
  std::vector<Dual> in(at.size());
  for (std::size_t i = 0; i < at.size(); ++i) in[i] = Dual(at[i], direction[i]);
  std::vector<Dual> out(f.outputs());
  f.evaluate(in, out);
  Eigen::VectorXd d(static_cast<Eigen::Index>(out.size()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!isfinite(out[i])) {
      throw Error(ErrorCode::kEvaluation, "non-finite output " + std::to_string(i));
    }
    d(static_cast<Eigen::Index>(i)) = out[i].grad;
  }
  return d;
}

Eigen::MatrixXd jacobian(const DiffFunction& f, std::span<const double> at) {
  check_arity(f, at.size());
  const auto rows = static_cast<Eigen::Index>(f.outputs());
  const auto cols = static_cast<Eigen::Index>(f.inputs());
  Eigen::MatrixXd jac(rows, cols);
  std::vector<Dual> in(at.size());
  std::vector<Dual> out(f.outputs());
  for (std::size_t i = 0; i < at.size(); ++i) in[i] = Dual(at[i], 0.0);
  for (Eigen::Index j = 0; j < cols; ++j) {
    in[static_cast<std::size_t>(j)].grad = 1.0;
    f.evaluate(in, out);
    in[static_cast<std::size_t>(j)].grad = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Dual& o = out[static_cast<std::size_t>(i)];
      if (!isfinite(o)) {
        throw Error(ErrorCode::kEvaluation, "non-finite output " + std::to_string(i));
      }
      jac(i, j) = o.grad;
    }
  }
  return jac;
}

Eigen::VectorXd gradient(const DiffFunction& f, std::span<const double> at) {
  if (f.outputs() != 1) {
    throw Error(ErrorCode::kSizeMismatch, "gradient needs a scalar-valued function");
  }
  return jacobian(f, at).row(0).transpose();
}

}  // namespace ocpvars
