#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ocpvars/dual.hpp"
#include "ocpvars/error.hpp"

namespace ocpvars {

/// A vector function of one flat input buffer, evaluable on plain doubles
/// and on dual numbers. Build it from a generic callable:
///
///   DiffFunction f(3, 3, [](auto in, auto out) { for (...) out[i] = in[i] * in[i]; });
///
/// where `in` is a std::span<const T> and `out` a std::span<T>.
class DiffFunction {
 public:
  template <class F>
  DiffFunction(std::size_t inputs, std::size_t outputs, F f)
      : inputs_(inputs),
        outputs_(outputs),
        plain_([f](std::span<const double> in, std::span<double> out) { f(in, out); }),
        dual_([f](std::span<const Dual> in, std::span<Dual> out) { f(in, out); }) {}

  std::size_t inputs() const noexcept { return inputs_; }
  std::size_t outputs() const noexcept { return outputs_; }

  Eigen::VectorXd evaluate(std::span<const double> at) const;
  void evaluate(std::span<const Dual> at, std::span<Dual> out) const;

 private:
  std::size_t inputs_;
  std::size_t outputs_;
  std::function<void(std::span<const double>, std::span<double>)> plain_;
  std::function<void(std::span<const Dual>, std::span<Dual>)> dual_;
};

// Dense Jacobian, one forward pass per input column.
Eigen::MatrixXd jacobian(const DiffFunction& f, std::span<const double> at);

// Directional derivative J(at) * direction in a single pass.
Eigen::VectorXd directional_derivative(const DiffFunction& f, std::span<const double> at,
                                       std::span<const double> direction);

Eigen::VectorXd gradient(const DiffFunction& f, std::span<const double> at);

}  // namespace ocpvars
