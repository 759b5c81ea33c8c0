#pragma once

#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Core>

namespace ocpvars {

/// Forward-mode dual number: value plus one directional derivative.
/// Comparisons look at the value only, so branches in generic code follow
/// the primal evaluation.
struct Dual {
  double value = 0.0;
  double grad = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double v) : value(v) {}  // NOLINT: implicit promotion of constants
  constexpr Dual(double v, double g) : value(v), grad(g) {}

  Dual& operator+=(const Dual& o) {
    value += o.value;
    grad += o.grad;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    value -= o.value;
    grad -= o.grad;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    grad = grad * o.value + value * o.grad;
    value *= o.value;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    grad = (grad * o.value - value * o.grad) / (o.value * o.value);
    value /= o.value;
    return *this;
  }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator-(const Dual& a) { return {-a.value, -a.grad}; }
inline Dual operator+(const Dual& a) { return a; }

inline bool operator==(const Dual& a, const Dual& b) { return a.value == b.value; }
inline bool operator!=(const Dual& a, const Dual& b) { return a.value != b.value; }
inline bool operator<(const Dual& a, const Dual& b) { return a.value < b.value; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.value <= b.value; }
inline bool operator>(const Dual& a, const Dual& b) { return a.value > b.value; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.value >= b.value; }

inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.value);
  return {s, a.grad / (2.0 * s)};
}
inline Dual sin(const Dual& a) { return {std::sin(a.value), a.grad * std::cos(a.value)}; }
inline Dual cos(const Dual& a) { return {std::cos(a.value), -a.grad * std::sin(a.value)}; }
inline Dual exp(const Dual& a) {
  const double e = std::exp(a.value);
  return {e, a.grad * e};
}
inline Dual log(const Dual& a) { return {std::log(a.value), a.grad / a.value}; }
inline Dual abs(const Dual& a) { return a.value < 0 ? -a : a; }
inline Dual atan2(const Dual& y, const Dual& x) {
  const double d = x.value * x.value + y.value * y.value;
  return {std::atan2(y.value, x.value), (x.value * y.grad - y.value * x.grad) / d};
}
inline Dual pow(const Dual& a, double p) {
  const double v = std::pow(a.value, p);
  return {v, a.grad * p * std::pow(a.value, p - 1.0)};
}
inline bool isfinite(const Dual& a) { return std::isfinite(a.value) && std::isfinite(a.grad); }

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.value; }

inline std::ostream& operator<<(std::ostream& os, const Dual& a) {
  return os << a.value << "+" << a.grad << "e";
}

}  // namespace ocpvars

namespace Eigen {

template <>
struct NumTraits<ocpvars::Dual> : NumTraits<double> {
  using Real = ocpvars::Dual;
  using NonInteger = ocpvars::Dual;
  using Nested = ocpvars::Dual;
  using Literal = ocpvars::Dual;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 2,
    MulCost = 4,
  };
};

template <typename BinaryOp>
struct ScalarBinaryOpTraits<ocpvars::Dual, double, BinaryOp> {
  using ReturnType = ocpvars::Dual;
};
template <typename BinaryOp>
struct ScalarBinaryOpTraits<double, ocpvars::Dual, BinaryOp> {
  using ReturnType = ocpvars::Dual;
};

}  // namespace Eigen
