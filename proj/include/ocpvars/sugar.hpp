#pragma once

// Operator spelling of the variable algebra:
//
//   OCPVARS_VARIABLE(position, 3);
//   OCPVARS_VARIABLE(orientation, Q);
//   OCPVARS_VARIABLE(x) <<= (position, orientation);
//   OCPVARS_VARIABLE(X) <<= 31 * x;

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ocpvars/expr.hpp"

namespace ocpvars {

struct QuaternionKindTag {};
inline constexpr QuaternionKindTag Q{};

class BranchName {
 public:
  explicit BranchName(std::string name) : name_(std::move(name)) {}

  VariableExpr operator<<=(VariableExpr expr) const { return bind(name_, std::move(expr)); }

 private:
  std::string name_;
};

inline BranchName variable(std::string name) { return BranchName(std::move(name)); }

// Kind 1 is a scalar, any other positive integer a vector of that size.
inline VariableExpr variable(std::string name, std::size_t kind) {
  return leaf(std::move(name), kind == 1 ? Kind::scalar() : Kind::vector(kind));
}

inline VariableExpr variable(std::string name, QuaternionKindTag) {
  return leaf(std::move(name), Kind::quaternion());
}

inline VariableExpr operator,(VariableExpr lhs, VariableExpr rhs) {
  std::vector<VariableExpr> parts;
  if (lhs.form() == VariableExpr::Form::kConcat) {
    parts = lhs.operands();
  } else {
    parts.push_back(std::move(lhs));
  }
  parts.push_back(std::move(rhs));
  return concat(std::move(parts));
}

inline VariableExpr operator*(std::size_t count, VariableExpr expr) {
  return replicate(count, std::move(expr));
}

}  // namespace ocpvars

#define OCPVARS_VARIABLE(name, ...) \
  const auto name = ::ocpvars::variable(#name __VA_OPT__(, ) __VA_ARGS__)
