#include "ocpvars/expr.hpp"

#include "ocpvars/error.hpp"

namespace ocpvars {

namespace {

void require_name(const std::string& name) {
  if (name.empty()) {
    throw Error(ErrorCode::kInvalidName, "variable names must be nonempty");
  }
}

}  // namespace

VariableExpr leaf(std::string name, Kind kind) {
  require_name(name);
  if (!kind.is_leaf()) {
    throw Error(ErrorCode::kInvalidComposition, "leaf '" + name + "' cannot have branch kind");
  }
  return VariableExpr(std::make_shared<const VariableExpr::Node>(
      VariableExpr::Node{VariableExpr::Form::kLeaf, std::move(name), kind, 1, {}}));
}

VariableExpr concat(std::vector<VariableExpr> parts) {
  if (parts.empty()) {
    throw Error(ErrorCode::kInvalidComposition, "concatenation of zero variables");
  }
  return VariableExpr(std::make_shared<const VariableExpr::Node>(
      VariableExpr::Node{VariableExpr::Form::kConcat, {}, Kind::branch(), 1, std::move(parts)}));
}

VariableExpr replicate(std::size_t count, VariableExpr expr) {
  if (count == 0) {
    throw Error(ErrorCode::kInvalidComposition, "replication count must be positive");
  }
  if (!expr.is_named()) {
    throw Error(ErrorCode::kInvalidComposition,
                "only named variables (leaves or bound branches) can be replicated");
  }
  return VariableExpr(std::make_shared<const VariableExpr::Node>(
      VariableExpr::Node{VariableExpr::Form::kReplicate, {}, Kind::branch(), count, {std::move(expr)}}));
}

VariableExpr bind(std::string name, VariableExpr expr) {
  require_name(name);
  return VariableExpr(std::make_shared<const VariableExpr::Node>(
      VariableExpr::Node{VariableExpr::Form::kBound, std::move(name), Kind::branch(), 1, {std::move(expr)}}));
}

}  // namespace ocpvars
