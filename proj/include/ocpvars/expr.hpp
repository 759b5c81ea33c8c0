#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "ocpvars/kind.hpp"

namespace ocpvars {

/// Immutable declaration of a variable structure. Expressions are cheap to
/// copy (shared, immutable nodes) and are turned into a Hierarchy by build().
class VariableExpr {
 public:
  enum class Form { kLeaf, kConcat, kReplicate, kBound };

  Form form() const noexcept { return node_->form; }

  // Leaf and Bound only.
  const std::string& name() const noexcept { return node_->name; }
  // Leaf only.
  Kind kind() const noexcept { return node_->kind; }
  // Replicate only.
  std::size_t count() const noexcept { return node_->count; }
  // Concat: the parts; Replicate and Bound: a single wrapped expression.
  const std::vector<VariableExpr>& operands() const noexcept { return node_->operands; }

  bool is_named() const noexcept { return form() == Form::kLeaf || form() == Form::kBound; }

 private:
  struct Node {
    Form form;
    std::string name;
    Kind kind = Kind::branch();
    std::size_t count = 1;
    std::vector<VariableExpr> operands;
  };

  explicit VariableExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  friend VariableExpr leaf(std::string name, Kind kind);
  friend VariableExpr concat(std::vector<VariableExpr> parts);
  friend VariableExpr replicate(std::size_t count, VariableExpr expr);
  friend VariableExpr bind(std::string name, VariableExpr expr);

  std::shared_ptr<const Node> node_;
};

VariableExpr leaf(std::string name, Kind kind);
VariableExpr concat(std::vector<VariableExpr> parts);
VariableExpr replicate(std::size_t count, VariableExpr expr);
VariableExpr bind(std::string name, VariableExpr expr);

}  // namespace ocpvars
