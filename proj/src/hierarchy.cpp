#include "ocpvars/hierarchy.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "ocpvars/error.hpp"

namespace ocpvars {

namespace {

struct Pending {
  VariableExpr expr;
  std::size_t parent;
  std::size_t count;
  bool replicated;
};

void check_sibling_names(const std::vector<HierarchyNode>& nodes) {
  std::unordered_set<std::string_view> seen;
  for (const auto& node : nodes) {
    seen.clear();
    for (std::size_t child : node.children) {
      if (!seen.insert(nodes[child].name).second) {
        throw Error(ErrorCode::kDuplicateName, "duplicate sibling name '" + nodes[child].name +
                                                   "' under '" + node.name + "'");
      }
    }
  }
}

}  // namespace

Hierarchy build(const VariableExpr& expr) {
  auto nodes = std::make_shared<std::vector<HierarchyNode>>();
  std::vector<Pending> stack;

  if (expr.is_named()) {
    stack.push_back({expr, kNoNode, 1, false});
  } else {
    nodes->push_back(HierarchyNode{});
    stack.push_back({expr, 0, 1, false});
  }

  // Pre-order creation: a node always gets a smaller id than its descendants.
  while (!stack.empty()) {
    Pending item = std::move(stack.back());
    stack.pop_back();
    switch (item.expr.form()) {
      case VariableExpr::Form::kConcat: {
        const auto& parts = item.expr.operands();
        for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
          stack.push_back({*it, item.parent, 1, false});
        }
        break;
      }
      case VariableExpr::Form::kReplicate:
        stack.push_back({item.expr.operands().front(), item.parent, item.expr.count(), true});
        break;
      case VariableExpr::Form::kLeaf:
      case VariableExpr::Form::kBound: {
        const std::size_t id = nodes->size();
        HierarchyNode node;
        node.name = item.expr.name();
        node.kind = item.expr.form() == VariableExpr::Form::kLeaf ? item.expr.kind() : Kind::branch();
        node.count = item.count;
        node.replicated = item.replicated;
        node.parent = item.parent;
        if (item.parent != kNoNode) {
          node.depth = (*nodes)[item.parent].depth + 1;
          (*nodes)[item.parent].children.push_back(id);
        }
        nodes->push_back(std::move(node));
        if (item.expr.form() == VariableExpr::Form::kBound) {
          stack.push_back({item.expr.operands().front(), id, 1, false});
        }
        break;
      }
    }
  }

  check_sibling_names(*nodes);

  // Children have larger ids, so a reverse sweep sees them first.
  for (std::size_t id = nodes->size(); id-- > 0;) {
    HierarchyNode& node = (*nodes)[id];
    if (node.children.empty()) {
      node.size = node.kind.leaf_size();
      node.entries_per_copy = 1;
      continue;
    }
    std::size_t offset = 0;
    std::size_t entry = 1;
    for (std::size_t child_id : node.children) {
      HierarchyNode& child = (*nodes)[child_id];
      child.offset = offset;
      child.entry_offset = entry;
      offset += child.count * child.size;
      entry += child.count * child.entries_per_copy;
    }
    node.size = offset;
    node.entries_per_copy = entry;
  }

  return Hierarchy(std::move(nodes), 0);
}

std::vector<ChildDescriptor> Hierarchy::children() const {
  std::vector<ChildDescriptor> out;
  out.reserve(node().children.size());
  for (std::size_t id : node().children) {
    const HierarchyNode& c = node(id);
    out.push_back({c.name, c.kind, c.size, c.count, c.replicated, c.offset});
  }
  return out;
}

Hierarchy Hierarchy::child(std::size_t i) const {
  if (i >= node().children.size()) {
    throw Error(ErrorCode::kIndexOutOfRange, "child " + std::to_string(i) + " of '" + name() + "'");
  }
  return Hierarchy(nodes_, node().children[i]);
}

Hierarchy Hierarchy::subtree(std::size_t node_id) const {
  for (std::size_t id = node_id; id != kNoNode; id = node(id).parent) {
    if (id == root_) {
      return Hierarchy(nodes_, node_id);
    }
  }
  throw Error(ErrorCode::kUnknownPath, "node is not below '" + name() + "'");
}

bool operator==(const Hierarchy& a, const Hierarchy& b) {
  std::vector<std::pair<std::size_t, std::size_t>> stack{{a.root_, b.root_}};
  bool is_root = true;
  while (!stack.empty()) {
    auto [ia, ib] = stack.back();
    stack.pop_back();
    const HierarchyNode& na = a.node(ia);
    const HierarchyNode& nb = b.node(ib);
    const bool same = na.name == nb.name && na.kind == nb.kind && na.size == nb.size &&
                      na.children.size() == nb.children.size() &&
                      (is_root || (na.count == nb.count && na.replicated == nb.replicated &&
                                   na.offset == nb.offset));
    if (!same) {
      return false;
    }
    is_root = false;
    for (std::size_t i = 0; i < na.children.size(); ++i) {
      stack.emplace_back(na.children[i], nb.children[i]);
    }
  }
  return true;
}

std::string pretty_print(const Hierarchy& h) {
  std::ostringstream out;
  const std::size_t base_depth = h.node().depth;
  std::vector<std::size_t> stack{h.root_id()};
  while (!stack.empty()) {
    const std::size_t id = stack.back();
    stack.pop_back();
    const HierarchyNode& n = h.node(id);
    const bool is_root = id == h.root_id();
    out << std::string(2 * (n.depth - base_depth), ' ') << n.name << '[' << n.kind.to_string() << ','
        << n.size << "]@" << (is_root ? 0 : n.offset) << " ×" << (is_root ? 1 : n.count) << '\n';
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
      stack.push_back(*it);
    }
  }
  return out.str();
}

}  // namespace ocpvars
