#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "ocpvars/expr.hpp"
#include "ocpvars/kind.hpp"

namespace ocpvars {

inline constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

/// One structural node of a built hierarchy. Replicated children are stored
/// once; copy i of a node starts at `offset + i * size` inside its parent copy.
struct HierarchyNode {
  std::string name;
  Kind kind = Kind::branch();
  std::size_t size = 0;
  std::size_t count = 1;
  bool replicated = false;  // created by replicate(), consumes a copy index
  std::size_t offset = 0;   // first copy, relative to the parent copy
  std::size_t parent = kNoNode;
  std::size_t depth = 0;
  std::vector<std::size_t> children;

  // Pre-order enumeration of every node copy, used by the eager map table.
  std::size_t entries_per_copy = 1;
  std::size_t entry_offset = 0;  // first copy, relative to the parent copy entry
};

struct ChildDescriptor {
  std::string name;
  Kind kind;
  std::size_t size;
  std::size_t count;
  bool replicated;
  std::size_t offset;
};

/// Immutable, fully resolved variable tree. A Hierarchy is a handle to a
/// shared node arena plus a root node, so subtrees are Hierarchies too and
/// report offsets relative to their own root.
class Hierarchy {
 public:
  const std::string& name() const { return node().name; }
  Kind kind() const { return node().kind; }
  std::size_t size() const { return node().size; }
  bool is_leaf() const { return node().children.empty(); }

  std::vector<ChildDescriptor> children() const;
  std::size_t child_count() const { return node().children.size(); }
  Hierarchy child(std::size_t i) const;

  // Subtree rooted at an arena node reachable from this root.
  Hierarchy subtree(std::size_t node_id) const;

  std::size_t root_id() const noexcept { return root_; }
  const HierarchyNode& node(std::size_t id) const { return (*nodes_)[id]; }
  const HierarchyNode& node() const { return (*nodes_)[root_]; }
  std::size_t arena_size() const noexcept { return nodes_->size(); }

  // Number of node copies below and including this root (eager table length).
  std::size_t entry_count() const { return node().entries_per_copy; }

  // Structural equality: names, kinds, sizes, counts and offsets.
  friend bool operator==(const Hierarchy& a, const Hierarchy& b);

 private:
  Hierarchy(std::shared_ptr<const std::vector<HierarchyNode>> nodes, std::size_t root)
      : nodes_(std::move(nodes)), root_(root) {}

  friend Hierarchy build(const VariableExpr& expr);

  std::shared_ptr<const std::vector<HierarchyNode>> nodes_;
  std::size_t root_ = 0;
};

Hierarchy build(const VariableExpr& expr);

inline std::size_t size_of(const Hierarchy& h) { return h.size(); }
inline Kind kind_of(const Hierarchy& h) { return h.kind(); }
inline std::vector<ChildDescriptor> children_of(const Hierarchy& h) { return h.children(); }

/// Indented `name[kind,size]@offset ×count` listing, one node per line.
std::string pretty_print(const Hierarchy& h);

}  // namespace ocpvars
