#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "ocpvars/error.hpp"
#include "ocpvars/hierarchy.hpp"
#include "ocpvars/query.hpp"

namespace ocpvars {

#ifndef OCPVARS_SCALAR
#define OCPVARS_SCALAR double
#endif

using scalar_t = OCPVARS_SCALAR;

enum class ViewKind { kScalar, kVector, kQuaternion, kSpan };

inline ViewKind view_kind_for(Kind kind) {
  switch (kind.tag()) {
    case Kind::Tag::kScalar: return ViewKind::kScalar;
    case Kind::Tag::kVector: return ViewKind::kVector;
    case Kind::Tag::kQuaternion: return ViewKind::kQuaternion;
    case Kind::Tag::kBranch: return ViewKind::kSpan;
  }
  return ViewKind::kSpan;
}

/// Aliasing window into a variable buffer. The accessor matching the view
/// kind hands out an Eigen map (or scalar reference) over the same memory;
/// nothing is copied.
template <class Scalar>
class View {
 public:
  using VectorMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
  using QuaternionMap = Eigen::Map<Eigen::Quaternion<Scalar>>;

  View() = default;
  View(Scalar* base, std::size_t offset, std::size_t size, Kind kind)
      : data_(base + offset), offset_(offset), size_(size), kind_(view_kind_for(kind)) {}

  ViewKind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }
  std::size_t size() const noexcept { return size_; }
  Scalar* data() const noexcept { return data_; }

  Scalar& scalar() const {
    require(ViewKind::kScalar, "scalar");
    return *data_;
  }

  VectorMap vector() const {
    if (kind_ != ViewKind::kVector && kind_ != ViewKind::kSpan) {
      throw Error(ErrorCode::kKindMismatch, "view is not a vector or span");
    }
    return span();
  }

  // Storage order (x, y, z, w), identity = (0, 0, 0, 1).
  QuaternionMap quaternion() const {
    require(ViewKind::kQuaternion, "quaternion");
    return QuaternionMap(data_);
  }

  // Whole window regardless of kind.
  VectorMap span() const { return VectorMap(data_, static_cast<Eigen::Index>(size_)); }

  void set_zero() const { std::fill(data_, data_ + size_, Scalar(0)); }

  void set_identity() const { quaternion().setIdentity(); }

  std::vector<Scalar> read() const { return std::vector<Scalar>(data_, data_ + size_); }

  void write(std::span<const Scalar> values) const {
    if (values.size() != size_) {
      throw Error(ErrorCode::kSizeMismatch, "writing " + std::to_string(values.size()) +
                                                " values into a view of " + std::to_string(size_));
    }
    std::copy(values.begin(), values.end(), data_);
  }

 private:
  void require(ViewKind expected, const char* what) const {
    if (kind_ != expected) {
      throw Error(ErrorCode::kKindMismatch, std::string("view is not a ") + what);
    }
  }

  Scalar* data_ = nullptr;
  std::size_t offset_ = 0;
  std::size_t size_ = 0;
  ViewKind kind_ = ViewKind::kSpan;
};

/// Position of a node copy in an eager map's view table.
struct EntryHandle {
  std::size_t entry = 0;
};

/// Owns a zero-initialised buffer and precomputes a view for every node copy
/// of the hierarchy at construction. After that, access by handle or by an
/// already resolved variable is a single table load.
template <class Scalar = scalar_t>
class EagerMap {
 public:
  explicit EagerMap(Hierarchy hierarchy)
      : hierarchy_(std::move(hierarchy)), buffer_(hierarchy_.size(), Scalar(0)) {
    build_table();
  }

  EagerMap(const EagerMap&) = delete;
  EagerMap& operator=(const EagerMap&) = delete;
  EagerMap(EagerMap&&) noexcept = default;
  EagerMap& operator=(EagerMap&&) noexcept = default;

  const Hierarchy& hierarchy() const noexcept { return hierarchy_; }

  // View over the whole buffer (the root).
  const View<Scalar>& root() const noexcept { return table_.front(); }

  const View<Scalar>& get(const Query& query) const { return table_[resolve(hierarchy_, query).entry]; }
  const View<Scalar>& get(const ResolvedVariable& resolved) const { return table_[resolved.entry]; }
  const View<Scalar>& operator[](EntryHandle handle) const noexcept { return table_[handle.entry]; }

  EntryHandle handle(const Query& query) const { return {resolve(hierarchy_, query).entry}; }

  std::span<Scalar> buffer() noexcept { return buffer_; }
  std::span<const Scalar> buffer() const noexcept { return buffer_; }
  Scalar* data() noexcept { return buffer_.data(); }
  std::size_t size() const noexcept { return buffer_.size(); }

  const std::vector<View<Scalar>>& table() const noexcept { return table_; }

 private:
  void build_table() {
    struct Frame {
      std::size_t node;
      std::size_t copy;
      std::size_t base;  // offset of the parent copy
    };
    Scalar* data = buffer_.data();
    table_.reserve(hierarchy_.entry_count());
    table_.emplace_back(data, 0, hierarchy_.size(), hierarchy_.kind());
    std::vector<Frame> stack;
    const auto& top = hierarchy_.node().children;
    for (auto it = top.rbegin(); it != top.rend(); ++it) {
      stack.push_back({*it, 0, 0});
    }
    while (!stack.empty()) {
      const Frame frame = stack.back();
      stack.pop_back();
      const HierarchyNode& node = hierarchy_.node(frame.node);
      const std::size_t offset = frame.base + node.offset + frame.copy * node.size;
      table_.emplace_back(data, offset, node.size, node.kind);
      if (frame.copy + 1 < node.count) {
        stack.push_back({frame.node, frame.copy + 1, frame.base});
      }
      for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) {
        stack.push_back({*it, 0, offset});
      }
    }
  }

  Hierarchy hierarchy_;
  std::vector<Scalar> buffer_;
  std::vector<View<Scalar>> table_;
};

/// Borrows an external buffer and builds views on demand from the resolved
/// (offset, size) pair.
template <class Scalar = scalar_t>
class LazyMap {
 public:
  LazyMap(Hierarchy hierarchy, std::span<Scalar> buffer)
      : hierarchy_(std::move(hierarchy)), buffer_(buffer) {
    if (buffer_.size() != hierarchy_.size()) {
      throw Error(ErrorCode::kSizeMismatch, "buffer of " + std::to_string(buffer_.size()) +
                                                " scalars for '" + hierarchy_.name() + "' of size " +
                                                std::to_string(hierarchy_.size()));
    }
  }

  const Hierarchy& hierarchy() const noexcept { return hierarchy_; }

  View<Scalar> root() const { return View<Scalar>(buffer_.data(), 0, buffer_.size(), hierarchy_.kind()); }

  View<Scalar> get(const Query& query) const { return get(resolve(hierarchy_, query)); }
  View<Scalar> get(const ResolvedVariable& resolved) const {
    return View<Scalar>(buffer_.data(), resolved.offset, resolved.size, resolved.kind);
  }

  std::span<Scalar> buffer() const noexcept { return buffer_; }
  Scalar* data() const noexcept { return buffer_.data(); }
  std::size_t size() const noexcept { return buffer_.size(); }

 private:
  Hierarchy hierarchy_;
  std::span<Scalar> buffer_;
};

template <class Scalar = scalar_t>
EagerMap<Scalar> make_eager_map(Hierarchy hierarchy) {
  return EagerMap<Scalar>(std::move(hierarchy));
}

template <class Scalar>
LazyMap<Scalar> make_lazy_map(Hierarchy hierarchy, std::span<Scalar> buffer) {
  return LazyMap<Scalar>(std::move(hierarchy), buffer);
}

}  // namespace ocpvars
