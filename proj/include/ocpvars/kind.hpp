#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace ocpvars {

/// Mathematical kind of a variable. Leaves are scalars, fixed-size vectors or
/// unit quaternions; everything else is a branch whose size comes from its
/// children.
class Kind {
 public:
  enum class Tag : std::uint8_t { kScalar, kVector, kQuaternion, kBranch };

  static constexpr std::size_t kQuaternionSize = 4;

  static constexpr Kind scalar() noexcept { return Kind(Tag::kScalar, 1); }
  static Kind vector(std::size_t n);
  static constexpr Kind quaternion() noexcept { return Kind(Tag::kQuaternion, kQuaternionSize); }
  static constexpr Kind branch() noexcept { return Kind(Tag::kBranch, 0); }

  constexpr Tag tag() const noexcept { return tag_; }
  constexpr bool is_leaf() const noexcept { return tag_ != Tag::kBranch; }

  // Scalar count of a leaf; zero for branches (their size lives in the hierarchy).
  constexpr std::size_t leaf_size() const noexcept { return size_; }

  std::string to_string() const;

  friend constexpr bool operator==(const Kind&, const Kind&) = default;

 private:
  constexpr Kind(Tag tag, std::size_t size) noexcept : tag_(tag), size_(size) {}

  Tag tag_;
  std::size_t size_;
};

}  // namespace ocpvars
