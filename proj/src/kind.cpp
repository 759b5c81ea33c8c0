#include "ocpvars/kind.hpp"

#include "ocpvars/error.hpp"

namespace ocpvars {

Kind Kind::vector(std::size_t n) {
  if (n == 0) {
    throw Error(ErrorCode::kInvalidComposition, "vector kind needs at least one scalar");
  }
  return Kind(Tag::kVector, n);
}

std::string Kind::to_string() const {
  switch (tag_) {
    case Tag::kScalar: return "scalar";
    case Tag::kVector: return "vector" + std::to_string(size_);
    case Tag::kQuaternion: return "quaternion";
    case Tag::kBranch: return "branch";
  }
  return "?";
}

}  // namespace ocpvars
