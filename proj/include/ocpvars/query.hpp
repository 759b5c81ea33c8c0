#pragma once

#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ocpvars/hierarchy.hpp"
#include "ocpvars/kind.hpp"

namespace ocpvars {

/// A name or a copy index. Implicit conversions let queries be written as
/// `{"x", 1, "linear_velocity"}`.
class QueryToken {
 public:
  QueryToken(const char* name) : value_(std::string(name)) {}
  QueryToken(std::string name) : value_(std::move(name)) {}
  template <std::integral I>
  QueryToken(I index) : value_(checked_index(static_cast<long long>(index))) {}

  bool is_name() const noexcept { return std::holds_alternative<std::string>(value_); }
  const std::string& name() const { return std::get<std::string>(value_); }
  std::size_t index() const { return std::get<std::size_t>(value_); }

  friend bool operator==(const QueryToken&, const QueryToken&) = default;

 private:
  static std::size_t checked_index(long long index);

  std::variant<std::string, std::size_t> value_;
};

/// Interleaved names and copy indices. Names must appear in order along one
/// root-to-descendant chain; intermediate names may be skipped. Every
/// replicated node on the matched chain consumes one index, outermost first.
class Query {
 public:
  Query(std::initializer_list<QueryToken> tokens);
  explicit Query(std::vector<QueryToken> tokens);

  const std::vector<QueryToken>& tokens() const noexcept { return tokens_; }
  std::vector<std::string> names() const;
  std::vector<std::size_t> indices() const;

  std::string to_string() const;

 private:
  void validate() const;

  std::vector<QueryToken> tokens_;
};

struct ChainLink {
  std::string name;
  std::optional<std::size_t> copy;  // set iff the node is replicated

  friend bool operator==(const ChainLink&, const ChainLink&) = default;
};

/// Answer to a path query, relative to the queried root.
struct ResolvedVariable {
  std::size_t offset = 0;
  std::size_t size = 0;
  Kind kind = Kind::branch();
  std::vector<ChainLink> chain;

  // Arena node of the target and its position in the eager-map table. Both
  // are implied by `chain`, so they take no part in equality.
  std::size_t node = kNoNode;
  std::size_t entry = 0;

  std::string chain_string() const;

  friend bool operator==(const ResolvedVariable& a, const ResolvedVariable& b) {
    return a.offset == b.offset && a.size == b.size && a.kind == b.kind && a.chain == b.chain;
  }
};

ResolvedVariable resolve(const Hierarchy& root, const Query& query);

// Full (non-bypassed) queries for every node copy below `root`, in the same
// pre-order as the eager-map table.
std::vector<Query> enumerate_full_queries(const Hierarchy& root);

}  // namespace ocpvars
