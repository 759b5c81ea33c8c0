#include "ocpvars/query.hpp"

#include <algorithm>
#include <sstream>

#include "ocpvars/error.hpp"

namespace ocpvars {

std::size_t QueryToken::checked_index(long long index) {
  if (index < 0) {
    throw Error(ErrorCode::kIndexOutOfRange, "copy index " + std::to_string(index) + " is negative");
  }
  return static_cast<std::size_t>(index);
}

Query::Query(std::initializer_list<QueryToken> tokens) : tokens_(tokens) { validate(); }

Query::Query(std::vector<QueryToken> tokens) : tokens_(std::move(tokens)) { validate(); }

void Query::validate() const {
  if (tokens_.empty() || !tokens_.front().is_name()) {
    throw Error(ErrorCode::kInvalidName, "a query must start with a variable name");
  }
  for (const auto& token : tokens_) {
    if (token.is_name() && token.name().empty()) {
      throw Error(ErrorCode::kInvalidName, "empty name in query");
    }
  }
}

std::vector<std::string> Query::names() const {
  std::vector<std::string> out;
  for (const auto& token : tokens_) {
    if (token.is_name()) {
      out.push_back(token.name());
    }
  }
  return out;
}

std::vector<std::size_t> Query::indices() const {
  std::vector<std::size_t> out;
  for (const auto& token : tokens_) {
    if (!token.is_name()) {
      out.push_back(token.index());
    }
  }
  return out;
}

std::string Query::to_string() const {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i > 0) {
      out << ", ";
    }
    if (tokens_[i].is_name()) {
      out << tokens_[i].name();
    } else {
      out << tokens_[i].index();
    }
  }
  out << ')';
  return out.str();
}

std::string ResolvedVariable::chain_string() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (i > 0) {
      out << '/';
    }
    out << chain[i].name;
    if (chain[i].copy) {
      out << '[' << *chain[i].copy << ']';
    }
  }
  return out.str();
}

namespace {

// Structural path from just below `root` down to `target`, outermost first.
std::vector<std::size_t> path_to(const Hierarchy& h, std::size_t target) {
  std::vector<std::size_t> path;
  for (std::size_t id = target; id != h.root_id(); id = h.node(id).parent) {
    path.push_back(id);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::string path_string(const Hierarchy& h, std::size_t target) {
  std::string out;
  for (std::size_t id : path_to(h, target)) {
    if (!out.empty()) {
      out += '/';
    }
    out += h.node(id).name;
  }
  return out;
}

}  // namespace

ResolvedVariable resolve(const Hierarchy& root, const Query& query) {
  const std::vector<std::string> names = query.names();
  const std::vector<std::size_t> indices = query.indices();
  const std::size_t last = names.size() - 1;

  // Depth-first over structural nodes carrying the length of the greedy
  // subsequence match of the ancestors' names. Greedy matching is exact for
  // the subsequence test, so `matched >= last` at the parent plus a name hit
  // on the node itself means the node is a valid target.
  std::vector<std::size_t> targets;
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t child : root.node().children) {
    stack.emplace_back(child, 0);
  }
  while (!stack.empty()) {
    auto [id, matched] = stack.back();
    stack.pop_back();
    const HierarchyNode& node = root.node(id);
    if (matched >= last && node.name == names[last]) {
      targets.push_back(id);
    }
    const std::size_t next = matched < names.size() && node.name == names[matched] ? matched + 1 : matched;
    for (std::size_t child : node.children) {
      stack.emplace_back(child, next);
    }
  }

  if (targets.empty()) {
    throw Error(ErrorCode::kUnknownPath, "no variable matches " + query.to_string() + " under '" +
                                             root.name() + "'");
  }
  if (targets.size() > 1) {
    std::sort(targets.begin(), targets.end());
    std::string message = query.to_string() + " is ambiguous under '" + root.name() + "':";
    std::vector<std::string> candidates;
    for (std::size_t id : targets) {
      candidates.push_back(path_string(root, id));
      message += " " + candidates.back();
    }
    throw AmbiguityError(message, std::move(candidates));
  }

  const std::vector<std::size_t> path = path_to(root, targets.front());
  const auto needed = static_cast<std::size_t>(
      std::count_if(path.begin(), path.end(), [&](std::size_t id) { return root.node(id).replicated; }));
  if (needed != indices.size()) {
    throw Error(ErrorCode::kArity, query.to_string() + " supplies " + std::to_string(indices.size()) +
                                       " copy indices, chain " + path_string(root, targets.front()) +
                                       " needs " + std::to_string(needed));
  }

  ResolvedVariable out;
  out.chain.reserve(path.size());
  std::size_t next_index = 0;
  for (std::size_t id : path) {
    const HierarchyNode& node = root.node(id);
    std::size_t copy = 0;
    if (node.replicated) {
      copy = indices[next_index++];
      if (copy >= node.count) {
        throw Error(ErrorCode::kIndexOutOfRange, "copy " + std::to_string(copy) + " of '" + node.name +
                                                     "' (count " + std::to_string(node.count) + ")");
      }
      out.chain.push_back({node.name, copy});
    } else {
      out.chain.push_back({node.name, std::nullopt});
    }
    out.offset += node.offset + copy * node.size;
    out.entry += node.entry_offset + copy * node.entries_per_copy;
  }
  const HierarchyNode& target = root.node(targets.front());
  out.size = target.size;
  out.kind = target.kind;
  out.node = targets.front();
  return out;
}

std::vector<Query> enumerate_full_queries(const Hierarchy& root) {
  struct Frame {
    std::size_t node;
    std::size_t copy;
    std::vector<QueryToken> prefix;
  };
  std::vector<Query> out;
  std::vector<Frame> stack;
  const auto& top = root.node().children;
  for (auto it = top.rbegin(); it != top.rend(); ++it) {
    stack.push_back({*it, 0, {}});
  }
  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    const HierarchyNode& node = root.node(frame.node);
    std::vector<QueryToken> tokens = frame.prefix;
    tokens.emplace_back(node.name);
    if (node.replicated) {
      tokens.emplace_back(frame.copy);
    }
    // Next copy goes below the children so each copy's subtree comes first.
    if (frame.copy + 1 < node.count) {
      stack.push_back({frame.node, frame.copy + 1, frame.prefix});
    }
    for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) {
      stack.push_back({*it, 0, tokens});
    }
    out.emplace_back(std::move(tokens));
  }
  return out;
}

}  // namespace ocpvars
