#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "ocpvars/error.hpp"
#include "ocpvars/fixtures.hpp"
#include "ocpvars/hierarchy.hpp"
#include "ocpvars/query.hpp"
#include "ocpvars/sugar.hpp"
#include "support/fixture_decls.hpp"
#include "support/resolver_oracle.hpp"

namespace ocpvars {
namespace {

using testing::branch_decl;
using testing::Decl;
using testing::leaf_decl;
using testing::oracle_size;
using testing::replicated;
using testing::locomotion_decl;
using testing::loco_manipulation_decl;

template <class F>
ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kIo;
}

TEST(RecursiveSumOracle, LocomotionAndLocoManipulationTotals) {
  EXPECT_EQ(oracle_size(locomotion_decl(30, 4)), 1123u);
  EXPECT_EQ(oracle_size(loco_manipulation_decl(10, 2, 4)), 1029u);
}

TEST(Leaf, KindsAndSizes) {
  EXPECT_EQ(build(leaf("position", Kind::vector(3))).size(), 3u);
  EXPECT_EQ(build(leaf("rotor_speed", Kind::scalar())).size(), 1u);
  EXPECT_EQ(build(leaf("orientation", Kind::quaternion())).size(), 4u);
  EXPECT_TRUE(build(leaf("orientation", Kind::quaternion())).is_leaf());
  EXPECT_EQ(error_of([] { leaf("", Kind::scalar()); }), ErrorCode::kInvalidName);
  EXPECT_EQ(error_of([] { leaf("v", Kind::branch()); }), ErrorCode::kInvalidComposition);
  EXPECT_EQ(error_of([] { Kind::vector(0); }), ErrorCode::kInvalidComposition);
}

TEST(Composition, ConcatReplicateBind) {
  const auto p = leaf("position", Kind::vector(3));
  const auto q = leaf("orientation", Kind::quaternion());
  EXPECT_EQ(build(concat({p})).size(), 3u);
  EXPECT_EQ(build(concat({p, q})).size(), 7u);
  EXPECT_EQ(error_of([] { concat({}); }), ErrorCode::kInvalidComposition);
  EXPECT_EQ(error_of([&] { replicate(0, p); }), ErrorCode::kInvalidComposition);
  EXPECT_EQ(error_of([&] { replicate(2, concat({p, q})); }), ErrorCode::kInvalidComposition);
  EXPECT_EQ(error_of([&] { bind("", p); }), ErrorCode::kInvalidName);

  const Hierarchy wrapped = build(bind("x", p));
  EXPECT_EQ(wrapped.kind(), Kind::branch());
  EXPECT_EQ(wrapped.size(), 3u);
  ASSERT_EQ(wrapped.child_count(), 1u);
  EXPECT_EQ(wrapped.child(0).name(), "position");
}

TEST(Composition, MultirotorSizesAndIndices) {
  const auto v = fixtures::multirotor(30, 4);
  EXPECT_EQ(v.x.size(), 13u);
  EXPECT_EQ(v.X.size(), 403u);
  EXPECT_EQ(v.u.size(), 4u);
  EXPECT_EQ(v.U.size(), 120u);
  EXPECT_EQ(v.decision_variables.size(), 523u);

  EXPECT_EQ(resolve(v.X, {"x", 0}).offset, 0u);
  EXPECT_EQ(resolve(v.X, {"x", 1}).offset, v.x.size());
  EXPECT_EQ(resolve(v.X, {"x", 1, "linear_velocity"}).offset, 20u);
  EXPECT_EQ(resolve(v.decision_variables, {"U"}).offset, v.X.size());
  EXPECT_EQ(resolve(v.U, {"u", 0}).offset, 0u);
  EXPECT_EQ(resolve(v.U, {"u", 1}).offset, 4u);
  EXPECT_EQ(resolve(v.U, {"u", 1, "rotor_speed", 0}).offset, 4u);
  EXPECT_EQ(resolve(v.U, {"u", 1, "rotor_speed", 1}).offset, 5u);
  EXPECT_EQ(resolve(v.U, {"rotor_speed", 1, 1}).offset, 5u);
}

TEST(Composition, UnnamedRootsHaveBuiltSizes) {
  const auto position = leaf("position", Kind::vector(3));
  const auto orientation = leaf("orientation", Kind::quaternion());
  const auto linear_velocity = leaf("linear_velocity", Kind::vector(3));
  const auto angular_velocity = leaf("angular_velocity", Kind::vector(3));
  const auto x = bind("x", concat({position, orientation, linear_velocity, angular_velocity}));
  EXPECT_EQ(build(concat({position, orientation, linear_velocity, angular_velocity})).size(), 13u);
  EXPECT_EQ(build(replicate(31, x)).size(), 403u);
  EXPECT_EQ(build(replicate(4, leaf("rotor_speed", Kind::scalar()))).size(), 4u);
  const auto X = bind("X", replicate(31, x));
  const auto U = bind("U", replicate(30, bind("u", replicate(4, leaf("rotor_speed", Kind::scalar())))));
  EXPECT_EQ(build(concat({X, U})).size(), 523u);
  EXPECT_EQ(build(concat({X, U})).name(), "");
}

TEST(Composition, BypassEquivalences) {
  const auto v = fixtures::multirotor(30, 4);
  EXPECT_EQ(resolve(v.X, {"x", 1, "linear_velocity"}), resolve(v.X, {"linear_velocity", 1}));
  EXPECT_EQ(resolve(v.U, {"u", 1, "rotor_speed", 0}), resolve(v.U, {"rotor_speed", 1, 0}));
  EXPECT_EQ(resolve(v.U, {"u", 1, "rotor_speed", 1}), resolve(v.U, {"rotor_speed", 1, 1}));
  EXPECT_EQ(resolve(v.decision_variables, {"X", "x", 1, "linear_velocity"}),
            resolve(v.decision_variables, {"linear_velocity", 1}));
  const auto full = resolve(v.decision_variables, {"U", "u", 2, "rotor_speed", 3});
  EXPECT_EQ(full, resolve(v.decision_variables, {"u", 2, "rotor_speed", 3}));
  EXPECT_EQ(full, resolve(v.decision_variables, {"rotor_speed", 2, 3}));
  EXPECT_EQ(full.chain_string(), "U/u[2]/rotor_speed[3]");
}

TEST(Composition, FixtureSizeTables) {
  const auto loco = fixtures::locomotion(30, 4);
  EXPECT_EQ(loco.leg_input.size(), 6u);
  EXPECT_EQ(loco.u.size(), 24u);
  EXPECT_EQ(loco.U.size(), 720u);
  EXPECT_EQ(loco.X.size(), 403u);
  EXPECT_EQ(loco.decision_variables.size(), oracle_size(locomotion_decl(30, 4)));

  const auto clm = fixtures::loco_manipulation(10, 2, 4);
  EXPECT_EQ(clm.x.size(), 39u);
  EXPECT_EQ(clm.X.size(), 429u);
  EXPECT_EQ(clm.robot_input.size(), 30u);
  EXPECT_EQ(clm.u.size(), 60u);
  EXPECT_EQ(clm.U.size(), 600u);
  EXPECT_EQ(clm.decision_variables.size(), oracle_size(loco_manipulation_decl(10, 2, 4)));

  for (std::size_t n : {1u, 7u, 30u}) {
    for (std::size_t legs : {2u, 4u, 6u}) {
      EXPECT_EQ(fixtures::locomotion(n, legs).decision_variables.size(), oracle_size(locomotion_decl(n, legs)));
      EXPECT_EQ(fixtures::loco_manipulation(n, 3, legs).decision_variables.size(),
                oracle_size(loco_manipulation_decl(n, 3, legs)));
    }
  }
}

TEST(Composition, MacroSpellingMatchesFunctions) {
  const auto plain = fixtures::multirotor(30, 4);
  const auto sugar = fixtures::multirotor_macros(30, 4);
  EXPECT_EQ(sugar.decision_variables.size(), plain.decision_variables.size());
  EXPECT_EQ(resolve(sugar.X, {"b_angular_velocity", 2}).offset, resolve(plain.X, {"angular_velocity", 2}).offset);
  // Only the renamed leaf differs.
  EXPECT_FALSE(sugar.decision_variables == plain.decision_variables);
  EXPECT_TRUE(sugar.u == plain.u);
}

TEST(Build, IdempotentAndDuplicateNames) {
  const auto expr = testing::to_expr(locomotion_decl(5, 4));
  EXPECT_TRUE(build(expr) == build(expr));

  const auto p = leaf("position", Kind::vector(3));
  EXPECT_EQ(error_of([&] { build(bind("x", concat({p, p}))); }), ErrorCode::kDuplicateName);
  // Same name in different subtrees is fine.
  EXPECT_NO_THROW(build(bind("root", concat({bind("a", p), bind("b", p)}))));
}

TEST(Build, DeepChainsDoNotRecurse) {
  VariableExpr e = leaf("v", Kind::vector(2));
  for (int depth = 0; depth < 500; ++depth) {
    e = bind("n" + std::to_string(depth), concat({e, leaf("s", Kind::scalar())}));
  }
  const Hierarchy h = build(e);
  EXPECT_EQ(h.size(), 502u);
  EXPECT_EQ(resolve(h, {"v"}).offset, 0u);
  EXPECT_EQ(resolve(h, {"n0", "s"}).offset, 2u);
  EXPECT_EQ(pretty_print(h).size() > 0, true);
}

TEST(Resolve, ErrorPaths) {
  const auto v = fixtures::multirotor(30, 4);
  EXPECT_EQ(error_of([&] { resolve(v.X, {"thrust"}); }), ErrorCode::kUnknownPath);
  EXPECT_EQ(error_of([&] { resolve(v.X, {"x", 31}); }), ErrorCode::kIndexOutOfRange);
  EXPECT_EQ(error_of([&] { resolve(v.U, {"rotor_speed", 1, 4}); }), ErrorCode::kIndexOutOfRange);
  EXPECT_EQ(error_of([&] { resolve(v.U, {"u"}); }), ErrorCode::kArity);
  EXPECT_EQ(error_of([&] { resolve(v.U, {"rotor_speed", 1}); }), ErrorCode::kArity);
  EXPECT_EQ(error_of([&] { resolve(v.U, {"u", 1, 2}); }), ErrorCode::kArity);
  EXPECT_EQ(error_of([&] { resolve(v.X, {"linear_velocity", "x", 1}); }), ErrorCode::kUnknownPath);
  EXPECT_EQ(error_of([&] { Query({1, "x"}); }), ErrorCode::kInvalidName);
  EXPECT_EQ(error_of([&] { Query({"x", -1}); }), ErrorCode::kIndexOutOfRange);
}

TEST(Resolve, SingleCopyArrayStillTakesAnIndex) {
  const auto x = bind("x", concat({leaf("p", Kind::vector(3)), leaf("q", Kind::quaternion())}));
  const Hierarchy X = build(bind("X", replicate(1, x)));
  EXPECT_EQ(X.size(), 7u);
  EXPECT_EQ(resolve(X, {"x", 0}).size, 7u);
  EXPECT_EQ(resolve(X, {"q", 0}).offset, 3u);
  EXPECT_EQ(error_of([&] { resolve(X, {"x"}); }), ErrorCode::kArity);
}

TEST(Resolve, AmbiguousBypassIsNeverSilent) {
  const auto clm = fixtures::loco_manipulation(10, 2, 4);
  try {
    resolve(clm.X, {"position", 0});
    FAIL() << "expected ambiguity";
  } catch (const AmbiguityError& e) {
    EXPECT_EQ(e.candidates().size(), 2u);
  }
  EXPECT_EQ(error_of([&] { resolve(clm.U, {"force", 0, 0, 0}); }), ErrorCode::kAmbiguous);
  // Longer queries disambiguate.
  EXPECT_EQ(resolve(clm.X, {"payload_state", "position", 3}).offset, 3u * 39u);
  EXPECT_EQ(resolve(clm.X, {"x", 3, "robot_state", 1, "position"}).offset, 3u * 39u + 26u);
  EXPECT_EQ(resolve(clm.U, {"arm_input", "force", 2, 1}).offset, 2u * 60u + 30u + 24u);
}

TEST(Resolve, RelativeToQueriedRoot) {
  const auto v = fixtures::multirotor(30, 4);
  const auto deep = resolve(v.decision_variables, {"U", "u", 2, "rotor_speed", 3});
  const auto prefix = resolve(v.decision_variables, {"U"});
  const auto rest = resolve(v.decision_variables.subtree(prefix.node), {"u", 2, "rotor_speed", 3});
  EXPECT_EQ(deep.offset, prefix.offset + rest.offset);
  EXPECT_LT(rest.offset, deep.offset);
  EXPECT_EQ(resolve(v.U, {"u", 2, "rotor_speed", 3}), rest);
}

TEST(Resolve, PrettyPrintGolden) {
  const auto u = bind("u", replicate(2, leaf("rotor_speed", Kind::scalar())));
  const auto h = build(bind("top", concat({leaf("q", Kind::quaternion()), u})));
  EXPECT_EQ(pretty_print(h),
            "top[branch,6]@0 ×1\n"
            "  q[quaternion,4]@0 ×1\n"
            "  u[branch,2]@4 ×1\n"
            "    rotor_speed[scalar,1]@0 ×2\n");
}

// Property: child copy ranges of every branch tile [0, size) exactly.
TEST(Properties, ChildRangesTileEveryBranch) {
  testing::RandomDeclGenerator gen(7);
  for (int t = 0; t < 200; ++t) {
    const Hierarchy h = build(testing::to_expr(gen.tree()));
    for (std::size_t id = 0; id < h.arena_size(); ++id) {
      const HierarchyNode& node = h.node(id);
      if (node.children.empty()) {
        ASSERT_EQ(node.size, node.kind.leaf_size());
        continue;
      }
      std::vector<std::pair<std::size_t, std::size_t>> ranges;
      for (std::size_t c : node.children) {
        const HierarchyNode& child = h.node(c);
        for (std::size_t i = 0; i < child.count; ++i) {
          ranges.emplace_back(child.offset + i * child.size, child.size);
        }
      }
      std::sort(ranges.begin(), ranges.end());
      std::size_t cursor = 0;
      for (auto [offset, size] : ranges) {
        ASSERT_EQ(offset, cursor);
        cursor += size;
      }
      ASSERT_EQ(cursor, node.size);
    }
  }
}

TEST(Properties, AgreesWithBruteForceResolver) {
  testing::RandomDeclGenerator gen(2024);
  std::size_t resolved = 0;
  for (int t = 0; t < 200; ++t) {
    const Decl decl = gen.tree();
    const Hierarchy h = build(testing::to_expr(decl));
    ASSERT_EQ(h.size(), oracle_size(decl));
    for (int k = 0; k < 40; ++k) {
      const auto q = testing::random_query(gen.rng(), decl);
      const std::string mismatch = testing::compare_with_oracle(decl, h, q);
      ASSERT_TRUE(mismatch.empty()) << mismatch << "\n" << pretty_print(h);
      resolved += 1;
    }
  }
  EXPECT_EQ(resolved, 8000u);
}

// Property: every full query that resolves agrees with each bypassed form
// of it that resolves, and repeated resolution is deterministic.
TEST(Properties, BypassedFormsAgreeWithFullChain) {
  testing::RandomDeclGenerator gen(99);
  for (int t = 0; t < 50; ++t) {
    const Hierarchy h = build(testing::to_expr(gen.tree()));
    for (const Query& full : enumerate_full_queries(h)) {
      ResolvedVariable expected;
      try {
        expected = resolve(h, full);
      } catch (const Error&) {
        continue;
      }
      ASSERT_EQ(resolve(h, full), expected);
      // Drop every leading name but the last one.
      std::vector<QueryToken> bypass;
      const auto names = full.names();
      bypass.emplace_back(names.back());
      for (std::size_t index : full.indices()) bypass.emplace_back(index);
      try {
        ASSERT_EQ(resolve(h, Query(bypass)), expected) << full.to_string();
      } catch (const Error& e) {
        ASSERT_EQ(e.code(), ErrorCode::kAmbiguous) << full.to_string();
      }
    }
  }
}

}  // namespace
}  // namespace ocpvars
