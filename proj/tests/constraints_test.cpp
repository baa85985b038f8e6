#include <gtest/gtest.h>

#include "effrec/constraints.hpp"
#include "effrec/equivalence.hpp"
#include "support.hpp"

namespace effrec {
namespace {

using testing::eff;
using testing::rv;
using testing::uv;

Model model_of(std::initializer_list<std::pair<const char*, const char*>> entries) {
  Model m;
  for (const auto& [x, e] : entries) m.bind(uv(x), eff(e));
  return m;
}

TEST(Models, Examples) {
  EXPECT_TRUE(models(Model{}, ConstraintSet{{eff("pure"), eff("pure")}}));
  EXPECT_TRUE(models(model_of({{"X", "a | b"}}), ConstraintSet{{eff("?X"), eff("b | a")}}));
  EXPECT_FALSE(models(Model{}, ConstraintSet{{eff("?X | a"), eff("pure")}}));
}

TEST(Models, UnassignedVariablesStayAsAtoms) {
  EXPECT_TRUE(models(Model{}, ConstraintSet{{eff("?X | pure"), eff("?X")}}));
  EXPECT_FALSE(models(Model{}, ConstraintSet{{eff("?X"), eff("pure")}}));
}

TEST(Model, ImagesMustBeGround) {
  Model m;
  EXPECT_THROW(m.bind(uv("X"), eff("?Y")), Error);
  EXPECT_THROW(m.bind(rv("a"), eff("pure")), Error);
}

TEST(ConstraintSet, DeduplicatesStructurally) {
  ConstraintSet k;
  k.insert({eff("pure"), eff("pure")});
  k.insert({eff("pure"), eff("pure")});
  EXPECT_EQ(k.size(), 1u);
  k.insert({eff("a | b"), eff("b")});
  k.insert({eff("b | a"), eff("b")});
  EXPECT_EQ(k.size(), 3u);
}

TEST(SolveBounded, Examples) {
  auto m = solve_bounded(ConstraintSet{{eff("?X"), eff("a | b")}, {eff("?X"), eff("b | a")}}, {rv("a"), rv("b")});
  ASSERT_TRUE(m);
  ASSERT_NE(m->find(uv("X")), nullptr);
  EXPECT_TRUE(effect_equiv(*m->find(uv("X")), eff("a | b")));

  EXPECT_FALSE(solve_bounded(ConstraintSet{{eff("?X | a"), eff("pure")}}, {rv("a")}));

  auto empty = solve_bounded(ConstraintSet{{eff("pure"), eff("pure")}}, {});
  ASSERT_TRUE(empty);
  EXPECT_TRUE(empty->empty());
}

TEST(SolveBounded, LexicographicallyFirstModel) {
  auto m = solve_bounded(ConstraintSet{{eff("?X | ?Y"), eff("a")}}, {rv("a")});
  ASSERT_TRUE(m);
  EXPECT_EQ(print(*m), "[?X := pure, ?Y := a]");
}

TEST(SolveBounded, Limits) {
  ConstraintSet k;
  for (int i = 1; i <= 9; ++i) k.insert({Effect::var(uv("X", i)), eff("pure")});
  EXPECT_THROW(solve_bounded(k, {}), Error);
  IdentSet big;
  for (int i = 0; i < 7; ++i) big.insert(rv("r", i + 1));
  try {
    solve_bounded(ConstraintSet{}, big);
    FAIL() << "expected BoundExceeded";
  } catch (const Error& e) {
    EXPECT_TRUE(e.is(ErrorCode::BoundExceeded));
  }
  EXPECT_THROW(solve_bounded(ConstraintSet{}, {uv("X")}), Error);
}

TEST(DefaultUniverse, RigidAtomsOfConstraintsAndEnvironment) {
  Env env = prelude().with_kind(rv("e"), Kind::Effect);
  IdentSet u = default_universe(ConstraintSet{{eff("?X | a"), eff("b")}}, env);
  EXPECT_EQ(u, (IdentSet{rv("a"), rv("b"), rv("e")}));
}

// Independent decision procedure: enumerate every assignment of subsets of
// the universe (as bitmasks) and evaluate both sides as atom sets.
bool brute_force_satisfiable(const ConstraintSet& k, const std::vector<Ident>& unifs,
                             const std::vector<Ident>& universe) {
  std::size_t choices = std::size_t{1} << universe.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < unifs.size(); ++i) total *= choices;
  for (std::size_t code = 0; code < total; ++code) {
    std::map<Ident, unsigned> value;
    std::size_t c = code;
    for (const auto& x : unifs) {
      value[x] = static_cast<unsigned>(c % choices);
      c /= choices;
    }
    auto eval = [&](const Effect& e) {
      unsigned mask = 0;
      std::function<void(const Effect&)> go = [&](const Effect& f) {
        if (const auto* v = f.as_var()) {
          if (v->id.is_unif()) {
            mask |= value[v->id];
          } else {
            auto it = std::find(universe.begin(), universe.end(), v->id);
            mask |= 1u << (universe.size() + static_cast<std::size_t>(it - universe.begin()));
            if (it != universe.end()) mask |= 1u << static_cast<std::size_t>(it - universe.begin());
          }
        } else if (const auto* j = f.as_join()) {
          go(j->lhs);
          go(j->rhs);
        }
      };
      go(e);
      // Rigid atoms were recorded in both halves; keep the universe half.
      return mask & ((1u << universe.size()) - 1);
    };
    bool ok = true;
    for (const auto& con : k) ok = ok && eval(con.lhs) == eval(con.rhs);
    if (ok) return true;
  }
  return false;
}

TEST(Properties, SolverAgreesWithBruteForce) {
  std::size_t sat = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    testing::Gen g(seed);
    g.effect_atoms = {rv("a"), rv("b"), uv("E"), uv("F")};
    for (int i = 0; i < 1000; ++i) {
      ConstraintSet k;
      std::size_t n = 1 + g.below(3);
      for (std::size_t j = 0; j < n; ++j) k.insert({g.effect(2), g.effect(2)});
      std::vector<Ident> universe{rv("a"), rv("b")};
      std::vector<Ident> unifs;
      for (const auto& id : free_unif_vars(k)) unifs.push_back(id);
      auto m = solve_bounded(k, {rv("a"), rv("b")});
      EXPECT_EQ(m.has_value(), brute_force_satisfiable(k, unifs, universe)) << print(k);
      if (m) {
        ++sat;
        EXPECT_TRUE(models(*m, k));
        EXPECT_EQ(m->size(), unifs.size());
      }
      // Adding constraints cannot repair a failing model.
      Model zero;
      for (const auto& id : unifs) zero.bind(id, eff("pure"));
      ConstraintSet more = k;
      more.insert({g.effect(2), g.effect(2)});
      if (!models(zero, k)) {
        EXPECT_FALSE(models(zero, more));
      }
    }
  }
  EXPECT_GT(sat, 1000u);
}

}  // namespace
}  // namespace effrec
