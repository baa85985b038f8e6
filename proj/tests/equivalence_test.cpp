#include <gtest/gtest.h>

#include <functional>
#include <map>

#include "effrec/equivalence.hpp"
#include "effrec/wellformed.hpp"
#include "support.hpp"

namespace effrec {
namespace {

using testing::eff;
using testing::rv;
using testing::ty;
using testing::uv;

TEST(EffectNormalize, Examples) {
  EXPECT_TRUE(effect_normalize(eff("pure | pure")).atoms.empty());
  EXPECT_EQ(effect_normalize(eff("a | a")).atoms, (IdentSet{rv("a")}));
  EXPECT_EQ(effect_normalize(eff("(a | b) | (b | pure)")).atoms, (IdentSet{rv("a"), rv("b")}));
}

TEST(EffectEquiv, Examples) {
  EXPECT_TRUE(effect_equiv(eff("a | b"), eff("b | a | b")));
  EXPECT_FALSE(effect_equiv(eff("pure"), eff("a")));
  EXPECT_TRUE(effect_equiv(eff("?X | pure"), eff("?X")));
}

TEST(TypeEquiv, Examples) {
  EXPECT_TRUE(type_equiv(ty("forall (a:Type). a -{pure}-> a"), ty("forall (b:Type). b -{pure}-> b")));
  EXPECT_FALSE(type_equiv(ty("forall (a:Type). a"), ty("forall (a:Type). b")));
  EXPECT_TRUE(type_equiv(ty("t1 -{a | b}-> t2"), ty("t1 -{b | a | b}-> t2")));
}

TEST(TypeEquiv, QuantifierKindsMustMatch) {
  EXPECT_FALSE(type_equiv(ty("forall (a:Type). t -{a}-> t"), ty("forall (a:Effect). t -{a}-> t")));
}

TEST(TypeEquiv, BinderPairingRespectsNesting) {
  EXPECT_TRUE(type_equiv(ty("forall (a:Type). forall (b:Type). a -{pure}-> b"),
                         ty("forall (b:Type). forall (a:Type). b -{pure}-> a")));
  EXPECT_FALSE(type_equiv(ty("forall (a:Type). forall (b:Type). a -{pure}-> b"),
                          ty("forall (a:Type). forall (b:Type). b -{pure}-> a")));
  EXPECT_FALSE(type_equiv(ty("forall (a:Type). a"), ty("forall (b:Type). a")));
}

TEST(TypeEquiv, BoundEffectAtomsCompareThroughPairing) {
  EXPECT_TRUE(type_equiv(ty("forall (e:Effect). t -{e | f}-> t"), ty("forall (g:Effect). t -{f | g | g}-> t")));
  EXPECT_FALSE(type_equiv(ty("forall (e:Effect). t -{e}-> t"), ty("forall (g:Effect). t -{e}-> t")));
}

// Independent interpretation: an effect denotes the set of atoms it
// mentions, computed as a bitmask over a fixed atom numbering.
unsigned denote(const Effect& e, std::map<Ident, unsigned>& index) {
  if (e.is_pure()) return 0;
  if (const auto* v = e.as_var()) {
    auto [it, fresh] = index.emplace(v->id, static_cast<unsigned>(index.size()));
    return 1u << it->second;
  }
  const auto* j = e.as_join();
  return denote(j->lhs, index) | denote(j->rhs, index);
}

TEST(Properties, Aci1Laws) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    testing::Gen g(seed);
    for (int i = 0; i < 1000; ++i) {
      Effect a = g.effect(3);
      Effect b = g.effect(3);
      Effect c = g.effect(3);
      EXPECT_TRUE(effect_equiv(Effect::join(a, b), Effect::join(b, a)));
      EXPECT_TRUE(effect_equiv(Effect::join(Effect::join(a, b), c), Effect::join(a, Effect::join(b, c))));
      EXPECT_TRUE(effect_equiv(Effect::join(a, a), a));
      EXPECT_TRUE(effect_equiv(Effect::join(a, Effect::pure()), a));
      EXPECT_TRUE(effect_equiv(Effect::join(Effect::pure(), a), a));
      EXPECT_TRUE(effect_equiv(effect_from_nf(effect_normalize(a)), a));

      std::map<Ident, unsigned> index;
      unsigned da = denote(a, index);
      unsigned db = denote(b, index);
      EXPECT_EQ(effect_equiv(a, b), da == db) << print(a) << " vs " << print(b);
      EXPECT_EQ(effect_normalize(a).atoms.size(), static_cast<std::size_t>(__builtin_popcount(da)));
    }
  }
}

TEST(Properties, EffectEquivIsACongruence) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    testing::Gen g(seed);
    for (int i = 0; i < 1000; ++i) {
      Effect a = g.effect(2);
      Effect b = g.effect(2);
      Effect c = g.effect(2);
      if (effect_equiv(a, b)) {
        EXPECT_TRUE(effect_equiv(Effect::join(a, c), Effect::join(b, c)));
        EXPECT_TRUE(effect_equiv(b, a));
      }
      if (effect_equiv(a, b) && effect_equiv(b, c)) {
        EXPECT_TRUE(effect_equiv(a, c));
      }
    }
  }
}

TEST(Properties, TypeEquivIsAnEquivalenceAndPreservesMonotypes) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    testing::Gen g(seed);
    g.binders = {rv("p"), rv("q")};
    for (int i = 0; i < 1000; ++i) {
      Type a = g.type(3);
      Type b = g.type(3);
      EXPECT_TRUE(type_equiv(a, a));
      EXPECT_EQ(type_equiv(a, b), type_equiv(b, a));
      if (type_equiv(a, b)) {
        EXPECT_EQ(monotype(a), monotype(b));
      }
      FreshSupply fs;
      Subst ground = Subst::single(rv("t"), ty("Int -{pure}-> Int"));
      if (type_equiv(a, b)) {
        EXPECT_TRUE(type_equiv(subst_avoiding(ground, fs, a), subst_avoiding(ground, fs, b)));
      }
    }
  }
}

TEST(Properties, AlphaRenamingPreservesEquivalence) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    testing::Gen g(seed);
    for (int i = 0; i < 1000; ++i) {
      Type a = g.type(3);
      if (!l_unique(Env{}, a).holds) continue;
      // Rename every binder to a fresh name with capture-avoiding substitution.
      std::function<Type(const Type&)> rename = [&](const Type& t) -> Type {
        if (const auto* f = t.as_forall()) {
          Ident fresh = rv("z", static_cast<std::uint64_t>(i) * 100 + binders(t).size());
          FreshSupply fs(1000);
          Type body = subst_avoiding(Subst::single(f->binder, var_descriptor(fresh, f->kind)), fs, f->body);
          return Type::forall(fresh, f->kind, rename(body));
        }
        if (const auto* ar = t.as_arrow()) return Type::arrow(rename(ar->arg), ar->eff, rename(ar->res));
        return t;
      };
      EXPECT_TRUE(type_equiv(a, rename(a))) << print(a) << " vs " << print(rename(a));
    }
  }
}

}  // namespace
}  // namespace effrec
