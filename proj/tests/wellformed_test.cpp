#include <gtest/gtest.h>

#include "effrec/difftest.hpp"
#include "effrec/equivalence.hpp"
#include "effrec/wellformed.hpp"
#include "support.hpp"

namespace effrec {
namespace {

using testing::env_of;
using testing::eff;
using testing::ex;
using testing::rv;
using testing::ty;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::IoError;
}

// [a:Type, x:forall (b:Type). b]
Env example_env() {
  return Env{}.with_kind(rv("a"), Kind::Type).with_type("x", ty("forall (b:Type). b"));
}

TEST(KindOf, Examples) {
  EXPECT_EQ(kind_of(env_of({{"a", Kind::Type}}), ty("a -{pure}-> a")), Kind::Type);
  EXPECT_EQ(kind_of(env_of({{"e", Kind::Effect}}), eff("e | pure")), Kind::Effect);
  EXPECT_EQ(code_of([] { kind_of(Env{}, ty("forall (a:Type). b")); }), ErrorCode::UnboundVariable);
}

TEST(KindOf, EffectInTypePosition) {
  Env env = env_of({{"e", Kind::Effect}});
  EXPECT_EQ(code_of([&] { kind_of(env, ty("e -{pure}-> Int")); }), ErrorCode::KindMismatch);
  EXPECT_EQ(code_of([&] { kind_of(env, ty("Int -{Int}-> Int")); }), ErrorCode::KindMismatch);
}

TEST(KindOf, QuantifierBindsInBody) {
  EXPECT_EQ(kind_of(prelude(), ty("forall (e:Effect). Int -{e}-> Int")), Kind::Type);
  EXPECT_EQ(code_of([] { kind_of(prelude(), ty("forall (e:Effect). e")); }), ErrorCode::KindMismatch);
}

TEST(KindOf, UnifVarsUseTheRegistry) {
  Env env = prelude().with_unif_kinds({{testing::uv("X", 1), Kind::Type}, {testing::uv("X", 2), Kind::Effect}});
  EXPECT_EQ(kind_of(env, ty("?X1 -{?X2}-> ?X1")), Kind::Type);
  EXPECT_EQ(code_of([&] { kind_of(env, ty("?X2")); }), ErrorCode::KindMismatch);
  EXPECT_EQ(code_of([&] { kind_of(env, ty("?X3")); }), ErrorCode::UnboundVariable);
}

TEST(GUnique, Examples) {
  EXPECT_TRUE(g_unique(Env{}, Descriptor(ty("forall (a:Type). a -{pure}-> a"))).holds);

  auto r = g_unique(example_env(), Descriptor(ty("forall (a:Type). a -{pure}-> a")));
  ASSERT_FALSE(r.holds);
  EXPECT_EQ(r.offending->first, rv("a"));
  EXPECT_EQ(r.offending->second, UniquenessViolation::InEnvDomain);

  r = g_unique(example_env(), Descriptor(ty("(forall (b:Type). b) -{pure}-> (forall (b:Type). b)")));
  ASSERT_FALSE(r.holds);
  EXPECT_EQ(r.offending->first, rv("b"));
  EXPECT_EQ(r.offending->second, UniquenessViolation::BoundTwice);
}

TEST(LUnique, Examples) {
  EXPECT_TRUE(l_unique(example_env(), ty("(forall (b:Type). b) -{pure}-> (forall (b:Type). b)")).holds);

  auto r = l_unique(example_env(), ty("forall (c:Type). c -{pure}-> forall (c:Type). c"));
  ASSERT_FALSE(r.holds);
  EXPECT_EQ(r.offending->first, rv("c"));
  EXPECT_EQ(r.offending->second, UniquenessViolation::Shadows);

  EXPECT_TRUE(l_unique(example_env(), example_env()).holds);
}

TEST(LUnique, EnvironmentDomain) {
  auto r = l_unique(example_env(), ty("forall (a:Type). a"));
  ASSERT_FALSE(r.holds);
  EXPECT_EQ(r.offending->second, UniquenessViolation::InEnvDomain);
}

TEST(GUnique, ExpressionsCountTermAndTypeBinders) {
  EXPECT_TRUE(g_unique(prelude(), ex("tfn (a:Type) -> fn (x:a) -> x")).holds);
  EXPECT_FALSE(g_unique(prelude(), ex("tfn (a:Type) -> tfn (a:Type) -> fn (x:a) -> x")).holds);
  EXPECT_FALSE(g_unique(prelude(), ex("fn (x: forall (a:Type). a) -> tfn (a:Type) -> x")).holds);
}

TEST(RenameGlobally, InnerShadowingBinderIsRenamed) {
  FreshSupply fs;
  Expr out = rename_globally(ex("tfn (a:Type) -> tfn (a:Type) -> fn (x:a) -> x"), Env{}, fs);
  EXPECT_EQ(print(out), "tfn (%b1:Type) -> tfn (%b2:Type) -> fn (x:%b2) -> x");
}

TEST(RenameGlobally, NoTypeBindersMeansNoChange) {
  FreshSupply fs;
  Expr in = ex("fn x -> x");
  EXPECT_EQ(rename_globally(in, Env{}, fs), in);
}

TEST(RenameGlobally, EscapeProgramBecomesGloballyUnique) {
  FreshSupply fs;
  Expr out = rename_globally(ex("fn f -> tfn (a:Type) -> fn (x:a) -> f x"), prelude(), fs);
  EXPECT_TRUE(g_unique(prelude(), out).holds);
  EXPECT_EQ(print(out), "fn f -> tfn (a:Type) -> fn (x:a) -> f x");
}

TEST(RenameGlobally, AvoidsEnvironmentNames) {
  FreshSupply fs;
  Env env = prelude().with_kind(rv("a"), Kind::Type);
  Expr out = rename_globally(ex("tfn (a:Type) -> fn (x:a) -> x", env), env, fs);
  EXPECT_TRUE(g_unique(env, out).holds);
  EXPECT_EQ(print(out), "tfn (%b1:Type) -> fn (x:%b1) -> x");
}

TEST(Properties, RenameGloballyOnGeneratedTerms) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (std::uint64_t i = 0; i < 1000; ++i) {
      GenConfig cfg;
      cfg.seed = seed * 1000 + i;
      cfg.max_depth = 4;
      Expr e = gen_term(cfg);
      EXPECT_TRUE(free_unif_vars(e).empty());
      FreshSupply fs;
      Expr r = rename_globally(e, prelude(), fs);
      auto u = g_unique(prelude(), r);
      EXPECT_TRUE(u.holds) << print(e);
      EXPECT_TRUE(l_unique(prelude(), r).holds) << print(e);
      EXPECT_EQ(detail::expr_size(r), detail::expr_size(e));
    }
  }
}

TEST(Properties, GUniqueImpliesLUnique) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    testing::Gen g(seed);
    for (int i = 0; i < 1000; ++i) {
      Type t = g.type(4);
      if (g_unique(Env{}, Descriptor(t)).holds) {
        EXPECT_TRUE(l_unique(Env{}, t).holds) << print(t);
      }
    }
  }
}

// Capturing and capture-avoiding substitution coincide on locally unique
// types when the image is well-kinded in the outer environment.
TEST(Properties, CapturingMatchesAvoidingOnLocallyUniqueTypes) {
  std::size_t tested = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    testing::Gen g(seed);
    g.type_atoms = {rv("Int"), rv("al"), rv("t")};
    g.effect_atoms = {rv("e")};
    Env gamma = prelude().with_kind(rv("t"), Kind::Type).with_kind(rv("e"), Kind::Effect);
    for (int i = 0; i < 1000; ++i) {
      bool effect_var = g.coin(30);
      Ident alpha = rv(effect_var ? "e" : "al");
      Env inner = gamma.with_kind(rv("al"), Kind::Type);
      if (effect_var) inner = prelude().with_kind(rv("t"), Kind::Type).with_kind(rv("e"), Kind::Effect);
      Env outer = effect_var ? prelude().with_kind(rv("t"), Kind::Type) : gamma;

      g.binders = {rv("p"), rv("q"), rv("r")};
      Type t = g.type(3);
      if (!l_unique(inner, t).holds) continue;
      try {
        kind_of(inner, t);
      } catch (const Error&) {
        continue;
      }
      g.binders = {rv("m"), rv("n")};
      Descriptor d = effect_var ? Descriptor(g.effect(1)) : Descriptor(g.type(2));
      if (effect_var) d = subst_capturing(Subst::single(rv("e"), Effect::pure()), d.effect());
      try {
        if (kind_of(outer, d) != (effect_var ? Kind::Effect : Kind::Type)) continue;
      } catch (const Error&) {
        continue;
      }
      Subst s = Subst::single(alpha, d);
      FreshSupply fs(100);
      Type avoiding = subst_avoiding(s, fs, t);
      Type capturing = subst_capturing(s, t);
      EXPECT_TRUE(type_equiv(avoiding, capturing)) << print(t) << " with " << print(s);
      if (l_unique(outer, d).holds) {
        EXPECT_TRUE(l_unique(outer, avoiding).holds) << print(avoiding);
      }
      ++tested;
    }
  }
  EXPECT_GT(tested, 2000u);
}

}  // namespace
}  // namespace effrec
