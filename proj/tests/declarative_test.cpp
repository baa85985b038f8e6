#include <gtest/gtest.h>

#include "effrec/declarative.hpp"
#include "effrec/difftest.hpp"
#include "effrec/equivalence.hpp"
#include "support.hpp"

namespace effrec {
namespace {

using testing::eff;
using testing::ex;
using testing::rv;
using testing::ty;

ErrorCode check_error(const Env& env, const Expr& e, CheckOptions opts = {}) {
  try {
    check_declarative(env, e, opts);
  } catch (const Error& err) {
    return err.code();
  }
  ADD_FAILURE() << "expected " << print(e) << " to be rejected";
  return ErrorCode::IoError;
}

void expect_types(const TypingResult& r, std::string_view t, std::string_view e) {
  EXPECT_TRUE(type_equiv(r.ty, ty(t))) << print(r.ty);
  EXPECT_TRUE(effect_equiv(r.eff, eff(e))) << print(r.eff);
}

TEST(CheckDeclarative, Identity) {
  TypingResult r = check_declarative(prelude(), ex("fn (x:Int) -> x"));
  EXPECT_EQ(r.ty, ty("Int -{pure}-> Int"));
  EXPECT_EQ(r.eff, Effect::pure());
}

TEST(CheckDeclarative, PolymorphicIdentity) {
  TypingResult r = check_declarative(Env{}, ex("tfn (a:Type) -> fn (x:a) -> x", Env{}));
  EXPECT_EQ(r.ty, ty("forall (a:Type). a -{pure}-> a"));
  EXPECT_EQ(r.eff, Effect::pure());
}

TEST(CheckDeclarative, ElaboratedPolymorphicInstantiation) {
  Expr e = ex(
      "(tfn (a:Type) -> fn (x: forall (b:Type). b -{pure}-> b) -> x)"
      "[forall (b:Type). b -{pure}-> b] (tfn (c:Type) -> fn (y:c) -> y)");
  expect_types(check_declarative(prelude(), e), "forall (b:Type). b -{pure}-> b", "pure");
}

TEST(CheckDeclarative, ApplicationJoinsLatentEffect) {
  Expr e = ex("tfn (e:Effect) -> fn (k: Int -{e}-> Int) -> k 0");
  TypingResult r = check_declarative(prelude(), e);
  EXPECT_EQ(r.ty, ty("forall (e:Effect). (Int -{e}-> Int) -{pure | pure | e}-> Int"));
}

TEST(CheckDeclarative, InstantiationAvoidsCapture) {
  Env env = prelude().with_kind(rv("b"), Kind::Type);
  Expr e = ex("(tfn (a:Type) -> tfn (b:Type) -> fn (x:a) -> fn (y:b) -> x)[b]", env);
  TypingResult r = check_declarative(env, e);
  EXPECT_TRUE(type_equiv(r.ty, ty("forall (z:Type). b -{pure}-> z -{pure}-> b"))) << print(r.ty);
}

TEST(CheckDeclarative, Errors) {
  EXPECT_EQ(check_error(prelude(), ex("1 2")), ErrorCode::NotArrow);
  EXPECT_EQ(check_error(prelude(), ex("1 [Int]")), ErrorCode::NotForall);
  EXPECT_EQ(check_error(prelude(), ex("(fn (x:Int) -> x) (fn (y:Int) -> y)")), ErrorCode::ArgMismatch);
  EXPECT_EQ(check_error(prelude(), ex("fn x -> x")), ErrorCode::UnannotatedLambda);
  EXPECT_EQ(check_error(prelude(), ex("z")), ErrorCode::UnboundVariable);
  EXPECT_EQ(check_error(prelude(), ex("(tfn (e:Effect) -> 1)[Int]")), ErrorCode::KindMismatch);
}

TEST(CheckDeclarative, TypeAbstractionMustBePure) {
  Expr e = ex("fn (k: Int -{e}-> Int) -> tfn (a:Type) -> k 1", prelude().with_kind(rv("e"), Kind::Effect));
  Env env = prelude().with_kind(rv("e"), Kind::Effect);
  EXPECT_EQ(check_error(env, e), ErrorCode::ImpureTypeAbstraction);
}

TEST(CheckDeclarative, WellFormednessPremiseIsToggleable) {
  Expr e = Expr::lam("x", ty("nowhere"), Expr::var("x"));
  EXPECT_EQ(check_error(prelude(), e), ErrorCode::UnboundVariable);
  TypingResult r = check_declarative(prelude(), e, CheckOptions{false});
  EXPECT_EQ(r.ty, ty("nowhere -{pure}-> nowhere"));
}

TEST(CheckDeclarative, InvariantUnderAlphaRenaming) {
  TypingResult a = check_declarative(prelude(), ex("tfn (a:Type) -> fn (x:a) -> x"));
  TypingResult b = check_declarative(prelude(), ex("tfn (q:Type) -> fn (x:q) -> x"));
  EXPECT_TRUE(type_equiv(a.ty, b.ty));
}

TEST(Sinfer, InstantiatesWithCapturingSubstitution) {
  TypingResult r = sinfer(prelude(), ex("(tfn (a:Type) -> fn (x:a) -> x)[Int]"));
  EXPECT_EQ(r.ty, ty("Int -{pure}-> Int"));
  EXPECT_EQ(r.eff, Effect::pure());
}

TEST(Sinfer, RequiresGlobalUniqueness) {
  try {
    sinfer(prelude(), ex("tfn (a:Type) -> tfn (a:Type) -> 1"));
    FAIL() << "expected a precondition violation";
  } catch (const Error& e) {
    EXPECT_TRUE(e.is(ErrorCode::PreconditionViolated));
  }
}

// Results are well-kinded and every bound variable of the result type is
// bound in the term or in the environment.
void expect_invariants(const Env& env, const Expr& e, const TypingResult& r) {
  EXPECT_EQ(kind_of(env, r.ty), Kind::Type);
  EXPECT_EQ(kind_of(env, r.eff), Kind::Effect);
  EXPECT_TRUE(l_unique(env, r.ty).holds) << print(r.ty);
  IdentSet bound;
  for (const auto& id : binders(e)) bound.insert(id);
  for (const auto& id : binders(env)) bound.insert(id);
  for (const auto& id : binders(r.ty)) EXPECT_TRUE(bound.count(id)) << id.str();
}

TEST(Properties, SinferAgreesWithCheckerOnAnnotatedFragment) {
  std::size_t typed = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (std::uint64_t i = 0; i < 1000; ++i) {
      GenConfig cfg;
      cfg.seed = detail::mix_seed(seed, i);
      cfg.max_depth = 5;
      cfg.annotate_probability = 1.0;
      cfg.typed_probability = 0.8;
      cfg.weights.lam_u = 0;
      Expr e = gen_term(cfg);
      FreshSupply fs;
      Expr r = rename_globally(e, prelude(), fs);
      std::optional<TypingResult> a;
      std::optional<TypingResult> b;
      std::optional<ErrorCode> ea;
      std::optional<ErrorCode> eb;
      try {
        a = sinfer(prelude(), r);
      } catch (const Error& err) {
        ea = err.code();
      }
      try {
        b = check_declarative(prelude(), r);
      } catch (const Error& err) {
        eb = err.code();
      }
      ASSERT_EQ(a.has_value(), b.has_value()) << print(r);
      if (a) {
        ++typed;
        EXPECT_TRUE(type_equiv(a->ty, b->ty)) << print(r) << ": " << print(a->ty) << " vs " << print(b->ty);
        EXPECT_TRUE(effect_equiv(a->eff, b->eff)) << print(r);
        expect_invariants(prelude(), r, *a);
      } else {
        EXPECT_EQ(ea, eb) << print(r);
      }
    }
  }
  EXPECT_GT(typed, 3000u);
}

}  // namespace
}  // namespace effrec
