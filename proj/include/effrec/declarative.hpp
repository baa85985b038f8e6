#pragma once

#include <string>
#include <utility>
#include <vector>

#include "effrec/equivalence.hpp"
#include "effrec/error.hpp"
#include "effrec/print.hpp"
#include "effrec/subst.hpp"
#include "effrec/syntax.hpp"
#include "effrec/wellformed.hpp"

namespace effrec {

/// Γ ⊢ e : ty & eff.
struct TypingResult {
  Type ty;
  Effect eff;
};

struct CheckOptions {
  /// Check that lambda annotations are well-kinded. Turning this off
  /// reproduces the rule set without the added well-formedness premise.
  bool wf_premises = true;
};

namespace detail {

// Replaces free occurrences of the type-level variable `from` by `to` in an
// expression, stopping under binders of the same name. `to` is fresh, so
// nothing can be captured.
inline Expr rename_type_var(const Expr& e, const Ident& from, const Ident& to, Kind kind) {
  FreshSupply unused;
  Subst s = Subst::single(from, var_descriptor(to, kind));
  Span sp = e.span();
  return e.visit(overloaded{
      [&](const Expr::Var&) { return e; },
      [&](const Expr::IntLit&) { return e; },
      [&](const Expr::Lam& l) {
        return Expr::lam(l.param, subst_avoiding(s, unused, l.annot),
                         rename_type_var(l.body, from, to, kind), sp);
      },
      [&](const Expr::LamU& l) {
        return Expr::lam_u(l.param, rename_type_var(l.body, from, to, kind), sp);
      },
      [&](const Expr::App& a) {
        return Expr::app(rename_type_var(a.fn, from, to, kind),
                         rename_type_var(a.arg, from, to, kind), sp);
      },
      [&](const Expr::LamD& l) {
        if (l.binder == from) return e;
        return Expr::lam_d(l.binder, l.kind, rename_type_var(l.body, from, to, kind), sp);
      },
      [&](const Expr::AppD& a) {
        return Expr::app_d(rename_type_var(a.fn, from, to, kind),
                           subst_avoiding(s, unused, a.descr), sp);
      },
      [&](const Expr::Let& l) {
        return Expr::let(l.name, rename_type_var(l.bound, from, to, kind),
                         rename_type_var(l.body, from, to, kind), sp);
      },
  });
}

class DeclarativeChecker {
 public:
  DeclarativeChecker(CheckOptions opts, bool capturing, FreshSupply fs)
      : opts_(opts), capturing_(capturing), fs_(std::move(fs)) {}

  TypingResult check(const Env& env, const Expr& e) {
    return e.visit(overloaded{
        [&](const Expr::Var& v) -> TypingResult {
          auto t = env.lookup(v.name);
          if (!t) {
            throw Error(ErrorCode::UnboundVariable, "unbound term variable " + v.name, {v.name});
          }
          return {*t, Effect::pure()};
        },
        [&](const Expr::IntLit&) -> TypingResult { return {int_type(), Effect::pure()}; },
        [&](const Expr::Lam& l) -> TypingResult {
          if (opts_.wf_premises) expect_kind(env, l.annot, Kind::Type);
          TypingResult body = check(env.with_type(l.param, l.annot), l.body);
          return {Type::arrow(l.annot, body.eff, body.ty), Effect::pure()};
        },
        [&](const Expr::LamU& l) -> TypingResult {
          throw Error(ErrorCode::UnannotatedLambda,
                      "the checker needs an annotation on the parameter " + l.param, {l.param});
        },
        [&](const Expr::App& a) -> TypingResult {
          TypingResult fn = check(env, a.fn);
          const auto* arrow = fn.ty.as_arrow();
          if (!arrow) {
            throw Error(ErrorCode::NotArrow, "applying a value of type " + print(fn.ty),
                        {print(fn.ty)});
          }
          TypingResult arg = check(env, a.arg);
          if (!type_equiv(arrow->arg, arg.ty)) {
            throw Error(ErrorCode::ArgMismatch,
                        "argument of type " + print(arg.ty) + " where " + print(arrow->arg) +
                            " is expected",
                        {print(arrow->arg), print(arg.ty)});
          }
          return {arrow->res, join_all({fn.eff, arg.eff, arrow->eff})};
        },
        [&](const Expr::LamD& l) -> TypingResult {
          Ident binder = l.binder;
          Expr body = l.body;
          if (!capturing_ && occurs_free(binder, env)) {
            binder = fs_.type_var();
            body = rename_type_var(body, l.binder, binder, l.kind);
          }
          TypingResult r = check(env.with_kind(binder, l.kind), body);
          if (!effect_equiv(r.eff, Effect::pure())) {
            throw Error(ErrorCode::ImpureTypeAbstraction,
                        "body of a type abstraction has effect " + print(r.eff), {print(r.eff)});
          }
          return {Type::forall(binder, l.kind, r.ty), Effect::pure()};
        },
        [&](const Expr::AppD& a) -> TypingResult {
          TypingResult fn = check(env, a.fn);
          const auto* fa = fn.ty.as_forall();
          if (!fa) {
            throw Error(ErrorCode::NotForall, "instantiating a value of type " + print(fn.ty),
                        {print(fn.ty)});
          }
          expect_kind(env, a.descr, fa->kind);
          Subst s = Subst::single(fa->binder, a.descr);
          Type ty = capturing_ ? subst_capturing(s, fa->body) : subst_avoiding(s, fs_, fa->body);
          return {ty, fn.eff};
        },
        [&](const Expr::Let& l) -> TypingResult {
          TypingResult bound = check(env, l.bound);
          TypingResult body = check(env.with_type(l.name, bound.ty), l.body);
          return {body.ty, Effect::join(bound.eff, body.eff)};
        },
    });
  }

 private:
  CheckOptions opts_;
  bool capturing_;
  FreshSupply fs_;
};

inline FreshSupply supply_above(const Env& env, const Expr& e) {
  FreshSupply fs;
  fs.reserve(max_serial(env));
  fs.reserve(max_serial(e));
  return fs;
}

}  // namespace detail

/// Syntax-directed checker for the declarative system on fully annotated
/// terms. Conversion is absorbed by comparing types and effects up to
/// equivalence; type application uses capture-avoiding substitution.
inline TypingResult check_declarative(const Env& env, const Expr& e, CheckOptions opts = {}) {
  detail::DeclarativeChecker c(opts, /*capturing=*/false, detail::supply_above(env, e));
  return c.check(env, e);
}

/// Unification-free inference for the annotated fragment that instantiates
/// with capturing substitution. Requires gUnique(Γ, e), lUnique(Γ, Γ) and
/// disjoint bound variables between Γ and e.
inline TypingResult sinfer(const Env& env, const Expr& e) {
  if (auto r = g_unique(env, e); !r.holds) {
    throw Error(ErrorCode::PreconditionViolated,
                "bound variable " + r.offending->first.str() + " is not globally unique (" +
                    to_string(r.offending->second) + ")",
                {r.offending->first.str()});
  }
  if (auto r = l_unique(env, env); !r.holds) {
    throw Error(ErrorCode::PreconditionViolated,
                "environment is not locally unique at " + r.offending->first.str(),
                {r.offending->first.str()});
  }
  IdentSet env_binders;
  for (const auto& id : binders(env)) env_binders.insert(id);
  for (const auto& id : binders(e)) {
    if (env_binders.count(id)) {
      throw Error(ErrorCode::PreconditionViolated,
                  "bound variable " + id.str() + " is bound in both the term and the environment",
                  {id.str()});
    }
  }
  detail::DeclarativeChecker c(CheckOptions{}, /*capturing=*/true, detail::supply_above(env, e));
  return c.check(env, e);
}

}  // namespace effrec
