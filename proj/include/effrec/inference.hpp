#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "effrec/constraints.hpp"
#include "effrec/declarative.hpp"
#include "effrec/equivalence.hpp"
#include "effrec/error.hpp"
#include "effrec/print.hpp"
#include "effrec/subst.hpp"
#include "effrec/syntax.hpp"
#include "effrec/trace.hpp"
#include "effrec/unification.hpp"
#include "effrec/wellformed.hpp"

namespace effrec {

// ---------------------------------------------------------------------------
// Modes and results

/// Faithful runs the unrepaired algorithm. Fixed adds the two repairs:
/// `arrow_match` unifies only argument types when the function already has
/// an arrow type, and `scope_check` rejects type abstractions whose binder
/// leaks out of its scope.
struct Mode {
  bool fixed = false;
  bool arrow_match = true;
  bool scope_check = true;

  static Mode faithful() { return Mode{}; }
  static Mode fixed_mode(bool arrow_match = true, bool scope_check = true) {
    return Mode{true, arrow_match, scope_check};
  }

  bool uses_arrow_match() const { return fixed && arrow_match; }
  bool uses_scope_check() const { return fixed && scope_check; }
  std::string name() const { return fixed ? "infer-fixed" : "infer-faithful"; }
};

struct InferOptions {
  Mode mode;
  /// Kind-check lambda annotations and type-application descriptors.
  bool wf_premises = true;
  /// Substitute the instantiated binder in the constraint set at type
  /// application, as the unrepaired algorithm does.
  bool appd_constraint_subst = true;
  Tracer* tracer = nullptr;
};

/// An unannotated lambda and the unification variable invented for it,
/// with the type binders in scope at that point.
struct LamUSite {
  std::string param;
  Ident var;
  std::vector<Ident> scope;
  Span span;
};

/// A type abstraction visited during inference.
struct BinderSite {
  Ident binder;
  Kind kind;
  Span span;
  std::uint64_t entry_serial;  // first fresh serial handed out inside its scope
  std::optional<Ident> copy;   // the `%b` standing for it in the copied constraints
  bool constrained = false;    // free in the constraints when its scope closed
};

/// ⟨τ, ε, σ, κ⟩ plus the bookkeeping the diagnostics need.
struct InferResult {
  Type ty;
  Effect eff;
  Subst subst;
  ConstraintSet constraints;

  std::vector<LamUSite> lamu_sites;
  std::vector<BinderSite> binder_sites;
  std::map<Ident, Span> unify_binders;  // `%b` introduced by quantifier unification
  std::map<Ident, Kind> unif_kinds;     // kind of every unification variable created
};

// ---------------------------------------------------------------------------
// The algorithm

namespace detail {

inline std::string at(Span s) {
  return std::to_string(s.line) + ":" + std::to_string(s.col);
}

/// σ(X) as a lookup: X itself when unmapped.
inline Type lookup_type(const Subst& s, const Ident& x) {
  if (const auto* d = s.find(x); d && d->is_type()) return d->type();
  return Type::var(x);
}

class Inferer {
 public:
  Inferer(const InferOptions& opts, FreshSupply& fs)
      : opts_(opts), fs_(fs), tr_(opts.tracer ? *opts.tracer : silent_) {}

  InferResult run(const Env& env, const Expr& e) {
    Quad q = infer(env, e);
    InferResult r{q.ty, q.eff, q.subst, q.k, std::move(lamu_sites_), std::move(binder_sites_),
                  std::move(unify_binders_), fs_.unif_kinds()};
    return r;
  }

 private:
  struct Quad {
    Type ty;
    Effect eff;
    Subst subst;
    ConstraintSet k;
  };

  Quad infer(const Env& env, const Expr& e) {
    Span sp = e.span();
    return e.visit(overloaded{
        [&](const Expr::Var& v) -> Quad {
          tr_.line("infer[Var]", v.name + " @" + at(sp));
          auto t = env.lookup(v.name);
          if (!t) {
            throw Error(ErrorCode::UnboundVariable, at(sp) + ": unbound term variable " + v.name,
                        {v.name});
          }
          return {*t, Effect::pure(), {}, {}};
        },
        [&](const Expr::IntLit& i) -> Quad {
          tr_.line("infer[Int]", std::to_string(i.value) + " @" + at(sp));
          return {int_type(), Effect::pure(), {}, {}};
        },
        [&](const Expr::Lam& l) -> Quad {
          tr_.line("infer[Lam]", l.param + ":" + print(l.annot) + " @" + at(sp));
          Tracer::Nest nest(tr_);
          if (opts_.wf_premises) expect_kind(env, l.annot, Kind::Type);
          Quad body = infer(env.with_type(l.param, l.annot), l.body);
          return {Type::arrow(l.annot, body.eff, body.ty), Effect::pure(), std::move(body.subst),
                  std::move(body.k)};
        },
        [&](const Expr::LamU& l) -> Quad {
          Ident x = fs_.unif_var(Kind::Type);
          tr_.line("infer[LamU]", l.param + ":" + x.str() + " @" + at(sp));
          Tracer::Nest nest(tr_);
          lamu_sites_.push_back({l.param, x, scope_, sp});
          Quad body = infer(env.with_type(l.param, Type::var(x)), l.body);
          return {Type::arrow(lookup_type(body.subst, x), body.eff, body.ty), Effect::pure(),
                  std::move(body.subst), std::move(body.k)};
        },
        [&](const Expr::App& a) -> Quad { return app(env, a, sp); },
        [&](const Expr::LamD& l) -> Quad { return lam_d(env, l, sp); },
        [&](const Expr::AppD& a) -> Quad {
          tr_.line("infer[AppD]", "[" + print(a.descr) + "] @" + at(sp));
          Tracer::Nest nest(tr_);
          Quad fn = infer(env, a.fn);
          const auto* fa = fn.ty.as_forall();
          if (!fa) {
            throw Error(ErrorCode::NotForall,
                        at(sp) + ": instantiating a value of type " + print(fn.ty),
                        {print(fn.ty)});
          }
          if (opts_.wf_premises) expect_kind(env, a.descr, fa->kind);
          Subst s = Subst::single(fa->binder, a.descr);
          Type ty = subst_capturing(s, fa->body);
          ConstraintSet k = opts_.appd_constraint_subst ? subst_capturing(s, fn.k) : fn.k;
          tr_.line("instantiate", fa->binder.str() + " := " + print(a.descr) + " gives " +
                                      print(ty));
          return {ty, fn.eff, std::move(fn.subst), std::move(k)};
        },
        [&](const Expr::Let& l) -> Quad {
          tr_.line("infer[Let]", l.name + " @" + at(sp));
          Tracer::Nest nest(tr_);
          Quad bound = infer(env, l.bound);
          Env inner = subst_capturing(bound.subst, env).with_type(l.name, bound.ty);
          tr_.line("bind", l.name + " : " + print(bound.ty));
          Quad body = infer(inner, l.body);
          return {body.ty, Effect::join(bound.eff, body.eff),
                  Subst::compose(body.subst, bound.subst),
                  ConstraintSet::united(bound.k, body.k)};
        },
    });
  }

  UnifyResult unify_here(const Type& a, const Type& b, Span sp) {
    try {
      UnifyResult u = unify(a, b, fs_, &tr_);
      for (const auto& id : u.fresh_binders) unify_binders_.emplace(id, sp);
      return u;
    } catch (const Error& err) {
      std::vector<std::string> evidence{print(a), print(b)};
      evidence.insert(evidence.end(), err.evidence().begin(), err.evidence().end());
      throw Error(ErrorCode::UnifyFailed,
                  at(sp) + ": unify(" + print(a) + ", " + print(b) + ") failed: " + err.what(),
                  std::move(evidence), err.code());
    }
  }

  void reject_leaked_unify_binders(const UnifyResult& u, Span sp) const {
    for (const auto& [id, d] : u.subst) {
      for (const auto& b : u.fresh_binders) {
        if (occurs_free(b, d)) {
          throw Error(ErrorCode::EscapingVariable,
                      at(sp) + ": quantifier unification leaks " + b.str() + " through " +
                          id.str() + " := " + print(d),
                      {b.str(), id.str(), print(d)});
        }
      }
    }
  }

  Quad app(const Env& env, const Expr::App& a, Span sp) {
    tr_.line("infer[App]", "@" + at(sp));
    Tracer::Nest nest(tr_);
    Quad fn = infer(env, a.fn);
    Quad arg = infer(subst_capturing(fn.subst, env), a.arg);
    Type fn_ty = subst_capturing(arg.subst, fn.ty);

    ConstraintSet k = ConstraintSet::united(fn.k, arg.k);
    if (opts_.mode.uses_arrow_match()) {
      if (const auto* arrow = fn_ty.as_arrow()) {
        tr_.line("match-arrow", print(fn_ty));
        UnifyResult u = unify_here(arrow->arg, arg.ty, sp);
        if (opts_.mode.uses_scope_check()) reject_leaked_unify_binders(u, sp);
        k.unite(u.constraints);
        return {subst_capturing(u.subst, arrow->res), join_all({fn.eff, arg.eff, arrow->eff}),
                Subst::compose(u.subst, Subst::compose(arg.subst, fn.subst)), std::move(k)};
      }
      if (!(fn_ty.as_var() && fn_ty.as_var()->id.is_unif())) {
        throw Error(ErrorCode::NotArrow, at(sp) + ": applying a value of type " + print(fn_ty),
                    {print(fn_ty)});
      }
    }
    Ident xt = fs_.unif_var(Kind::Type);
    Ident xe = fs_.unif_var(Kind::Effect);
    Type target = Type::arrow(arg.ty, Effect::var(xe), Type::var(xt));
    UnifyResult u = unify_here(fn_ty, target, sp);
    if (opts_.mode.uses_scope_check()) reject_leaked_unify_binders(u, sp);
    k.unite(u.constraints);
    return {lookup_type(u.subst, xt), join_all({fn.eff, arg.eff, Effect::var(xe)}),
            Subst::compose(u.subst, Subst::compose(arg.subst, fn.subst)), std::move(k)};
  }

  Quad lam_d(const Env& env, const Expr::LamD& l, Span sp) {
    tr_.line("infer[LamD]", l.binder.str() + ":" + to_string(l.kind) + " @" + at(sp));
    Tracer::Nest nest(tr_);
    std::size_t site = binder_sites_.size();
    binder_sites_.push_back({l.binder, l.kind, sp, fs_.peek(), std::nullopt});
    Env inner = env.with_kind(l.binder, l.kind);
    scope_.push_back(l.binder);
    Quad body = infer(inner, l.body);
    scope_.pop_back();

    ConstraintSet kprime = body.k;
    kprime.insert({body.eff, Effect::pure()});

    if (opts_.mode.uses_scope_check()) {
      Env outer = subst_capturing(body.subst, env);
      if (occurs_free(l.binder, outer)) {
        throw Error(ErrorCode::EscapingVariable,
                    at(sp) + ": " + l.binder.str() + " escapes its scope through the environment " +
                        print(outer),
                    {l.binder.str()});
      }
      if (occurs_free(l.binder, kprime)) {
        throw Error(ErrorCode::EscapingVariable,
                    at(sp) + ": " + l.binder.str() + " escapes its scope through the constraints " +
                        print(kprime),
                    {l.binder.str()});
      }
    }

    IdentSet local = free_vars(kprime);
    for (const auto& id : free_vars(subst_capturing(body.subst, inner))) local.erase(id);

    Ident beta = fs_.type_var();
    binder_sites_[site].copy = beta;
    binder_sites_[site].constrained = occurs_free(l.binder, kprime);
    Subst copy = Subst::single(l.binder, var_descriptor(beta, l.kind));
    for (const auto& id : local) copy.bind(id, Effect::var(fs_.unif_var(Kind::Effect)));
    ConstraintSet k = subst_capturing(copy, kprime);
    k.unite(kprime);
    tr_.line("generalize", "copy " + print(copy) + " of " + print(kprime));
    return {Type::forall(l.binder, l.kind, body.ty), Effect::pure(), std::move(body.subst),
            std::move(k)};
  }

  const InferOptions& opts_;
  FreshSupply& fs_;
  Tracer silent_;
  Tracer& tr_;
  std::vector<Ident> scope_;
  std::vector<LamUSite> lamu_sites_;
  std::vector<BinderSite> binder_sites_;
  std::map<Ident, Span> unify_binders_;
};

}  // namespace detail

/// Reconstructs ⟨τ, ε, σ, κ⟩ for `e`. The input must be free of
/// unification variables and have globally unique binders with respect to
/// Γ (see rename_globally).
inline InferResult infer(const Env& env, const Expr& e, const InferOptions& opts,
                         FreshSupply& fs) {
  if (!free_unif_vars(e).empty()) {
    throw Error(ErrorCode::PreconditionViolated, "input term contains unification variables");
  }
  if (auto r = g_unique(env, e); !r.holds) {
    throw Error(ErrorCode::PreconditionViolated,
                "bound variable " + r.offending->first.str() + " is not globally unique (" +
                    to_string(r.offending->second) + "); rename the term first",
                {r.offending->first.str()});
  }
  fs.reserve(max_serial(env));
  fs.reserve(max_serial(e));
  detail::Inferer inf(opts, fs);
  return inf.run(env, e);
}

inline std::string print(const InferResult& r) {
  return "type:        " + print(r.ty) + "\n" + "effect:      " + print(r.eff) + "  (" +
         print(effect_normalize(r.eff)) + ")\n" + "subst:       " + print(r.subst) + "\n" +
         "constraints: " + print(r.constraints) + "\n";
}

// ---------------------------------------------------------------------------
// Bug taxonomy

enum class BugClass {
  UnifPolyUnsound,
  TypeVarEscape,
  EffectVarEscape,
  PolyResultIncomplete,
  SubstBeforeInstantiation,
};

inline const char* to_string(BugClass c) {
  switch (c) {
    case BugClass::UnifPolyUnsound: return "UnifPolyUnsound";
    case BugClass::TypeVarEscape: return "TypeVarEscape";
    case BugClass::EffectVarEscape: return "EffectVarEscape";
    case BugClass::PolyResultIncomplete: return "PolyResultIncomplete";
    case BugClass::SubstBeforeInstantiation: return "SubstBeforeInstantiation";
  }
  return "?";
}

inline std::optional<BugClass> bug_class_from_string(std::string_view s) {
  for (auto c : {BugClass::UnifPolyUnsound, BugClass::TypeVarEscape, BugClass::EffectVarEscape,
                 BugClass::PolyResultIncomplete, BugClass::SubstBeforeInstantiation}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

/// Escapes name the leaked variable; incompleteness reports name the
/// failure; `evidence` holds rendered descriptors.
struct BugReport {
  BugClass cls;
  Span location;
  std::string var;
  std::vector<std::string> evidence;
};

inline std::string print(const BugReport& b) {
  std::string out = std::string(to_string(b.cls)) + " at " + detail::at(b.location);
  if (!b.var.empty()) out += " (" + b.var + ")";
  for (const auto& ev : b.evidence) out += "\n    " + ev;
  return out;
}

// ---------------------------------------------------------------------------
// Escape detection

namespace detail {

class EscapeFinder {
 public:
  EscapeFinder(const Env& env, const InferResult& r, const Subst* grounding)
      : env_(env), r_(r), grounding_(grounding) {}

  std::vector<BugReport> run() {
    // Everything the final substitution (and optional model) produces.
    view("result type", r_.ty);
    view("result type after substitution", subst_capturing(r_.subst, r_.ty));
    views_.push_back({"result effect", free_vars(final_effect(r_.eff)), nullptr});
    views_.back().fv.merge(free_vars(r_.eff));
    {
      IdentSet fv = free_vars(final_env(subst_capturing(r_.subst, env_)));
      views_.push_back({"environment", std::move(fv), nullptr});
    }
    for (const auto& site : r_.lamu_sites) {
      Type t = lookup_type(r_.subst, site.var);
      IdentSet fv = free_vars(t);
      if (grounding_) fv.merge(free_vars(subst_capturing(*grounding_, t)));
      views_.push_back({"annotation of " + site.param + " (" + site.var.str() + " := " +
                            print(t) + ")",
                        std::move(fv), &site});
    }

    for (const auto& b : r_.binder_sites) {
      BugClass cls = b.kind == Kind::Type ? BugClass::TypeVarEscape : BugClass::EffectVarEscape;
      for (const auto& v : views_) {
        if (v.fv.count(b.binder)) {
          bool in_scope = v.site && std::find(v.site->scope.begin(), v.site->scope.end(),
                                              b.binder) != v.site->scope.end();
          if (!in_scope) {
            report(cls, b.span, b.binder, b.binder.str() + " escapes through the " + v.where);
          }
        }
        if (b.copy && v.fv.count(*b.copy)) {
          report(cls, b.span, b.binder,
                 "the copy " + b.copy->str() + " of " + b.binder.str() + " reaches the " + v.where);
        }
      }
      // Without a model, an effect binder left in the constraints may be
      // solved into any variable; with one, the grounded views are exact.
      if (!grounding_ && b.kind == Kind::Effect && occurs_free(b.binder, r_.constraints)) {
        report(cls, b.span, b.binder, b.binder.str() + " escapes through the constraints");
      }
    }
    for (const auto& [beta, sp] : r_.unify_binders) {
      for (const auto& v : views_) {
        if (v.fv.count(beta)) {
          report(BugClass::UnifPolyUnsound, sp, beta,
                 "quantifier unification variable " + beta.str() + " leaks into the " + v.where);
        }
      }
      if (occurs_free(beta, r_.constraints)) {
        report(BugClass::UnifPolyUnsound, sp, beta,
               "quantifier unification variable " + beta.str() + " leaks into the constraints");
      }
    }
    return std::move(out_);
  }

 private:
  struct View {
    std::string where;
    IdentSet fv;
    const LamUSite* site;
  };

  void view(std::string where, const Type& t) {
    IdentSet fv = free_vars(t);
    if (grounding_) fv.merge(free_vars(subst_capturing(*grounding_, t)));
    views_.push_back({std::move(where), std::move(fv), nullptr});
  }

  Effect final_effect(const Effect& e) const {
    return grounding_ ? subst_capturing(*grounding_, e) : e;
  }
  Env final_env(const Env& env) const { return grounding_ ? subst_capturing(*grounding_, env) : env; }

  void report(BugClass cls, Span sp, const Ident& var, std::string evidence) {
    for (auto& b : out_) {
      if (b.cls == cls && b.var == var.str()) {
        if (std::find(b.evidence.begin(), b.evidence.end(), evidence) == b.evidence.end()) {
          b.evidence.push_back(std::move(evidence));
        }
        return;
      }
    }
    out_.push_back({cls, sp, var.str(), {std::move(evidence)}});
  }

  const Env& env_;
  const InferResult& r_;
  const Subst* grounding_;
  std::vector<View> views_;
  std::vector<BugReport> out_;
};

}  // namespace detail

/// Reports every type abstraction binder that is visible outside its scope
/// (in the result, the environment, or an unannotated lambda's solved type
/// outside the binder), every effect binder left in the constraints, and
/// every quantifier-unification variable that leaks anywhere. With a
/// grounding (a model plus residual-variable defaults) the solved forms
/// are inspected too.
inline std::vector<BugReport> scope_check(const Env& env, const InferResult& r,
                                          const Subst* grounding = nullptr) {
  return detail::EscapeFinder(env, r, grounding).run();
}

// ---------------------------------------------------------------------------
// Elaboration

/// Annotates every unannotated lambda with its solved type
/// `grounding(σ(X))`. Fails with ResidualUnifVar if an annotation still
/// mentions a unification variable and NotMonotype if it is polymorphic.
inline Expr elaborate(const Expr& e, const InferResult& r, const Subst& grounding) {
  std::size_t next = 0;
  auto go = [&](auto& self, const Expr& x) -> Expr {
    Span sp = x.span();
    return x.visit(overloaded{
        [&](const Expr::Var&) { return x; },
        [&](const Expr::IntLit&) { return x; },
        [&](const Expr::Lam& l) { return Expr::lam(l.param, l.annot, self(self, l.body), sp); },
        [&](const Expr::LamU& l) {
          if (next >= r.lamu_sites.size() || r.lamu_sites[next].param != l.param) {
            throw Error(ErrorCode::PreconditionViolated,
                        "inference result does not belong to this term");
          }
          const LamUSite& site = r.lamu_sites[next++];
          Type annot = subst_capturing(grounding, detail::lookup_type(r.subst, site.var));
          if (contains_unif_var(annot)) {
            throw Error(ErrorCode::ResidualUnifVar,
                        detail::at(sp) + ": annotation for " + l.param + " still mentions " +
                            print(annot),
                        {l.param, print(annot)});
          }
          if (!monotype(annot)) {
            throw Error(ErrorCode::NotMonotype,
                        detail::at(sp) + ": annotation for " + l.param + " is polymorphic: " +
                            print(annot),
                        {l.param, print(annot)});
          }
          return Expr::lam(l.param, annot, self(self, l.body), sp);
        },
        [&](const Expr::App& a) {
          Expr fn = self(self, a.fn);  // sites are numbered left to right
          return Expr::app(std::move(fn), self(self, a.arg), sp);
        },
        [&](const Expr::LamD& l) { return Expr::lam_d(l.binder, l.kind, self(self, l.body), sp); },
        [&](const Expr::AppD& a) { return Expr::app_d(self(self, a.fn), a.descr, sp); },
        [&](const Expr::Let& l) {
          Expr bound = self(self, l.bound);
          return Expr::let(l.name, std::move(bound), self(self, l.body), sp);
        },
    });
  };
  return go(go, e);
}

inline Expr elaborate(const Expr& e, const InferResult& r, const Model& m) {
  return elaborate(e, r, m.to_subst());
}

// ---------------------------------------------------------------------------
// Soundness check: solve, ground, elaborate, and ask the declarative checker

enum class SoundnessStatus {
  Holds,          // the checker agrees with the inferred type and effect
  Violated,       // the checker rejects, or derives a non-equivalent result
  Unsatisfiable,  // no model within the bounded universe; holds vacuously
  Skipped,        // solver bounds exceeded
};

inline const char* to_string(SoundnessStatus s) {
  switch (s) {
    case SoundnessStatus::Holds: return "holds";
    case SoundnessStatus::Violated: return "violated";
    case SoundnessStatus::Unsatisfiable: return "unsatisfiable";
    case SoundnessStatus::Skipped: return "skipped";
  }
  return "?";
}

struct SoundnessOutcome {
  SoundnessStatus status = SoundnessStatus::Skipped;
  std::optional<Model> model;
  Subst grounding;
  std::optional<Expr> elaborated;
  std::optional<TypingResult> oracle;
  std::optional<Type> expected_ty;
  std::optional<Effect> expected_eff;
  std::string detail;
  std::vector<BugReport> escapes;  // scope_check under the grounding
};

/// Model-based check of the soundness claim for one inference result: find
/// μ ⊨ κ, default the remaining unification variables (effects to pure,
/// types to fresh rigid `%g` variables bound in the checking environment),
/// elaborate, and type the elaborated term declaratively under μ(σ(Γ)).
inline SoundnessOutcome check_soundness(const Env& env, const Expr& e, const InferResult& r,
                                        CheckOptions check_opts = {},
                                        const SolverLimits& limits = {}) {
  SoundnessOutcome out;
  try {
    out.model = solve_bounded(r.constraints, default_universe(r.constraints, env), limits);
  } catch (const Error& err) {
    if (!err.is(ErrorCode::BoundExceeded)) throw;
    out.status = SoundnessStatus::Skipped;
    out.detail = err.what();
    out.escapes = scope_check(env, r);
    return out;
  }
  if (!out.model) {
    out.status = SoundnessStatus::Unsatisfiable;
    out.detail = "constraints have no model";
    out.escapes = scope_check(env, r);
    return out;
  }

  // Residual unification variables anywhere the checker will look.
  IdentSet residual;
  auto note = [&](const auto& a) {
    for (const auto& id : free_unif_vars(a)) {
      if (!out.model->find(id)) residual.insert(id);
    }
  };
  note(r.ty);
  note(r.eff);
  note(subst_capturing(r.subst, env));
  for (const auto& site : r.lamu_sites) note(detail::lookup_type(r.subst, site.var));

  out.grounding = out.model->to_subst();
  FreshSupply ground_names;
  ground_names.reserve(max_serial(e));
  for (const auto& [id, k] : r.unif_kinds) ground_names.reserve(id.serial);
  for (const auto& [id, sp] : r.unify_binders) ground_names.reserve(id.serial);
  for (const auto& b : r.binder_sites) ground_names.reserve(b.binder.serial);
  std::vector<Ident> rigid_types;
  for (const auto& id : residual) {
    auto k = r.unif_kinds.find(id);
    Kind kind = k == r.unif_kinds.end() ? Kind::Type : k->second;
    if (kind == Kind::Effect) {
      out.grounding.bind(id, Effect::pure());
    } else {
      Ident g = Ident::rigid("%g", ground_names.type_var().serial);
      rigid_types.push_back(g);
      out.grounding.bind(id, Type::var(g));
    }
  }
  out.escapes = scope_check(env, r, &out.grounding);

  Env checking = subst_capturing(out.grounding, subst_capturing(r.subst, env));
  for (const auto& g : rigid_types) checking.push_kind(g, Kind::Type);
  out.expected_ty = subst_capturing(out.grounding, r.ty);
  out.expected_eff = subst_capturing(out.grounding, r.eff);

  // A violation with no visible escape is blamed on effect binders that
  // were still constrained when their scope closed: instantiating them
  // later rewrites constraints on variables used inside the scope.
  auto violated = [&](std::string detail) {
    out.status = SoundnessStatus::Violated;
    out.detail = std::move(detail);
    if (!out.escapes.empty()) return out;
    for (const auto& b : r.binder_sites) {
      if (b.kind != Kind::Effect || !b.constrained) continue;
      out.escapes.push_back({BugClass::EffectVarEscape, b.span, b.binder.str(),
                             {b.binder.str() + " was constrained when its scope closed"}});
    }
    return out;
  };

  try {
    out.elaborated = elaborate(e, r, out.grounding);
  } catch (const Error& err) {
    return violated(std::string("elaboration failed: ") + err.what());
  }
  try {
    out.oracle = check_declarative(checking, *out.elaborated, check_opts);
  } catch (const Error& err) {
    return violated("declarative checker rejects the elaborated term: " + err.class_name() + ": " +
                    err.what());
  }
  bool same_ty = type_equiv(out.oracle->ty, *out.expected_ty);
  bool same_eff = effect_equiv(out.oracle->eff, *out.expected_eff);
  if (same_ty && same_eff) {
    out.status = SoundnessStatus::Holds;
    out.detail = "declarative checker agrees";
    return out;
  }
  return violated("declarative checker derives " + print(out.oracle->ty) + " & " +
                  print(out.oracle->eff) + " but inference claims " + print(*out.expected_ty) +
                  " & " + print(*out.expected_eff));
}

// ---------------------------------------------------------------------------
// Completeness: classify a faithful failure on a declaratively typable term

struct IncompletenessOutcome {
  std::optional<BugReport> bug;
  std::string detail;
};

/// Given a term the faithful algorithm rejects, decide whether it is a
/// completeness failure. Typability is established either by the fixed
/// algorithm (whose elaboration the declarative checker must accept), which
/// classifies the failure as PolyResultIncomplete, or by an explicitly
/// annotated `witness` of the same term that the checker accepts, which
/// classifies it as SubstBeforeInstantiation.
inline IncompletenessOutcome classify_incompleteness(const Env& env, const Expr& renamed,
                                                     const Error& faithful_error,
                                                     const std::optional<Expr>& witness,
                                                     InferOptions fixed_opts = {}) {
  IncompletenessOutcome out;
  fixed_opts.mode = Mode::fixed_mode();
  fixed_opts.tracer = nullptr;
  std::vector<std::string> evidence{faithful_error.class_name() + ": " + faithful_error.what()};
  try {
    FreshSupply fs;
    InferResult fixed = infer(env, renamed, fixed_opts, fs);
    SoundnessOutcome s = check_soundness(env, renamed, fixed);
    if (s.status == SoundnessStatus::Holds) {
      evidence.push_back("fixed mode infers " + print(fixed.ty) + " & " + print(fixed.eff));
      evidence.push_back("elaborated: " + print(*s.elaborated));
      out.bug = BugReport{BugClass::PolyResultIncomplete, renamed.span(), "", evidence};
      out.detail = "typable via the fixed algorithm";
      return out;
    }
    out.detail = std::string("fixed mode result not confirmed: ") + to_string(s.status);
  } catch (const Error& err) {
    out.detail = std::string("fixed mode also fails: ") + err.class_name();
  }
  if (witness) {
    try {
      TypingResult w = check_declarative(env, *witness);
      evidence.push_back("witness types as " + print(w.ty) + " & " + print(w.eff));
      evidence.push_back("witness: " + print(*witness));
      out.bug = BugReport{BugClass::SubstBeforeInstantiation, renamed.span(), "", evidence};
      out.detail = "typable via the annotated witness";
    } catch (const Error& err) {
      out.detail += std::string("; witness rejected: ") + err.class_name();
    }
  }
  return out;
}

}  // namespace effrec
