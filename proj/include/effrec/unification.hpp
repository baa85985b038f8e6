#pragma once

#include <optional>
#include <string>
#include <utility>

#include "effrec/constraints.hpp"
#include "effrec/equivalence.hpp"
#include "effrec/error.hpp"
#include "effrec/print.hpp"
#include "effrec/subst.hpp"
#include "effrec/syntax.hpp"
#include "effrec/trace.hpp"

namespace effrec {

/// ⟨σ, κ⟩ returned by unification. `fresh_binders` lists the `%b`
/// variables the quantifier case introduced; they are not part of the
/// algorithm's result but let callers recognise them if they leak.
struct UnifyResult {
  Subst subst;
  ConstraintSet constraints;
  IdentSet fresh_binders;
};

namespace detail {

class Unifier {
 public:
  Unifier(FreshSupply& fs, Tracer& tr) : fs_(fs), tr_(tr) {}

  UnifyResult run(const Type& a, const Type& b) {
    if (const auto* av = a.as_var(); av && av->id.is_unif()) return variable(av->id, b, "UnifVar");
    if (const auto* bv = b.as_var(); bv && bv->id.is_unif()) {
      return variable(bv->id, a, "UnifVar(swapped)");
    }
    const auto* aa = a.as_arrow();
    const auto* ba = b.as_arrow();
    if (aa && ba) return arrow(a, b, *aa, *ba);
    const auto* af = a.as_forall();
    const auto* bf = b.as_forall();
    if (af && bf && af->kind == bf->kind) return forall(a, b, *af, *bf);
    const auto* av = a.as_var();
    const auto* bv = b.as_var();
    if (av && bv && av->id == bv->id) {
      tr_.line("unify[Rigid]", print(a) + " ~ " + print(b));
      return {};
    }
    tr_.line("unify[Mismatch]", print(a) + " ~ " + print(b));
    throw Error(ErrorCode::Mismatch, "cannot unify " + print(a) + " with " + print(b),
                {print(a), print(b)});
  }

 private:
  UnifyResult variable(const Ident& x, const Type& t, const char* rule) {
    tr_.line(std::string("unify[") + rule + "]", x.str() + " ~ " + print(t));
    if (const auto* tv = t.as_var(); tv && tv->id == x) return {};
    if (occurs_free(x, t)) {
      throw Error(ErrorCode::OccursCheck, x.str() + " occurs in " + print(t), {x.str(), print(t)});
    }
    if (!monotype(t)) {
      throw Error(ErrorCode::NotMonotype,
                  "cannot instantiate " + x.str() + " with polymorphic type " + print(t),
                  {x.str(), print(t)});
    }
    Tracer::Nest nest(tr_);
    tr_.line("bind", x.str() + " := " + print(t));
    UnifyResult r;
    r.subst.bind(x, t);
    return r;
  }

  UnifyResult arrow(const Type& a, const Type& b, const Type::Arrow& l, const Type::Arrow& r) {
    tr_.line("unify[Arrow]", print(a) + " ~ " + print(b));
    Tracer::Nest nest(tr_);
    UnifyResult first = run(l.arg, r.arg);
    UnifyResult second =
        run(subst_capturing(first.subst, l.res), subst_capturing(first.subst, r.res));
    UnifyResult out;
    out.subst = Subst::compose(second.subst, first.subst);
    out.constraints = ConstraintSet::united(first.constraints, second.constraints);
    out.constraints.insert({l.eff, r.eff});
    out.fresh_binders = std::move(first.fresh_binders);
    out.fresh_binders.insert(second.fresh_binders.begin(), second.fresh_binders.end());
    return out;
  }

  UnifyResult forall(const Type& a, const Type& b, const Type::Forall& l,
                     const Type::Forall& r) {
    tr_.line("unify[Forall]", print(a) + " ~ " + print(b));
    Tracer::Nest nest(tr_);
    Ident fresh = fs_.type_var();
    Descriptor to = var_descriptor(fresh, l.kind);
    UnifyResult out = run(subst_capturing(Subst::single(l.binder, to), l.body),
                          subst_capturing(Subst::single(r.binder, to), r.body));
    out.fresh_binders.insert(fresh);
    return out;
  }

  FreshSupply& fs_;
  Tracer& tr_;
};

}  // namespace detail

/// Algebraic unification: equates type structure and delays effects as
/// constraints. Throws Mismatch, OccursCheck or NotMonotype.
inline UnifyResult unify(const Type& a, const Type& b, FreshSupply& fs, Tracer* tracer = nullptr) {
  Tracer silent;
  detail::Unifier u(fs, tracer ? *tracer : silent);
  return u.run(a, b);
}

/// Outcome of checking the correctness claim for one input pair and model.
struct UnifyVerdict {
  bool holds = true;
  std::string note;             // why it holds vacuously, or what failed
  std::optional<Type> lhs;      // μ(σ(τ1)) when the implication was tested
  std::optional<Type> rhs;      // μ(σ(τ2))
  std::optional<UnifyResult> result;
  std::optional<Model> model;   // the total model the implication was tested under
};

/// If unify(τ1, τ2) = ⟨σ, κ⟩ and μ ⊨ κ then μ(σ(τ1)) ≡ μ(σ(τ2)), all
/// applications capturing. Vacuous cases hold.
inline UnifyVerdict verify_unify_correctness(const Type& t1, const Type& t2, const Model& m) {
  UnifyVerdict v;
  FreshSupply fs;
  fs.reserve(std::max(max_serial(t1), max_serial(t2)));
  for (const auto& [id, e] : m) fs.reserve(std::max(id.serial, max_serial(e)));
  try {
    v.result = unify(t1, t2, fs);
  } catch (const Error& e) {
    v.note = "unification failed (" + e.class_name() + "); holds vacuously";
    return v;
  }
  // A model is total on FUV(κ): a partial one is completed by the first
  // assignment the bounded solver finds for the remaining variables.
  Model total = m;
  ConstraintSet rest = subst_capturing(m.to_subst(), v.result->constraints);
  if (!free_unif_vars(rest).empty()) {
    std::optional<Model> completion;
    try {
      completion = solve_bounded(rest, default_universe(rest, Env{}));
    } catch (const Error& e) {
      v.note = std::string("cannot complete the model (") + e.what() + "); holds vacuously";
      return v;
    }
    if (!completion) {
      v.note = "no completion of the model satisfies the constraints; holds vacuously";
      return v;
    }
    for (const auto& [id, e] : *completion) total.bind(id, e);
  }
  if (!models(total, v.result->constraints)) {
    v.note = "model does not satisfy the constraints; holds vacuously";
    return v;
  }
  v.model = total;
  Subst mu = total.to_subst();
  v.lhs = subst_capturing(mu, subst_capturing(v.result->subst, t1));
  v.rhs = subst_capturing(mu, subst_capturing(v.result->subst, t2));
  v.holds = type_equiv(*v.lhs, *v.rhs);
  v.note = v.holds ? "instances are equivalent"
                   : "instances are not equivalent: " + print(*v.lhs) + " vs " + print(*v.rhs);
  return v;
}

}  // namespace effrec
