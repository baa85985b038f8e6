#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "effrec/constraints.hpp"
#include "effrec/declarative.hpp"
#include "effrec/equivalence.hpp"
#include "effrec/error.hpp"
#include "effrec/inference.hpp"
#include "effrec/print.hpp"
#include "effrec/subst.hpp"
#include "effrec/syntax.hpp"
#include "effrec/unification.hpp"
#include "effrec/wellformed.hpp"

namespace effrec {

// ---------------------------------------------------------------------------
// Configuration

struct GenWeights {
  unsigned var = 3;
  unsigned int_lit = 1;
  unsigned lam = 3;
  unsigned lam_u = 3;
  unsigned app = 4;
  unsigned lam_d = 3;
  unsigned app_d = 2;
  unsigned let = 1;
  unsigned app_vars = 2;  // a variable applied to a variable
};

struct GenConfig {
  std::uint64_t seed = 0;
  int max_depth = 5;
  int max_type_depth = 2;
  std::size_t term_name_pool = 4;   // f, g, x, y, ... (shadowing allowed)
  std::size_t type_name_pool = 4;   // a, b, c, d, then a1, b1, ... (never reused)
  GenWeights weights;
  double annotate_probability = 0.5;     // keep an annotation when erasing
  double effect_kind_probability = 0.3;  // type abstraction over an effect
  double typed_probability = 0.5;        // share of terms from the type-directed generator
};

// ---------------------------------------------------------------------------
// Generation

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + index + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class TermGenerator {
 public:
  TermGenerator(const GenConfig& cfg, const Env& env) : cfg_(cfg), rng_(cfg.seed) {
    for (const auto& entry : env.entries()) {
      std::visit(overloaded{
                     [&](const KindBind& kb) { base_.kinds.push_back(kb); },
                     [&](const TypeBind& tb) { base_.vars.emplace_back(tb.name, tb.type); },
                 },
                 entry);
    }
  }

  Expr generate() {
    if (chance(cfg_.typed_probability)) {
      if (auto t = synth(base_, cfg_.max_depth)) return erase(t->e);
    }
    return untyped(base_, cfg_.max_depth);
  }

 private:
  struct Scope {
    std::vector<std::pair<std::string, Type>> vars;  // untyped mode ignores the types
    std::vector<KindBind> kinds;
  };
  struct Typed {
    Expr e;
    Type ty;
    Effect eff;
  };

  std::size_t pick(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(rng_() % n); }
  bool chance(double p) { return static_cast<double>(rng_() % 1000000) < p * 1000000.0; }

  std::string term_name() {
    static const char* names[] = {"f", "g", "x", "y", "z", "h", "u", "v"};
    std::size_t pool = std::max<std::size_t>(1, std::min<std::size_t>(cfg_.term_name_pool, 8));
    return names[pick(pool)];
  }

  Ident type_name() {
    static const char* names[] = {"a", "b", "c", "d", "e", "k", "m", "n"};
    std::size_t pool = std::max<std::size_t>(1, std::min<std::size_t>(cfg_.type_name_pool, 8));
    std::size_t n = next_type_name_++;
    std::string s = names[n % pool];
    if (n >= pool) s += std::to_string(n / pool);
    return Ident::rigid(s);
  }

  std::vector<Ident> kinds_of(const Scope& s, Kind k) const {
    std::vector<Ident> out;
    for (const auto& kb : s.kinds) {
      if (kb.kind == k) out.push_back(kb.id);
    }
    return out;
  }

  Effect gen_effect(const Scope& s, int depth) {
    auto evs = kinds_of(s, Kind::Effect);
    if (evs.empty() || chance(0.4)) return Effect::pure();
    if (depth > 0 && chance(0.25)) {
      Effect lhs = gen_effect(s, depth - 1);
      return Effect::join(std::move(lhs), gen_effect(s, depth - 1));
    }
    return Effect::var(evs[pick(evs.size())]);
  }

  Type gen_type(Scope s, int depth, bool allow_forall = true) {
    auto tvs = kinds_of(s, Kind::Type);
    if (tvs.empty()) return int_type();
    if (depth <= 0 || chance(0.4)) return Type::var(tvs[pick(tvs.size())]);
    if (allow_forall && chance(0.2)) {
      Ident b = type_name();
      Kind k = chance(cfg_.effect_kind_probability) ? Kind::Effect : Kind::Type;
      s.kinds.push_back({b, k});
      return Type::forall(b, k, gen_type(s, depth - 1, allow_forall));
    }
    Type arg = gen_type(s, depth - 1, allow_forall);
    Effect eff = gen_effect(s, 1);
    return Type::arrow(std::move(arg), std::move(eff), gen_type(s, depth - 1, allow_forall));
  }

  Descriptor gen_descr(const Scope& s, Kind k) {
    if (k == Kind::Effect) return gen_effect(s, 1);
    return gen_type(s, cfg_.max_type_depth);
  }

  // ---- untyped, well-scoped

  Expr untyped(Scope s, int depth) {
    if (depth <= 0) return leaf(s);
    const GenWeights& w = cfg_.weights;
    unsigned table[] = {w.var, w.int_lit, w.lam, w.lam_u, w.app, w.lam_d, w.app_d, w.let,
                        w.app_vars};
    unsigned total = 0;
    for (unsigned v : table) total += v;
    unsigned r = static_cast<unsigned>(pick(total));
    std::size_t which = 0;
    while (r >= table[which]) r -= table[which++];
    switch (which) {
      case 0: return leaf(s);
      case 1: return Expr::int_lit(static_cast<std::int64_t>(pick(100)));
      case 2: {
        std::string x = term_name();
        Type t = gen_type(s, cfg_.max_type_depth);
        s.vars.emplace_back(x, t);
        return Expr::lam(x, t, untyped(s, depth - 1));
      }
      case 3: {
        std::string x = term_name();
        s.vars.emplace_back(x, int_type());
        return Expr::lam_u(x, untyped(s, depth - 1));
      }
      case 4: {
        Expr fn = untyped(s, depth - 1);
        return Expr::app(std::move(fn), untyped(s, depth - 1));
      }
      case 5: {
        Ident b = type_name();
        Kind k = chance(cfg_.effect_kind_probability) ? Kind::Effect : Kind::Type;
        s.kinds.push_back({b, k});
        return Expr::lam_d(b, k, untyped(s, depth - 1));
      }
      case 6: {
        Kind k = chance(cfg_.effect_kind_probability) ? Kind::Effect : Kind::Type;
        Expr fn = untyped(s, depth - 1);
        return Expr::app_d(std::move(fn), gen_descr(s, k));
      }
      case 7: {
        std::string x = term_name();
        Expr bound = untyped(s, depth - 1);
        s.vars.emplace_back(x, int_type());
        return Expr::let(x, bound, untyped(s, depth - 1));
      }
      default: {
        if (s.vars.empty()) return leaf(s);
        std::string fn = s.vars[pick(s.vars.size())].first;
        return Expr::app(Expr::var(fn), Expr::var(s.vars[pick(s.vars.size())].first));
      }
    }
  }

  Expr leaf(const Scope& s) {
    if (s.vars.empty() || chance(0.15)) return Expr::int_lit(static_cast<std::int64_t>(pick(100)));
    return Expr::var(s.vars[pick(s.vars.size())].first);
  }

  // ---- type-directed: annotated terms typable by construction

  std::optional<Type> lookup(const Scope& s, const std::string& x) const {
    for (auto it = s.vars.rbegin(); it != s.vars.rend(); ++it) {
      if (it->first == x) return it->second;
    }
    return std::nullopt;
  }

  // Variables whose (visible) type is equivalent to `goal`.
  std::vector<std::string> vars_of_type(const Scope& s, const Type& goal) const {
    std::vector<std::string> out;
    for (const auto& [x, t] : s.vars) {
      if (std::find(out.begin(), out.end(), x) != out.end()) continue;
      if (auto vis = lookup(s, x); vis && type_equiv(*vis, goal)) out.push_back(x);
    }
    return out;
  }

  std::optional<Typed> synth(Scope s, int depth) {
    int choice = depth <= 0 ? static_cast<int>(pick(2)) : static_cast<int>(pick(7));
    switch (choice) {
      case 0: {
        if (s.vars.empty()) return Typed{Expr::int_lit(7), int_type(), Effect::pure()};
        std::string x = s.vars[pick(s.vars.size())].first;
        return Typed{Expr::var(x), *lookup(s, x), Effect::pure()};
      }
      case 1: return Typed{Expr::int_lit(static_cast<std::int64_t>(pick(100))), int_type(),
                           Effect::pure()};
      case 2:
      case 3: {
        std::string x = term_name();
        Type t = gen_type(s, cfg_.max_type_depth);
        s.vars.emplace_back(x, t);
        auto body = synth(s, depth - 1);
        if (!body) return std::nullopt;
        return Typed{Expr::lam(x, t, body->e), Type::arrow(t, body->eff, body->ty),
                     Effect::pure()};
      }
      case 4: {
        Ident b = type_name();
        Kind k = chance(cfg_.effect_kind_probability) ? Kind::Effect : Kind::Type;
        s.kinds.push_back({b, k});
        auto body = synth(s, depth - 1);
        if (!body || !effect_equiv(body->eff, Effect::pure())) return std::nullopt;
        return Typed{Expr::lam_d(b, k, body->e), Type::forall(b, k, body->ty), Effect::pure()};
      }
      case 5: {
        auto fn = synth(s, depth - 1);
        if (!fn) return std::nullopt;
        if (const auto* a = fn->ty.as_arrow()) {
          auto arg = check(s, a->arg, depth - 1);
          if (!arg) return std::nullopt;
          return Typed{Expr::app(fn->e, *arg), a->res, join_all({fn->eff, Effect::pure(), a->eff})};
        }
        if (const auto* f = fn->ty.as_forall()) return instantiate(s, *fn, *f);
        return std::nullopt;
      }
      default: {
        auto bound = synth(s, depth - 1);
        if (!bound) return std::nullopt;
        std::string x = term_name();
        s.vars.emplace_back(x, bound->ty);
        auto body = synth(s, depth - 1);
        if (!body) return std::nullopt;
        return Typed{Expr::let(x, bound->e, body->e), body->ty, Effect::join(bound->eff, body->eff)};
      }
    }
  }

  std::optional<Typed> instantiate(const Scope& s, const Typed& fn, const Type::Forall& f) {
    Descriptor d = gen_descr(s, f.kind);
    FreshSupply fs;
    fs.reserve(1000000);
    Type ty = subst_avoiding(Subst::single(f.binder, d), fs, f.body);
    if (!free_vars(ty).empty()) {
      for (const auto& id : free_vars(ty)) {
        if (id.name[0] == '%') return std::nullopt;  // keep generated names printable
      }
    }
    return Typed{Expr::app_d(fn.e, d), ty, fn.eff};
  }

  // A pure term of type `goal`, built from values.
  std::optional<Expr> check(Scope s, const Type& goal, int depth) {
    auto candidates = vars_of_type(s, goal);
    if (!candidates.empty() && (depth <= 0 || chance(0.6))) {
      return Expr::var(candidates[pick(candidates.size())]);
    }
    if (const auto* v = goal.as_var(); v && v->id == int_ident()) {
      return Expr::int_lit(static_cast<std::int64_t>(pick(100)));
    }
    if (depth <= 0) return std::nullopt;
    if (const auto* a = goal.as_arrow()) {
      std::string x = term_name();
      s.vars.emplace_back(x, a->arg);
      if (effect_equiv(a->eff, Effect::pure())) {
        auto body = check(s, a->res, depth - 1);
        if (!body) return std::nullopt;
        return Expr::lam(x, a->arg, *body);
      }
      // An effectful body: call something with exactly that latent effect.
      for (const auto& [g, t] : s.vars) {
        const auto* ga = t.as_arrow();
        if (!ga || !type_equiv(ga->res, a->res) || !effect_equiv(ga->eff, a->eff)) continue;
        if (auto vis = lookup(s, g); !vis || !type_equiv(*vis, t)) continue;
        auto arg = check(s, ga->arg, depth - 1);
        if (!arg) return std::nullopt;
        return Expr::lam(x, a->arg, Expr::app(Expr::var(g), *arg));
      }
      return std::nullopt;
    }
    if (const auto* f = goal.as_forall()) {
      Ident b = type_name();
      s.kinds.push_back({b, f->kind});
      Type body = subst_capturing(Subst::single(f->binder, var_descriptor(b, f->kind)), f->body);
      auto e = check(s, body, depth - 1);
      if (!e) return std::nullopt;
      return Expr::lam_d(b, f->kind, *e);
    }
    return std::nullopt;
  }

  // Drops monomorphic annotations at random.
  Expr erase(const Expr& e) {
    return e.visit(overloaded{
        [&](const Expr::Var&) { return e; },
        [&](const Expr::IntLit&) { return e; },
        [&](const Expr::Lam& l) {
          Expr body = erase(l.body);
          if (monotype(l.annot) && !chance(cfg_.annotate_probability)) {
            return Expr::lam_u(l.param, body);
          }
          return Expr::lam(l.param, l.annot, body);
        },
        [&](const Expr::LamU& l) { return Expr::lam_u(l.param, erase(l.body)); },
        [&](const Expr::App& a) {
          Expr fn = erase(a.fn);
          return Expr::app(std::move(fn), erase(a.arg));
        },
        [&](const Expr::LamD& l) { return Expr::lam_d(l.binder, l.kind, erase(l.body)); },
        [&](const Expr::AppD& a) { return Expr::app_d(erase(a.fn), a.descr); },
        [&](const Expr::Let& l) {
          Expr bound = erase(l.bound);
          return Expr::let(l.name, std::move(bound), erase(l.body));
        },
    });
  }

  const GenConfig& cfg_;
  std::mt19937_64 rng_;
  Scope base_;
  std::size_t next_type_name_ = 0;
};

}  // namespace detail

/// A closed (modulo Γ), unification-variable-free, well-scoped term. Half
/// the terms (by default) come from a type-directed generator whose output
/// is declaratively typable before its annotations are randomly erased;
/// the rest are merely well-scoped.
inline Expr gen_term(const GenConfig& cfg, const Env& env = prelude()) {
  detail::TermGenerator g(cfg, env);
  return g.generate();
}

// ---------------------------------------------------------------------------
// Findings and violations

enum class Theorem { T1, T3, T4 };

inline const char* to_string(Theorem t) {
  switch (t) {
    case Theorem::T1: return "T1";
    case Theorem::T3: return "T3";
    case Theorem::T4: return "T4";
  }
  return "?";
}

/// One refuted property instance for one term.
struct Finding {
  Theorem theorem;
  std::optional<BugClass> cls;  // empty: no taxonomy class explains it
  std::string detail;
  std::optional<std::pair<Type, Type>> unify_pair;  // T1 only
  std::optional<Model> model;                       // T1 only
};

struct Violation {
  Expr term;
  Mode mode;
  Theorem theorem;
  std::optional<BugClass> cls;
  Expr minimized;
  std::string detail;
  std::optional<std::pair<Type, Type>> unify_pair;
  std::optional<Model> model;
  std::uint64_t seed = 0;
  std::size_t index = 0;
};

struct FuzzStats {
  std::size_t terms = 0;
  std::size_t inferred = 0;          // runs of the mode under test that succeeded
  std::size_t escape_free_checked = 0;  // empty scope_check, model found, elaborated
  std::size_t escape_free_failed = 0;
  std::size_t solver_skipped = 0;
  std::size_t t1 = 0;
  std::size_t t3 = 0;
  std::size_t t4 = 0;
  std::map<std::string, std::size_t> by_class;
};

struct FuzzReport {
  GenConfig config;
  std::size_t count = 0;
  Mode mode;
  FuzzStats stats;
  std::vector<Violation> violations;
};

namespace detail {

// Replaces unification variables under a quantifier by that quantifier's
// binder (innermost binder of the variable's kind), which is the type a
// reader would expect to unify with the inferred one.
inline Type binder_twin(const Type& t, const std::map<Ident, Kind>& kinds) {
  std::map<Ident, Ident> chosen;
  std::vector<std::pair<Ident, Kind>> stack;
  auto kind_of_uv = [&](const Ident& id) {
    auto it = kinds.find(id);
    return it == kinds.end() ? Kind::Type : it->second;
  };
  auto target = [&](const Ident& id) -> std::optional<Ident> {
    if (auto it = chosen.find(id); it != chosen.end()) return it->second;
    Kind k = kind_of_uv(id);
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
      if (it->second == k) {
        chosen.emplace(id, it->first);
        return it->first;
      }
    }
    return std::nullopt;
  };
  std::function<Effect(const Effect&)> eff = [&](const Effect& e) -> Effect {
    return e.visit(overloaded{
        [&](const Effect::Var& v) {
          if (v.id.is_unif()) {
            if (auto b = target(v.id)) return Effect::var(*b);
          }
          return e;
        },
        [&](const Effect::Pure&) { return e; },
        [&](const Effect::Join& j) { return Effect::join(eff(j.lhs), eff(j.rhs)); },
    });
  };
  std::function<Type(const Type&)> ty = [&](const Type& x) -> Type {
    return x.visit(overloaded{
        [&](const Type::Var& v) {
          if (v.id.is_unif()) {
            if (auto b = target(v.id)) return Type::var(*b);
          }
          return x;
        },
        [&](const Type::Arrow& a) { return Type::arrow(ty(a.arg), eff(a.eff), ty(a.res)); },
        [&](const Type::Forall& f) {
          stack.emplace_back(f.binder, f.kind);
          Type body = ty(f.body);
          stack.pop_back();
          return Type::forall(f.binder, f.kind, body);
        },
    });
  };
  return ty(t);
}

inline std::optional<BugClass> primary_class(const std::vector<BugReport>& escapes) {
  for (auto c : {BugClass::TypeVarEscape, BugClass::EffectVarEscape, BugClass::UnifPolyUnsound}) {
    for (const auto& b : escapes) {
      if (b.cls == c) return c;
    }
  }
  return std::nullopt;
}

struct TermOutcome {
  std::vector<Finding> findings;
  bool inferred = false;
  bool escape_free_checked = false;
  bool escape_free_failed = false;
  bool solver_skipped = false;
};

inline TermOutcome examine(const Env& env, const Expr& term, const Mode& mode,
                           const std::optional<Expr>& witness = std::nullopt,
                           bool wf_premises = true) {
  TermOutcome out;
  FreshSupply fs;
  Expr renamed = rename_globally(term, env, fs);
  InferOptions opts;
  opts.mode = mode;
  opts.wf_premises = wf_premises;
  std::optional<InferResult> r;
  std::optional<Error> failure;
  try {
    r = infer(env, renamed, opts, fs);
  } catch (const Error& e) {
    failure = e;
  }

  if (!r) {
    if (!mode.fixed && !failure->is(ErrorCode::PreconditionViolated)) {
      IncompletenessOutcome inc = classify_incompleteness(env, renamed, *failure, witness, opts);
      if (inc.bug) out.findings.push_back({Theorem::T4, inc.bug->cls, inc.detail, {}, {}});
    }
    return out;
  }
  out.inferred = true;

  SoundnessOutcome s = check_soundness(env, renamed, *r, CheckOptions{wf_premises});
  if (s.status == SoundnessStatus::Skipped) out.solver_skipped = true;
  bool escape_free = s.escapes.empty();
  if (escape_free && s.model && s.elaborated) {
    out.escape_free_checked = true;
    out.escape_free_failed = s.status == SoundnessStatus::Violated;
  }
  if (s.status == SoundnessStatus::Violated) {
    out.findings.push_back({Theorem::T3, primary_class(s.escapes), s.detail, {}, {}});
  }

  Type twin = binder_twin(r->ty, r->unif_kinds);
  if (!(twin == r->ty)) {
    FreshSupply ufs;
    ufs.reserve(std::max(max_serial(twin), max_serial(r->ty)));
    try {
      UnifyResult u = unify(twin, r->ty, ufs);
      IdentSet universe = default_universe(u.constraints, env);
      std::optional<Model> m = solve_bounded(u.constraints, universe);
      if (m) {
        UnifyVerdict v = verify_unify_correctness(twin, r->ty, *m);
        if (!v.holds) {
          out.findings.push_back({Theorem::T1, BugClass::UnifPolyUnsound, v.note,
                                  std::make_pair(twin, r->ty), *m});
        }
      }
    } catch (const Error&) {
      // Not unifiable or beyond the solver bounds: nothing to refute.
    }
  }
  return out;
}

inline std::size_t expr_size(const Expr& e) {
  auto tsize = [](const Type& t) {
    std::size_t n = 0;
    std::function<void(const Type&)> go = [&](const Type& x) {
      ++n;
      x.visit(overloaded{
          [](const Type::Var&) {},
          [&](const Type::Arrow& a) { go(a.arg); go(a.res); },
          [&](const Type::Forall& f) { go(f.body); },
      });
    };
    go(t);
    return n;
  };
  return e.visit(overloaded{
      [](const Expr::Var&) -> std::size_t { return 1; },
      [](const Expr::IntLit&) -> std::size_t { return 1; },
      [&](const Expr::Lam& l) { return 1 + tsize(l.annot) + expr_size(l.body); },
      [](const Expr::LamU& l) { return 1 + expr_size(l.body); },
      [](const Expr::App& a) { return 1 + expr_size(a.fn) + expr_size(a.arg); },
      [](const Expr::LamD& l) { return 1 + expr_size(l.body); },
      [&](const Expr::AppD& a) {
        return 1 + expr_size(a.fn) + (a.descr.is_type() ? tsize(a.descr.type()) : 1);
      },
      [](const Expr::Let& l) { return 1 + expr_size(l.bound) + expr_size(l.body); },
  });
}

// Every term obtained by replacing one node with one of its smaller
// variants, in pre-order.
inline void shrink_candidates(const Expr& e, const std::function<Expr(const Expr&)>& rebuild,
                              std::vector<Expr>& out) {
  auto offer = [&](const Expr& r) { out.push_back(rebuild(r)); };
  e.visit(overloaded{
      [&](const Expr::Var&) {},
      [&](const Expr::IntLit& i) {
        if (i.value != 0) offer(Expr::int_lit(0));
      },
      [&](const Expr::Lam& l) {
        offer(l.body);
        offer(Expr::lam_u(l.param, l.body));
        if (!(l.annot == int_type())) offer(Expr::lam(l.param, int_type(), l.body));
        if (const auto* a = l.annot.as_arrow()) {
          offer(Expr::lam(l.param, a->arg, l.body));
          offer(Expr::lam(l.param, a->res, l.body));
        }
        if (const auto* f = l.annot.as_forall()) offer(Expr::lam(l.param, f->body, l.body));
        shrink_candidates(l.body, [&](const Expr& b) { return rebuild(Expr::lam(l.param, l.annot, b)); },
                          out);
      },
      [&](const Expr::LamU& l) {
        offer(l.body);
        shrink_candidates(l.body, [&](const Expr& b) { return rebuild(Expr::lam_u(l.param, b)); },
                          out);
      },
      [&](const Expr::App& a) {
        offer(a.fn);
        offer(a.arg);
        shrink_candidates(a.fn, [&](const Expr& f) { return rebuild(Expr::app(f, a.arg)); }, out);
        shrink_candidates(a.arg, [&](const Expr& x) { return rebuild(Expr::app(a.fn, x)); }, out);
      },
      [&](const Expr::LamD& l) {
        offer(l.body);
        shrink_candidates(l.body,
                          [&](const Expr& b) { return rebuild(Expr::lam_d(l.binder, l.kind, b)); },
                          out);
      },
      [&](const Expr::AppD& a) {
        offer(a.fn);
        if (a.descr.is_type() && !(a.descr.type() == int_type())) {
          offer(Expr::app_d(a.fn, int_type()));
        }
        shrink_candidates(a.fn, [&](const Expr& f) { return rebuild(Expr::app_d(f, a.descr)); },
                          out);
      },
      [&](const Expr::Let& l) {
        offer(l.bound);
        offer(l.body);
        shrink_candidates(l.bound, [&](const Expr& b) { return rebuild(Expr::let(l.name, b, l.body)); },
                          out);
        shrink_candidates(l.body, [&](const Expr& b) { return rebuild(Expr::let(l.name, l.bound, b)); },
                          out);
      },
  });
}

inline bool reproduces(const Env& env, const Expr& term, const Mode& mode, const Finding& f) {
  TermOutcome o = examine(env, term, mode);
  for (const auto& g : o.findings) {
    if (g.theorem == f.theorem && g.cls == f.cls) return true;
  }
  return false;
}

/// Greedy subterm shrinking: take the first strictly smaller candidate that
/// still exhibits the same theorem and class, until none does.
inline Expr shrink(const Env& env, const Expr& term, const Mode& mode, const Finding& f,
                   std::size_t budget = 400) {
  Expr cur = term;
  std::size_t size = expr_size(cur);
  bool progress = true;
  while (progress && budget > 0) {
    progress = false;
    std::vector<Expr> cands;
    shrink_candidates(cur, [](const Expr& x) { return x; }, cands);
    for (const auto& c : cands) {
      std::size_t cs = expr_size(c);
      if (cs >= size) continue;
      if (budget == 0) break;
      --budget;
      if (reproduces(env, c, mode, f)) {
        cur = c;
        size = cs;
        progress = true;
        break;
      }
    }
  }
  return cur;
}

}  // namespace detail

/// Generates `count` terms from `cfg` (term i uses a seed derived from
/// (cfg.seed, i)) and runs the property pipeline on each.
inline FuzzReport run_fuzz(const GenConfig& cfg, std::size_t count, Mode mode = Mode::faithful(),
                           const Env& env = prelude()) {
  FuzzReport rep;
  rep.config = cfg;
  rep.count = count;
  rep.mode = mode;
  for (std::size_t i = 0; i < count; ++i) {
    GenConfig ci = cfg;
    ci.seed = detail::mix_seed(cfg.seed, i);
    Expr term = gen_term(ci, env);
    detail::TermOutcome o = detail::examine(env, term, mode);
    ++rep.stats.terms;
    rep.stats.inferred += o.inferred;
    rep.stats.escape_free_checked += o.escape_free_checked;
    rep.stats.escape_free_failed += o.escape_free_failed;
    rep.stats.solver_skipped += o.solver_skipped;
    for (const auto& f : o.findings) {
      Violation v{term, mode, f.theorem, f.cls, term, f.detail, f.unify_pair, f.model, cfg.seed, i};
      if (f.theorem == Theorem::T1) {
        v.minimized = term;  // the refuted pair is already minimal evidence
      } else {
        v.minimized = detail::shrink(env, term, mode, f);
      }
      switch (f.theorem) {
        case Theorem::T1: ++rep.stats.t1; break;
        case Theorem::T3: ++rep.stats.t3; break;
        case Theorem::T4: ++rep.stats.t4; break;
      }
      ++rep.stats.by_class[f.cls ? to_string(*f.cls) : "Unclassified"];
      rep.violations.push_back(std::move(v));
    }
  }
  return rep;
}

inline std::vector<Violation> run_properties(const GenConfig& cfg, std::size_t count,
                                             Mode mode = Mode::faithful()) {
  return run_fuzz(cfg, count, mode).violations;
}

/// A seed program for the pipeline, with an optional annotated witness of
/// its declarative typability.
struct SeedTerm {
  Expr term;
  std::optional<Expr> witness;
  Env env = prelude();
};

/// Runs the pipeline on given terms (for instance the corpus programs).
inline std::vector<Violation> run_properties_on(const std::vector<SeedTerm>& seeds,
                                                Mode mode = Mode::faithful()) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const SeedTerm& s = seeds[i];
    detail::TermOutcome o = detail::examine(s.env, s.term, mode, s.witness);
    for (const auto& f : o.findings) {
      out.push_back({s.term, mode, f.theorem, f.cls, s.term, f.detail, f.unify_pair, f.model, 0, i});
    }
  }
  return out;
}

}  // namespace effrec
