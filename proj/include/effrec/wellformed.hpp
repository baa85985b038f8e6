#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "effrec/error.hpp"
#include "effrec/print.hpp"
#include "effrec/subst.hpp"
#include "effrec/syntax.hpp"

namespace effrec {

// ---------------------------------------------------------------------------
// Kinding

namespace detail {

class Kinder {
 public:
  explicit Kinder(const Env& env) : env_(env) {}

  void type(const Type& t) {
    t.visit(overloaded{
        [&](const Type::Var& v) { expect(v.id, Kind::Type); },
        [&](const Type::Arrow& a) {
          type(a.arg);
          effect(a.eff);
          type(a.res);
        },
        [&](const Type::Forall& f) {
          scope_.push_back(KindBind{f.binder, f.kind});
          type(f.body);
          scope_.pop_back();
        },
    });
  }

  void effect(const Effect& e) {
    e.visit(overloaded{
        [&](const Effect::Var& v) { expect(v.id, Kind::Effect); },
        [](const Effect::Pure&) {},
        [&](const Effect::Join& j) {
          effect(j.lhs);
          effect(j.rhs);
        },
    });
  }

 private:
  void expect(const Ident& id, Kind wanted) {
    std::optional<Kind> k;
    if (!id.is_unif()) {
      for (auto it = scope_.rbegin(); it != scope_.rend() && !k; ++it) {
        if (it->id == id) k = it->kind;
      }
    }
    if (!k) k = env_.kind_of_ident(id);
    if (!k) throw Error(ErrorCode::UnboundVariable, "unbound variable " + id.str(), {id.str()});
    if (*k != wanted) {
      throw Error(ErrorCode::KindMismatch,
                  id.str() + " has kind " + to_string(*k) + " but kind " + to_string(wanted) +
                      " is required",
                  {id.str(), to_string(*k), to_string(wanted)});
    }
  }

  const Env& env_;
  std::vector<KindBind> scope_;
};

}  // namespace detail

/// Γ ⊢ δ : κ. Throws UnboundVariable or KindMismatch.
inline Kind kind_of(const Env& env, const Descriptor& d) {
  detail::Kinder k(env);
  if (d.is_type()) {
    k.type(d.type());
    return Kind::Type;
  }
  k.effect(d.effect());
  return Kind::Effect;
}

/// Checks Γ ⊢ δ : want, reporting a KindMismatch that names the descriptor.
inline void expect_kind(const Env& env, const Descriptor& d, Kind want) {
  Kind got = kind_of(env, d);
  if (got != want) {
    throw Error(ErrorCode::KindMismatch,
                print(d) + " has kind " + to_string(got) + " but kind " + to_string(want) +
                    " is required",
                {print(d), to_string(got), to_string(want)});
  }
}

// ---------------------------------------------------------------------------
// Uniqueness of bound variables

enum class UniquenessViolation { BoundTwice, Shadows, InEnvDomain };

inline const char* to_string(UniquenessViolation v) {
  switch (v) {
    case UniquenessViolation::BoundTwice: return "BoundTwice";
    case UniquenessViolation::Shadows: return "Shadows";
    case UniquenessViolation::InEnvDomain: return "InEnvDomain";
  }
  return "?";
}

struct UniquenessReport {
  bool holds = true;
  std::optional<std::pair<Ident, UniquenessViolation>> offending;

  static UniquenessReport ok() { return {}; }
  static UniquenessReport fail(Ident id, UniquenessViolation why) {
    return {false, std::make_pair(std::move(id), why)};
  }
};

/// gUnique(Γ, A): every bound variable of A is bound exactly once in A and
/// is not in dom(Γ).
template <class A>
UniquenessReport g_unique(const Env& env, const A& a) {
  IdentSet seen;
  for (const auto& id : binders(a)) {
    if (env.binds_kind(id)) return UniquenessReport::fail(id, UniquenessViolation::InEnvDomain);
    if (!seen.insert(id).second) {
      return UniquenessReport::fail(id, UniquenessViolation::BoundTwice);
    }
  }
  return UniquenessReport::ok();
}

namespace detail {

class ShadowFinder {
 public:
  explicit ShadowFinder(const Env& env) : env_(env) {}

  std::optional<std::pair<Ident, UniquenessViolation>> found;

  void binder(const Ident& id) {
    if (found) return;
    if (env_.binds_kind(id)) {
      found = std::make_pair(id, UniquenessViolation::InEnvDomain);
    } else if (std::find(stack_.begin(), stack_.end(), id) != stack_.end()) {
      found = std::make_pair(id, UniquenessViolation::Shadows);
    }
  }

  void type(const Type& t) {
    if (found) return;
    t.visit(overloaded{
        [](const Type::Var&) {},
        [&](const Type::Arrow& a) {
          type(a.arg);
          type(a.res);
        },
        [&](const Type::Forall& f) {
          binder(f.binder);
          stack_.push_back(f.binder);
          type(f.body);
          stack_.pop_back();
        },
    });
  }

  void descr(const Descriptor& d) {
    if (d.is_type()) type(d.type());
  }

  void expr(const Expr& e) {
    if (found) return;
    e.visit(overloaded{
        [](const Expr::Var&) {},
        [](const Expr::IntLit&) {},
        [&](const Expr::Lam& l) {
          type(l.annot);
          expr(l.body);
        },
        [&](const Expr::LamU& l) { expr(l.body); },
        [&](const Expr::App& a) {
          expr(a.fn);
          expr(a.arg);
        },
        [&](const Expr::LamD& l) {
          binder(l.binder);
          stack_.push_back(l.binder);
          expr(l.body);
          stack_.pop_back();
        },
        [&](const Expr::AppD& a) {
          expr(a.fn);
          descr(a.descr);
        },
        [&](const Expr::Let& l) {
          expr(l.bound);
          expr(l.body);
        },
    });
  }

 private:
  const Env& env_;
  std::vector<Ident> stack_;
};

}  // namespace detail

/// lUnique(Γ, A): no bound variable of A shadows another bound variable of
/// A, and none is in dom(Γ). For an environment, each assigned type is
/// checked on its own.
inline UniquenessReport l_unique(const Env& env, const Type& t) {
  detail::ShadowFinder f(env);
  f.type(t);
  return f.found ? UniquenessReport{false, f.found} : UniquenessReport::ok();
}

inline UniquenessReport l_unique(const Env& env, const Descriptor& d) {
  detail::ShadowFinder f(env);
  f.descr(d);
  return f.found ? UniquenessReport{false, f.found} : UniquenessReport::ok();
}

inline UniquenessReport l_unique(const Env& env, const Expr& e) {
  detail::ShadowFinder f(env);
  f.expr(e);
  return f.found ? UniquenessReport{false, f.found} : UniquenessReport::ok();
}

inline UniquenessReport l_unique(const Env& env, const Env& a) {
  for (const auto& entry : a.entries()) {
    if (const auto* tb = std::get_if<TypeBind>(&entry)) {
      if (auto r = l_unique(env, tb->type); !r.holds) return r;
    }
  }
  return UniquenessReport::ok();
}

// ---------------------------------------------------------------------------
// Global alpha-renaming

namespace detail {

class Renamer {
 public:
  Renamer(IdentSet clashing, FreshSupply& fs) : clashing_(std::move(clashing)), fs_(fs) {}

  Type type(const Type& t) {
    return t.visit(overloaded{
        [&](const Type::Var& v) { return Type::var(lookup(v.id)); },
        [&](const Type::Arrow& a) {
          Type arg = type(a.arg);
          Effect eff = effect(a.eff);
          return Type::arrow(std::move(arg), std::move(eff), type(a.res));
        },
        [&](const Type::Forall& f) {
          Ident fresh = open(f.binder);
          Type body = type(f.body);
          close();
          return Type::forall(fresh, f.kind, body);
        },
    });
  }

  Effect effect(const Effect& e) {
    return e.visit(overloaded{
        [&](const Effect::Var& v) { return Effect::var(lookup(v.id)); },
        [&](const Effect::Pure&) { return e; },
        [&](const Effect::Join& j) {
          Effect lhs = effect(j.lhs);
          return Effect::join(std::move(lhs), effect(j.rhs));
        },
    });
  }

  Descriptor descr(const Descriptor& d) {
    if (d.is_type()) return type(d.type());
    return effect(d.effect());
  }

  Expr expr(const Expr& e) {
    Span s = e.span();
    return e.visit(overloaded{
        [&](const Expr::Var&) { return e; },
        [&](const Expr::IntLit&) { return e; },
        [&](const Expr::Lam& l) {
          Type annot = type(l.annot);
          return Expr::lam(l.param, std::move(annot), expr(l.body), s);
        },
        [&](const Expr::LamU& l) { return Expr::lam_u(l.param, expr(l.body), s); },
        [&](const Expr::App& a) {
          Expr fn = expr(a.fn);
          return Expr::app(std::move(fn), expr(a.arg), s);
        },
        [&](const Expr::LamD& l) {
          Ident fresh = open(l.binder);
          Expr body = expr(l.body);
          close();
          return Expr::lam_d(fresh, l.kind, body, s);
        },
        [&](const Expr::AppD& a) {
          Expr fn = expr(a.fn);
          return Expr::app_d(std::move(fn), descr(a.descr), s);
        },
        [&](const Expr::Let& l) {
          Expr bound = expr(l.bound);
          return Expr::let(l.name, std::move(bound), expr(l.body), s);
        },
    });
  }

 private:
  Ident open(const Ident& binder) {
    Ident target = clashing_.count(binder) ? fs_.type_var() : binder;
    scope_.emplace_back(binder, target);
    return target;
  }
  void close() { scope_.pop_back(); }

  Ident lookup(const Ident& id) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
      if (it->first == id) return it->second;
    }
    return id;
  }

  IdentSet clashing_;
  FreshSupply& fs_;
  std::vector<std::pair<Ident, Ident>> scope_;
};

}  // namespace detail

/// Alpha-renames the bound type/effect variables of `e` so that the result
/// satisfies gUnique(Γ, ·) and binds nothing that Γ binds. Binders whose
/// names are already unique keep them; every clashing binder gets a fresh
/// `%b` name.
inline Expr rename_globally(const Expr& e, const Env& env, FreshSupply& fs) {
  fs.reserve(max_serial(e));
  fs.reserve(max_serial(env));

  std::map<Ident, int> counts;
  for (const auto& id : binders(e)) ++counts[id];

  IdentSet clashing = free_vars(e);
  collect_free(env, clashing);
  for (const auto& id : binders(env)) clashing.insert(id);
  for (const auto& [id, n] : counts) {
    if (n > 1) clashing.insert(id);
  }

  detail::Renamer r(std::move(clashing), fs);
  return r.expr(e);
}

}  // namespace effrec
