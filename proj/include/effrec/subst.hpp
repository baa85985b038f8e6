#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>

#include "effrec/error.hpp"
#include "effrec/print.hpp"
#include "effrec/syntax.hpp"

namespace effrec {

using IdentSet = std::set<Ident>;

// ---------------------------------------------------------------------------
// Fresh names

/// Deterministic source of fresh identifiers. Serials are shared between
/// both flavors and never repeat within a run. The kind of every generated
/// unification variable is logged so that later kinding can resolve it.
class FreshSupply {
 public:
  explicit FreshSupply(std::uint64_t start = 1) : next_(std::max<std::uint64_t>(start, 1)) {}

  Ident type_var() { return Ident::rigid("%b", next_++); }

  Ident unif_var(Kind kind) {
    Ident id = Ident::unif("X", next_++);
    unif_kinds_.emplace(id, kind);
    return id;
  }

  std::uint64_t peek() const { return next_; }

  /// Ensure future serials are strictly above `serial`.
  void reserve(std::uint64_t serial) { next_ = std::max(next_, serial + 1); }

  const std::map<Ident, Kind>& unif_kinds() const { return unif_kinds_; }

 private:
  std::uint64_t next_;
  std::map<Ident, Kind> unif_kinds_;
};

// ---------------------------------------------------------------------------
// Free and bound variables

inline void collect_free(const Effect& e, IdentSet& out) {
  e.visit(overloaded{
      [&](const Effect::Var& v) { out.insert(v.id); },
      [](const Effect::Pure&) {},
      [&](const Effect::Join& j) {
        collect_free(j.lhs, out);
        collect_free(j.rhs, out);
      },
  });
}

inline void collect_free(const Type& t, IdentSet& out) {
  t.visit(overloaded{
      [&](const Type::Var& v) { out.insert(v.id); },
      [&](const Type::Arrow& a) {
        collect_free(a.arg, out);
        collect_free(a.eff, out);
        collect_free(a.res, out);
      },
      [&](const Type::Forall& f) {
        IdentSet inner;
        collect_free(f.body, inner);
        inner.erase(f.binder);
        out.insert(inner.begin(), inner.end());
      },
  });
}

inline void collect_free(const Descriptor& d, IdentSet& out) {
  d.visit([&](const auto& x) { collect_free(x, out); });
}

inline void collect_free(const Expr& e, IdentSet& out) {
  e.visit(overloaded{
      [](const Expr::Var&) {},
      [](const Expr::IntLit&) {},
      [&](const Expr::Lam& l) {
        collect_free(l.annot, out);
        collect_free(l.body, out);
      },
      [&](const Expr::LamU& l) { collect_free(l.body, out); },
      [&](const Expr::App& a) {
        collect_free(a.fn, out);
        collect_free(a.arg, out);
      },
      [&](const Expr::LamD& l) {
        IdentSet inner;
        collect_free(l.body, inner);
        inner.erase(l.binder);
        out.insert(inner.begin(), inner.end());
      },
      [&](const Expr::AppD& a) {
        collect_free(a.fn, out);
        collect_free(a.descr, out);
      },
      [&](const Expr::Let& l) {
        collect_free(l.bound, out);
        collect_free(l.body, out);
      },
  });
}

/// FV(Γ): the kind-bound identifiers plus the free identifiers of every
/// type assigned to a term variable.
inline void collect_free(const Env& env, IdentSet& out) {
  for (const auto& entry : env.entries()) {
    std::visit(overloaded{
                   [&](const KindBind& kb) { out.insert(kb.id); },
                   [&](const TypeBind& tb) { collect_free(tb.type, out); },
               },
               entry);
  }
}

template <class A>
IdentSet free_vars(const A& a) {
  IdentSet out;
  collect_free(a, out);
  return out;
}

/// FUV: the unification variables among the free identifiers.
template <class A>
IdentSet free_unif_vars(const A& a) {
  IdentSet out;
  for (const auto& id : free_vars(a)) {
    if (id.is_unif()) out.insert(id);
  }
  return out;
}

template <class A>
bool occurs_free(const Ident& id, const A& a) {
  return free_vars(a).count(id) != 0;
}

inline bool contains_unif_var(const Type& t) { return !free_unif_vars(t).empty(); }

/// Every identifier in binding position, with multiplicity, in traversal order.
inline void collect_binders(const Type& t, std::vector<Ident>& out) {
  t.visit(overloaded{
      [](const Type::Var&) {},
      [&](const Type::Arrow& a) {
        collect_binders(a.arg, out);
        collect_binders(a.res, out);
      },
      [&](const Type::Forall& f) {
        out.push_back(f.binder);
        collect_binders(f.body, out);
      },
  });
}

inline void collect_binders(const Effect&, std::vector<Ident>&) {}

inline void collect_binders(const Descriptor& d, std::vector<Ident>& out) {
  if (d.is_type()) collect_binders(d.type(), out);
}

inline void collect_binders(const Expr& e, std::vector<Ident>& out) {
  e.visit(overloaded{
      [](const Expr::Var&) {},
      [](const Expr::IntLit&) {},
      [&](const Expr::Lam& l) {
        collect_binders(l.annot, out);
        collect_binders(l.body, out);
      },
      [&](const Expr::LamU& l) { collect_binders(l.body, out); },
      [&](const Expr::App& a) {
        collect_binders(a.fn, out);
        collect_binders(a.arg, out);
      },
      [&](const Expr::LamD& l) {
        out.push_back(l.binder);
        collect_binders(l.body, out);
      },
      [&](const Expr::AppD& a) {
        collect_binders(a.fn, out);
        collect_binders(a.descr, out);
      },
      [&](const Expr::Let& l) {
        collect_binders(l.bound, out);
        collect_binders(l.body, out);
      },
  });
}

inline void collect_binders(const Env& env, std::vector<Ident>& out) {
  for (const auto& entry : env.entries()) {
    if (const auto* tb = std::get_if<TypeBind>(&entry)) collect_binders(tb->type, out);
  }
}

template <class A>
std::vector<Ident> binders(const A& a) {
  std::vector<Ident> out;
  collect_binders(a, out);
  return out;
}

/// Largest serial of any identifier occurring (free or bound) in the term;
/// used to start a FreshSupply above all serials already present.
template <class A>
std::uint64_t max_serial(const A& a) {
  std::uint64_t m = 0;
  for (const auto& id : free_vars(a)) m = std::max(m, id.serial);
  for (const auto& id : binders(a)) m = std::max(m, id.serial);
  return m;
}

// ---------------------------------------------------------------------------
// Monotypes

inline bool monotype(const Type& t) {
  return t.visit(overloaded{
      [](const Type::Var&) { return true; },
      [](const Type::Arrow& a) { return monotype(a.arg) && monotype(a.res); },
      [](const Type::Forall&) { return false; },
  });
}

// ---------------------------------------------------------------------------
// Substitutions

/// Finite map from identifiers to descriptors. The descriptor's tag is the
/// entry's kind; application checks that a type-position variable maps to a
/// type and an effect-position variable to an effect.
class Subst {
 public:
  Subst() = default;
  Subst(std::initializer_list<std::pair<const Ident, Descriptor>> init) : map_(init) {}

  static Subst single(Ident id, Descriptor d) {
    Subst s;
    s.bind(std::move(id), std::move(d));
    return s;
  }

  void bind(Ident id, Descriptor d) { map_.insert_or_assign(std::move(id), std::move(d)); }
  void erase(const Ident& id) { map_.erase(id); }

  const Descriptor* find(const Ident& id) const {
    auto it = map_.find(id);
    return it == map_.end() ? nullptr : &it->second;
  }
  bool contains(const Ident& id) const { return map_.count(id) != 0; }
  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }

  auto begin() const { return map_.begin(); }
  auto end() const { return map_.end(); }

  /// σ2σ1: (σ2σ1)(ι) = σ2(σ1(ι)) on dom(σ1), σ2(ι) elsewhere.
  static Subst compose(const Subst& outer, const Subst& inner);

  friend bool operator==(const Subst& a, const Subst& b) {
    if (a.map_.size() != b.map_.size()) return false;
    auto it = b.map_.begin();
    for (const auto& [k, v] : a.map_) {
      if (!(k == it->first) || !(v == it->second)) return false;
      ++it;
    }
    return true;
  }

 private:
  std::map<Ident, Descriptor> map_;
};

inline std::string print(const Subst& s) {
  std::string out = "[";
  bool first = true;
  for (const auto& [id, d] : s) {
    if (!first) out += ", ";
    first = false;
    out += id.str() + " := " + print(d);
  }
  return out + "]";
}

namespace detail {

[[noreturn]] inline void kind_mismatch(const Ident& id, const Descriptor& d, Kind wanted) {
  throw Error(ErrorCode::KindMismatch,
              "substitution maps " + id.str() + " to " + print(d) + " of kind " +
                  to_string(d.kind()) + " where kind " + to_string(wanted) + " is required",
              {id.str(), print(d)});
}

// Capturing application. Returns nullopt when nothing changed so callers
// can keep sharing the original node.
inline std::optional<Effect> capture(const Subst& s, const Effect& e) {
  return e.visit(overloaded{
      [&](const Effect::Var& v) -> std::optional<Effect> {
        const auto* d = s.find(v.id);
        if (!d) return std::nullopt;
        if (!d->is_effect()) kind_mismatch(v.id, *d, Kind::Effect);
        return d->effect();
      },
      [](const Effect::Pure&) -> std::optional<Effect> { return std::nullopt; },
      [&](const Effect::Join& j) -> std::optional<Effect> {
        auto l = capture(s, j.lhs);
        auto r = capture(s, j.rhs);
        if (!l && !r) return std::nullopt;
        return Effect::join(l ? *l : j.lhs, r ? *r : j.rhs);
      },
  });
}

inline std::optional<Type> capture(const Subst& s, const Type& t) {
  return t.visit(overloaded{
      [&](const Type::Var& v) -> std::optional<Type> {
        const auto* d = s.find(v.id);
        if (!d) return std::nullopt;
        if (!d->is_type()) kind_mismatch(v.id, *d, Kind::Type);
        return d->type();
      },
      [&](const Type::Arrow& a) -> std::optional<Type> {
        auto arg = capture(s, a.arg);
        auto eff = capture(s, a.eff);
        auto res = capture(s, a.res);
        if (!arg && !eff && !res) return std::nullopt;
        return Type::arrow(arg ? *arg : a.arg, eff ? *eff : a.eff, res ? *res : a.res);
      },
      [&](const Type::Forall& f) -> std::optional<Type> {
        // Textual: the binder stays, every non-binding occurrence is replaced.
        auto body = capture(s, f.body);
        if (!body) return std::nullopt;
        return Type::forall(f.binder, f.kind, *body);
      },
  });
}

}  // namespace detail

/// [σ]A: capturing substitution. Binders are never renamed, so images may
/// become bound by enclosing quantifiers.
inline Effect subst_capturing(const Subst& s, const Effect& e) {
  if (s.empty()) return e;
  auto r = detail::capture(s, e);
  return r ? *r : e;
}

inline Type subst_capturing(const Subst& s, const Type& t) {
  if (s.empty()) return t;
  auto r = detail::capture(s, t);
  return r ? *r : t;
}

inline Descriptor subst_capturing(const Subst& s, const Descriptor& d) {
  if (d.is_type()) return subst_capturing(s, d.type());
  return subst_capturing(s, d.effect());
}

inline Env subst_capturing(const Subst& s, const Env& env) {
  if (s.empty()) return env;
  Env out = env;
  for (auto& entry : out.entries()) {
    if (auto* tb = std::get_if<TypeBind>(&entry)) tb->type = subst_capturing(s, tb->type);
  }
  return out;
}

inline Subst Subst::compose(const Subst& outer, const Subst& inner) {
  Subst out;
  for (const auto& [id, d] : inner) out.bind(id, subst_capturing(outer, d));
  for (const auto& [id, d] : outer) {
    if (!inner.contains(id)) out.bind(id, d);
  }
  return out;
}

/// {σ}A: capture-avoiding substitution. A quantifier is renamed to a fresh
/// `%b` only when one of the images that actually reaches its body
/// mentions the binder.
inline Type subst_avoiding(const Subst& s, FreshSupply& fs, const Type& t);

inline Effect subst_avoiding(const Subst& s, FreshSupply&, const Effect& e) {
  return subst_capturing(s, e);
}

inline Type subst_avoiding(const Subst& s, FreshSupply& fs, const Type& t) {
  if (s.empty()) return t;
  return t.visit(overloaded{
      [&](const Type::Var&) { return subst_capturing(s, t); },
      [&](const Type::Arrow& a) {
        Type arg = subst_avoiding(s, fs, a.arg);
        return Type::arrow(std::move(arg), subst_capturing(s, a.eff), subst_avoiding(s, fs, a.res));
      },
      [&](const Type::Forall& f) {
        Subst inner;
        IdentSet reaching;
        for (const auto& id : free_vars(f.body)) {
          if (id == f.binder) continue;
          if (const auto* d = s.find(id)) {
            inner.bind(id, *d);
            collect_free(*d, reaching);
          }
        }
        if (inner.empty()) return t;
        if (reaching.count(f.binder) == 0) {
          return Type::forall(f.binder, f.kind, subst_avoiding(inner, fs, f.body));
        }
        Ident fresh = fs.type_var();
        inner.bind(f.binder, f.kind == Kind::Type ? Descriptor(Type::var(fresh))
                                                  : Descriptor(Effect::var(fresh)));
        return Type::forall(fresh, f.kind, subst_avoiding(inner, fs, f.body));
      },
  });
}

inline Descriptor subst_avoiding(const Subst& s, FreshSupply& fs, const Descriptor& d) {
  if (d.is_type()) return subst_avoiding(s, fs, d.type());
  return subst_avoiding(s, fs, d.effect());
}

/// The descriptor `Var(id)` at the given kind.
inline Descriptor var_descriptor(const Ident& id, Kind kind) {
  return kind == Kind::Type ? Descriptor(Type::var(id)) : Descriptor(Effect::var(id));
}

}  // namespace effrec
