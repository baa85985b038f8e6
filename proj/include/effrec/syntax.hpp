#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace effrec {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

// ---------------------------------------------------------------------------
// Identifiers and kinds

enum class Flavor : std::uint8_t { TypeVar, UnifVar };

/// A type/effect-level identifier: either a rigid variable (α) or a
/// unification variable (?X). Generated identifiers carry a nonzero serial.
struct Ident {
  std::string name;
  Flavor flavor = Flavor::TypeVar;
  std::uint64_t serial = 0;

  static Ident rigid(std::string name, std::uint64_t serial = 0) {
    return Ident{std::move(name), Flavor::TypeVar, serial};
  }
  static Ident unif(std::string name, std::uint64_t serial = 0) {
    return Ident{std::move(name), Flavor::UnifVar, serial};
  }

  bool is_unif() const { return flavor == Flavor::UnifVar; }

  std::string str() const {
    std::string out = is_unif() ? "?" + name : name;
    if (serial != 0) out += std::to_string(serial);
    return out;
  }

  friend bool operator==(const Ident&, const Ident&) = default;
  friend std::strong_ordering operator<=>(const Ident&, const Ident&) = default;
};

enum class Kind : std::uint8_t { Type, Effect };

inline const char* to_string(Kind k) { return k == Kind::Type ? "Type" : "Effect"; }

// ---------------------------------------------------------------------------
// Effects: ε ::= α | ?X | pure | ε ∨ ε  (kept as written; no normalization)

class Effect {
 public:
  struct Var {
    Ident id;
  };
  struct Pure {};
  struct Join;

  Effect();  // pure
  static Effect var(Ident id);
  static Effect pure() { return Effect(); }
  static Effect join(Effect lhs, Effect rhs);

  const Var* as_var() const;
  const Join* as_join() const;
  bool is_pure() const;

  template <class F>
  decltype(auto) visit(F&& f) const;

 private:
  struct Node;
  explicit Effect(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

struct Effect::Join {
  Effect lhs;
  Effect rhs;
};

struct Effect::Node {
  std::variant<Var, Pure, Join> v;
};

inline Effect::Effect() {
  static const auto pure_node = std::make_shared<const Node>(Node{Pure{}});
  node_ = pure_node;
}
inline Effect Effect::var(Ident id) {
  return Effect(std::make_shared<const Node>(Node{Var{std::move(id)}}));
}
inline Effect Effect::join(Effect lhs, Effect rhs) {
  return Effect(std::make_shared<const Node>(Node{Join{std::move(lhs), std::move(rhs)}}));
}
inline const Effect::Var* Effect::as_var() const { return std::get_if<Var>(&node_->v); }
inline const Effect::Join* Effect::as_join() const { return std::get_if<Join>(&node_->v); }
inline bool Effect::is_pure() const { return std::holds_alternative<Pure>(node_->v); }
template <class F>
decltype(auto) Effect::visit(F&& f) const {
  return std::visit(std::forward<F>(f), node_->v);
}

/// Left-nested join of all given effects, e.g. join_all({a, b, c}) = (a | b) | c.
inline Effect join_all(std::initializer_list<Effect> effects) {
  auto it = effects.begin();
  Effect out = *it++;
  for (; it != effects.end(); ++it) out = Effect::join(out, *it);
  return out;
}

// ---------------------------------------------------------------------------
// Types: τ ::= α | ?X | τ -{ε}-> τ | ∀α:κ.τ

class Type {
 public:
  struct Var {
    Ident id;
  };
  struct Arrow;
  struct Forall;

  static Type var(Ident id);
  static Type arrow(Type arg, Effect eff, Type res);
  static Type forall(Ident binder, Kind kind, Type body);

  const Var* as_var() const;
  const Arrow* as_arrow() const;
  const Forall* as_forall() const;

  template <class F>
  decltype(auto) visit(F&& f) const;

 private:
  struct Node;
  explicit Type(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

struct Type::Arrow {
  Type arg;
  Effect eff;
  Type res;
};

struct Type::Forall {
  Ident binder;
  Kind kind;
  Type body;
};

struct Type::Node {
  std::variant<Var, Arrow, Forall> v;
};

inline Type Type::var(Ident id) {
  return Type(std::make_shared<const Node>(Node{Var{std::move(id)}}));
}
inline Type Type::arrow(Type arg, Effect eff, Type res) {
  return Type(std::make_shared<const Node>(
      Node{Arrow{std::move(arg), std::move(eff), std::move(res)}}));
}
inline Type Type::forall(Ident binder, Kind kind, Type body) {
  return Type(std::make_shared<const Node>(
      Node{Forall{std::move(binder), kind, std::move(body)}}));
}
inline const Type::Var* Type::as_var() const { return std::get_if<Var>(&node_->v); }
inline const Type::Arrow* Type::as_arrow() const { return std::get_if<Arrow>(&node_->v); }
inline const Type::Forall* Type::as_forall() const { return std::get_if<Forall>(&node_->v); }
template <class F>
decltype(auto) Type::visit(F&& f) const {
  return std::visit(std::forward<F>(f), node_->v);
}

// ---------------------------------------------------------------------------
// Descriptors: δ ::= ε | τ

class Descriptor {
 public:
  Descriptor(Type t) : v_(std::move(t)) {}    // NOLINT(google-explicit-constructor)
  Descriptor(Effect e) : v_(std::move(e)) {}  // NOLINT(google-explicit-constructor)

  bool is_type() const { return std::holds_alternative<Type>(v_); }
  bool is_effect() const { return !is_type(); }
  Kind kind() const { return is_type() ? Kind::Type : Kind::Effect; }
  const Type& type() const { return std::get<Type>(v_); }
  const Effect& effect() const { return std::get<Effect>(v_); }

  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), v_);
  }

 private:
  std::variant<Type, Effect> v_;
};

// ---------------------------------------------------------------------------
// Structural comparison (no alpha, no ACI): a total order used for
// constraint sets and for "structurally equal" round-trip checks.

std::strong_ordering compare(const Effect& a, const Effect& b);
std::strong_ordering compare(const Type& a, const Type& b);
std::strong_ordering compare(const Descriptor& a, const Descriptor& b);

inline std::strong_ordering compare(const Effect& a, const Effect& b) {
  const auto* av = a.as_var();
  const auto* bv = b.as_var();
  const auto* aj = a.as_join();
  const auto* bj = b.as_join();
  auto rank = [](const Effect& e) { return e.is_pure() ? 0 : e.as_var() ? 1 : 2; };
  if (auto c = rank(a) <=> rank(b); c != 0) return c;
  if (av) return av->id <=> bv->id;
  if (aj) {
    if (auto c = compare(aj->lhs, bj->lhs); c != 0) return c;
    return compare(aj->rhs, bj->rhs);
  }
  return std::strong_ordering::equal;
}

inline std::strong_ordering compare(const Type& a, const Type& b) {
  auto rank = [](const Type& t) { return t.as_var() ? 0 : t.as_arrow() ? 1 : 2; };
  if (auto c = rank(a) <=> rank(b); c != 0) return c;
  if (const auto* av = a.as_var()) return av->id <=> b.as_var()->id;
  if (const auto* aa = a.as_arrow()) {
    const auto* ba = b.as_arrow();
    if (auto c = compare(aa->arg, ba->arg); c != 0) return c;
    if (auto c = compare(aa->eff, ba->eff); c != 0) return c;
    return compare(aa->res, ba->res);
  }
  const auto* af = a.as_forall();
  const auto* bf = b.as_forall();
  if (auto c = af->binder <=> bf->binder; c != 0) return c;
  if (auto c = af->kind <=> bf->kind; c != 0) return c;
  return compare(af->body, bf->body);
}

inline std::strong_ordering compare(const Descriptor& a, const Descriptor& b) {
  if (auto c = a.kind() <=> b.kind(); c != 0) return c;
  return a.is_type() ? compare(a.type(), b.type()) : compare(a.effect(), b.effect());
}

inline bool operator==(const Effect& a, const Effect& b) { return compare(a, b) == 0; }
inline bool operator==(const Type& a, const Type& b) { return compare(a, b) == 0; }
inline bool operator==(const Descriptor& a, const Descriptor& b) { return compare(a, b) == 0; }

// ---------------------------------------------------------------------------
// Expressions

struct Span {
  int line = 0;
  int col = 0;
};

class Expr {
 public:
  struct Var {
    std::string name;
  };
  struct Lam;
  struct LamU;
  struct App;
  struct LamD;
  struct AppD;
  struct Let;
  struct IntLit {
    std::int64_t value;
  };

  static Expr var(std::string name, Span s = {});
  static Expr lam(std::string param, Type annot, Expr body, Span s = {});
  static Expr lam_u(std::string param, Expr body, Span s = {});
  static Expr app(Expr fn, Expr arg, Span s = {});
  static Expr lam_d(Ident binder, Kind kind, Expr body, Span s = {});
  static Expr app_d(Expr fn, Descriptor descr, Span s = {});
  static Expr let(std::string name, Expr bound, Expr body, Span s = {});
  static Expr int_lit(std::int64_t value, Span s = {});

  template <class T>
  const T* as() const;

  Span span() const;

  template <class F>
  decltype(auto) visit(F&& f) const;

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

struct Expr::Lam {
  std::string param;
  Type annot;
  Expr body;
};
struct Expr::LamU {
  std::string param;
  Expr body;
};
struct Expr::App {
  Expr fn;
  Expr arg;
};
struct Expr::LamD {
  Ident binder;
  Kind kind;
  Expr body;
};
struct Expr::AppD {
  Expr fn;
  Descriptor descr;
};
struct Expr::Let {
  std::string name;
  Expr bound;
  Expr body;
};

struct Expr::Node {
  std::variant<Var, Lam, LamU, App, LamD, AppD, Let, IntLit> v;
  Span span;
};

inline Expr Expr::var(std::string name, Span s) {
  return Expr(std::make_shared<const Node>(Node{Var{std::move(name)}, s}));
}
inline Expr Expr::lam(std::string param, Type annot, Expr body, Span s) {
  return Expr(std::make_shared<const Node>(
      Node{Lam{std::move(param), std::move(annot), std::move(body)}, s}));
}
inline Expr Expr::lam_u(std::string param, Expr body, Span s) {
  return Expr(std::make_shared<const Node>(Node{LamU{std::move(param), std::move(body)}, s}));
}
inline Expr Expr::app(Expr fn, Expr arg, Span s) {
  return Expr(std::make_shared<const Node>(Node{App{std::move(fn), std::move(arg)}, s}));
}
inline Expr Expr::lam_d(Ident binder, Kind kind, Expr body, Span s) {
  return Expr(
      std::make_shared<const Node>(Node{LamD{std::move(binder), kind, std::move(body)}, s}));
}
inline Expr Expr::app_d(Expr fn, Descriptor descr, Span s) {
  return Expr(std::make_shared<const Node>(Node{AppD{std::move(fn), std::move(descr)}, s}));
}
inline Expr Expr::let(std::string name, Expr bound, Expr body, Span s) {
  return Expr(std::make_shared<const Node>(
      Node{Let{std::move(name), std::move(bound), std::move(body)}, s}));
}
inline Expr Expr::int_lit(std::int64_t value, Span s) {
  return Expr(std::make_shared<const Node>(Node{IntLit{value}, s}));
}
template <class T>
const T* Expr::as() const {
  return std::get_if<T>(&node_->v);
}
inline Span Expr::span() const { return node_->span; }
template <class F>
decltype(auto) Expr::visit(F&& f) const {
  return std::visit(std::forward<F>(f), node_->v);
}

/// Structural equality; spans are ignored.
inline bool operator==(const Expr& a, const Expr& b) {
  return a.visit(overloaded{
      [&](const Expr::Var& x) {
        const auto* y = b.as<Expr::Var>();
        return y && x.name == y->name;
      },
      [&](const Expr::Lam& x) {
        const auto* y = b.as<Expr::Lam>();
        return y && x.param == y->param && x.annot == y->annot && x.body == y->body;
      },
      [&](const Expr::LamU& x) {
        const auto* y = b.as<Expr::LamU>();
        return y && x.param == y->param && x.body == y->body;
      },
      [&](const Expr::App& x) {
        const auto* y = b.as<Expr::App>();
        return y && x.fn == y->fn && x.arg == y->arg;
      },
      [&](const Expr::LamD& x) {
        const auto* y = b.as<Expr::LamD>();
        return y && x.binder == y->binder && x.kind == y->kind && x.body == y->body;
      },
      [&](const Expr::AppD& x) {
        const auto* y = b.as<Expr::AppD>();
        return y && x.fn == y->fn && x.descr == y->descr;
      },
      [&](const Expr::Let& x) {
        const auto* y = b.as<Expr::Let>();
        return y && x.name == y->name && x.bound == y->bound && x.body == y->body;
      },
      [&](const Expr::IntLit& x) {
        const auto* y = b.as<Expr::IntLit>();
        return y && x.value == y->value;
      },
  });
}

// ---------------------------------------------------------------------------
// Environments

struct KindBind {
  Ident id;
  Kind kind;
};

struct TypeBind {
  std::string name;
  Type type;
};

using EnvEntry = std::variant<KindBind, TypeBind>;

/// Γ: an ordered list of bindings (lookups take the rightmost), plus the
/// kind registry for unification variables, which the kinding rules
/// have no case for.
class Env {
 public:
  Env() = default;

  Env with_kind(Ident id, Kind kind) const {
    Env out = *this;
    out.entries_.emplace_back(KindBind{std::move(id), kind});
    return out;
  }
  Env with_type(std::string name, Type type) const {
    Env out = *this;
    out.entries_.emplace_back(TypeBind{std::move(name), std::move(type)});
    return out;
  }
  Env with_unif_kinds(const std::map<Ident, Kind>& kinds) const {
    Env out = *this;
    for (const auto& [id, k] : kinds) out.unif_kinds_[id] = k;
    return out;
  }

  void push_kind(Ident id, Kind kind) { entries_.emplace_back(KindBind{std::move(id), kind}); }
  void push_type(std::string name, Type type) {
    entries_.emplace_back(TypeBind{std::move(name), std::move(type)});
  }

  std::optional<Type> lookup(const std::string& name) const {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
      if (const auto* tb = std::get_if<TypeBind>(&*it); tb && tb->name == name) return tb->type;
    }
    return std::nullopt;
  }

  /// Kind of a rigid variable from KindBind entries, or of a unification
  /// variable from the registry.
  std::optional<Kind> kind_of_ident(const Ident& id) const {
    if (id.is_unif()) {
      auto it = unif_kinds_.find(id);
      if (it == unif_kinds_.end()) return std::nullopt;
      return it->second;
    }
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
      if (const auto* kb = std::get_if<KindBind>(&*it); kb && kb->id == id) return kb->kind;
    }
    return std::nullopt;
  }

  bool binds_kind(const Ident& id) const {
    for (const auto& e : entries_) {
      if (const auto* kb = std::get_if<KindBind>(&e); kb && kb->id == id) return true;
    }
    return false;
  }

  const std::vector<EnvEntry>& entries() const { return entries_; }
  std::vector<EnvEntry>& entries() { return entries_; }
  const std::map<Ident, Kind>& unif_kinds() const { return unif_kinds_; }

 private:
  std::vector<EnvEntry> entries_;
  std::map<Ident, Kind> unif_kinds_;
};

/// The base type every prelude binds; integer literals have this type.
inline Ident int_ident() { return Ident::rigid("Int"); }
inline Type int_type() { return Type::var(int_ident()); }

inline Env prelude() { return Env{}.with_kind(int_ident(), Kind::Type); }

}  // namespace effrec
