#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "effrec/constraints.hpp"
#include "effrec/parse.hpp"
#include "effrec/print.hpp"
#include "effrec/subst.hpp"
#include "effrec/syntax.hpp"

namespace effrec::testing {

// Parsers that also accept unification variables, for test inputs.
inline Type ty(std::string_view s) { return parse_type(s, ParseOptions{true}); }
inline Effect eff(std::string_view s) { return parse_effect(s, ParseOptions{true}); }
inline Expr ex(std::string_view s, const Env& scope = prelude()) { return parse_expr(s, scope); }

inline Ident rv(std::string name, std::uint64_t serial = 0) {
  return Ident::rigid(std::move(name), serial);
}
inline Ident uv(std::string name, std::uint64_t serial = 0) {
  return Ident::unif(std::move(name), serial);
}

inline Env env_of(std::initializer_list<std::pair<std::string, Kind>> kinds) {
  Env env = prelude();
  for (const auto& [n, k] : kinds) env.push_kind(rv(n), k);
  return env;
}

/// Small random descriptors over fixed name pools. Separate from the
/// fuzzer's generator so the properties do not test it against itself.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed * 0x9E3779B97F4A7C15ull + 17) {}

  std::vector<Ident> effect_atoms{rv("a"), rv("b"), rv("c"), uv("E"), uv("F")};
  std::vector<Ident> type_atoms{rv("t"), rv("u"), uv("X"), uv("Y")};
  std::vector<Ident> binders{rv("p"), rv("q"), rv("r")};

  std::size_t below(std::size_t n) { return n == 0 ? 0 : rng_() % n; }
  bool coin(unsigned percent) { return below(100) < percent; }

  Effect effect(int depth) {
    if (depth > 0 && coin(40)) {
      Effect lhs = effect(depth - 1);
      return Effect::join(std::move(lhs), effect(depth - 1));
    }
    if (coin(20)) return Effect::pure();
    return Effect::var(effect_atoms[below(effect_atoms.size())]);
  }

  Type type(int depth, bool quantifiers = true) {
    if (depth > 0 && quantifiers && coin(20)) {
      Ident b = binders[below(binders.size())];
      bool effect_binder = coin(30);
      scope_.push_back({b, effect_binder});
      Type body = type(depth - 1, quantifiers);
      scope_.pop_back();
      return Type::forall(b, effect_binder ? Kind::Effect : Kind::Type, body);
    }
    if (depth > 0 && coin(55)) {
      Type arg = type(depth - 1, quantifiers);
      Effect e = scoped_effect();
      return Type::arrow(std::move(arg), std::move(e), type(depth - 1, quantifiers));
    }
    std::vector<Ident> pool = type_atoms;
    for (const auto& [b, is_effect] : scope_) {
      if (!is_effect) pool.push_back(b);
    }
    return Type::var(pool[below(pool.size())]);
  }

  /// A capturing substitution over a few atoms of both kinds.
  Subst subst(int depth) {
    Subst s;
    for (const auto& id : type_atoms) {
      if (coin(40)) s.bind(id, type(depth));
    }
    for (const auto& id : effect_atoms) {
      if (coin(40)) s.bind(id, effect(1));
    }
    return s;
  }

 private:
  Effect scoped_effect() {
    Effect e = effect(1);
    for (const auto& [b, is_effect] : scope_) {
      if (is_effect && coin(30)) e = Effect::join(std::move(e), Effect::var(b));
    }
    return e;
  }

  std::mt19937_64 rng_;
  std::vector<std::pair<Ident, bool>> scope_;
};

}  // namespace effrec::testing
