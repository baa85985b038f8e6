#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "effrec/subst.hpp"
#include "effrec/syntax.hpp"

namespace effrec {

/// Normal form of an effect modulo the idempotent commutative monoid laws
/// (unit pure, operation join): the set of atoms it mentions.
struct EffectNF {
  IdentSet atoms;

  friend bool operator==(const EffectNF&, const EffectNF&) = default;
};

inline void collect_atoms(const Effect& e, IdentSet& out) {
  e.visit(overloaded{
      [&](const Effect::Var& v) { out.insert(v.id); },
      [](const Effect::Pure&) {},
      [&](const Effect::Join& j) {
        collect_atoms(j.lhs, out);
        collect_atoms(j.rhs, out);
      },
  });
}

inline EffectNF effect_normalize(const Effect& e) {
  EffectNF nf;
  collect_atoms(e, nf.atoms);
  return nf;
}

inline bool effect_equiv(const Effect& a, const Effect& b) {
  return effect_normalize(a) == effect_normalize(b);
}

/// Rebuild an effect from its normal form: pure, a single atom, or a
/// left-nested join of the atoms in order.
inline Effect effect_from_nf(const EffectNF& nf) {
  Effect out;
  bool first = true;
  for (const auto& id : nf.atoms) {
    out = first ? Effect::var(id) : Effect::join(out, Effect::var(id));
    first = false;
  }
  return out;
}

inline std::string print(const EffectNF& nf) {
  std::string out = "{";
  bool first = true;
  for (const auto& id : nf.atoms) {
    if (!first) out += ", ";
    first = false;
    out += id.str();
  }
  return out + "}";
}

namespace detail {

// Simultaneous traversal of two types. Binders are paired by depth instead
// of renaming either input.
class AlphaComparer {
 public:
  bool types(const Type& a, const Type& b) {
    if (const auto* av = a.as_var()) {
      const auto* bv = b.as_var();
      return bv && same_occurrence(av->id, bv->id);
    }
    if (const auto* aa = a.as_arrow()) {
      const auto* ba = b.as_arrow();
      return ba && types(aa->arg, ba->arg) && effects(aa->eff, ba->eff) &&
             types(aa->res, ba->res);
    }
    const auto* af = a.as_forall();
    const auto* bf = b.as_forall();
    if (!bf || af->kind != bf->kind) return false;
    left_.push_back(af->binder);
    right_.push_back(bf->binder);
    bool ok = types(af->body, bf->body);
    left_.pop_back();
    right_.pop_back();
    return ok;
  }

  bool effects(const Effect& a, const Effect& b) { return keys(a, left_) == keys(b, right_); }

 private:
  static constexpr std::size_t kFree = static_cast<std::size_t>(-1);

  static std::size_t level(const std::vector<Ident>& stack, const Ident& id) {
    for (std::size_t i = stack.size(); i-- > 0;) {
      if (stack[i] == id) return i;
    }
    return kFree;
  }

  bool same_occurrence(const Ident& a, const Ident& b) const {
    std::size_t la = level(left_, a);
    std::size_t lb = level(right_, b);
    if (la == kFree && lb == kFree) return a == b;
    return la == lb;
  }

  // Atom keys: bound atoms become their binder depth, free atoms stay.
  static std::set<std::pair<std::size_t, Ident>> keys(const Effect& e,
                                                      const std::vector<Ident>& stack) {
    std::set<std::pair<std::size_t, Ident>> out;
    for (const auto& id : effect_normalize(e).atoms) {
      std::size_t l = level(stack, id);
      out.emplace(l, l == kFree ? id : Ident{});
    }
    return out;
  }

  std::vector<Ident> left_;
  std::vector<Ident> right_;
};

}  // namespace detail

/// Alpha-equivalence in which arrow effects compare modulo ACI1 and
/// quantifiers only match quantifiers of the same kind.
inline bool type_equiv(const Type& a, const Type& b) {
  detail::AlphaComparer cmp;
  return cmp.types(a, b);
}

inline bool descriptor_equiv(const Descriptor& a, const Descriptor& b) {
  if (a.kind() != b.kind()) return false;
  return a.is_type() ? type_equiv(a.type(), b.type()) : effect_equiv(a.effect(), b.effect());
}

}  // namespace effrec
