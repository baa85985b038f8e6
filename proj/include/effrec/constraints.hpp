#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "effrec/equivalence.hpp"
#include "effrec/error.hpp"
#include "effrec/subst.hpp"
#include "effrec/syntax.hpp"

namespace effrec {

/// A delayed effect equation lhs ≐ rhs.
struct Constraint {
  Effect lhs;
  Effect rhs;
};

inline bool operator<(const Constraint& a, const Constraint& b) {
  if (auto c = compare(a.lhs, b.lhs); c != 0) return c < 0;
  return compare(a.rhs, b.rhs) < 0;
}

inline bool operator==(const Constraint& a, const Constraint& b) {
  return a.lhs == b.lhs && a.rhs == b.rhs;
}

/// Duplicate-free (under structural equality) set of constraints, kept in
/// structural order so that rendering is deterministic.
class ConstraintSet {
 public:
  ConstraintSet() = default;
  ConstraintSet(std::initializer_list<Constraint> init) : items_(init) {}

  void insert(Constraint c) { items_.insert(std::move(c)); }
  void unite(const ConstraintSet& other) { items_.insert(other.items_.begin(), other.items_.end()); }

  static ConstraintSet united(const ConstraintSet& a, const ConstraintSet& b) {
    ConstraintSet out = a;
    out.unite(b);
    return out;
  }

  bool contains(const Constraint& c) const { return items_.count(c) != 0; }
  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  bool includes(const ConstraintSet& sub) const {
    for (const auto& c : sub) {
      if (!contains(c)) return false;
    }
    return true;
  }

  friend bool operator==(const ConstraintSet& a, const ConstraintSet& b) {
    return a.items_ == b.items_;
  }

 private:
  std::set<Constraint> items_;
};

inline void collect_free(const ConstraintSet& k, IdentSet& out) {
  for (const auto& c : k) {
    collect_free(c.lhs, out);
    collect_free(c.rhs, out);
  }
}

inline ConstraintSet subst_capturing(const Subst& s, const ConstraintSet& k) {
  if (s.empty()) return k;
  ConstraintSet out;
  for (const auto& c : k) out.insert({subst_capturing(s, c.lhs), subst_capturing(s, c.rhs)});
  return out;
}

inline std::string print(const Constraint& c) { return print(c.lhs) + " ≐ " + print(c.rhs); }

inline std::string print(const ConstraintSet& k) {
  std::string out = "{";
  bool first = true;
  for (const auto& c : k) {
    if (!first) out += ", ";
    first = false;
    out += print(c);
  }
  return out + "}";
}

// ---------------------------------------------------------------------------
// Models

/// Assignment of ground effects (no unification variables; rigid effect
/// variables allowed) to effect unification variables.
class Model {
 public:
  Model() = default;

  void bind(const Ident& id, const Effect& e) {
    if (!id.is_unif()) {
      throw Error(ErrorCode::PreconditionViolated,
                  "model domain must be unification variables, got " + id.str());
    }
    if (!free_unif_vars(e).empty()) {
      throw Error(ErrorCode::PreconditionViolated,
                  "model image for " + id.str() + " is not ground: " + print(e));
    }
    map_.insert_or_assign(id, e);
  }

  const Effect* find(const Ident& id) const {
    auto it = map_.find(id);
    return it == map_.end() ? nullptr : &it->second;
  }
  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }
  auto begin() const { return map_.begin(); }
  auto end() const { return map_.end(); }

  Subst to_subst() const {
    Subst s;
    for (const auto& [id, e] : map_) s.bind(id, e);
    return s;
  }

  friend bool operator==(const Model& a, const Model& b) {
    if (a.map_.size() != b.map_.size()) return false;
    auto it = b.map_.begin();
    for (const auto& [k, v] : a.map_) {
      if (!(k == it->first) || !(v == it->second)) return false;
      ++it;
    }
    return true;
  }

 private:
  std::map<Ident, Effect> map_;
};

inline std::string print(const Model& m) { return print(m.to_subst()); }

/// μ ⊨ κ: every constraint holds modulo ACI1 after applying μ. Variables
/// outside dom(μ) stay in place and behave as atoms.
inline bool models(const Model& m, const ConstraintSet& k) {
  Subst s = m.to_subst();
  for (const auto& c : k) {
    if (!effect_equiv(subst_capturing(s, c.lhs), subst_capturing(s, c.rhs))) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Bounded model search

struct SolverLimits {
  std::size_t max_unif_vars = 8;
  std::size_t max_universe = 6;
};

/// Rigid effect variables mentioned by κ plus the effect variables bound in Γ.
inline IdentSet default_universe(const ConstraintSet& k, const Env& env) {
  IdentSet out;
  for (const auto& id : free_vars(k)) {
    if (!id.is_unif()) out.insert(id);
  }
  for (const auto& entry : env.entries()) {
    if (const auto* kb = std::get_if<KindBind>(&entry); kb && kb->kind == Kind::Effect) {
      out.insert(kb->id);
    }
  }
  return out;
}

namespace detail {

class BoundedSolver {
 public:
  BoundedSolver(const ConstraintSet& k, const IdentSet& universe) {
    for (const auto& id : free_unif_vars(k)) unifs_.push_back(id);
    for (const auto& id : universe) atom_index(id);
    universe_size_ = atoms_.size();
    for (const auto& c : k) {
      Row row{side(c.lhs), side(c.rhs), 0};
      for (const auto* s : {&row.lhs, &row.rhs}) {
        for (std::size_t u : s->unifs) row.last_unif = std::max(row.last_unif, u + 1);
      }
      rows_.push_back(std::move(row));
    }
  }

  std::size_t unif_count() const { return unifs_.size(); }

  std::optional<Model> solve() {
    assignment_.assign(unifs_.size(), 0);
    // Ground constraints (no unification variables) are checked up front.
    for (const auto& r : rows_) {
      if (r.last_unif == 0 && !holds(r)) return std::nullopt;
    }
    if (!search(0)) return std::nullopt;
    Model m;
    for (std::size_t i = 0; i < unifs_.size(); ++i) {
      EffectNF nf;
      for (std::size_t b = 0; b < universe_size_; ++b) {
        if (assignment_[i] & (std::uint64_t{1} << b)) nf.atoms.insert(atoms_[b]);
      }
      m.bind(unifs_[i], effect_from_nf(nf));
    }
    return m;
  }

 private:
  struct Side {
    std::uint64_t rigid = 0;
    std::vector<std::size_t> unifs;
  };
  struct Row {
    Side lhs;
    Side rhs;
    std::size_t last_unif;  // 1 + highest unification-variable index used
  };

  std::size_t atom_index(const Ident& id) {
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (atoms_[i] == id) return i;
    }
    if (atoms_.size() >= 64) {
      throw Error(ErrorCode::BoundExceeded, "too many distinct effect atoms for the solver");
    }
    atoms_.push_back(id);
    return atoms_.size() - 1;
  }

  Side side(const Effect& e) {
    Side s;
    for (const auto& id : effect_normalize(e).atoms) {
      if (id.is_unif()) {
        for (std::size_t i = 0; i < unifs_.size(); ++i) {
          if (unifs_[i] == id) s.unifs.push_back(i);
        }
      } else {
        s.rigid |= std::uint64_t{1} << atom_index(id);
      }
    }
    return s;
  }

  std::uint64_t eval(const Side& s) const {
    std::uint64_t v = s.rigid;
    for (std::size_t u : s.unifs) v |= assignment_[u];
    return v;
  }

  bool holds(const Row& r) const { return eval(r.lhs) == eval(r.rhs); }

  // Necessary condition for a row with some variables still unassigned:
  // whatever one side already contains must be reachable by the other.
  bool feasible(const Row& r, std::size_t assigned) const {
    auto bounds = [&](const Side& s) {
      std::uint64_t low = s.rigid;
      bool open = false;
      for (std::size_t u : s.unifs) {
        if (u < assigned) {
          low |= assignment_[u];
        } else {
          open = true;
        }
      }
      return std::make_pair(low, open ? low | universe_mask() : low);
    };
    auto [ll, lh] = bounds(r.lhs);
    auto [rl, rh] = bounds(r.rhs);
    return (ll & ~rh) == 0 && (rl & ~lh) == 0;
  }

  std::uint64_t universe_mask() const { return (std::uint64_t{1} << universe_size_) - 1; }

  // Depth-first in lexicographic order: variable 0 most significant, each
  // variable ranging over universe subsets by ascending bitmask.
  bool search(std::size_t i) {
    if (i == unifs_.size()) return true;
    const std::uint64_t limit = std::uint64_t{1} << universe_size_;
    for (std::uint64_t mask = 0; mask < limit; ++mask) {
      if (++nodes_ > kNodeBudget) {
        throw Error(ErrorCode::BoundExceeded, "solver search budget exhausted");
      }
      assignment_[i] = mask;
      bool ok = true;
      for (const auto& r : rows_) {
        bool complete = r.last_unif <= i + 1;
        if (complete ? (r.last_unif == i + 1 && !holds(r)) : !feasible(r, i + 1)) {
          ok = false;
          break;
        }
      }
      if (ok && search(i + 1)) return true;
    }
    assignment_[i] = 0;
    return false;
  }

  static constexpr std::uint64_t kNodeBudget = 4'000'000;
  std::uint64_t nodes_ = 0;
  std::vector<Ident> unifs_;
  std::vector<Ident> atoms_;
  std::size_t universe_size_ = 0;
  std::vector<Row> rows_;
  std::vector<std::uint64_t> assignment_;
};

}  // namespace detail

/// Exhaustively searches assignments of every unification variable in κ to
/// joins of subsets of `universe` and returns the lexicographically first
/// model of κ, or nullopt when none exists over that universe.
inline std::optional<Model> solve_bounded(const ConstraintSet& k, const IdentSet& universe,
                                          const SolverLimits& limits = {}) {
  for (const auto& id : universe) {
    if (id.is_unif()) {
      throw Error(ErrorCode::PreconditionViolated,
                  "solver universe must contain rigid variables only, got " + id.str());
    }
  }
  if (universe.size() > limits.max_universe) {
    throw Error(ErrorCode::BoundExceeded,
                "universe of " + std::to_string(universe.size()) + " atoms exceeds the bound of " +
                    std::to_string(limits.max_universe));
  }
  detail::BoundedSolver solver(k, universe);
  if (solver.unif_count() > limits.max_unif_vars) {
    throw Error(ErrorCode::BoundExceeded,
                std::to_string(solver.unif_count()) +
                    " unification variables exceed the bound of " +
                    std::to_string(limits.max_unif_vars));
  }
  auto m = solver.solve();
  if (m && !models(*m, k)) {
    throw Error(ErrorCode::PreconditionViolated, "solver produced a non-model (internal error)");
  }
  return m;
}

}  // namespace effrec
