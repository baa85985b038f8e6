#pragma once

#include <string>

#include "effrec/syntax.hpp"

namespace effrec {

// Concrete syntax printer. The output is accepted by the parser and
// parses back to a structurally equal tree: joins are left-nested unless
// parenthesized, arrows associate to the right, and application is
// left-associative.

inline std::string print(const Effect& e);
inline std::string print(const Type& t);

namespace detail {

inline std::string print_effect_operand(const Effect& e) {
  if (e.as_join()) return "(" + print(e) + ")";
  return print(e);
}

inline std::string print_type_atom(const Type& t) {
  if (const auto* v = t.as_var()) return v->id.str();
  return "(" + print(t) + ")";
}

enum class ExprCtx { Top, Fn, Arg };

inline std::string print_expr(const Expr& e, ExprCtx ctx);

}  // namespace detail

inline std::string print(const Effect& e) {
  return e.visit(overloaded{
      [](const Effect::Var& v) { return v.id.str(); },
      [](const Effect::Pure&) { return std::string("pure"); },
      [](const Effect::Join& j) {
        // The left operand of a join needs no parentheses (left-nested).
        return print(j.lhs) + " | " + detail::print_effect_operand(j.rhs);
      },
  });
}

inline std::string print(const Type& t) {
  return t.visit(overloaded{
      [](const Type::Var& v) { return v.id.str(); },
      [](const Type::Arrow& a) {
        return detail::print_type_atom(a.arg) + " -{" + print(a.eff) + "}-> " + print(a.res);
      },
      [](const Type::Forall& f) {
        return "forall (" + f.binder.str() + ":" + to_string(f.kind) + "). " + print(f.body);
      },
  });
}

inline std::string print(const Descriptor& d) {
  return d.is_type() ? print(d.type()) : print(d.effect());
}

inline std::string print(const Expr& e) { return detail::print_expr(e, detail::ExprCtx::Top); }

namespace detail {

inline std::string print_expr(const Expr& e, ExprCtx ctx) {
  auto wrap_binder = [ctx](std::string s) { return ctx == ExprCtx::Top ? s : "(" + s + ")"; };
  return e.visit(overloaded{
      [](const Expr::Var& v) { return v.name; },
      [](const Expr::IntLit& i) { return std::to_string(i.value); },
      [&](const Expr::Lam& l) {
        return wrap_binder("fn (" + l.param + ":" + print(l.annot) + ") -> " + print(l.body));
      },
      [&](const Expr::LamU& l) { return wrap_binder("fn " + l.param + " -> " + print(l.body)); },
      [&](const Expr::LamD& l) {
        return wrap_binder("tfn (" + l.binder.str() + ":" + to_string(l.kind) + ") -> " +
                           print(l.body));
      },
      [&](const Expr::Let& l) {
        return wrap_binder("let " + l.name + " = " + print(l.bound) + " in " + print(l.body));
      },
      [&](const Expr::App& a) {
        std::string s = print_expr(a.fn, ExprCtx::Fn) + " " + print_expr(a.arg, ExprCtx::Arg);
        return ctx == ExprCtx::Arg ? "(" + s + ")" : s;
      },
      [&](const Expr::AppD& a) {
        std::string s = print_expr(a.fn, ExprCtx::Fn) + "[" + print(a.descr) + "]";
        return ctx == ExprCtx::Arg ? "(" + s + ")" : s;
      },
  });
}

}  // namespace detail

inline std::string print(const Env& env) {
  std::string out = "[";
  bool first = true;
  for (const auto& entry : env.entries()) {
    if (!first) out += ", ";
    first = false;
    std::visit(overloaded{
                   [&](const KindBind& kb) { out += kb.id.str() + ":" + to_string(kb.kind); },
                   [&](const TypeBind& tb) { out += tb.name + ":" + print(tb.type); },
               },
               entry);
  }
  return out + "]";
}

}  // namespace effrec
