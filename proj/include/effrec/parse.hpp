#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "effrec/error.hpp"
#include "effrec/inference.hpp"
#include "effrec/syntax.hpp"

namespace effrec {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok {
  Ident,
  Int,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Colon,
  Dot,
  Comma,
  Bar,
  Eq,
  Tilde,
  Amp,
  Arrow,       // ->
  EffOpen,     // -{
  EffClose,    // }->
  End,
};

struct Token {
  Tok kind;
  std::string text;
  Span span;
};

namespace detail {

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

inline Error syntax_error(Span s, const std::string& msg) {
  return Error(ErrorCode::SyntaxError,
               std::to_string(s.line) + ":" + std::to_string(s.col) + ": " + msg);
}

inline std::vector<Token> lex(std::string_view src, int first_line = 1) {
  std::vector<Token> out;
  int line = first_line;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto push = [&](Tok k, std::size_t n) {
    out.push_back({k, std::string(src.substr(i, n)), {line, col}});
    advance(n);
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (src.substr(i, 2) == "--") {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (src.substr(i, 2) == "-{") { push(Tok::EffOpen, 2); continue; }
    if (src.substr(i, 3) == "}->") { push(Tok::EffClose, 3); continue; }
    if (src.substr(i, 2) == "->") { push(Tok::Arrow, 2); continue; }
    switch (c) {
      case '(': push(Tok::LParen, 1); continue;
      case ')': push(Tok::RParen, 1); continue;
      case '[': push(Tok::LBracket, 1); continue;
      case ']': push(Tok::RBracket, 1); continue;
      case ':': push(Tok::Colon, 1); continue;
      case '.': push(Tok::Dot, 1); continue;
      case ',': push(Tok::Comma, 1); continue;
      case '|': push(Tok::Bar, 1); continue;
      case '=': push(Tok::Eq, 1); continue;
      case '~': push(Tok::Tilde, 1); continue;
      case '&': push(Tok::Amp, 1); continue;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t n = 0;
      while (i + n < src.size() && std::isdigit(static_cast<unsigned char>(src[i + n]))) ++n;
      push(Tok::Int, n);
      continue;
    }
    if (ident_start(c) || ((c == '?' || c == '%') && i + 1 < src.size() && ident_start(src[i + 1]))) {
      std::size_t n = 1;
      while (i + n < src.size() && ident_char(src[i + n])) ++n;
      push(Tok::Ident, n);
      continue;
    }
    throw syntax_error({line, col}, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::End, "", {line, col}});
  return out;
}

inline bool is_keyword(std::string_view s) {
  return s == "fn" || s == "tfn" || s == "let" || s == "in" || s == "forall" || s == "pure" ||
         s == "Type" || s == "Effect";
}

// `?X12` is unification variable X with serial 12 and `%b3` is the fresh
// rigid variable %b with serial 3; other names carry no serial.
inline Ident ident_from_text(std::string_view text) {
  if (text[0] != '?' && text[0] != '%') return Ident::rigid(std::string(text));
  std::size_t end = text.size();
  while (end > 1 && std::isdigit(static_cast<unsigned char>(text[end - 1]))) --end;
  std::uint64_t serial = 0;
  if (end < text.size()) {
    std::from_chars(text.data() + end, text.data() + text.size(), serial);
  }
  if (text[0] == '?') return Ident::unif(std::string(text.substr(1, end - 1)), serial);
  return Ident::rigid(std::string(text.substr(0, end)), serial);
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  Parser(std::vector<Token> toks, bool allow_unif_vars, std::vector<KindBind> kinds)
      : toks_(std::move(toks)), allow_unif_(allow_unif_vars), kinds_(std::move(kinds)) {}

  bool at_end() const { return peek().kind == Tok::End; }
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool peek_is(Tok k, std::size_t ahead = 0) const { return peek(ahead).kind == k; }
  bool peek_word(std::string_view w, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Ident && peek(ahead).text == w;
  }

  void expect_end() {
    if (!at_end()) throw syntax_error(peek().span, "unexpected '" + peek().text + "'");
  }

  Token expect(Tok k, const char* what) {
    if (peek().kind != k) {
      throw syntax_error(peek().span, std::string("expected ") + what + ", found " + describe(peek()));
    }
    return toks_[pos_++];
  }

  void expect_word(std::string_view w) {
    if (!peek_word(w)) {
      throw syntax_error(peek().span,
                         "expected '" + std::string(w) + "', found " + describe(peek()));
    }
    ++pos_;
  }

  // ---- identifiers and kinds

  std::string term_var() {
    Token t = expect(Tok::Ident, "a variable");
    if (is_keyword(t.text) || t.text[0] == '?' || t.text[0] == '%') {
      throw syntax_error(t.span, "'" + t.text + "' cannot name a term variable");
    }
    return t.text;
  }

  Ident type_ident() {
    Token t = expect(Tok::Ident, "a type variable");
    if (is_keyword(t.text)) throw syntax_error(t.span, "'" + t.text + "' is a keyword");
    Ident id = ident_from_text(t.text);
    if (id.is_unif() && !allow_unif_) {
      throw Error(ErrorCode::UnifVarInSource,
                  std::to_string(t.span.line) + ":" + std::to_string(t.span.col) +
                      ": unification variable " + t.text + " in source program",
                  {t.text});
    }
    return id;
  }

  Ident binder_ident() {
    Span sp = peek().span;
    Ident id = type_ident();
    if (id.is_unif()) throw syntax_error(sp, "a unification variable cannot be bound");
    return id;
  }

  Kind kind() {
    if (peek_word("Type")) {
      ++pos_;
      return Kind::Type;
    }
    if (peek_word("Effect")) {
      ++pos_;
      return Kind::Effect;
    }
    throw syntax_error(peek().span, "expected a kind (Type or Effect), found " + describe(peek()));
  }

  // ---- effects and types

  Effect effect() {
    Effect out = effect_atom();
    while (peek_is(Tok::Bar)) {
      ++pos_;
      out = Effect::join(out, effect_atom());
    }
    return out;
  }

  Effect effect_atom() {
    if (peek_word("pure")) {
      ++pos_;
      return Effect::pure();
    }
    if (peek_is(Tok::LParen)) {
      ++pos_;
      Effect e = effect();
      expect(Tok::RParen, "')'");
      return e;
    }
    return Effect::var(type_ident());
  }

  Type type() {
    if (peek_word("forall")) {
      ++pos_;
      expect(Tok::LParen, "'('");
      Ident b = binder_ident();
      expect(Tok::Colon, "':'");
      Kind k = kind();
      expect(Tok::RParen, "')'");
      expect(Tok::Dot, "'.'");
      kinds_.push_back({b, k});
      Type body = type();
      kinds_.pop_back();
      return Type::forall(b, k, body);
    }
    Type arg = type_atom();
    if (peek_is(Tok::EffOpen)) {
      ++pos_;
      Effect e = effect();
      expect(Tok::EffClose, "'}->'");
      return Type::arrow(arg, e, type());
    }
    return arg;
  }

  Type type_atom() {
    if (peek_is(Tok::LParen)) {
      ++pos_;
      Type t = type();
      expect(Tok::RParen, "')'");
      return t;
    }
    return Type::var(type_ident());
  }

  // A type-application argument: a type or an effect. A lone variable takes
  // the kind of its binder when one is in scope and defaults to Type.
  Descriptor descriptor() {
    if (peek_word("pure")) return effect();
    std::size_t save = pos_;
    try {
      Type t = type();
      if (!peek_is(Tok::Bar)) {
        if (const auto* v = t.as_var(); v && kind_in_scope(v->id) == Kind::Effect) {
          return Effect::var(v->id);
        }
        return t;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SyntaxError) throw;
    }
    pos_ = save;
    return effect();
  }

  // ---- expressions

  Expr expr() {
    Span sp = peek().span;
    if (peek_word("fn")) {
      ++pos_;
      if (peek_is(Tok::LParen)) {
        ++pos_;
        std::string x = term_var();
        expect(Tok::Colon, "':'");
        Type t = type();
        expect(Tok::RParen, "')'");
        expect(Tok::Arrow, "'->'");
        return Expr::lam(x, t, expr(), sp);
      }
      std::string x = term_var();
      expect(Tok::Arrow, "'->'");
      return Expr::lam_u(x, expr(), sp);
    }
    if (peek_word("tfn")) {
      ++pos_;
      expect(Tok::LParen, "'('");
      Ident b = binder_ident();
      expect(Tok::Colon, "':'");
      Kind k = kind();
      expect(Tok::RParen, "')'");
      expect(Tok::Arrow, "'->'");
      kinds_.push_back({b, k});
      Expr body = expr();
      kinds_.pop_back();
      return Expr::lam_d(b, k, body, sp);
    }
    if (peek_word("let")) {
      ++pos_;
      std::string x = term_var();
      expect(Tok::Eq, "'='");
      Expr bound = expr();
      expect_word("in");
      return Expr::let(x, bound, expr(), sp);
    }
    return app();
  }

  Expr app() {
    Span sp = peek().span;
    Expr out = atom();
    for (;;) {
      if (peek_is(Tok::LBracket)) {
        ++pos_;
        Descriptor d = descriptor();
        expect(Tok::RBracket, "']'");
        out = Expr::app_d(out, d, sp);
      } else if (starts_atom()) {
        out = Expr::app(out, atom(), sp);
      } else {
        return out;
      }
    }
  }

  bool starts_atom() const {
    const Token& t = peek();
    if (t.kind == Tok::Int || t.kind == Tok::LParen) return true;
    return t.kind == Tok::Ident && !is_keyword(t.text) && t.text[0] != '?' && t.text[0] != '%';
  }

  Expr atom() {
    const Token& t = peek();
    if (t.kind == Tok::Int) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (ec != std::errc()) throw syntax_error(t.span, "integer literal out of range");
      ++pos_;
      return Expr::int_lit(v, t.span);
    }
    if (t.kind == Tok::LParen) {
      ++pos_;
      Expr e = expr();
      expect(Tok::RParen, "')'");
      return e;
    }
    Span sp = t.span;
    return Expr::var(term_var(), sp);
  }

 private:
  static std::string describe(const Token& t) {
    return t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
  }

  std::optional<Kind> kind_in_scope(const Ident& id) const {
    for (auto it = kinds_.rbegin(); it != kinds_.rend(); ++it) {
      if (it->id == id) return it->kind;
    }
    return std::nullopt;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  bool allow_unif_;
  std::vector<KindBind> kinds_;
};

inline std::vector<KindBind> kind_scope(const Env& env) {
  std::vector<KindBind> out;
  for (const auto& entry : env.entries()) {
    if (const auto* kb = std::get_if<KindBind>(&entry)) out.push_back(*kb);
  }
  return out;
}

}  // namespace detail

struct ParseOptions {
  bool allow_unif_vars = false;
  int first_line = 1;
};

/// Parses a complete expression. Lone variables in type-application
/// brackets are resolved against the kind bindings of `scope`.
inline Expr parse_expr(std::string_view text, const Env& scope = prelude(),
                       ParseOptions opts = {}) {
  detail::Parser p(detail::lex(text, opts.first_line), opts.allow_unif_vars,
                   detail::kind_scope(scope));
  Expr e = p.expr();
  p.expect_end();
  return e;
}

inline Type parse_type(std::string_view text, ParseOptions opts = {}) {
  detail::Parser p(detail::lex(text, opts.first_line), opts.allow_unif_vars, {});
  Type t = p.type();
  p.expect_end();
  return t;
}

inline Effect parse_effect(std::string_view text, ParseOptions opts = {}) {
  detail::Parser p(detail::lex(text, opts.first_line), opts.allow_unif_vars, {});
  Effect e = p.effect();
  p.expect_end();
  return e;
}

// ---------------------------------------------------------------------------
// Source files

enum class ExpectMode { Check, InferFaithful, InferFixed, Unify, Sinfer };

inline const char* to_string(ExpectMode m) {
  switch (m) {
    case ExpectMode::Check: return "check";
    case ExpectMode::InferFaithful: return "infer-faithful";
    case ExpectMode::InferFixed: return "infer-fixed";
    case ExpectMode::Unify: return "unify";
    case ExpectMode::Sinfer: return "sinfer";
  }
  return "?";
}

inline std::optional<ExpectMode> expect_mode_from_string(std::string_view s) {
  for (auto m : {ExpectMode::Check, ExpectMode::InferFaithful, ExpectMode::InferFixed,
                 ExpectMode::Unify, ExpectMode::Sinfer}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

enum class Outcome { Accept, Fail, Bug };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Accept: return "accept";
    case Outcome::Fail: return "fail";
    case Outcome::Bug: return "bug";
  }
  return "?";
}

/// `-- EXPECT: <mode> accept [<type> & <effect>]`, `... fail <ErrorClass>`
/// or `... bug <Class>[, <Class>...]`.
struct Expectation {
  ExpectMode mode = ExpectMode::Check;
  Outcome outcome = Outcome::Accept;
  std::optional<Type> ty;
  std::optional<Effect> eff;
  std::string error_class;
  std::vector<BugClass> bugs;
  int line = 0;
  std::string text;
};

struct SourceFile {
  std::string path;
  std::vector<Expectation> directives;
  Env prelude;
  std::optional<Expr> program;
  std::optional<std::pair<Type, Type>> unify_goal;  // body of the form `T1 ~ T2`
  std::optional<Expr> witness;                       // annotated twin of the program
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline Error directive_error(int line, const std::string& msg) {
  return Error(ErrorCode::MalformedDirective, std::to_string(line) + ": " + msg);
}

// `-- KEY: payload` with an upper-case key; other comment lines are prose.
inline std::optional<std::pair<std::string, std::string>> split_directive(std::string_view line) {
  std::string t = trim(line.substr(2));
  std::size_t n = 0;
  while (n < t.size() && (std::isupper(static_cast<unsigned char>(t[n])) || t[n] == '_')) ++n;
  if (n == 0 || n >= t.size() || t[n] != ':') return std::nullopt;
  return std::make_pair(t.substr(0, n), trim(std::string_view(t).substr(n + 1)));
}

inline Expectation parse_expectation(const std::string& payload, int line) {
  Expectation x;
  x.line = line;
  x.text = payload;
  std::size_t sp1 = payload.find(' ');
  auto mode = expect_mode_from_string(payload.substr(0, sp1));
  if (!mode) throw directive_error(line, "unknown mode in EXPECT: " + payload);
  x.mode = *mode;
  std::string rest = sp1 == std::string::npos ? "" : trim(std::string_view(payload).substr(sp1));
  std::size_t sp2 = rest.find(' ');
  std::string verdict = rest.substr(0, sp2);
  std::string arg = sp2 == std::string::npos ? "" : trim(std::string_view(rest).substr(sp2));
  if (verdict == "accept") {
    x.outcome = Outcome::Accept;
    if (!arg.empty()) {
      std::size_t amp = arg.rfind('&');
      if (amp == std::string::npos) throw directive_error(line, "accept needs '<type> & <effect>'");
      ParseOptions po{true, line};
      try {
        x.ty = parse_type(arg.substr(0, amp), po);
        x.eff = parse_effect(arg.substr(amp + 1), po);
      } catch (const Error& e) {
        throw directive_error(line, std::string("bad accept payload: ") + e.what());
      }
    }
  } else if (verdict == "fail") {
    x.outcome = Outcome::Fail;
    if (arg.empty()) throw directive_error(line, "fail needs an error class");
    x.error_class = arg;
  } else if (verdict == "bug") {
    x.outcome = Outcome::Bug;
    std::size_t start = 0;
    while (start <= arg.size()) {
      std::size_t comma = arg.find(',', start);
      std::string name = trim(std::string_view(arg).substr(
          start, comma == std::string::npos ? std::string::npos : comma - start));
      auto cls = bug_class_from_string(name);
      if (!cls) throw directive_error(line, "unknown bug class '" + name + "'");
      x.bugs.push_back(*cls);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } else {
    throw directive_error(line, "expected accept, fail or bug in EXPECT: " + payload);
  }
  return x;
}

inline void parse_prelude(const std::string& payload, int line, Env& env) {
  detail::Parser p(detail::lex(payload, line), false, kind_scope(env));
  for (;;) {
    Token name = p.expect(Tok::Ident, "a name");
    p.expect(Tok::Colon, "':'");
    if (p.peek_word("Type") || p.peek_word("Effect")) {
      env.push_kind(ident_from_text(name.text), p.kind());
    } else {
      env.push_type(name.text, p.type());
    }
    if (!p.peek_is(Tok::Comma)) break;
    p.expect(Tok::Comma, "','");
  }
  p.expect_end();
}

}  // namespace detail

/// Parses a `.eff` file: directive comments first, then the program (or a
/// `T1 ~ T2` unification goal, the one place unification variables are
/// allowed).
inline SourceFile parse_source(std::string_view text, std::string path = "<input>") {
  SourceFile sf;
  sf.path = std::move(path);
  sf.prelude = prelude();
  std::vector<std::pair<std::string, int>> witnesses;

  std::size_t pos = 0;
  int line = 1;
  std::size_t body_start = text.size();
  int body_line = line;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                         : nl - pos);
    std::string t = detail::trim(raw);
    if (!t.empty() && t.rfind("--", 0) != 0) {
      body_start = pos;
      body_line = line;
      break;
    }
    if (!t.empty()) {
      if (auto d = detail::split_directive(t)) {
        const auto& [key, payload] = *d;
        if (key == "EXPECT") {
          sf.directives.push_back(detail::parse_expectation(payload, line));
        } else if (key == "PRELUDE") {
          detail::parse_prelude(payload, line, sf.prelude);
        } else if (key == "WITNESS") {
          witnesses.emplace_back(payload, line);
        } else {
          throw detail::directive_error(line, "unknown directive key " + key);
        }
      }
    }
    if (nl == std::string_view::npos) {
      pos = text.size();
      break;
    }
    pos = nl + 1;
    ++line;
  }

  std::string_view body = text.substr(body_start);
  // Directives after the program would be silently ignored; reject them.
  {
    std::size_t p = 0;
    int l = body_line;
    while (p < body.size()) {
      std::size_t nl = body.find('\n', p);
      std::string t = detail::trim(body.substr(p, nl == std::string_view::npos ? std::string_view::npos
                                                                               : nl - p));
      if (t.rfind("--", 0) == 0 && detail::split_directive(t)) {
        throw detail::directive_error(l, "directives must precede the program");
      }
      if (nl == std::string_view::npos) break;
      p = nl + 1;
      ++l;
    }
  }

  auto toks = detail::lex(body, body_line);
  bool is_goal = false;
  for (const auto& tk : toks) is_goal = is_goal || tk.kind == Tok::Tilde;
  if (toks.size() == 1) {
    // No program: only a directive header.
  } else if (is_goal) {
    detail::Parser p(std::move(toks), /*allow_unif_vars=*/true, {});
    Type a = p.type();
    p.expect(Tok::Tilde, "'~'");
    Type b = p.type();
    p.expect_end();
    sf.unify_goal = std::make_pair(a, b);
  } else {
    detail::Parser p(std::move(toks), false, detail::kind_scope(sf.prelude));
    sf.program = p.expr();
    p.expect_end();
  }
  for (const auto& [w, l] : witnesses) {
    if (sf.witness) throw detail::directive_error(l, "more than one WITNESS");
    sf.witness = parse_expr(w, sf.prelude, {false, l});
  }
  for (const auto& x : sf.directives) {
    bool goal_mode = x.mode == ExpectMode::Unify;
    if (goal_mode != sf.unify_goal.has_value()) {
      throw detail::directive_error(x.line, goal_mode ? "unify expectations need a 'T1 ~ T2' body"
                                                      : "this mode needs a program body");
    }
  }
  return sf;
}

}  // namespace effrec
