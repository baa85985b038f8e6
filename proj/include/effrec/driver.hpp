#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "effrec/constraints.hpp"
#include "effrec/declarative.hpp"
#include "effrec/equivalence.hpp"
#include "effrec/error.hpp"
#include "effrec/inference.hpp"
#include "effrec/parse.hpp"
#include "effrec/print.hpp"
#include "effrec/unification.hpp"
#include "effrec/wellformed.hpp"

namespace effrec {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Comparison modulo fresh-name renaming

namespace detail {

// Unification variables and `%`-prefixed fresh variables are artifacts of
// a run; their serials carry no meaning.
inline bool renamable(const Ident& id) {
  return id.is_unif() || (!id.name.empty() && id.name[0] == '%');
}

using IdentMap = std::map<Ident, Ident>;

inline Ident rename_ident(const IdentMap& m, const Ident& id) {
  auto it = m.find(id);
  return it == m.end() ? id : it->second;
}

inline Effect rename_idents(const IdentMap& m, const Effect& e) {
  return e.visit(overloaded{
      [&](const Effect::Var& v) { return Effect::var(rename_ident(m, v.id)); },
      [&](const Effect::Pure&) { return e; },
      [&](const Effect::Join& j) {
        return Effect::join(rename_idents(m, j.lhs), rename_idents(m, j.rhs));
      },
  });
}

inline Type rename_idents(const IdentMap& m, const Type& t) {
  return t.visit(overloaded{
      [&](const Type::Var& v) { return Type::var(rename_ident(m, v.id)); },
      [&](const Type::Arrow& a) {
        return Type::arrow(rename_idents(m, a.arg), rename_idents(m, a.eff),
                           rename_idents(m, a.res));
      },
      [&](const Type::Forall& f) {
        return Type::forall(rename_ident(m, f.binder), f.kind, rename_idents(m, f.body));
      },
  });
}

inline std::vector<Ident> renamable_free(const Type& t, const Effect& e, bool unif) {
  IdentSet fv = free_vars(t);
  fv.merge(free_vars(e));
  std::vector<Ident> out;
  for (const auto& id : fv) {
    if (renamable(id) && id.is_unif() == unif) out.push_back(id);
  }
  return out;
}

}  // namespace detail

/// (et, ee) and (at, ae) are equivalent after some bijective renaming of
/// the expected side's free unification variables and fresh `%` variables
/// onto the actual side's.
inline bool equivalent_up_to_renaming(const Type& et, const Effect& ee, const Type& at,
                                      const Effect& ae) {
  auto eu = detail::renamable_free(et, ee, true);
  auto au = detail::renamable_free(at, ae, true);
  auto er = detail::renamable_free(et, ee, false);
  auto ar = detail::renamable_free(at, ae, false);
  if (eu.size() != au.size() || er.size() != ar.size()) return false;
  if (eu.size() + er.size() > 8) return type_equiv(et, at) && effect_equiv(ee, ae);
  std::sort(au.begin(), au.end());
  do {
    std::sort(ar.begin(), ar.end());
    do {
      detail::IdentMap m;
      for (std::size_t i = 0; i < eu.size(); ++i) m.emplace(eu[i], au[i]);
      for (std::size_t i = 0; i < er.size(); ++i) m.emplace(er[i], ar[i]);
      if (type_equiv(detail::rename_idents(m, et), at) &&
          effect_equiv(detail::rename_idents(m, ee), ae)) {
        return true;
      }
    } while (std::next_permutation(ar.begin(), ar.end()));
  } while (std::next_permutation(au.begin(), au.end()));
  return false;
}

inline bool error_matches(const Error& err, std::string_view cls) {
  if (cls == err.class_name() || cls == to_string(err.code())) return true;
  return err.reason() && cls == to_string(*err.reason());
}

// ---------------------------------------------------------------------------
// Analyses: everything one mode computes for one program

/// Declarative checking or sinfer of a program.
struct CheckAnalysis {
  ExpectMode mode = ExpectMode::Check;
  std::optional<TypingResult> result;
  std::optional<Error> error;
};

inline CheckAnalysis analyze_check(const Env& env, const Expr& program, ExpectMode mode,
                                   CheckOptions opts = {}) {
  CheckAnalysis a;
  a.mode = mode;
  try {
    a.result = mode == ExpectMode::Sinfer ? sinfer(env, program)
                                          : check_declarative(env, program, opts);
  } catch (const Error& e) {
    a.error = e;
  }
  return a;
}

/// A full reconstruction run: rename, infer, then the soundness check on
/// success or the completeness classification on a faithful failure.
struct InferAnalysis {
  InferOptions options;
  Env env;
  std::optional<Expr> renamed;
  std::optional<InferResult> result;
  std::optional<Error> error;
  std::vector<std::string> trace;
  std::optional<SoundnessOutcome> soundness;
  std::vector<BugReport> bugs;
  std::string incompleteness_detail;
};

inline InferAnalysis analyze_infer(const Env& env, const Expr& program,
                                   const std::optional<Expr>& witness, InferOptions opts,
                                   bool trace = false) {
  InferAnalysis a;
  a.env = env;
  Tracer tracer(trace ? &a.trace : nullptr);
  opts.tracer = trace ? &tracer : nullptr;
  a.options = opts;
  a.options.tracer = nullptr;
  FreshSupply fs;
  try {
    a.renamed = rename_globally(program, env, fs);
    a.result = infer(env, *a.renamed, opts, fs);
  } catch (const Error& e) {
    a.error = e;
  }
  if (a.result) {
    a.soundness = check_soundness(env, *a.renamed, *a.result, CheckOptions{opts.wf_premises});
    a.bugs = a.soundness->escapes;
  } else if (a.renamed && !opts.mode.fixed && !a.error->is(ErrorCode::PreconditionViolated)) {
    InferOptions fixed = a.options;
    IncompletenessOutcome inc = classify_incompleteness(env, *a.renamed, *a.error, witness, fixed);
    a.incompleteness_detail = inc.detail;
    if (inc.bug) a.bugs.push_back(*inc.bug);
  }
  return a;
}

/// unify plus the correctness verdict under a model (identity by default).
struct UnifyAnalysis {
  Type lhs;
  Type rhs;
  Model model;
  std::optional<UnifyResult> result;
  std::optional<Error> error;
  std::vector<std::string> trace;
  std::optional<UnifyVerdict> verdict;
};

inline UnifyAnalysis analyze_unify(const Type& a, const Type& b, const Model& m = {},
                                   bool trace = false) {
  UnifyAnalysis u{a, b, m, std::nullopt, std::nullopt, {}, std::nullopt};
  Tracer tracer(trace ? &u.trace : nullptr);
  FreshSupply fs;
  fs.reserve(std::max(max_serial(a), max_serial(b)));
  for (const auto& [id, e] : m) fs.reserve(std::max(id.serial, max_serial(e)));
  try {
    u.result = unify(a, b, fs, &tracer);
    u.verdict = verify_unify_correctness(a, b, m);
  } catch (const Error& e) {
    u.error = e;
  }
  return u;
}

inline std::vector<BugClass> bug_classes(const std::vector<BugReport>& bugs) {
  std::vector<BugClass> out;
  for (const auto& b : bugs) {
    if (std::find(out.begin(), out.end(), b.cls) == out.end()) out.push_back(b.cls);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::optional<BugClass> mode_bug(const UnifyAnalysis& u) {
  if (u.verdict && !u.verdict->holds) return BugClass::UnifPolyUnsound;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// JSON

inline std::string location(Span s) { return std::to_string(s.line) + ":" + std::to_string(s.col); }

inline Json to_json(const Error& e) {
  Json j;
  j["class"] = e.class_name();
  j["message"] = e.what();
  j["evidence"] = e.evidence();
  return j;
}

inline Json to_json(const Subst& s) {
  Json arr = Json::array();
  for (const auto& [id, d] : s) arr.push_back({{"var", id.str()}, {"descr", print(d)}});
  return arr;
}

inline Json to_json(const ConstraintSet& k) {
  Json arr = Json::array();
  for (const auto& c : k) arr.push_back({{"lhs", print(c.lhs)}, {"rhs", print(c.rhs)}});
  return arr;
}

inline Json to_json(const Model& m) {
  Json arr = Json::array();
  for (const auto& [id, e] : m) arr.push_back({{"var", id.str()}, {"effect", print(e)}});
  return arr;
}

inline Json to_json(const BugReport& b) {
  return {{"class", to_string(b.cls)},
          {"var", b.var},
          {"location", location(b.location)},
          {"evidence", b.evidence}};
}

inline Json to_json(const std::vector<BugReport>& bugs) {
  Json arr = Json::array();
  for (const auto& b : bugs) arr.push_back(to_json(b));
  return arr;
}

inline Json to_json(const InferAnalysis& a, bool solver) {
  Json j;
  j["schema"] = 1;
  j["mode"] = a.options.mode.name();
  if (a.result) {
    const InferResult& r = *a.result;
    j["result"] = "ok";
    j["type"] = print(r.ty);
    j["effect"] = print(r.eff);
    j["effect_normal"] = print(effect_normalize(r.eff));
    j["subst"] = to_json(r.subst);
    j["constraints"] = to_json(r.constraints);
  } else {
    j["error"] = to_json(*a.error);
  }
  j["bugs"] = to_json(a.bugs);
  if (solver && a.soundness) {
    const SoundnessOutcome& s = *a.soundness;
    Json sj;
    if (s.model) {
      sj["model"] = to_json(*s.model);
    } else if (s.status == SoundnessStatus::Unsatisfiable) {
      sj["unsat"] = true;
    } else {
      sj["skipped"] = s.detail;
    }
    j["solver"] = sj;
    Json snd;
    snd["status"] = to_string(s.status);
    snd["detail"] = s.detail;
    if (s.elaborated) snd["elaborated"] = print(*s.elaborated);
    j["soundness"] = snd;
  }
  if (!a.incompleteness_detail.empty()) j["completeness"] = a.incompleteness_detail;
  if (!a.trace.empty()) j["trace"] = a.trace;
  return j;
}

inline Json to_json(const CheckAnalysis& a) {
  Json j;
  j["schema"] = 1;
  j["mode"] = to_string(a.mode);
  if (a.result) {
    j["result"] = "ok";
    j["type"] = print(a.result->ty);
    j["effect"] = print(a.result->eff);
    j["effect_normal"] = print(effect_normalize(a.result->eff));
  } else {
    j["error"] = to_json(*a.error);
  }
  return j;
}

inline Json to_json(const UnifyAnalysis& u) {
  Json j;
  j["schema"] = 1;
  j["mode"] = "unify";
  j["lhs"] = print(u.lhs);
  j["rhs"] = print(u.rhs);
  if (u.result) {
    j["result"] = "ok";
    j["subst"] = to_json(u.result->subst);
    j["constraints"] = to_json(u.result->constraints);
  } else {
    j["error"] = to_json(*u.error);
  }
  j["model"] = to_json(u.model);
  if (u.verdict) {
    Json v;
    v["holds"] = u.verdict->holds;
    v["note"] = u.verdict->note;
    if (u.verdict->lhs) v["lhs"] = print(*u.verdict->lhs);
    if (u.verdict->rhs) v["rhs"] = print(*u.verdict->rhs);
    if (u.verdict->model) v["model"] = to_json(*u.verdict->model);
    j["verdict"] = v;
  }
  Json bugs = Json::array();
  if (auto b = mode_bug(u)) {
    bugs.push_back({{"class", to_string(*b)},
                    {"var", ""},
                    {"location", ""},
                    {"evidence", {print(*u.verdict->lhs), print(*u.verdict->rhs)}}});
  }
  j["bugs"] = bugs;
  if (!u.trace.empty()) j["trace"] = u.trace;
  return j;
}

// ---------------------------------------------------------------------------
// Text rendering

inline std::string render(const InferAnalysis& a, bool solver) {
  std::ostringstream out;
  for (const auto& l : a.trace) out << l << "\n";
  out << "mode:        " << a.options.mode.name() << "\n";
  if (a.result) {
    out << print(*a.result);
  } else {
    out << "error:       " << a.error->class_name() << ": " << a.error->what() << "\n";
  }
  if (solver && a.soundness) {
    const SoundnessOutcome& s = *a.soundness;
    if (s.model) {
      out << "model:       " << print(*s.model) << "\n";
    } else {
      out << "model:       none (" << s.detail << ")\n";
    }
    if (s.elaborated) out << "elaborated:  " << print(*s.elaborated) << "\n";
    out << "soundness:   " << to_string(s.status) << ": " << s.detail << "\n";
  }
  if (!a.incompleteness_detail.empty()) out << "completeness: " << a.incompleteness_detail << "\n";
  for (const auto& b : a.bugs) out << "bug:         " << print(b) << "\n";
  return out.str();
}

inline std::string render(const CheckAnalysis& a) {
  std::ostringstream out;
  if (a.result) {
    out << "type:   " << print(a.result->ty) << "\n"
        << "effect: " << print(a.result->eff) << "  (" << print(effect_normalize(a.result->eff))
        << ")\n";
  } else {
    out << "error:  " << a.error->class_name() << ": " << a.error->what() << "\n";
  }
  return out.str();
}

inline std::string render(const UnifyAnalysis& u) {
  std::ostringstream out;
  for (const auto& l : u.trace) out << l << "\n";
  if (u.result) {
    out << "subst:       " << print(u.result->subst) << "\n"
        << "constraints: " << print(u.result->constraints) << "\n";
  } else {
    out << "error:       " << u.error->class_name() << ": " << u.error->what() << "\n";
  }
  if (u.verdict) {
    out << "model:       " << print(u.model) << "\n";
    if (u.verdict->model && !(print(*u.verdict->model) == print(u.model))) {
      out << "completed:   " << print(*u.verdict->model) << "\n";
    }
    out << "correctness: " << (u.verdict->holds ? "holds" : "VIOLATED") << " (" << u.verdict->note
        << ")\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Expectations

struct ExpectationResult {
  bool passed = false;
  std::string actual;  // one-line summary of what happened
};

namespace detail {

inline std::string summarize_bugs(const std::vector<BugClass>& cs) {
  std::string out;
  for (auto c : cs) out += (out.empty() ? "" : ",") + std::string(to_string(c));
  return out.empty() ? "no bugs" : "bug " + out;
}

inline ExpectationResult judge(const Expectation& x, const std::optional<Type>& ty,
                               const std::optional<Effect>& eff, const std::optional<Error>& err,
                               const std::vector<BugClass>& bugs) {
  ExpectationResult r;
  std::string outcome = err ? "fail " + err->class_name()
                            : ty ? "accept " + print(*ty) + " & " + print(*eff) : "accept";
  r.actual = outcome + "; " + summarize_bugs(bugs);
  switch (x.outcome) {
    case Outcome::Accept:
      r.passed = !err && (!x.ty || !ty || equivalent_up_to_renaming(*x.ty, *x.eff, *ty, *eff));
      break;
    case Outcome::Fail:
      r.passed = err && error_matches(*err, x.error_class);
      break;
    case Outcome::Bug: {
      std::vector<BugClass> want = x.bugs;
      std::sort(want.begin(), want.end());
      want.erase(std::unique(want.begin(), want.end()), want.end());
      r.passed = want == bugs;
      break;
    }
  }
  return r;
}

}  // namespace detail

inline ExpectationResult evaluate(const SourceFile& sf, const Expectation& x) {
  switch (x.mode) {
    case ExpectMode::Check:
    case ExpectMode::Sinfer: {
      CheckAnalysis a = analyze_check(sf.prelude, *sf.program, x.mode);
      std::optional<Type> ty;
      std::optional<Effect> eff;
      if (a.result) {
        ty = a.result->ty;
        eff = a.result->eff;
      }
      return detail::judge(x, ty, eff, a.error, {});
    }
    case ExpectMode::InferFaithful:
    case ExpectMode::InferFixed: {
      InferOptions opts;
      opts.mode = x.mode == ExpectMode::InferFixed ? Mode::fixed_mode() : Mode::faithful();
      InferAnalysis a = analyze_infer(sf.prelude, *sf.program, sf.witness, opts);
      std::optional<Type> ty;
      std::optional<Effect> eff;
      if (a.result) {
        ty = a.result->ty;
        eff = a.result->eff;
      }
      return detail::judge(x, ty, eff, a.error, bug_classes(a.bugs));
    }
    case ExpectMode::Unify: {
      UnifyAnalysis u = analyze_unify(sf.unify_goal->first, sf.unify_goal->second);
      std::vector<BugClass> bugs;
      if (auto b = mode_bug(u)) bugs.push_back(*b);
      return detail::judge(x, std::nullopt, std::nullopt, u.error, bugs);
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Corpus runner

struct CorpusCase {
  std::string file;
  int line = 0;
  std::string expectation;
  bool passed = false;
  std::string actual;
};

struct CorpusReport {
  std::string dir;
  std::vector<CorpusCase> cases;
  std::size_t passed() const {
    return static_cast<std::size_t>(
        std::count_if(cases.begin(), cases.end(), [](const CorpusCase& c) { return c.passed; }));
  }
  bool ok() const { return passed() == cases.size(); }
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Runs every expectation of every `.eff` file under `dir`, in path order.
/// A file that fails to parse counts as one failed case.
inline CorpusReport run_corpus(const std::filesystem::path& dir) {
  CorpusReport rep;
  rep.dir = dir.string();
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".eff") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::string name = f.lexically_relative(dir).generic_string();
    try {
      SourceFile sf = parse_source(read_file(f), name);
      for (const auto& x : sf.directives) {
        ExpectationResult r = evaluate(sf, x);
        rep.cases.push_back({name, x.line, x.text, r.passed, r.actual});
      }
    } catch (const Error& e) {
      rep.cases.push_back({name, 0, "parse", false, e.class_name() + ": " + e.what()});
    }
  }
  return rep;
}

inline Json to_json(const CorpusReport& rep) {
  Json j;
  j["schema"] = 1;
  j["mode"] = "corpus";
  j["dir"] = rep.dir;
  Json cases = Json::array();
  for (const auto& c : rep.cases) {
    cases.push_back({{"file", c.file},
                     {"line", c.line},
                     {"expect", c.expectation},
                     {"status", c.passed ? "pass" : "fail"},
                     {"actual", c.actual}});
  }
  j["cases"] = cases;
  j["passed"] = rep.passed();
  j["failed"] = rep.cases.size() - rep.passed();
  return j;
}

inline std::string render(const CorpusReport& rep) {
  std::ostringstream out;
  for (const auto& c : rep.cases) {
    out << (c.passed ? "PASS  " : "FAIL  ") << c.file << ":" << c.line << "  " << c.expectation
        << "\n";
    if (!c.passed) out << "      actual: " << c.actual << "\n";
  }
  out << rep.passed() << "/" << rep.cases.size() << " expectations met\n";
  return out.str();
}

}  // namespace effrec
