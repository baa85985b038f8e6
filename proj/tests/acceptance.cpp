// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "effrec/cli.hpp"

namespace {

using namespace effrec;
namespace fs = std::filesystem;

struct CriterionResult {
  bool passed = true;
  std::vector<std::string> notes;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      passed = false;
      notes.push_back(what);
    }
  }
};

Type ty(std::string_view s) { return parse_type(s, ParseOptions{true}); }
Effect eff(std::string_view s) { return parse_effect(s, ParseOptions{true}); }

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

// Runs a command, capturing stdout; returns the exit status.
int shell(const std::vector<std::string>& argv, std::string& out) {
  std::string cmd;
  for (const auto& a : argv) cmd += quote(a) + " ";
  cmd += "2>/dev/null";
  out.clear();
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return -1;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), n);
  int status = pclose(p);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int external_cli(const std::vector<std::string>& args, std::string& out) {
  std::vector<std::string> argv{EFFREC_CLI_PATH};
  argv.insert(argv.end(), args.begin(), args.end());
  return shell(argv, out);
}

struct Run {
  Expr renamed;
  std::optional<InferResult> result;
  std::optional<Error> error;
  std::vector<std::string> trace;
};

Run infer_src(std::string_view src, Mode mode) {
  Run r{parse_expr(src), std::nullopt, std::nullopt, {}};
  FreshSupply fs;
  r.renamed = rename_globally(r.renamed, prelude(), fs);
  Tracer tr(&r.trace);
  InferOptions opts;
  opts.mode = mode;
  opts.tracer = &tr;
  try {
    r.result = infer(prelude(), r.renamed, opts, fs);
  } catch (const Error& e) {
    r.error = e;
  }
  return r;
}

bool trace_has(const Run& r, const std::string& needle) {
  for (const auto& l : r.trace) {
    if (l.find(needle) != std::string::npos) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------

CriterionResult unification_counterexample() {
  CriterionResult o;
  FreshSupply fs;
  UnifyResult r = unify(ty("forall (a:Type). a"), ty("forall (a:Type). ?X"), fs);
  o.require(print(r.subst) == "[?X := %b1]", "σ is " + print(r.subst));
  o.require(r.constraints.empty(), "κ is " + print(r.constraints));
  UnifyVerdict v = verify_unify_correctness(ty("forall (a:Type). a"), ty("forall (a:Type). ?X"), Model{});
  o.require(!v.holds, "type variant holds");
  o.require(v.lhs && print(*v.lhs) == "forall (a:Type). a", "type variant lhs");
  o.require(v.rhs && print(*v.rhs) == "forall (a:Type). %b1", "type variant rhs");
  o.require(v.lhs && v.rhs && !type_equiv(*v.lhs, *v.rhs), "instances are equivalent");
  UnifyVerdict e = verify_unify_correctness(ty("forall (a:Effect). t1 -{a}-> t2"),
                                            ty("forall (a:Effect). t1 -{?X}-> t2"), Model{});
  o.require(!e.holds, "effect variant holds: " + e.note);
  return o;
}

CriterionResult soundness_escape() {
  CriterionResult o;
  Run r = infer_src("fn f -> tfn (a:Type) -> fn (x:a) -> f x", Mode::faithful());
  o.require(r.result.has_value(), "faithful inference failed");
  if (r.result) {
    o.require(equivalent_up_to_renaming(ty("(a -{?X}-> ?Y) -{pure}-> forall (a:Type). a -{?X}-> ?Y"),
                                        eff("pure"), r.result->ty, r.result->eff),
              "result shape " + print(r.result->ty));
    o.require(r.result->constraints == ConstraintSet{{eff("pure"), eff("pure")}},
              "constraints " + print(r.result->constraints));
    o.require(models(Model{}, r.result->constraints), "constraints not trivially satisfied");
    auto bugs = scope_check(prelude(), r.result.value());
    o.require(bugs.size() == 1 && bugs[0].cls == BugClass::TypeVarEscape && bugs[0].var == "a",
              "scope_check did not report TypeVarEscape(a)");
    SoundnessOutcome s = check_soundness(prelude(), r.renamed, *r.result);
    o.require(s.status == SoundnessStatus::Violated, std::string("pipeline: ") + to_string(s.status));
  }
  Run fixed = infer_src("fn f -> tfn (a:Type) -> fn (x:a) -> f x", Mode::fixed_mode());
  o.require(fixed.error && fixed.error->is(ErrorCode::EscapingVariable), "fixed mode did not reject");
  Run effect = infer_src("fn f -> tfn (a:Effect) -> fn (x: Int -{a}-> Int) -> f x", Mode::faithful());
  o.require(effect.result.has_value(), "effect variant failed to infer");
  if (effect.result) {
    auto bugs = scope_check(prelude(), *effect.result);
    o.require(bugs.size() == 1 && bugs[0].cls == BugClass::EffectVarEscape,
              "effect variant did not report EffectVarEscape");
  }
  return o;
}

CriterionResult polymorphic_result() {
  CriterionResult o;
  const char* src = "(fn x -> tfn (a:Type) -> x) 42";
  Run f = infer_src(src, Mode::faithful());
  o.require(f.error && f.error->is(ErrorCode::NotMonotype), "faithful mode did not fail with NotMonotype");
  o.require(trace_has(f, "unify[Arrow] ?X1 -{pure}-> forall (a:Type). ?X1 ~ Int -{?X4}-> ?X3"),
            "trace lacks the unify call");
  Run x = infer_src(src, Mode::fixed_mode());
  o.require(x.result.has_value(), "fixed mode failed");
  if (x.result) {
    o.require(type_equiv(x.result->ty, ty("forall (a:Type). Int")), "type " + print(x.result->ty));
    o.require(effect_equiv(x.result->eff, eff("pure")), "effect " + print(x.result->eff));
    try {
      Expr el = elaborate(x.renamed, *x.result, Model{});
      TypingResult t = check_declarative(prelude(), el);
      o.require(type_equiv(t.ty, x.result->ty), "checker type " + print(t.ty));
    } catch (const Error& e) {
      o.require(false, std::string("elaboration rejected: ") + e.what());
    }
  }
  return o;
}

CriterionResult polymorphic_instantiation() {
  CriterionResult o;
  const char* src = "(tfn (a:Type) -> fn x -> x)[forall (b:Type). b -{pure}-> b] (tfn (c:Type) -> fn y -> y)";
  for (Mode m : {Mode::faithful(), Mode::fixed_mode()}) {
    Run r = infer_src(src, m);
    o.require(r.error && r.error->is(ErrorCode::NotMonotype), m.name() + " did not fail with NotMonotype");
  }
  try {
    TypingResult t = check_declarative(
        prelude(), parse_expr("(tfn (a:Type) -> fn (x: forall (b:Type). b -{pure}-> b) -> x)"
                              "[forall (b:Type). b -{pure}-> b] (tfn (c:Type) -> fn (y:c) -> y)"));
    o.require(type_equiv(t.ty, ty("forall (b:Type). b -{pure}-> b")), "checker type " + print(t.ty));
  } catch (const Error& e) {
    o.require(false, std::string("hand-elaborated program rejected: ") + e.what());
  }
  return o;
}

CriterionResult let_counterexample() {
  CriterionResult o;
  Run r = infer_src(
      "tfn (a1:Type) -> tfn (a2:Type) -> fn (x1:a1) -> fn (x2:a2) ->"
      " let f = tfn (b:Type) -> fn y -> y in let z = f[a1] x1 in f[a2] x2",
      Mode::faithful());
  o.require(r.error && r.error->is(ErrorCode::Mismatch), "did not fail with Mismatch");
  if (r.error) {
    std::string msg = r.error->what();
    o.require(msg.find("a1") != std::string::npos && msg.find("a2") != std::string::npos, msg);
  }
  o.require(trace_has(r, "bind ?X1 := a1"), "trace lacks ?X1 := a1");
  o.require(trace_has(r, "instantiate b := a2 gives a1 -{pure}-> a1"),
            "the second instance does not depend on b");
  o.require(!r.trace.empty() && r.trace.back().find("unify[Mismatch] a1 ~ a2") != std::string::npos,
            "the run does not end in the mismatch at the final application");
  return o;
}

// Reruns the named property tests from the per-module suites.
CriterionResult property_suites() {
  CriterionResult o;
  const std::vector<std::pair<std::string, std::string>> suites{
      {"equivalence_test", "Properties.Aci1Laws"},
      {"syntax_test", "Properties.CompositionLaw"},
      {"wellformed_test", "Properties.CapturingMatchesAvoidingOnLocallyUniqueTypes"},
      {"declarative_test", "Properties.SinferAgreesWithCheckerOnAnnotatedFragment"},
      {"unification_test", "Properties.QuantifierFreeCorrectnessUnderEveryModel"},
  };
  for (const auto& [bin, filter] : suites) {
    std::string out;
    int code = shell({std::string(EFFREC_TEST_BIN_DIR) + "/" + bin, "--gtest_filter=" + filter}, out);
    bool ran = out.find("[  PASSED  ] 1 test") != std::string::npos;
    o.require(code == 0 && ran, bin + " " + filter + (ran ? " failed" : " did not run"));
  }
  return o;
}

struct FuzzSweep {
  std::vector<FuzzReport> reports;
  double seconds = 0;
};

const FuzzSweep& sweep() {
  static const FuzzSweep s = [] {
    FuzzSweep out;
    auto start = std::chrono::steady_clock::now();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      GenConfig cfg;
      cfg.seed = seed;
      cfg.max_depth = 5;
      out.reports.push_back(run_fuzz(cfg, 10000));
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  }();
  return s;
}

CriterionResult escape_free_soundness() {
  CriterionResult o;
  // The first 1000 terms of every seed, 10000 in all.
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.max_depth = 5;
    FuzzReport r = run_fuzz(cfg, 1000);
    checked += r.stats.escape_free_checked;
    o.require(r.stats.escape_free_failed == 0,
              "seed " + std::to_string(seed) + ": " + std::to_string(r.stats.escape_free_failed) +
                  " escape-free failures");
  }
  o.require(checked > 1000, "only " + std::to_string(checked) + " escape-free runs checked");
  std::size_t all_failed = 0;
  for (const auto& r : sweep().reports) all_failed += r.stats.escape_free_failed;
  o.require(all_failed == 0, std::to_string(all_failed) + " escape-free failures in the full sweep");
  o.notes.push_back(std::to_string(checked) + " escape-free runs checked");
  return o;
}

CriterionResult bug_rediscovery() {
  CriterionResult o;
  std::size_t type_escapes = 0;
  std::size_t total = 0;
  std::size_t replayed = 0;
  std::size_t external = 0;
  std::set<std::string> externally_seen;
  fs::path scratch = fs::temp_directory_path() / "effrec_acceptance_replay";
  fs::remove_all(scratch);
  for (const auto& rep : sweep().reports) {
    for (const auto& v : rep.violations) {
      ++total;
      if (v.cls == BugClass::TypeVarEscape) ++type_escapes;
      std::string stem = std::to_string(v.seed) + "_" + std::to_string(v.index) + "_" +
                         std::to_string(total);
      cli::ReplayResult r = cli::replay(v, scratch, stem);
      if (r.reproduced) {
        ++replayed;
      } else if (o.notes.size() < 5) {
        o.require(false, "seed " + std::to_string(v.seed) + " term " + std::to_string(v.index) +
                             " did not replay: " + print(v.minimized));
      } else {
        o.passed = false;
      }
      // One violation per (seed, theorem, class) also goes through the binary.
      std::string key = std::to_string(v.seed) + to_string(v.theorem) +
                        (v.cls ? to_string(*v.cls) : "Unclassified");
      if (externally_seen.insert(key).second) {
        cli::ReplayResult x = cli::replay(v, scratch, stem + "_x", external_cli);
        ++external;
        o.require(x.reproduced, "binary replay failed for " + print(v.minimized) + ": " + x.detail);
      }
    }
  }
  o.require(type_escapes >= 1, "no TypeVarEscape violation found");
  o.notes.push_back(std::to_string(type_escapes) + " TypeVarEscape, " + std::to_string(replayed) + "/" +
                    std::to_string(total) + " violations replayed (" + std::to_string(external) +
                    " through the binary), sweep " + std::to_string(static_cast<int>(sweep().seconds)) + "s");
  return o;
}

CriterionResult determinism() {
  CriterionResult o;
  const std::vector<std::vector<std::string>> commands{
      {"corpus", "run", EFFREC_CORPUS_DIR, "--json"},
      {"fuzz", "--seed", "7", "--count", "1000", "--max-depth", "5", "--json"},
  };
  for (const auto& args : commands) {
    std::string first;
    std::string second;
    int c1 = external_cli(args, first);
    int c2 = external_cli(args, second);
    o.require(c1 == 0 && c2 == 0, args[0] + " exited " + std::to_string(c1) + "/" + std::to_string(c2));
    o.require(!first.empty() && first == second, args[0] + " output differs between runs");
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<CriterionResult()>>> criteria{
      {"unification counterexample (type and effect variants)", unification_counterexample},
      {"escaping type abstraction binder", soundness_escape},
      {"arrow with polymorphic result", polymorphic_result},
      {"instantiation at a polytype", polymorphic_instantiation},
      {"let-bound type abstraction at two instances", let_counterexample},
      {"property suites over seeds 0..9", property_suites},
      {"escape-free soundness over 10000 terms", escape_free_soundness},
      {"fuzzer rediscovers TypeVarEscape; violations replay", bug_rediscovery},
      {"byte-identical JSON across runs", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    CriterionResult o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << (i + 1) << ": " << criteria[i].first << "\n";
    for (const auto& n : o.notes) {
      if (!n.empty()) std::cout << "     " << n << "\n";
    }
    std::cout.flush();
    failed += o.passed ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
