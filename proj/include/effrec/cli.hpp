#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "effrec/difftest.hpp"
#include "effrec/driver.hpp"
#include "effrec/parse.hpp"

namespace effrec::cli {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;

// ---------------------------------------------------------------------------
// Model files: one `?X := effect` per line; `--` starts a comment.

inline Model parse_model(std::string_view text) {
  Model m;
  int line = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    ++line;
    std::size_t nl = text.find('\n', pos);
    std::string raw(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (auto c = raw.find("--"); c != std::string::npos) raw.resize(c);
    std::string t = effrec::detail::trim(raw);
    if (t.empty()) continue;
    std::size_t sep = t.find(":=");
    if (sep == std::string::npos) {
      throw Error(ErrorCode::SyntaxError, "model line " + std::to_string(line) + ": expected '?X := effect'");
    }
    ParseOptions po{true, line};
    Effect var = parse_effect(effrec::detail::trim(t.substr(0, sep)), po);
    const auto* v = var.as_var();
    if (!v || !v->id.is_unif()) {
      throw Error(ErrorCode::SyntaxError,
                  "model line " + std::to_string(line) + ": left side must be a unification variable");
    }
    m.bind(v->id, parse_effect(effrec::detail::trim(t.substr(sep + 2)), po));
  }
  return m;
}

inline std::string render_model(const Model& m) {
  std::string out;
  for (const auto& [id, e] : m) out += id.str() + " := " + print(e) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Fuzz output

inline std::string violation_source(const Violation& v) {
  return "-- fuzz seed " + std::to_string(v.seed) + " term " + std::to_string(v.index) + "\n" +
         print(v.minimized) + "\n";
}

inline std::vector<std::string> replay_args(const Violation& v, const std::string& file,
                                            const std::string& model_file) {
  if (v.theorem == Theorem::T1) {
    return {"unify", print(v.unify_pair->first), print(v.unify_pair->second), "--model", model_file,
            "--json"};
  }
  return {"infer", file, v.mode.fixed ? "--fixed" : "--faithful", "--solve", "--json"};
}

inline Json to_json(const Violation& v) {
  Json j;
  j["seed"] = v.seed;
  j["index"] = v.index;
  j["theorem"] = to_string(v.theorem);
  j["class"] = v.cls ? to_string(*v.cls) : "Unclassified";
  j["mode"] = v.mode.name();
  j["term"] = print(v.term);
  j["minimized"] = print(v.minimized);
  j["detail"] = v.detail;
  if (v.unify_pair) {
    j["unify"] = {{"lhs", print(v.unify_pair->first)},
                  {"rhs", print(v.unify_pair->second)},
                  {"model", effrec::to_json(*v.model)}};
  }
  j["replay"] = replay_args(v, "<minimized.eff>", "<model.txt>");
  return j;
}

inline Json to_json(const FuzzReport& r) {
  Json j;
  j["schema"] = 1;
  j["mode"] = "fuzz";
  j["algorithm"] = r.mode.name();
  j["seed"] = r.config.seed;
  j["count"] = r.count;
  j["max_depth"] = r.config.max_depth;
  Json stats;
  stats["terms"] = r.stats.terms;
  stats["inferred"] = r.stats.inferred;
  stats["escape_free_checked"] = r.stats.escape_free_checked;
  stats["escape_free_failed"] = r.stats.escape_free_failed;
  stats["solver_skipped"] = r.stats.solver_skipped;
  stats["t1"] = r.stats.t1;
  stats["t3"] = r.stats.t3;
  stats["t4"] = r.stats.t4;
  Json by = Json::object();
  for (const auto& [k, n] : r.stats.by_class) by[k] = n;
  stats["by_class"] = by;
  j["stats"] = stats;
  Json vs = Json::array();
  for (const auto& v : r.violations) vs.push_back(to_json(v));
  j["violations"] = vs;
  return j;
}

inline std::string render(const FuzzReport& r) {
  std::ostringstream out;
  for (const auto& v : r.violations) {
    out << to_string(v.theorem) << " " << (v.cls ? to_string(*v.cls) : "Unclassified") << " #"
        << v.index << ": " << print(v.minimized) << "\n";
  }
  out << r.stats.terms << " terms, " << r.stats.inferred << " inferred, "
      << r.stats.escape_free_checked << " escape-free checked (" << r.stats.escape_free_failed
      << " failed), " << r.violations.size() << " violations\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Driver

namespace detail {

inline SourceFile load(const std::string& path) {
  return parse_source(read_file(path), path);
}

// Judges the file's expectations for `mode` against an analysis already
// run with the command-line options. Returns nullopt when the file has none.
inline std::optional<bool> judge_file(const SourceFile& sf, ExpectMode mode,
                                      const std::optional<Type>& ty,
                                      const std::optional<Effect>& eff,
                                      const std::optional<Error>& err,
                                      const std::vector<BugClass>& bugs, std::ostream& err_out) {
  bool any = false;
  bool ok = true;
  for (const auto& x : sf.directives) {
    if (x.mode != mode) continue;
    any = true;
    ExpectationResult r = effrec::detail::judge(x, ty, eff, err, bugs);
    if (!r.passed) {
      ok = false;
      err_out << sf.path << ":" << x.line << ": expectation not met\n"
              << "  expected: " << x.text << "\n"
              << "  actual:   " << r.actual << "\n";
    }
  }
  if (!any) return std::nullopt;
  return ok;
}

inline void emit(std::ostream& out, const Json& j) { out << j.dump(2) << "\n"; }

}  // namespace detail

/// Runs the command line `args` (without the program name). Output goes to
/// `out`, diagnostics to `err`; the return value is the exit status.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Type-and-effect reconstruction workbench"};
  app.require_subcommand(1);

  bool json = false;
  bool trace = false;

  std::string check_file;
  bool check_no_wf = false;
  auto* check = app.add_subcommand("check", "Type a fully annotated program declaratively");
  check->add_option("file", check_file, "program (.eff)")->required();
  check->add_flag("--no-wf-premises", check_no_wf, "skip kinding of lambda annotations");
  check->add_flag("--json", json, "emit JSON");

  std::string sinfer_file;
  auto* sinf = app.add_subcommand("sinfer", "Unification-free inference with capturing substitution");
  sinf->add_option("file", sinfer_file, "program (.eff)")->required();
  sinf->add_flag("--json", json, "emit JSON");

  std::string infer_file;
  bool faithful = false;
  bool fixed = false;
  bool no_wf = false;
  bool no_appd = false;
  bool solve = false;
  auto* inf = app.add_subcommand("infer", "Reconstruct types and effects");
  inf->add_option("file", infer_file, "program (.eff)")->required();
  auto* f1 = inf->add_flag("--faithful", faithful, "the unrepaired algorithm (default)");
  auto* f2 = inf->add_flag("--fixed", fixed, "with argument-only matching and scope checks");
  f1->excludes(f2);
  inf->add_flag("--no-wf-premises", no_wf, "skip kinding of annotations and type arguments");
  inf->add_flag("--no-appd-constraint-subst", no_appd,
                "do not substitute into constraints at type application");
  inf->add_flag("--solve", solve, "show the model, elaboration and soundness check");
  inf->add_flag("--json", json, "emit JSON");
  inf->add_flag("--trace", trace, "one line per algorithm case entered");

  std::string t1_text;
  std::string t2_text;
  std::string model_file;
  auto* uni = app.add_subcommand("unify", "Unify two types and test the correctness claim");
  uni->add_option("type1", t1_text, "first type")->required();
  uni->add_option("type2", t2_text, "second type")->required();
  uni->add_option("--model", model_file, "file of '?X := effect' lines (default: identity)");
  uni->add_flag("--json", json, "emit JSON");
  uni->add_flag("--trace", trace, "one line per unification case entered");

  std::string corpus_dir;
  auto* corpus = app.add_subcommand("corpus", "Work with a directory of .eff programs");
  auto* corpus_run = corpus->add_subcommand("run", "Check every expectation in DIR");
  corpus_run->add_option("dir", corpus_dir, "directory")->required();
  corpus_run->add_flag("--json", json, "emit JSON");
  corpus->require_subcommand(1);

  GenConfig gen;
  std::size_t count = 0;
  std::string fuzz_mode = "faithful";
  auto* fuzz = app.add_subcommand("fuzz", "Differential testing on generated terms");
  fuzz->add_option("--seed", gen.seed, "generator seed")->required();
  fuzz->add_option("--count", count, "number of terms")->required();
  fuzz->add_option("--max-depth", gen.max_depth, "term depth bound")->required()->check(
      CLI::Range(0, 12));
  fuzz->add_option("--mode", fuzz_mode, "algorithm under test")
      ->check(CLI::IsMember({"faithful", "fixed"}));
  fuzz->add_flag("--json", json, "emit JSON");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*check || *sinf) {
      bool is_check = static_cast<bool>(*check);
      SourceFile sf = detail::load(is_check ? check_file : sinfer_file);
      if (!sf.program) {
        err << sf.path << ": no program\n";
        return kExitViolation;
      }
      ExpectMode mode = is_check ? ExpectMode::Check : ExpectMode::Sinfer;
      CheckAnalysis a = analyze_check(sf.prelude, *sf.program, mode, CheckOptions{!check_no_wf});
      if (json) {
        detail::emit(out, effrec::to_json(a));
      } else {
        out << render(a);
      }
      std::optional<Type> ty;
      std::optional<Effect> eff;
      if (a.result) {
        ty = a.result->ty;
        eff = a.result->eff;
      }
      if (auto judged = detail::judge_file(sf, mode, ty, eff, a.error, {}, err)) {
        return *judged ? kExitOk : kExitViolation;
      }
      return a.result ? kExitOk : kExitViolation;
    }

    if (*inf) {
      SourceFile sf = detail::load(infer_file);
      if (!sf.program) {
        err << sf.path << ": no program\n";
        return kExitViolation;
      }
      InferOptions opts;
      opts.mode = fixed ? Mode::fixed_mode() : Mode::faithful();
      opts.wf_premises = !no_wf;
      opts.appd_constraint_subst = !no_appd;
      InferAnalysis a = analyze_infer(sf.prelude, *sf.program, sf.witness, opts, trace);
      if (json) {
        detail::emit(out, effrec::to_json(a, solve));
      } else {
        out << render(a, solve);
      }
      std::optional<Type> ty;
      std::optional<Effect> eff;
      if (a.result) {
        ty = a.result->ty;
        eff = a.result->eff;
      }
      ExpectMode mode = fixed ? ExpectMode::InferFixed : ExpectMode::InferFaithful;
      if (auto judged = detail::judge_file(sf, mode, ty, eff, a.error, bug_classes(a.bugs), err)) {
        return *judged ? kExitOk : kExitViolation;
      }
      bool violated = a.soundness && a.soundness->status == SoundnessStatus::Violated;
      return a.result && a.bugs.empty() && !violated ? kExitOk : kExitViolation;
    }

    if (*uni) {
      ParseOptions po{true, 1};
      Type t1 = parse_type(t1_text, po);
      Type t2 = parse_type(t2_text, po);
      Model m = model_file.empty() ? Model{} : parse_model(read_file(model_file));
      UnifyAnalysis u = analyze_unify(t1, t2, m, trace);
      if (json) {
        detail::emit(out, effrec::to_json(u));
      } else {
        out << render(u);
      }
      return u.result && u.verdict->holds ? kExitOk : kExitViolation;
    }

    if (*corpus_run) {
      CorpusReport rep = run_corpus(corpus_dir);
      if (json) {
        detail::emit(out, effrec::to_json(rep));
      } else {
        out << render(rep);
      }
      return rep.ok() ? kExitOk : kExitViolation;
    }

    if (*fuzz) {
      Mode mode = fuzz_mode == "fixed" ? Mode::fixed_mode() : Mode::faithful();
      FuzzReport rep = run_fuzz(gen, count, mode);
      if (json) {
        detail::emit(out, to_json(rep));
      } else {
        out << render(rep);
      }
      // Violations of the unrepaired algorithm are findings; an unexplained
      // soundness failure would be a defect of this implementation.
      return rep.stats.escape_free_failed == 0 ? kExitOk : kExitViolation;
    }
  } catch (const Error& e) {
    err << "error: " << e.class_name() << ": " << e.what() << "\n";
    return kExitViolation;
  }
  return kExitUsage;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, out, err);
}

// ---------------------------------------------------------------------------
// Replaying fuzz findings through the command line

using Runner = std::function<int(const std::vector<std::string>&, std::string& out)>;

inline int run_in_process(const std::vector<std::string>& args, std::string& out) {
  std::ostringstream o;
  std::ostringstream e;
  int code = run(args, o, e);
  out = o.str();
  return code;
}

struct ReplayResult {
  bool reproduced = false;
  std::string detail;
};

/// Writes the minimized violation (and, for a unification finding, its
/// model) under `scratch`, runs the matching CLI command and checks that
/// its JSON output shows the same finding.
inline ReplayResult replay(const Violation& v, const std::filesystem::path& scratch,
                           const std::string& stem, const Runner& runner = run_in_process) {
  std::filesystem::create_directories(scratch);
  auto file = scratch / (stem + ".eff");
  auto model = scratch / (stem + ".model");
  {
    std::ofstream f(file, std::ios::binary);
    f << violation_source(v);
  }
  if (v.model) {
    std::ofstream f(model, std::ios::binary);
    f << render_model(*v.model);
  }
  std::string output;
  runner(replay_args(v, file.string(), model.string()), output);
  ReplayResult r;
  Json j;
  try {
    j = Json::parse(output);
  } catch (const std::exception& e) {
    r.detail = std::string("unparsable CLI output: ") + e.what();
    return r;
  }
  auto has_bug = [&](const char* cls) {
    for (const auto& b : j["bugs"]) {
      if (b["class"] == cls) return true;
    }
    return false;
  };
  switch (v.theorem) {
    case Theorem::T1:
      r.reproduced = j.contains("verdict") && j["verdict"]["holds"] == false;
      break;
    case Theorem::T3:
      r.reproduced = j.contains("soundness") && j["soundness"]["status"] == "violated" &&
                     (!v.cls || has_bug(to_string(*v.cls)));
      break;
    case Theorem::T4:
      r.reproduced = j.contains("error") && v.cls && has_bug(to_string(*v.cls));
      break;
  }
  r.detail = r.reproduced ? "reproduced" : "not reproduced: " + j.dump();
  return r;
}

}  // namespace effrec::cli
