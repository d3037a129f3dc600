#pragma once

// Command-line front end. Exit codes: 0 success, 1 verdict failure (a failing
// difftest verdict or unit test), 2 usage or input error, 3 internal error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "decree/decree.hpp"
#include "decree/service.hpp"

namespace decree::cli {

enum ExitCode : int { kOk = 0, kVerdictFailure = 1, kUsage = 2, kInternal = 3 };

namespace detail {

struct EnvFlags {
  std::map<std::string, std::string> values;  // DSL key -> lexeme

  void add_to(CLI::App* cmd) {
    for (const auto& k : dsl::kEnvKeys) {
      std::string key(k.name);
      std::string dashed = key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      cmd->add_option_function<std::string>(
          "--" + dashed + ",--" + key, [this, key](const std::string& v) { values[key] = v; },
          "environment: " + key);
    }
  }

  EnvState state() const {
    dsl::EnvDecl decl;
    for (const auto& [k, v] : values) {
      const dsl::EnvKey* spec = dsl::find_env_key(k);
      bool ok = spec->type == dsl::EnvType::Integer ? dsl::parse_integer(v).has_value() : Rational::parse(v).has_value();
      if (!ok) throw ValidationError({"--" + k + ": '" + v + "' is not a valid value"});
      decl.values[k] = dsl::EnvValue{false, v};
    }
    EnvState s;
    s.apply(decl);
    s.profile.validate();
    return s;
  }
};

inline Config parse_assignments(const std::vector<std::string>& items) {
  Config c;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError({"expected KEY=VALUE, got '" + item + "'"});
    c[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return c;
}

inline AppModel load_model(const std::string& path) { return parse_app_model(read_file(path)); }

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Differential testing of instrumented app models"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  int code = kOk;

  // validate
  std::string v_model;
  auto* validate_cmd = app.add_subcommand("validate", "Check an app model");
  validate_cmd->add_option("model", v_model)->required();
  validate_cmd->callback([&] {
    AppModel m = detail::load_model(v_model);
    out << "ok: " << m.app_id << " " << m.version << ", " << m.callbacks.size() << " callback(s)\n";
  });

  // hash
  std::string h_model;
  auto* hash_cmd = app.add_subcommand("hash", "Print the model digest and per-callback canonical hashes");
  hash_cmd->add_option("model", h_model)->required();
  hash_cmd->callback([&] {
    AppModel m = detail::load_model(h_model);
    out << model_digest(m).hex() << "  " << m.app_id << "\n";
    for (const auto& cb : m.callbacks) out << canonical_hash(cb).hex() << "  " << cb.name << "\n";
  });

  // pipeline
  std::string p_manifest, p_model, p_out, p_model_out;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "Run a technique pipeline on a model");
  pipeline_cmd->add_option("manifest", p_manifest)->required();
  pipeline_cmd->add_option("model", p_model)->required();
  pipeline_cmd->add_option("-o,--out", p_out, "artifacts document")->required();
  pipeline_cmd->add_option("--model-out", p_model_out, "instrumented model, if one is produced");
  pipeline_cmd->callback([&] {
    TechniqueManifest manifest = load_manifest(read_file(p_manifest));
    Pipeline p = compose_pipeline(manifest);
    PipelineArtifacts a = run_pipeline(p, detail::load_model(p_model));
    write_file(p_out, dump_document(to_json(a)));
    if (!p_model_out.empty() && a.instrumented_model) write_file(p_model_out, serialize_app_model(*a.instrumented_model));
    out << "stages:";
    for (const auto& s : p.stage_names()) out << " " << s;
    out << "\n";
    if (a.instrumented_model) out << "instrumented model " << model_digest(*a.instrumented_model).hex() << "\n";
  });

  // diff
  std::string d_orig, d_instr, d_out;
  auto* diff_cmd = app.add_subcommand("diff", "Classify callbacks of two app versions");
  diff_cmd->add_option("original", d_orig)->required();
  diff_cmd->add_option("instrumented", d_instr)->required();
  diff_cmd->add_option("-o,--out", d_out);
  diff_cmd->callback([&] {
    CallbackDiff d = diff_apps(detail::load_model(d_orig), detail::load_model(d_instr));
    if (!d_out.empty()) write_file(d_out, dump_document(to_json(d)));
    out << "modified " << d.modified.size() << ", added " << d.added.size() << ", removed " << d.removed.size()
        << ", unchanged " << d.unchanged.size() << "\n";
    for (const auto& n : d.modified) out << "  M " << n << "\n";
    for (const auto& n : d.added) out << "  A " << n << "\n";
    for (const auto& n : d.removed) out << "  R " << n << "\n";
  });

  // gen
  std::string g_orig, g_instr, g_out;
  std::size_t g_bound = 2, g_max = 256;
  bool g_force = false;
  auto* gen_cmd = app.add_subcommand("gen", "Generate path-sensitive tests for modified callbacks");
  gen_cmd->add_option("original", g_orig)->required();
  gen_cmd->add_option("instrumented", g_instr)->required();
  gen_cmd->add_option("--bound", g_bound, "loop bound")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--max-paths", g_max)->check(CLI::PositiveNumber);
  gen_cmd->add_option("-o,--out", g_out);
  gen_cmd->add_flag("--force-all", g_force, "treat every shared callback as modified");
  gen_cmd->callback([&] {
    AppModel o = detail::load_model(g_orig), i = detail::load_model(g_instr);
    CallbackDiff d = diff_apps(o, i);
    if (g_force) d = force_all_modified(d);
    TestgenConfig cfg;
    cfg.loop_bound = g_bound;
    cfg.max_paths = g_max;
    TestSuite s = generate_tests(o, i, d, cfg);
    if (!g_out.empty()) write_file(g_out, serialize_suite(s));
    out << s.generated.size() << " test(s), " << s.skipped_infeasible.size() << " infeasible path(s)\n";
    for (const auto& t : s.generated) out << "  " << t.id << " " << to_json(t.inputs).dump() << "\n";
    for (const auto& w : s.warnings) out << "  warning: " << w << "\n";
  });

  // difftest
  std::string t_orig, t_instr, t_out, t_traces;
  bool t_force = false;
  std::vector<std::string> t_runtime, t_blocked, t_monitor;
  detail::EnvFlags t_env;
  auto* difftest_cmd = app.add_subcommand("difftest", "Differentially test two app versions");
  difftest_cmd->add_option("original", t_orig)->required();
  difftest_cmd->add_option("instrumented", t_instr)->required();
  difftest_cmd->add_option("-o,--out", t_out, "report document")->required();
  difftest_cmd->add_option("--traces", t_traces, "directory for execution traces");
  difftest_cmd->add_flag("--force-all", t_force, "treat every shared callback as modified");
  difftest_cmd->add_option("--runtime", t_runtime, "instrumented-side runtime setting KEY=VALUE");
  difftest_cmd->add_option("--block-intent", t_blocked, "intent action blocked on the instrumented side");
  difftest_cmd->add_option("--monitor", t_monitor, "monitored metric")
      ->check(CLI::IsMember(kStandardMetrics));
  t_env.add_to(difftest_cmd);
  difftest_cmd->callback([&] {
    EnvState env = t_env.state();
    DifftestConfig cfg;
    cfg.profile = env.profile;
    cfg.testgen.loop_bound = env.loop_bound;
    cfg.testgen.max_paths = env.max_paths;
    cfg.perf_tolerance = env.perf_tolerance;
    cfg.force_all = t_force;
    cfg.instrumented_runtime = detail::parse_assignments(t_runtime);
    for (const auto& b : t_blocked) cfg.instrumented_policy.blocked_intent_actions.insert(b);
    if (!t_monitor.empty()) cfg.monitor = t_monitor;
    DifftestResult r = run_difftest("difftest", detail::load_model(t_orig), detail::load_model(t_instr), cfg);
    write_file(t_out, serialize_report(r.report));
    if (!t_traces.empty()) {
      for (std::size_t k = 0; k < r.traces.size(); ++k) {
        auto stem = std::filesystem::path(t_traces) / sanitize_file_name(r.report.suite.generated[k].id);
        if (r.traces[k].first) write_file(stem.string() + ".orig.trace.json", serialize_trace(*r.traces[k].first));
        write_file(stem.string() + ".instr.trace.json", serialize_trace(r.traces[k].second));
      }
    }
    const DiffReport& rep = r.report;
    out << rep.verdicts.size() << " test(s), " << rep.passed << "/" << rep.compared << " passed\n";
    for (const auto& v : rep.verdicts) {
      out << "  " << v.test_id << " " << to_string(v.functional);
      if (v.orig_time_ms) out << " " << *v.orig_time_ms << "ms -> " << v.instr_time_ms << "ms";
      if (!v.perf_ok) out << " (slower)";
      if (!v.reason.empty()) out << " [" << v.reason << "]";
      out << "\n";
    }
    out << "digest " << rep.digest.hex() << "\n";
    if (rep.passed < rep.compared) code = kVerdictFailure;
  });

  // unittest
  std::string u_test, u_manifest, u_out;
  auto* unittest_cmd = app.add_subcommand("unittest", "Run a technique unit test");
  unittest_cmd->add_option("utest", u_test)->required();
  unittest_cmd->add_option("manifest", u_manifest)->required();
  unittest_cmd->add_option("-o,--out", u_out, "result document");
  unittest_cmd->callback([&] {
    TechniqueManifest m = load_manifest(read_file(u_manifest));
    UnitResult r = run_unit_test_file(m, u_test);
    if (!u_out.empty()) {
      Json j = Json::object();
      j["test_id"] = r.test_id;
      j["pass"] = r.pass;
      j["reason"] = r.reason;
      write_file(u_out, dump_document(j));
    }
    out << r.test_id << ": " << (r.pass ? "pass" : "fail");
    if (!r.reason.empty()) out << " (" << r.reason << ")";
    out << "\n";
    if (!r.pass) code = kVerdictFailure;
  });

  // script
  std::string s_file, s_workspace, s_repo, s_out;
  auto* script_cmd = app.add_subcommand("script", "Run a test script");
  script_cmd->add_option("script", s_file)->required();
  script_cmd->add_option("-w,--workspace", s_workspace, "base directory of file sources")->required();
  script_cmd->add_option("--repo", s_repo, "repository used to resolve pool: references");
  script_cmd->add_option("--out", s_out, "run directory (default <workspace>/out/<script name>)");
  script_cmd->callback([&] {
    dsl::Script script = dsl::parse_script(read_file(s_file));
    std::optional<Repository> repo;
    if (!s_repo.empty()) repo.emplace(s_repo);
    ScriptContext ctx;
    ctx.workspace = s_workspace;
    if (repo)
      ctx.resolver = [&](std::string_view pool, std::string_view id) { return repo->payload_text(pool, id); };
    ScriptReport r = run_script(script, ctx);
    std::filesystem::path dir = s_out.empty()
                                    ? std::filesystem::path(s_workspace) / "out" / std::filesystem::path(s_file).stem()
                                    : std::filesystem::path(s_out);
    write_file(dir / "script.dscr", dsl::format_script(script));
    write_run_outputs(r, dir);
    out << r.difftests << " difftest(s), " << r.unit_tests << " unit test(s)"
        << (r.verdict_failure ? ", failures" : "") << "\n";
    out << "report " << (dir / "report.json").string() << "\n";
    out << "digest " << r.digest.hex() << "\n";
    if (r.verdict_failure) code = kVerdictFailure;
  });

  // fmt
  std::string f_file;
  bool f_in_place = false, f_check = false;
  auto* fmt_cmd = app.add_subcommand("fmt", "Print a script in canonical form");
  fmt_cmd->add_option("script", f_file)->required();
  fmt_cmd->add_flag("-i,--in-place", f_in_place, "rewrite the file");
  fmt_cmd->add_flag("--check", f_check, "exit 1 if the file is not in canonical form");
  fmt_cmd->callback([&] {
    std::string text = read_file(f_file);
    std::string formatted = dsl::format_script(dsl::parse_script(text));
    if (f_check) {
      if (formatted != text) {
        out << f_file << ": not formatted\n";
        code = kVerdictFailure;
      }
    } else if (f_in_place) {
      write_file(f_file, formatted);
    } else {
      out << formatted;
    }
  });

  // serve
  std::string r_repo, r_host = "127.0.0.1";
  int r_port = 8080;
  bool r_queued = false;
  auto* serve_cmd = app.add_subcommand("serve", "Serve a repository over HTTP");
  serve_cmd->add_option("--repo", r_repo)->required();
  serve_cmd->add_option("--port", r_port)->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", r_host);
  serve_cmd->add_flag("--queued", r_queued, "execute runs on a background worker");
  serve_cmd->callback([&] {
    Repository repo(r_repo, r_queued);
    Service service(repo);
    httplib::Server server;
    service.mount(server);
    out << "serving " << r_repo << " on " << r_host << ":" << r_port << std::endl;
    if (!server.listen(r_host, r_port)) throw Error("cannot listen on " + r_host + ":" + std::to_string(r_port));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NotFoundError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ScriptError& e) {
    err << "error: " << e.what() << "\n";
    return e.input_error() ? kUsage : kInternal;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
  return code;
}

}  // namespace decree::cli
