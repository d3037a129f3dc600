#pragma once

// Executes a parsed .dscr script statement by statement.
//
// The report body never mentions where a source came from, only the digest of
// its content, so a script that names files and one that names the same
// content in a repository pool produce byte-identical reports. Wall-clock
// measurements live in a separate "wall_clock" section that the digest does
// not cover.

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "decree/difftest.hpp"
#include "decree/dsl.hpp"
#include "decree/io.hpp"
#include "decree/unit_test.hpp"

namespace decree {

inline constexpr std::string_view kArtifactVersion = "decree-artifact/1";

// Returns the payload document text of a pool entry; throws NotFoundError.
using PoolResolver = std::function<std::string(std::string_view pool, std::string_view id)>;

struct ScriptContext {
  std::optional<std::filesystem::path> workspace;  // base of file sources
  PoolResolver resolver;
};

class ScriptError : public Error {
 public:
  ScriptError(std::size_t index, dsl::SourcePos pos, const std::string& cause, bool input_error)
      : Error("statement " + std::to_string(index + 1) + " (line " + std::to_string(pos.line) + "): " + cause),
        index_(index),
        pos_(pos),
        input_error_(input_error) {}
  std::size_t index() const { return index_; }
  dsl::SourcePos pos() const { return pos_; }
  // The cause was a missing, malformed or invalid input rather than a failure
  // while executing.
  bool input_error() const { return input_error_; }

 private:
  std::size_t index_;
  dsl::SourcePos pos_;
  bool input_error_;
};

struct ScriptReport {
  Json body;
  Digest64 digest;
  Json wall_clock = Json::object();
  bool verdict_failure = false;
  std::size_t difftests = 0;
  std::size_t unit_tests = 0;
  // Further outputs relative to the run directory (suites, traces, models).
  std::map<std::string, std::string> files;

  Json to_json() const {
    Json j = body;
    j["wall_clock"] = wall_clock;
    j["digest"] = digest.hex();
    return j;
  }
};

inline std::string serialize_script_report(const ScriptReport& r) { return dump_document(r.to_json()); }

// Writes report.json and every other output under `run_dir`.
inline void write_run_outputs(const ScriptReport& r, const std::filesystem::path& run_dir) {
  for (const auto& [rel, content] : r.files) write_file(run_dir / rel, content);
  write_file(run_dir / "report.json", serialize_script_report(r));
}

// Characters outside [A-Za-z0-9._-] become '_'.
inline std::string sanitize_file_name(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '_' && c != '-') c = '_';
  return out;
}

struct EnvState {
  DeviceProfile profile;
  std::size_t loop_bound = 2;
  std::size_t max_paths = 256;
  Rational perf_tolerance{0};

  void apply(const dsl::EnvDecl& env) {
    for (const auto& [key, value] : env.values) {
      const dsl::EnvKey* spec = dsl::find_env_key(key);
      if (!spec) throw Error("unknown environment key '" + key + "'");
      if (spec->type == dsl::EnvType::Integer) {
        auto v = dsl::parse_integer(value.text);
        if (!v) throw Error("'" + key + "' must be an integer");
        if (key == "net_latency_ms") profile.net_latency_ms = *v;
        else if (key == "net_bandwidth_kbps") profile.net_bandwidth_kbps = *v;
        else if (key == "battery_pct") profile.battery_pct = *v;
        else if (key == "cache_hit_ms") profile.cache_hit_ms = *v;
        else if (key == "prefetch_battery_min") profile.prefetch_battery_min = *v;
        else if (key == "loop_bound" || key == "max_paths") {
          if (*v < (key == "loop_bound" ? 0 : 1)) throw Error("'" + key + "' out of range");
          (key == "loop_bound" ? loop_bound : max_paths) = static_cast<std::size_t>(*v);
        }
      } else {
        auto v = Rational::parse(value.text);
        if (!v) throw Error("'" + key + "' must be a number");
        if (key == "battery_drain_pct_per_s") profile.battery_drain_pct_per_s = *v;
        else if (key == "cpu_factor") profile.cpu_factor = *v;
        else if (key == "perf_tolerance") {
          if (*v < Rational(0)) throw Error("perf_tolerance must be non-negative");
          perf_tolerance = *v;
        }
      }
    }
  }

  Json to_json() const {
    Json j = decree::to_json(profile);
    j["loop_bound"] = loop_bound;
    j["max_paths"] = max_paths;
    j["perf_tolerance"] = perf_tolerance.to_string();
    return j;
  }
};

// The environment in effect after all of the script's environment statements.
inline EnvState fold_environment(const dsl::Script& script) {
  EnvState env;
  for (const auto& st : script.statements)
    if (const auto* e = std::get_if<dsl::EnvDecl>(&st.node)) env.apply(*e);
  return env;
}

namespace detail {

struct ModelEntry {
  AppModel model;
  OsPolicy policy;
  Config runtime;
};

struct TechniqueEntry {
  TechniqueManifest manifest;
  Digest64 digest;
};

inline std::string load_source(const dsl::Source& src, std::string_view pool, const ScriptContext& ctx) {
  if (src.pool) {
    if (!ctx.resolver) throw Error("pool reference 'pool:" + src.value + "' but no repository is available");
    return ctx.resolver(pool, src.value);
  }
  if (!ctx.workspace) throw Error("file source '" + src.value + "' but no workspace is available");
  return read_file(*ctx.workspace / src.value);
}

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace detail

inline ScriptReport run_script(const dsl::Script& script, const ScriptContext& ctx) {
  auto started = std::chrono::steady_clock::now();
  EnvState env;
  std::vector<std::string> monitor = {std::string(kMetricSimTime)};
  std::map<std::string, detail::ModelEntry> models;
  std::map<std::string, detail::TechniqueEntry> techniques;
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> unit_tally;  // technique -> (pass, total)

  ScriptReport report;
  Json statements = Json::array();
  Json unit_clock = Json::array();

  for (std::size_t i = 0; i < script.statements.size(); ++i) {
    const dsl::Statement& st = script.statements[i];
    Json entry = Json::object();
    try {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, dsl::EnvDecl>) {
              env.apply(n);
              env.profile.validate();
              entry["statement"] = "environment";
              Json values = Json::object();
              for (const auto& [k, v] : n.values) values[k] = v.text;
              entry["values"] = std::move(values);
            } else if constexpr (std::is_same_v<T, dsl::MonitorDecl>) {
              monitor.clear();
              for (const auto& m : kStandardMetrics)
                if (m == kMetricSimTime || std::find(n.metrics.begin(), n.metrics.end(), m) != n.metrics.end())
                  monitor.push_back(m);
              entry["statement"] = "monitor";
              entry["metrics"] = monitor;
            } else if constexpr (std::is_same_v<T, dsl::BenchmarkDecl>) {
              AppModel m = parse_app_model(detail::load_source(n.source, "benchmarks", ctx));
              entry["statement"] = "benchmark";
              entry["alias"] = n.alias;
              entry["app_id"] = m.app_id;
              entry["digest"] = model_digest(m).hex();
              models[n.alias] = {std::move(m), {}, {}};
            } else if constexpr (std::is_same_v<T, dsl::TechniqueDecl>) {
              TechniqueManifest m = load_manifest(detail::load_source(n.source, "microservices", ctx));
              compose_pipeline(m);
              Digest64 d = fnv1a64(serialize_manifest(m));
              entry["statement"] = "technique";
              entry["alias"] = n.alias;
              entry["technique_id"] = m.technique_id;
              entry["digest"] = d.hex();
              techniques[n.alias] = {std::move(m), d};
            } else if constexpr (std::is_same_v<T, dsl::ApplyStmt>) {
              const auto& tech = techniques.at(n.technique);
              const auto& input = models.at(n.benchmark);
              Pipeline p = compose_pipeline(tech.manifest);
              PipelineArtifacts a = run_pipeline(p, input.model);
              detail::ModelEntry out{a.instrumented_model ? *a.instrumented_model : input.model,
                                     a.os_policy ? *a.os_policy : input.policy, input.runtime};
              if (a.backend_config)
                for (const auto& [k, v] : *a.backend_config) out.runtime[k] = v;
              entry["statement"] = "apply";
              entry["technique"] = n.technique;
              entry["benchmark"] = n.benchmark;
              entry["as"] = n.as;
              entry["stages"] = p.stage_names();
              Json facts = Json::object();
              for (const auto& [k, v] : a.facts) facts[k] = v;
              entry["facts"] = std::move(facts);
              entry["model_digest"] = model_digest(out.model).hex();
              entry["os_policy"] = to_json(out.policy);
              Json runtime = Json::object();
              for (const auto& [k, v] : out.runtime) runtime[k] = v;
              entry["runtime"] = std::move(runtime);
              report.files["models/" + sanitize_file_name(n.as) + ".app.json"] = serialize_app_model(out.model);
              models[n.as] = std::move(out);
            } else if constexpr (std::is_same_v<T, dsl::UnitTestStmt>) {
              if (n.source.pool) throw Error("unit-test documents must be files");
              std::string text = detail::load_source(n.source, "", ctx);
              UnitTestDoc doc = parse_unit_test(text);
              auto base = (*ctx.workspace / n.source.value).parent_path();
              const auto& tech = techniques.at(n.technique);
              UnitResult r = run_unit_test(tech.manifest, doc, [&](const std::string& src) {
                if (src.rfind("pool:", 0) == 0)
                  return parse_app_model(detail::load_source({true, src.substr(5)}, "benchmarks", ctx));
                return parse_app_model(read_file(base / src));
              });
              auto& tally = unit_tally[n.technique];
              tally.first += r.pass ? 1 : 0;
              tally.second += 1;
              ++report.unit_tests;
              if (!r.pass) report.verdict_failure = true;
              entry["statement"] = "unittest";
              entry["technique"] = n.technique;
              entry["test_id"] = r.test_id;
              entry["digest"] = fnv1a64(parse_json(text).dump()).hex();
              entry["pass"] = r.pass;
              entry["reason"] = r.reason;
              Json clock = Json::object();
              clock["statement"] = i + 1;
              clock["test_id"] = r.test_id;
              clock["execution_time_ms"] = r.execution_time_ms;
              unit_clock.push_back(std::move(clock));
            } else if constexpr (std::is_same_v<T, dsl::DiffTestStmt>) {
              const auto& orig = models.at(n.original);
              const auto& instr = models.at(n.instrumented);
              DifftestConfig cfg;
              cfg.profile = env.profile;
              cfg.testgen.loop_bound = env.loop_bound;
              cfg.testgen.max_paths = env.max_paths;
              cfg.perf_tolerance = env.perf_tolerance;
              if (n.bound) cfg.testgen.loop_bound = static_cast<std::size_t>(*dsl::parse_integer(*n.bound));
              if (n.max_paths) cfg.testgen.max_paths = static_cast<std::size_t>(*dsl::parse_integer(*n.max_paths));
              if (n.perf_tolerance) cfg.perf_tolerance = *Rational::parse(*n.perf_tolerance);
              cfg.monitor = monitor;
              cfg.original_policy = orig.policy;
              cfg.instrumented_policy = instr.policy;
              cfg.original_runtime = orig.runtime;
              cfg.instrumented_runtime = instr.runtime;
              DifftestResult res = run_difftest(n.name, orig.model, instr.model, cfg);
              ++report.difftests;
              if (res.report.passed < res.report.compared) report.verdict_failure = true;
              std::string dir = sanitize_file_name(n.name);
              report.files["suites/" + dir + ".suite.json"] = serialize_suite(res.report.suite);
              for (std::size_t t = 0; t < res.traces.size(); ++t) {
                std::string stem = "traces/" + dir + "/" + sanitize_file_name(res.report.suite.generated[t].id);
                if (res.traces[t].first) report.files[stem + ".orig.trace.json"] = serialize_trace(*res.traces[t].first);
                report.files[stem + ".instr.trace.json"] = serialize_trace(res.traces[t].second);
              }
              entry["statement"] = "difftest";
              entry["name"] = n.name;
              entry["original"] = n.original;
              entry["instrumented"] = n.instrumented;
              entry["report"] = res.report.to_json();
            }
          },
          st.node);
    } catch (const ParseError& e) {
      throw ScriptError(i, st.pos, e.what(), true);
    } catch (const ValidationError& e) {
      throw ScriptError(i, st.pos, e.what(), true);
    } catch (const NotFoundError& e) {
      throw ScriptError(i, st.pos, e.what(), true);
    } catch (const std::exception& e) {
      throw ScriptError(i, st.pos, e.what(), false);
    }
    statements.push_back(std::move(entry));
  }

  Json body = Json::object();
  body["kind"] = "script";
  body["artifact_version"] = std::string(kArtifactVersion);
  body["environment"] = env.to_json();
  body["monitor"] = monitor;
  body["statements"] = std::move(statements);
  Json unit = Json::object();
  for (const auto& [tech, tally] : unit_tally) unit[tech] = Rational(tally.first, tally.second).to_string();
  body["unit_accuracy"] = std::move(unit);
  Json summary = Json::object();
  summary["difftests"] = report.difftests;
  summary["unit_tests"] = report.unit_tests;
  summary["verdict_failure"] = report.verdict_failure;
  body["summary"] = std::move(summary);
  report.digest = fnv1a64(body.dump());
  report.body = std::move(body);
  report.wall_clock["unit_tests"] = std::move(unit_clock);
  report.wall_clock["total_ms"] = detail::elapsed_ms(started);
  return report;
}

}  // namespace decree
