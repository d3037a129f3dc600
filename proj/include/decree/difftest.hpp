#pragma once

// End-to-end differential test of two app versions:
// diff -> generate tests -> execute both sides -> compare -> report.

#include <string>
#include <utility>
#include <vector>

#include "decree/compare.hpp"
#include "decree/diff.hpp"
#include "decree/executor.hpp"
#include "decree/reference_arch.hpp"
#include "decree/testgen.hpp"

namespace decree {

struct DifftestConfig {
  DeviceProfile profile;
  TestgenConfig testgen;
  Rational perf_tolerance{0};
  std::vector<std::string> monitor = kStandardMetrics;
  // Runtime state of each side, e.g. produced by the technique pipeline.
  OsPolicy original_policy;
  OsPolicy instrumented_policy;
  Config original_runtime;      // prefetch_battery_min / cache_hit_ms overrides
  Config instrumented_runtime;
  bool force_all = false;       // test every shared callback
};

struct DifftestResult {
  DiffReport report;
  // Per test, in suite order; original trace absent for added callbacks.
  std::vector<std::pair<std::optional<RunTrace>, RunTrace>> traces;
};

inline DeviceProfile apply_runtime_config(DeviceProfile p, const Config& runtime) {
  if (auto it = runtime.find("prefetch_battery_min"); it != runtime.end()) p.prefetch_battery_min = std::stoll(it->second);
  if (auto it = runtime.find("cache_hit_ms"); it != runtime.end()) p.cache_hit_ms = std::stoll(it->second);
  return p;
}

inline Json environment_echo(const DifftestConfig& cfg) {
  Json j = to_json(cfg.profile);
  j["loop_bound"] = cfg.testgen.loop_bound;
  j["max_paths"] = cfg.testgen.max_paths;
  j["perf_tolerance"] = cfg.perf_tolerance.to_string();
  j["force_all"] = cfg.force_all;
  auto runtime = [](const Config& c) {
    Json r = Json::object();
    for (const auto& [k, v] : c) r[k] = v;
    return r;
  };
  j["original_runtime"] = runtime(cfg.original_runtime);
  j["instrumented_runtime"] = runtime(cfg.instrumented_runtime);
  j["original_policy"] = to_json(cfg.original_policy);
  j["instrumented_policy"] = to_json(cfg.instrumented_policy);
  return j;
}

// Test inputs are given for the original's params; a changed parameter list on
// the instrumented side is padded with 0 for params the original lacks.
inline DifftestResult run_difftest(std::string name, const AppModel& original, const AppModel& instrumented,
                                   const DifftestConfig& cfg) {
  cfg.profile.validate();
  CallbackDiff diff = diff_apps(original, instrumented);
  CallbackDiff targets = cfg.force_all ? force_all_modified(diff) : diff;
  TestSuite suite = generate_tests(original, instrumented, targets, cfg.testgen);
  DeviceProfile orig_profile = apply_runtime_config(cfg.profile, cfg.original_runtime);
  DeviceProfile instr_profile = apply_runtime_config(cfg.profile, cfg.instrumented_runtime);
  orig_profile.validate();
  instr_profile.validate();

  DifftestResult result;
  std::vector<PairVerdict> verdicts;
  for (const auto& t : suite.generated) {
    Inputs instr_inputs = t.inputs;
    if (const Callback* icb = instrumented.find(t.callback))
      for (const auto& p : icb->params) instr_inputs.try_emplace(p, 0);
    RunTrace instr = execute_callback(instrumented, t.callback, instr_inputs, instr_profile, cfg.instrumented_policy);
    PairVerdict v;
    if (t.source == TestSource::InstrumentedOnly) {
      v = compare_added(instr);
      result.traces.emplace_back(std::nullopt, std::move(instr));
    } else {
      RunTrace orig = execute_callback(original, t.callback, t.inputs, orig_profile, cfg.original_policy);
      v = compare_traces(orig, instr, cfg.perf_tolerance);
      result.traces.emplace_back(std::move(orig), std::move(instr));
    }
    v.test_id = t.id;
    verdicts.push_back(std::move(v));
  }
  result.report = aggregate_report(std::move(name), diff, suite, std::move(verdicts), environment_echo(cfg),
                                   cfg.monitor);
  return result;
}

}  // namespace decree
