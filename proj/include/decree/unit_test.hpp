#pragma once

// Technique unit tests: run a manifest's pipeline (or a prefix of it) on an
// input model and compare the produced artifact with a recorded expectation.

#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "decree/io.hpp"
#include "decree/rational.hpp"
#include "decree/reference_arch.hpp"

namespace decree {

struct UnitTestDoc {
  std::string id;
  std::string technique;  // must equal the manifest's technique_id
  std::string op;         // "pipeline" or the name of a component to stop after
  std::string input;      // model source: file path or pool:<id>
  std::string expect_kind;  // model_hash | facts
  Json expect_value;
};

inline UnitTestDoc unit_test_from_json(const Json& j) {
  std::vector<std::string> issues;
  UnitTestDoc d;
  if (!j.is_object()) throw ValidationError({"unit test: expected an object"});
  for (const auto& [key, _] : j.items())
    if (key != "id" && key != "technique" && key != "op" && key != "input" && key != "expect")
      issues.push_back("unit test: unknown key '" + key + "'");
  auto str = [&](const Json& obj, const char* key, std::string& out) {
    if (!obj.contains(key) || !obj[key].is_string()) issues.push_back(std::string("unit test: '") + key + "' must be a string");
    else out = obj[key].get<std::string>();
  };
  str(j, "id", d.id);
  str(j, "technique", d.technique);
  str(j, "op", d.op);
  str(j, "input", d.input);
  if (!j.contains("expect") || !j["expect"].is_object()) {
    issues.emplace_back("unit test: 'expect' must be an object {kind, value}");
  } else {
    const Json& e = j["expect"];
    str(e, "kind", d.expect_kind);
    if (!e.contains("value")) issues.emplace_back("unit test: expect needs a 'value'");
    else d.expect_value = e["value"];
    if (!d.expect_kind.empty() && d.expect_kind != "model_hash" && d.expect_kind != "facts")
      issues.push_back("unit test: unknown expectation kind '" + d.expect_kind + "'");
    if (d.expect_kind == "model_hash" && !d.expect_value.is_string())
      issues.emplace_back("unit test: model_hash expectation must be a hex string");
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return d;
}

inline UnitTestDoc parse_unit_test(std::string_view text) { return unit_test_from_json(parse_json(text)); }

struct UnitResult {
  std::string test_id;
  bool pass = false;
  std::string reason;  // failure reason
  double execution_time_ms = 0;  // wall clock, not reproducible
};

// Loads the model named by a unit test's `input`.
using ModelLoader = std::function<AppModel(const std::string& source)>;

inline UnitResult run_unit_test(const TechniqueManifest& manifest, const UnitTestDoc& doc, const ModelLoader& load) {
  if (doc.technique != manifest.technique_id)
    throw NotFoundError("unit test '" + doc.id + "' targets unknown technique '" + doc.technique + "'");
  AppModel input = load(doc.input);

  Pipeline pipeline = compose_pipeline(manifest);
  if (doc.op != "pipeline") {
    auto names = pipeline.stage_names();
    auto it = std::find(names.begin(), names.end(), doc.op);
    if (it == names.end()) throw NotFoundError("unit test '" + doc.id + "' names unknown component '" + doc.op + "'");
    pipeline.stages.resize(static_cast<std::size_t>(it - names.begin()) + 1);
  }

  UnitResult r;
  r.test_id = doc.id;
  auto start = std::chrono::steady_clock::now();
  try {
    PipelineArtifacts a = run_pipeline(pipeline, input);
    r.execution_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (doc.expect_kind == "model_hash") {
      if (!a.instrumented_model) {
        r.reason = "mismatch: no instrumented model produced";
      } else {
        std::string actual = model_digest(*a.instrumented_model).hex();
        r.pass = actual == doc.expect_value.get<std::string>();
        if (!r.pass) r.reason = "mismatch: expected " + doc.expect_value.get<std::string>() + ", got " + actual;
      }
    } else {
      Json actual = Json::object();
      if (doc.op == "pipeline") {
        for (const auto& [k, v] : a.facts) actual[k] = v;
      } else if (auto it = a.facts.find(doc.op); it != a.facts.end()) {
        actual = it->second;
      }
      r.pass = actual == doc.expect_value;
      if (!r.pass) r.reason = "mismatch: facts differ, got " + actual.dump();
    }
  } catch (const StageError& e) {
    r.execution_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    r.reason = std::string("error: ") + e.what();
  }
  return r;
}

// Input paths are relative to the unit-test document's directory.
inline UnitResult run_unit_test_file(const TechniqueManifest& manifest, const std::filesystem::path& utest_path) {
  UnitTestDoc doc = parse_unit_test(read_file(utest_path));
  auto base = utest_path.parent_path();
  return run_unit_test(manifest, doc,
                       [&](const std::string& src) { return parse_app_model(read_file(base / src)); });
}

// Fraction of passing results.
inline Rational accuracy(const std::vector<UnitResult>& results) {
  if (results.empty()) throw Error("accuracy of an empty result list");
  std::int64_t passes = 0;
  for (const auto& r : results) passes += r.pass ? 1 : 0;
  return Rational(passes, static_cast<std::int64_t>(results.size()));
}

}  // namespace decree
