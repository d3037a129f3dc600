#pragma once

// Technique manifests, the pipeline composer, and the pipeline runner.
//
// A manifest lists components, each of one of six reference kinds and backed
// by a registered built-in implementation. A component's `reads` config key
// (comma-separated component names) declares which earlier components'
// artifacts it consumes. Composition checks the workflow order and turns the
// manifest into stages; DeviceMonitor and BackendService components become
// runtime configuration instead of stages.

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "decree/app_model.hpp"
#include "decree/techniques.hpp"

namespace decree {

enum class ComponentKind {
  IntermediateRepresenter,
  StaticAnalyzer,
  AppInstrumenter,
  OsInstrumenter,
  DeviceMonitor,
  BackendService,
};

inline constexpr std::array<std::string_view, 6> kComponentKindNames = {
    "IntermediateRepresenter", "StaticAnalyzer", "AppInstrumenter",
    "OsInstrumenter",          "DeviceMonitor",  "BackendService"};

inline std::string_view to_string(ComponentKind k) { return kComponentKindNames[static_cast<std::size_t>(k)]; }

inline std::optional<ComponentKind> parse_component_kind(std::string_view s) {
  for (std::size_t i = 0; i < kComponentKindNames.size(); ++i)
    if (kComponentKindNames[i] == s) return static_cast<ComponentKind>(i);
  return std::nullopt;
}

inline bool is_instrumenter(ComponentKind k) {
  return k == ComponentKind::AppInstrumenter || k == ComponentKind::OsInstrumenter;
}
inline bool is_runtime(ComponentKind k) {
  return k == ComponentKind::DeviceMonitor || k == ComponentKind::BackendService;
}

enum class InstrumenterMode { Automatic, Manual };

using Config = std::map<std::string, std::string>;

struct ComponentDecl {
  std::string name;
  ComponentKind kind = ComponentKind::StaticAnalyzer;
  std::string impl;
  InstrumenterMode mode = InstrumenterMode::Automatic;  // meaningful for instrumenters only
  Config config;

  std::vector<std::string> reads() const {
    std::vector<std::string> out;
    auto it = config.find("reads");
    if (it == config.end()) return out;
    std::string_view rest = it->second;
    while (!rest.empty()) {
      auto comma = rest.find(',');
      std::string_view item = rest.substr(0, comma);
      while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
      while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
      if (!item.empty()) out.emplace_back(item);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    return out;
  }

  bool operator==(const ComponentDecl&) const = default;
};

struct TechniqueManifest {
  std::string technique_id;
  std::string description;
  std::vector<ComponentDecl> components;

  const ComponentDecl* find(std::string_view name) const {
    for (const auto& c : components)
      if (c.name == name) return &c;
    return nullptr;
  }
  bool operator==(const TechniqueManifest&) const = default;
};

// ---------------------------------------------------------------------------
// Built-in registry

// What a built-in needs among the artifacts of the components it reads.
enum class Needs { Nothing, Ir, UrlFacts, PrefetchPoints };

struct BuiltinInfo {
  std::string_view impl;
  ComponentKind kind;
  Needs needs;
};

inline constexpr std::array<BuiltinInfo, 9> kBuiltins = {{
    {"ccfg_ir", ComponentKind::IntermediateRepresenter, Needs::Nothing},
    {"string_analyzer", ComponentKind::StaticAnalyzer, Needs::Ir},
    {"callback_analyzer", ComponentKind::StaticAnalyzer, Needs::UrlFacts},
    {"prefetch_instrumenter", ComponentKind::AppInstrumenter, Needs::PrefetchPoints},
    {"logger_instrumenter", ComponentKind::AppInstrumenter, Needs::Nothing},
    {"fault_instrumenter", ComponentKind::AppInstrumenter, Needs::Nothing},
    {"os_policy", ComponentKind::OsInstrumenter, Needs::Nothing},
    {"proxy_cache", ComponentKind::BackendService, Needs::Nothing},
    {"device_monitor", ComponentKind::DeviceMonitor, Needs::Nothing},
}};

inline const BuiltinInfo* find_builtin(std::string_view impl) {
  for (const auto& b : kBuiltins)
    if (b.impl == impl) return &b;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Manifest documents

inline Json to_json(const TechniqueManifest& m) {
  Json j = Json::object();
  j["technique_id"] = m.technique_id;
  j["description"] = m.description;
  Json comps = Json::array();
  for (const auto& c : m.components) {
    Json cj = Json::object();
    cj["name"] = c.name;
    cj["kind"] = std::string(to_string(c.kind));
    cj["impl"] = c.impl;
    if (is_instrumenter(c.kind)) cj["mode"] = c.mode == InstrumenterMode::Manual ? "manual" : "automatic";
    Json cfg = Json::object();
    for (const auto& [k, v] : c.config) cfg[k] = v;
    cj["config"] = std::move(cfg);
    comps.push_back(std::move(cj));
  }
  j["components"] = std::move(comps);
  return j;
}

inline std::string serialize_manifest(const TechniqueManifest& m) { return dump_document(to_json(m)); }

inline TechniqueManifest manifest_from_json(const Json& j) {
  std::vector<std::string> issues;
  TechniqueManifest m;
  if (!j.is_object()) throw ValidationError({"manifest: expected an object"});
  for (const auto& [key, _] : j.items())
    if (key != "technique_id" && key != "description" && key != "components")
      issues.push_back("manifest: unknown key '" + key + "'");
  auto str = [&](const Json& obj, const char* key, const std::string& where, bool required) -> std::string {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) issues.push_back(where + ": missing '" + key + "'");
      return {};
    }
    if (!it->is_string()) {
      issues.push_back(where + ": '" + key + "' must be a string");
      return {};
    }
    return it->get<std::string>();
  };
  m.technique_id = str(j, "technique_id", "manifest", true);
  m.description = str(j, "description", "manifest", true);
  if (!j.contains("components") || !j["components"].is_array()) {
    issues.push_back("manifest: 'components' must be an array");
    throw ValidationError(std::move(issues));
  }
  std::set<std::string> names;
  std::size_t idx = 0;
  for (const auto& cj : j["components"]) {
    const std::string where = "components[" + std::to_string(idx++) + "]";
    if (!cj.is_object()) {
      issues.push_back(where + ": expected an object");
      continue;
    }
    for (const auto& [key, _] : cj.items())
      if (key != "name" && key != "kind" && key != "impl" && key != "mode" && key != "config")
        issues.push_back(where + ": unknown key '" + key + "'");
    ComponentDecl c;
    c.name = str(cj, "name", where, true);
    std::string kind = str(cj, "kind", where, true);
    c.impl = str(cj, "impl", where, true);
    if (!c.name.empty() && !names.insert(c.name).second)
      issues.push_back("duplicate component name '" + c.name + "'");
    auto k = parse_component_kind(kind);
    if (!k) {
      issues.push_back(where + ": unknown component kind '" + kind + "'");
    } else {
      c.kind = *k;
      const BuiltinInfo* b = find_builtin(c.impl);
      if (!b) issues.push_back(where + ": unknown impl '" + c.impl + "'");
      else if (b->kind != c.kind)
        issues.push_back(where + ": impl '" + c.impl + "' is a " + std::string(to_string(b->kind)) + ", not a " + kind);
    }
    if (cj.contains("mode")) {
      std::string mode = str(cj, "mode", where, false);
      if (k && !is_instrumenter(*k)) issues.push_back(where + ": 'mode' applies to instrumenters only");
      if (mode == "manual") c.mode = InstrumenterMode::Manual;
      else if (mode != "automatic") issues.push_back(where + ": mode must be 'automatic' or 'manual'");
    }
    if (cj.contains("config")) {
      if (!cj["config"].is_object()) {
        issues.push_back(where + ": 'config' must be an object of strings");
      } else {
        for (const auto& [key, val] : cj["config"].items()) {
          if (!val.is_string()) issues.push_back(where + ": config '" + key + "' must be a string");
          else c.config[key] = val.get<std::string>();
        }
      }
    }
    m.components.push_back(std::move(c));
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return m;
}

inline TechniqueManifest load_manifest(std::string_view text) { return manifest_from_json(parse_json(text)); }

// ---------------------------------------------------------------------------
// Composition

struct Pipeline {
  TechniqueManifest manifest;
  std::vector<std::size_t> stages;  // indices into manifest.components, execution order
  Config backend_config;            // merged config of runtime components
  bool has_runtime_components = false;

  std::vector<std::string> stage_names() const {
    std::vector<std::string> out;
    for (auto i : stages) out.push_back(manifest.components[i].name);
    return out;
  }
};

// Runtime-config keys the executor understands; anything else is echoed only.
inline constexpr std::array<std::string_view, 2> kRuntimeProfileKeys = {"prefetch_battery_min", "cache_hit_ms"};

inline Pipeline compose_pipeline(const TechniqueManifest& manifest) {
  Pipeline p;
  p.manifest = manifest;
  std::map<std::string, std::size_t> position;  // name -> index, for stages seen so far
  for (std::size_t i = 0; i < manifest.components.size(); ++i) {
    const auto& c = manifest.components[i];
    if (is_runtime(c.kind)) {
      p.has_runtime_components = true;
      for (const auto& [k, v] : c.config) {
        if (auto it = p.backend_config.find(k); it != p.backend_config.end() && it->second != v)
          throw Error("runtime config conflict on '" + k + "' from '" + c.name + "'");
        p.backend_config[k] = v;
      }
      continue;
    }
    bool reads_ir = false, reads_urls = false, reads_points = false;
    for (const auto& r : c.reads()) {
      const ComponentDecl* src = manifest.find(r);
      if (!src)
        throw Error("ordering violation: '" + c.name + "' reads '" + r + "', which is not declared");
      if (!position.contains(r))
        throw Error("ordering violation: '" + c.name + "' reads '" + r + "', which does not precede it");
      if (src->kind == ComponentKind::IntermediateRepresenter) reads_ir = true;
      if (src->kind == ComponentKind::StaticAnalyzer) {
        if (src->impl == "string_analyzer") reads_urls = true;
        if (src->impl == "callback_analyzer") reads_points = true;
      }
      bool allowed = false;
      switch (c.kind) {
        case ComponentKind::IntermediateRepresenter:
          allowed = src->kind == ComponentKind::IntermediateRepresenter;
          break;
        case ComponentKind::StaticAnalyzer:
        case ComponentKind::AppInstrumenter:
        case ComponentKind::OsInstrumenter:
          allowed = src->kind == ComponentKind::IntermediateRepresenter || src->kind == ComponentKind::StaticAnalyzer;
          break;
        default:
          break;
      }
      if (!allowed)
        throw Error("ordering violation: " + std::string(to_string(c.kind)) + " '" + c.name + "' cannot read " +
                    std::string(to_string(src->kind)) + " '" + r + "'");
    }
    const BuiltinInfo* b = find_builtin(c.impl);
    bool manual = is_instrumenter(c.kind) && c.mode == InstrumenterMode::Manual;
    if (b && !manual) {
      if (b->needs == Needs::Ir && !reads_ir)
        throw Error("ordering violation: '" + c.name + "' needs an IR but reads no IntermediateRepresenter before it");
      if (b->needs == Needs::UrlFacts && !reads_urls)
        throw Error("ordering violation: '" + c.name + "' needs URL facts but reads no string_analyzer before it");
      if (b->needs == Needs::PrefetchPoints && !reads_points)
        throw Error("ordering violation: '" + c.name +
                    "' needs prefetch points but reads no callback_analyzer before it");
    }
    position[c.name] = i;
    p.stages.push_back(i);
  }
  for (const auto& [k, v] : p.backend_config) {
    if (std::find(kRuntimeProfileKeys.begin(), kRuntimeProfileKeys.end(), k) == kRuntimeProfileKeys.end()) continue;
    bool ok = !v.empty() && std::all_of(v.begin(), v.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
    if (!ok) throw Error("runtime config '" + k + "' must be a non-negative integer, got '" + v + "'");
  }
  return p;
}

// ---------------------------------------------------------------------------
// Execution

struct PipelineArtifacts {
  std::optional<CcfgIr> ir;
  std::map<std::string, Json> facts;  // analyzer name -> fact set
  std::optional<AppModel> instrumented_model;
  std::optional<OsPolicy> os_policy;
  std::optional<Config> backend_config;
};

inline Json to_json(const PipelineArtifacts& a) {
  Json j = Json::object();
  j["ir"] = a.ir ? to_json(*a.ir) : Json(nullptr);
  Json facts = Json::object();
  for (const auto& [k, v] : a.facts) facts[k] = v;
  j["facts"] = std::move(facts);
  j["instrumented_model"] = a.instrumented_model ? to_json(*a.instrumented_model) : Json(nullptr);
  j["os_policy"] = a.os_policy ? to_json(*a.os_policy) : Json(nullptr);
  if (a.backend_config) {
    Json cfg = Json::object();
    for (const auto& [k, v] : *a.backend_config) cfg[k] = v;
    j["backend_config"] = std::move(cfg);
  } else {
    j["backend_config"] = nullptr;
  }
  return j;
}

struct RunConfig {
  // Output of manual instrumenters, supplied from outside the pipeline.
  std::optional<AppModel> manual_model;
  std::optional<OsPolicy> manual_policy;
};

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

namespace detail {

using StageOutput = std::variant<std::monostate, CcfgIr, std::vector<UrlFact>, std::vector<PrefetchPoint>>;

inline const std::string& config_value(const ComponentDecl& c, const std::string& key) {
  auto it = c.config.find(key);
  if (it == c.config.end()) throw Error("missing config '" + key + "'");
  return it->second;
}

}  // namespace detail

// Stages see the current working model: the input until an AppInstrumenter
// produces a new one. The input model is never modified.
inline PipelineArtifacts run_pipeline(const Pipeline& pipeline, const AppModel& model, const RunConfig& config = {}) {
  PipelineArtifacts out;
  if (pipeline.has_runtime_components) out.backend_config = pipeline.backend_config;
  std::map<std::string, detail::StageOutput> produced;
  const AppModel* working = &model;

  for (std::size_t idx : pipeline.stages) {
    const ComponentDecl& c = pipeline.manifest.components[idx];
    try {
      auto gather = [&]<typename T>(std::type_identity<T>) -> const T* {
        for (const auto& r : c.reads()) {
          auto it = produced.find(r);
          if (it != produced.end())
            if (const T* v = std::get_if<T>(&it->second)) return v;
        }
        return nullptr;
      };
      if (is_instrumenter(c.kind) && c.mode == InstrumenterMode::Manual) {
        if (c.kind == ComponentKind::AppInstrumenter) {
          if (!config.manual_model) throw Error("manual instrumenter requires an externally supplied model");
          validate(*config.manual_model);
          out.instrumented_model = *config.manual_model;
          working = &*out.instrumented_model;
        } else {
          if (!config.manual_policy) throw Error("manual OS instrumenter requires an externally supplied policy");
          out.os_policy = *config.manual_policy;
        }
        continue;
      }
      if (c.impl == "ccfg_ir") {
        CcfgIr ir = ccfg_ir(*working);
        out.ir = ir;
        produced[c.name] = std::move(ir);
      } else if (c.impl == "string_analyzer") {
        const CcfgIr* ir = gather(std::type_identity<CcfgIr>{});
        if (!ir) throw Error("no IR available");
        auto facts = string_analyzer(*working, *ir);
        out.facts[c.name] = to_json(facts);
        produced[c.name] = std::move(facts);
      } else if (c.impl == "callback_analyzer") {
        const auto* urls = gather(std::type_identity<std::vector<UrlFact>>{});
        if (!urls) throw Error("no URL facts available");
        auto points = callback_analyzer(*working, *urls);
        out.facts[c.name] = to_json(points);
        produced[c.name] = std::move(points);
      } else if (c.impl == "prefetch_instrumenter") {
        const auto* points = gather(std::type_identity<std::vector<PrefetchPoint>>{});
        if (!points) throw Error("no prefetch points available");
        out.instrumented_model = prefetch_instrumenter(*working, *points);
        working = &*out.instrumented_model;
      } else if (c.impl == "logger_instrumenter") {
        out.instrumented_model = logger_instrumenter(*working);
        working = &*out.instrumented_model;
      } else if (c.impl == "fault_instrumenter") {
        out.instrumented_model =
            fault_instrumenter(*working, detail::config_value(c, "callback"), detail::config_value(c, "widget"));
        working = &*out.instrumented_model;
      } else if (c.impl == "os_policy") {
        OsPolicy policy = os_policy_instrumenter(c.config);
        if (out.os_policy)
          policy.blocked_intent_actions.insert(out.os_policy->blocked_intent_actions.begin(),
                                               out.os_policy->blocked_intent_actions.end());
        out.os_policy = std::move(policy);
      } else {
        throw Error("no stage implementation for '" + c.impl + "'");
      }
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(c.name, e.what());
    }
  }
  if (out.instrumented_model) validate(*out.instrumented_model);
  return out;
}

}  // namespace decree
