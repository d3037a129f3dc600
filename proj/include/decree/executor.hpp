#pragma once

// Deterministic single-callback simulator.
//
// Cost model (simulated milliseconds):
//   compute      ceil(cost_ms * cpu_factor)
//   ui_update    1, records a functional checkpoint
//   log          1
//   send_intent  1, blocked iff the action is in the OS policy
//   branch       0
//   net_request  cache_hit_ms on a cache hit; otherwise
//                net_latency_ms + ceil(resp_bytes * 8 / net_bandwidth_kbps)
//   prefetch     0; fetches and warms the cache only if the battery at the
//                current clock is at least prefetch_battery_min
//
// The response body for URL u is the hex rendering of fnv1a64(u).

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "decree/app_model.hpp"
#include "decree/rational.hpp"
#include "decree/techniques.hpp"
#include "decree/testgen.hpp"

namespace decree {

struct DeviceProfile {
  std::int64_t net_latency_ms = 100;
  std::int64_t net_bandwidth_kbps = 1000;
  std::int64_t battery_pct = 100;
  Rational battery_drain_pct_per_s{0};
  Rational cpu_factor{1};
  std::int64_t cache_hit_ms = 1;
  std::int64_t prefetch_battery_min = 20;

  std::vector<std::string> issues() const {
    std::vector<std::string> out;
    if (net_latency_ms < 0) out.emplace_back("net_latency_ms must be non-negative");
    if (net_bandwidth_kbps <= 0) out.emplace_back("net_bandwidth_kbps must be positive");
    if (battery_pct < 0 || battery_pct > 100) out.emplace_back("battery_pct must be within 0..100");
    if (battery_drain_pct_per_s < Rational(0)) out.emplace_back("battery_drain_pct_per_s must be non-negative");
    if (cpu_factor <= Rational(0)) out.emplace_back("cpu_factor must be positive");
    if (cache_hit_ms < 0) out.emplace_back("cache_hit_ms must be non-negative");
    if (prefetch_battery_min < 0 || prefetch_battery_min > 100)
      out.emplace_back("prefetch_battery_min must be within 0..100");
    return out;
  }

  void validate() const {
    auto i = issues();
    if (!i.empty()) throw ValidationError(std::move(i));
  }

  // battery(t) >= prefetch_battery_min, evaluated exactly.
  bool battery_allows_prefetch(std::int64_t clock_ms) const {
    // battery_pct - drain * t / 1000 >= min, scaled by 1000 * den
    __int128 lhs = static_cast<__int128>(battery_pct) * 1000 * battery_drain_pct_per_s.den() -
                   static_cast<__int128>(battery_drain_pct_per_s.num()) * clock_ms;
    if (lhs < 0) lhs = 0;
    __int128 rhs = static_cast<__int128>(prefetch_battery_min) * 1000 * battery_drain_pct_per_s.den();
    return lhs >= rhs;
  }

  bool operator==(const DeviceProfile&) const = default;
};

inline Json to_json(const DeviceProfile& p) {
  Json j = Json::object();
  j["net_latency_ms"] = p.net_latency_ms;
  j["net_bandwidth_kbps"] = p.net_bandwidth_kbps;
  j["battery_pct"] = p.battery_pct;
  j["battery_drain_pct_per_s"] = p.battery_drain_pct_per_s.to_string();
  j["cpu_factor"] = p.cpu_factor.to_string();
  j["cache_hit_ms"] = p.cache_hit_ms;
  j["prefetch_battery_min"] = p.prefetch_battery_min;
  return j;
}

inline constexpr std::int64_t kStepBudget = 10000;

inline constexpr std::string_view kMetricSimTime = "sim_time_ms";
inline constexpr std::string_view kMetricNetBytes = "net_bytes";
inline constexpr std::string_view kMetricNetRequests = "net_requests";
inline constexpr std::string_view kMetricCacheHits = "cache_hits";
inline const std::vector<std::string> kStandardMetrics = {"sim_time_ms", "net_bytes", "net_requests", "cache_hits"};

struct UiCheckpoint {
  std::size_t seq = 0;
  std::string widget;
  std::string value;
  Digest64 digest;  // of "widget=value"

  bool operator==(const UiCheckpoint&) const = default;
};

struct NetEvent {
  std::int64_t at_ms = 0;
  std::string kind;  // fetch | cache_hit | prefetch | prefetch_skipped
  std::string url;
  std::int64_t bytes = 0;
  bool operator==(const NetEvent&) const = default;
};

struct IntentEvent {
  std::int64_t at_ms = 0;
  std::string action;
  bool delivered = true;
  bool operator==(const IntentEvent&) const = default;
};

struct Termination {
  bool normal = true;
  std::string error_kind;  // budget-exhausted | uninitialized-response
  bool operator==(const Termination&) const = default;
};

struct RunTrace {
  std::string callback;
  Inputs inputs;
  std::vector<std::string> executed;
  Digest64 path_id;
  std::vector<UiCheckpoint> ui_checkpoints;
  std::map<std::string, std::int64_t> nfp;
  std::int64_t entry_clock = 0;
  std::int64_t exit_clock = 0;
  std::vector<NetEvent> net_events;
  std::vector<IntentEvent> intent_events;
  Termination termination;

  std::int64_t metric(std::string_view name) const {
    auto it = nfp.find(std::string(name));
    return it == nfp.end() ? 0 : it->second;
  }
  bool operator==(const RunTrace&) const = default;
};

inline Json to_json(const RunTrace& t) {
  Json j = Json::object();
  j["callback"] = t.callback;
  j["inputs"] = to_json(t.inputs);
  j["executed"] = t.executed;
  j["path_id"] = t.path_id.hex();
  Json ui = Json::array();
  for (const auto& c : t.ui_checkpoints) {
    Json cj = Json::object();
    cj["seq"] = c.seq;
    cj["widget"] = c.widget;
    cj["value"] = c.value;
    cj["digest"] = c.digest.hex();
    ui.push_back(std::move(cj));
  }
  j["ui_checkpoints"] = std::move(ui);
  Json nfp = Json::object();
  for (const auto& [k, v] : t.nfp) nfp[k] = v;
  j["nfp"] = std::move(nfp);
  j["entry_clock"] = t.entry_clock;
  j["exit_clock"] = t.exit_clock;
  Json net = Json::array();
  for (const auto& e : t.net_events) {
    Json ej = Json::object();
    ej["at_ms"] = e.at_ms;
    ej["kind"] = e.kind;
    ej["url"] = e.url;
    ej["bytes"] = e.bytes;
    net.push_back(std::move(ej));
  }
  j["net_events"] = std::move(net);
  Json intents = Json::array();
  for (const auto& e : t.intent_events) {
    Json ej = Json::object();
    ej["at_ms"] = e.at_ms;
    ej["action"] = e.action;
    ej["status"] = e.delivered ? "delivered" : "blocked";
    intents.push_back(std::move(ej));
  }
  j["intent_events"] = std::move(intents);
  Json term = Json::object();
  term["status"] = t.termination.normal ? "normal" : "error";
  if (!t.termination.normal) term["kind"] = t.termination.error_kind;
  j["termination"] = std::move(term);
  return j;
}

inline std::string serialize_trace(const RunTrace& t) { return dump_document(to_json(t)); }

inline std::string response_body(std::string_view url) { return fnv1a64(url).hex(); }

namespace detail {

inline std::string resolve_url(const UrlExpr& url, const Inputs& inputs) {
  std::string out;
  for (const auto& p : url.parts) {
    if (p.kind == UrlPart::Kind::Literal) out += p.text;
    else out += std::to_string(inputs.at(p.text));
  }
  return out;
}

}  // namespace detail

// Runs one callback from its entry with a fresh clock. Runtime failures are
// recorded in the trace; only precondition violations throw.
inline RunTrace execute_callback(const AppModel& model, std::string_view callback, const Inputs& inputs,
                                 const DeviceProfile& profile, const OsPolicy& policy = {},
                                 const std::set<std::string>& warm_cache = {}) {
  const Callback* cb = model.find(callback);
  if (!cb) throw Error("execute_callback: unknown callback '" + std::string(callback) + "'");
  for (const auto& p : cb->params)
    if (!inputs.contains(p)) throw Error("execute_callback: no input for param '" + p + "'");

  RunTrace t;
  t.callback = cb->name;
  for (const auto& p : cb->params) t.inputs[p] = inputs.at(p);
  std::set<std::string> cache = warm_cache;
  std::set<std::string> fetched;  // non-cacheable responses received
  std::int64_t clock = 0, net_bytes = 0, net_requests = 0, cache_hits = 0;

  std::string current = cb->entry;
  bool done = false;
  while (!done) {
    if (static_cast<std::int64_t>(t.executed.size()) >= kStepBudget) {
      t.termination = {false, "budget-exhausted"};
      break;
    }
    const Node* n = cb->find(current);
    t.executed.push_back(current);
    std::string next = n->next;
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, op::Compute>) {
            clock += profile.cpu_factor.ceil_mul(o.cost_ms);
          } else if constexpr (std::is_same_v<T, op::Branch>) {
            next = holds(o.cmp, t.inputs.at(o.var), o.value) ? n->then_target : n->else_target;
          } else if constexpr (std::is_same_v<T, op::UiUpdate>) {
            std::string value;
            switch (o.value.kind) {
              case ValueExpr::Kind::Literal: value = o.value.text; break;
              case ValueExpr::Kind::Var: value = std::to_string(t.inputs.at(o.value.text)); break;
              case ValueExpr::Kind::Resp:
                if (!cache.contains(o.value.text) && !fetched.contains(o.value.text)) {
                  t.termination = {false, "uninitialized-response"};
                  done = true;
                  return;
                }
                value = response_body(o.value.text);
                break;
            }
            clock += 1;
            std::size_t seq = t.ui_checkpoints.size();
            Digest64 d = fnv1a64(o.widget + "=" + value);
            t.ui_checkpoints.push_back({seq, o.widget, std::move(value), d});
          } else if constexpr (std::is_same_v<T, op::NetRequest>) {
            std::string url = detail::resolve_url(o.url, t.inputs);
            ++net_requests;
            if (cache.contains(url)) {
              clock += profile.cache_hit_ms;
              ++cache_hits;
              t.net_events.push_back({clock, "cache_hit", url, 0});
            } else {
              clock += profile.net_latency_ms +
                       Rational(8, profile.net_bandwidth_kbps).ceil_mul(o.resp_bytes);
              net_bytes += o.resp_bytes;
              if (o.cacheable) cache.insert(url);
              else fetched.insert(url);
              t.net_events.push_back({clock, "fetch", url, o.resp_bytes});
            }
          } else if constexpr (std::is_same_v<T, op::Prefetch>) {
            if (profile.battery_allows_prefetch(clock)) {
              std::int64_t bytes = prefetch_size(model, cb->name, o.url);
              net_bytes += bytes;
              cache.insert(o.url);
              t.net_events.push_back({clock, "prefetch", o.url, bytes});
            } else {
              t.net_events.push_back({clock, "prefetch_skipped", o.url, 0});
            }
          } else if constexpr (std::is_same_v<T, op::Log>) {
            clock += 1;
          } else if constexpr (std::is_same_v<T, op::SendIntent>) {
            clock += 1;
            t.intent_events.push_back({clock, o.action, !policy.blocks(o.action)});
          } else if constexpr (std::is_same_v<T, op::Exit>) {
            done = true;
          }
        },
        n->op);
    current = next;
  }

  t.path_id = path_id(t.executed);
  t.entry_clock = 0;
  t.exit_clock = clock;
  t.nfp[std::string(kMetricSimTime)] = clock;
  t.nfp[std::string(kMetricNetBytes)] = net_bytes;
  t.nfp[std::string(kMetricNetRequests)] = net_requests;
  t.nfp[std::string(kMetricCacheHits)] = cache_hits;
  return t;
}

}  // namespace decree
