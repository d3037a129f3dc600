#pragma once

// Built-in analysis and instrumentation components. These are the desk-scale
// stand-ins for a prefetching technique (IR + string analysis + callback
// analysis + instrumenter + proxy), plus a logger, a fault injector and an
// intent-blocking OS policy.

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "decree/app_model.hpp"

namespace decree {

struct OsPolicy {
  std::set<std::string> blocked_intent_actions;

  bool blocks(std::string_view action) const {
    return blocked_intent_actions.contains(std::string(action));
  }
  bool operator==(const OsPolicy&) const = default;
};

inline Json to_json(const OsPolicy& p) {
  Json j = Json::object();
  j["blocked_intent_actions"] = Json::array();
  for (const auto& a : p.blocked_intent_actions) j["blocked_intent_actions"].push_back(a);
  return j;
}

struct CallbackIr {
  std::string name;
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::map<std::string, std::vector<std::string>> adjacency;
  std::set<std::string> op_kinds;

  bool operator==(const CallbackIr&) const = default;
};

struct CcfgIr {
  std::vector<CallbackIr> callbacks;

  const CallbackIr* find(std::string_view name) const {
    for (const auto& c : callbacks)
      if (c.name == name) return &c;
    return nullptr;
  }
  bool operator==(const CcfgIr&) const = default;
};

struct UrlFact {
  std::string callback;
  std::string node_id;
  std::optional<std::string> resolved;  // nullopt means dynamic

  bool operator==(const UrlFact&) const = default;
};

struct PrefetchPoint {
  std::string callback;
  std::string url;

  bool operator==(const PrefetchPoint&) const = default;
  auto operator<=>(const PrefetchPoint&) const = default;
};

inline Json to_json(const CcfgIr& ir) {
  Json cbs = Json::array();
  for (const auto& c : ir.callbacks) {
    Json j = Json::object();
    j["name"] = c.name;
    j["node_count"] = c.node_count;
    j["edge_count"] = c.edge_count;
    Json adj = Json::object();
    for (const auto& [id, succ] : c.adjacency) adj[id] = succ;
    j["adjacency"] = std::move(adj);
    j["op_kinds"] = Json::array();
    for (const auto& k : c.op_kinds) j["op_kinds"].push_back(k);
    cbs.push_back(std::move(j));
  }
  Json j = Json::object();
  j["callbacks"] = std::move(cbs);
  return j;
}

inline Json to_json(const std::vector<UrlFact>& facts) {
  Json arr = Json::array();
  for (const auto& f : facts) {
    Json j = Json::object();
    j["callback"] = f.callback;
    j["node"] = f.node_id;
    if (f.resolved) j["resolved"] = *f.resolved;
    else j["resolved"] = nullptr;
    arr.push_back(std::move(j));
  }
  return arr;
}

inline Json to_json(const std::vector<PrefetchPoint>& points) {
  Json arr = Json::array();
  for (const auto& p : points) {
    Json j = Json::object();
    j["callback"] = p.callback;
    j["url"] = p.url;
    arr.push_back(std::move(j));
  }
  return arr;
}

inline CcfgIr ccfg_ir(const AppModel& model) {
  CcfgIr ir;
  for (const auto& cb : model.callbacks) {
    CallbackIr c;
    c.name = cb.name;
    c.node_count = cb.nodes.size();
    for (const auto& n : cb.nodes) {
      auto succ = n.successors();
      c.edge_count += succ.size();
      c.adjacency[n.id] = std::move(succ);
      c.op_kinds.insert(std::string(kind_name(n.op)));
    }
    ir.callbacks.push_back(std::move(c));
  }
  return ir;
}

// One fact per net_request node. The IR is not consulted beyond confirming
// that it covers the model; resolution needs only the URL expression.
inline std::vector<UrlFact> string_analyzer(const AppModel& model, const CcfgIr& ir) {
  std::vector<UrlFact> facts;
  for (const auto& cb : model.callbacks) {
    if (!ir.find(cb.name)) throw Error("IR has no entry for callback '" + cb.name + "'");
    for (const auto& n : cb.nodes) {
      if (const auto* req = std::get_if<op::NetRequest>(&n.op)) {
        UrlFact f{cb.name, n.id, std::nullopt};
        if (req->url.is_literal()) f.resolved = req->url.literal_text();
        facts.push_back(std::move(f));
      }
    }
  }
  return facts;
}

inline std::vector<PrefetchPoint> callback_analyzer(const AppModel& model,
                                                    const std::vector<UrlFact>& facts) {
  std::vector<PrefetchPoint> points;
  std::set<PrefetchPoint> seen;
  for (const auto& f : facts) {
    if (!f.resolved) continue;
    const Callback* cb = model.find(f.callback);
    if (!cb) continue;
    const Node* n = cb->find(f.node_id);
    if (!n) continue;
    const auto* req = std::get_if<op::NetRequest>(&n->op);
    if (!req || !req->cacheable) continue;
    PrefetchPoint p{f.callback, *f.resolved};
    if (seen.insert(p).second) points.push_back(std::move(p));
  }
  return points;
}

// Each point becomes a prefetch node placed at the callback's entry.
inline AppModel prefetch_instrumenter(const AppModel& model, const std::vector<PrefetchPoint>& points) {
  AppModel out = model;
  for (const auto& p : points) {
    Callback* cb = out.find(p.callback);
    if (!cb) throw Error("prefetch point references unknown callback '" + p.callback + "'");
    Node pf;
    pf.id = fresh_node_id(*cb, "prefetch");
    pf.op = op::Prefetch{p.url};
    pf.next = cb->entry;
    cb->entry = pf.id;
    cb->nodes.push_back(std::move(pf));
    cb->sort_nodes();
  }
  return out;
}

// A log node tagged with the original id is placed immediately before every
// ui_update and net_request; all edges into the logged node are redirected.
inline AppModel logger_instrumenter(const AppModel& model) {
  AppModel out = model;
  for (auto& cb : out.callbacks) {
    std::map<std::string, std::string> log_for;
    std::vector<Node> added;
    std::set<std::string> taken;
    for (const auto& n : cb.nodes) {
      if (!std::holds_alternative<op::UiUpdate>(n.op) && !std::holds_alternative<op::NetRequest>(n.op))
        continue;
      Node log;
      log.id = "log_" + n.id;
      for (int k = 1; cb.find(log.id) || taken.contains(log.id); ++k)
        log.id = "log_" + n.id + "_" + std::to_string(k);
      taken.insert(log.id);
      log.op = op::Log{n.id};
      log.next = n.id;
      log_for[n.id] = log.id;
      added.push_back(std::move(log));
    }
    if (added.empty()) continue;
    auto redirect = [&](std::string& target) {
      if (auto it = log_for.find(target); it != log_for.end()) target = it->second;
    };
    for (auto& n : cb.nodes) {
      if (n.is_branch()) {
        redirect(n.then_target);
        redirect(n.else_target);
      } else if (!n.is_exit()) {
        redirect(n.next);
      }
    }
    redirect(cb.entry);
    for (auto& a : added) cb.nodes.push_back(std::move(a));
    cb.sort_nodes();
  }
  return out;
}

// Replaces the value of the first ui_update (in node-id order) for `widget`
// with the literal "FAULT".
inline AppModel fault_instrumenter(const AppModel& model, std::string_view callback, std::string_view widget) {
  AppModel out = model;
  Callback* cb = out.find(callback);
  if (!cb) throw Error("fault_instrumenter: unknown callback '" + std::string(callback) + "'");
  for (auto& n : cb->nodes) {
    if (auto* ui = std::get_if<op::UiUpdate>(&n.op); ui && ui->widget == widget) {
      ui->value = ValueExpr{ValueExpr::Kind::Literal, "FAULT"};
      return out;
    }
  }
  throw Error("fault_instrumenter: callback '" + std::string(callback) + "' has no ui_update for widget '" +
              std::string(widget) + "'");
}

inline OsPolicy os_policy_instrumenter(const std::map<std::string, std::string>& config) {
  OsPolicy policy;
  auto it = config.find("blocked");
  if (it == config.end()) return policy;
  std::string_view rest = it->second;
  while (!rest.empty()) {
    auto comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) policy.blocked_intent_actions.emplace(item);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return policy;
}

// Size of the synthetic fetch a prefetch node performs: resp_bytes of the
// first net_request with that fully literal URL, searching the same callback
// first and then the others in declaration order; 0 if none.
inline std::int64_t prefetch_size(const AppModel& model, std::string_view callback, std::string_view url) {
  auto search = [&](const Callback& cb) -> std::optional<std::int64_t> {
    for (const auto& n : cb.nodes)
      if (const auto* req = std::get_if<op::NetRequest>(&n.op))
        if (req->url.is_literal() && req->url.literal_text() == url) return req->resp_bytes;
    return std::nullopt;
  };
  if (const Callback* cb = model.find(callback))
    if (auto v = search(*cb)) return *v;
  for (const auto& cb : model.callbacks)
    if (auto v = search(cb)) return *v;
  return 0;
}

}  // namespace decree
