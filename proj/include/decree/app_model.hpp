#pragma once

// App-model documents: a desk-scale app is a list of callbacks, each a small
// control-flow graph of statements.
//
// Canonical form: callbacks in declaration order, nodes sorted by id
// (bytewise), keys in the order they are listed in the structs below, op keys
// as `kind` followed by the kind-specific keys. Files are the canonical JSON
// pretty-printed with two-space indent and a trailing newline; a callback's
// hash is FNV-1a 64 over its compact canonical JSON.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "decree/digest.hpp"
#include "decree/error.hpp"
#include "decree/json_util.hpp"

namespace decree {

enum class Cmp { Lt, Le, Eq, Ne, Gt, Ge };

inline std::string_view to_string(Cmp c) {
  switch (c) {
    case Cmp::Lt: return "<";
    case Cmp::Le: return "<=";
    case Cmp::Eq: return "==";
    case Cmp::Ne: return "!=";
    case Cmp::Gt: return ">";
    case Cmp::Ge: return ">=";
  }
  return "?";
}

inline std::optional<Cmp> parse_cmp(std::string_view s) {
  if (s == "<") return Cmp::Lt;
  if (s == "<=") return Cmp::Le;
  if (s == "==") return Cmp::Eq;
  if (s == "!=") return Cmp::Ne;
  if (s == ">") return Cmp::Gt;
  if (s == ">=") return Cmp::Ge;
  return std::nullopt;
}

inline Cmp negate(Cmp c) {
  switch (c) {
    case Cmp::Lt: return Cmp::Ge;
    case Cmp::Le: return Cmp::Gt;
    case Cmp::Eq: return Cmp::Ne;
    case Cmp::Ne: return Cmp::Eq;
    case Cmp::Gt: return Cmp::Le;
    case Cmp::Ge: return Cmp::Lt;
  }
  return c;
}

inline bool holds(Cmp c, std::int64_t lhs, std::int64_t rhs) {
  switch (c) {
    case Cmp::Lt: return lhs < rhs;
    case Cmp::Le: return lhs <= rhs;
    case Cmp::Eq: return lhs == rhs;
    case Cmp::Ne: return lhs != rhs;
    case Cmp::Gt: return lhs > rhs;
    case Cmp::Ge: return lhs >= rhs;
  }
  return false;
}

struct UrlPart {
  enum class Kind { Literal, Var };
  Kind kind = Kind::Literal;
  std::string text;  // literal text or param name

  bool operator==(const UrlPart&) const = default;
};

struct UrlExpr {
  std::vector<UrlPart> parts;

  bool is_literal() const {
    return std::all_of(parts.begin(), parts.end(),
                       [](const UrlPart& p) { return p.kind == UrlPart::Kind::Literal; });
  }
  // Concatenation of the literal parts.
  std::string literal_text() const {
    std::string out;
    for (const auto& p : parts)
      if (p.kind == UrlPart::Kind::Literal) out += p.text;
    return out;
  }

  bool operator==(const UrlExpr&) const = default;
};

struct ValueExpr {
  enum class Kind { Literal, Var, Resp };
  Kind kind = Kind::Literal;
  std::string text;  // literal text, param name, or URL for resp

  bool operator==(const ValueExpr&) const = default;
};

namespace op {
struct Compute {
  std::int64_t cost_ms = 0;
  bool operator==(const Compute&) const = default;
};
struct Branch {
  std::string var;
  Cmp cmp = Cmp::Lt;
  std::int64_t value = 0;
  bool operator==(const Branch&) const = default;
};
struct UiUpdate {
  std::string widget;
  ValueExpr value;
  bool operator==(const UiUpdate&) const = default;
};
struct NetRequest {
  UrlExpr url;
  std::int64_t resp_bytes = 0;
  bool cacheable = false;
  bool operator==(const NetRequest&) const = default;
};
struct Prefetch {
  std::string url;
  bool operator==(const Prefetch&) const = default;
};
struct Log {
  std::string tag;
  bool operator==(const Log&) const = default;
};
struct SendIntent {
  std::string action;
  bool operator==(const SendIntent&) const = default;
};
struct Exit {
  bool operator==(const Exit&) const = default;
};
}  // namespace op

using Op = std::variant<op::Compute, op::Branch, op::UiUpdate, op::NetRequest, op::Prefetch,
                        op::Log, op::SendIntent, op::Exit>;

inline std::string_view kind_name(const Op& o) {
  static constexpr std::string_view kNames[] = {"compute", "branch",   "ui_update", "net_request",
                                                "prefetch", "log",     "send_intent", "exit"};
  return kNames[o.index()];
}

struct Node {
  std::string id;
  Op op;
  std::string next;         // non-branch, non-exit
  std::string then_target;  // branch only
  std::string else_target;  // branch only

  bool is_branch() const { return std::holds_alternative<op::Branch>(op); }
  bool is_exit() const { return std::holds_alternative<op::Exit>(op); }

  // then before else; empty for exit.
  std::vector<std::string> successors() const {
    if (is_exit()) return {};
    if (is_branch()) return {then_target, else_target};
    return {next};
  }

  bool operator==(const Node&) const = default;
};

struct Callback {
  std::string name;
  std::vector<std::string> params;
  std::string entry;
  std::vector<Node> nodes;  // kept sorted by id

  const Node* find(std::string_view id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const Node& n, std::string_view v) { return n.id < v; });
    return it != nodes.end() && it->id == id ? &*it : nullptr;
  }
  Node* find(std::string_view id) {
    return const_cast<Node*>(static_cast<const Callback*>(this)->find(id));
  }
  bool has_param(std::string_view p) const {
    return std::find(params.begin(), params.end(), p) != params.end();
  }
  void sort_nodes() {
    std::stable_sort(nodes.begin(), nodes.end(),
                     [](const Node& a, const Node& b) { return a.id < b.id; });
  }

  bool operator==(const Callback&) const = default;
};

struct AppModel {
  std::string app_id;
  std::string version;
  std::vector<Callback> callbacks;

  const Callback* find(std::string_view name) const {
    for (const auto& c : callbacks)
      if (c.name == name) return &c;
    return nullptr;
  }
  Callback* find(std::string_view name) {
    return const_cast<Callback*>(static_cast<const AppModel*>(this)->find(name));
  }

  bool operator==(const AppModel&) const = default;
};

// ---------------------------------------------------------------------------
// Semantic validation

namespace detail {

inline void check_var(std::vector<std::string>& issues, const Callback& cb, const Node& n,
                      std::string_view what, const std::string& var) {
  if (!cb.has_param(var))
    issues.push_back("callback '" + cb.name + "': node '" + n.id + "' " + std::string(what) +
                     " references undeclared variable '" + var + "'");
}

inline std::set<std::string> reachable_from_entry(const Callback& cb) {
  std::set<std::string> seen;
  if (!cb.find(cb.entry)) return seen;
  std::vector<std::string> stack{cb.entry};
  while (!stack.empty()) {
    std::string id = std::move(stack.back());
    stack.pop_back();
    if (!seen.insert(id).second) continue;
    if (const Node* n = cb.find(id))
      for (const auto& s : n->successors())
        if (cb.find(s)) stack.push_back(s);
  }
  return seen;
}

}  // namespace detail

// Every violated invariant, one message each. Empty means valid.
// Assumes nodes are sorted by id (as produced by the parser).
inline std::vector<std::string> validation_issues(const AppModel& model) {
  std::vector<std::string> issues;
  std::set<std::string> names;
  for (const auto& cb : model.callbacks) {
    const std::string where = "callback '" + cb.name + "'";
    if (cb.name.empty()) issues.push_back("callback with empty name");
    if (!names.insert(cb.name).second) issues.push_back("duplicate callback name '" + cb.name + "'");

    std::set<std::string> params;
    for (const auto& p : cb.params)
      if (!params.insert(p).second) issues.push_back(where + ": duplicate param '" + p + "'");

    for (std::size_t i = 1; i < cb.nodes.size(); ++i)
      if (cb.nodes[i].id == cb.nodes[i - 1].id)
        issues.push_back(where + ": duplicate node id '" + cb.nodes[i].id + "'");

    if (!cb.find(cb.entry)) issues.push_back(where + ": entry '" + cb.entry + "' names no node");

    std::vector<std::string> exits;
    for (const auto& n : cb.nodes) {
      auto edge = [&](std::string_view field, const std::string& target) {
        if (!cb.find(target))
          issues.push_back(where + ": node '" + n.id + "' " + std::string(field) + " -> '" + target +
                           "' names no node");
      };
      if (n.is_exit()) {
        exits.push_back(n.id);
      } else if (n.is_branch()) {
        edge("then", n.then_target);
        edge("else", n.else_target);
      } else {
        edge("next", n.next);
      }
      std::visit(
          [&](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, op::Branch>) {
              detail::check_var(issues, cb, n, "branch", o.var);
            } else if constexpr (std::is_same_v<T, op::NetRequest>) {
              for (const auto& part : o.url.parts)
                if (part.kind == UrlPart::Kind::Var) detail::check_var(issues, cb, n, "url", part.text);
            } else if constexpr (std::is_same_v<T, op::UiUpdate>) {
              if (o.value.kind == ValueExpr::Kind::Var)
                detail::check_var(issues, cb, n, "value", o.value.text);
            }
          },
          n.op);
    }
    if (exits.empty()) {
      issues.push_back(where + ": missing exit node");
    } else if (exits.size() > 1) {
      issues.push_back(where + ": " + std::to_string(exits.size()) + " exit nodes, expected exactly one");
    } else if (cb.find(cb.entry) && !detail::reachable_from_entry(cb).contains(exits.front())) {
      issues.push_back(where + ": exit node '" + exits.front() + "' is not reachable from entry");
    }
  }
  return issues;
}

inline void validate(const AppModel& model) {
  auto issues = validation_issues(model);
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

// ---------------------------------------------------------------------------
// JSON encoding

inline Json to_json(const ValueExpr& v) {
  static constexpr std::string_view kKeys[] = {"literal", "var", "resp"};
  Json j = Json::object();
  j[std::string(kKeys[static_cast<int>(v.kind)])] = v.text;
  return j;
}

inline Json to_json(const UrlExpr& u) {
  Json parts = Json::array();
  for (const auto& p : u.parts) {
    Json j = Json::object();
    j[p.kind == UrlPart::Kind::Literal ? "literal" : "var"] = p.text;
    parts.push_back(std::move(j));
  }
  return parts;
}

inline Json to_json(const Op& o) {
  Json j = Json::object();
  j["kind"] = std::string(kind_name(o));
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, op::Compute>) {
          j["cost_ms"] = x.cost_ms;
        } else if constexpr (std::is_same_v<T, op::Branch>) {
          j["var"] = x.var;
          j["cmp"] = std::string(to_string(x.cmp));
          j["const"] = x.value;
        } else if constexpr (std::is_same_v<T, op::UiUpdate>) {
          j["widget"] = x.widget;
          j["value"] = to_json(x.value);
        } else if constexpr (std::is_same_v<T, op::NetRequest>) {
          j["url"] = to_json(x.url);
          j["resp_bytes"] = x.resp_bytes;
          j["cacheable"] = x.cacheable;
        } else if constexpr (std::is_same_v<T, op::Prefetch>) {
          j["url"] = x.url;
        } else if constexpr (std::is_same_v<T, op::Log>) {
          j["tag"] = x.tag;
        } else if constexpr (std::is_same_v<T, op::SendIntent>) {
          j["action"] = x.action;
        }
      },
      o);
  return j;
}

inline Json to_json(const Node& n) {
  Json j = Json::object();
  j["id"] = n.id;
  j["op"] = to_json(n.op);
  if (n.is_branch()) {
    j["then"] = n.then_target;
    j["else"] = n.else_target;
  } else if (!n.is_exit()) {
    j["next"] = n.next;
  }
  return j;
}

// Canonical: nodes emitted in id order regardless of in-memory order.
inline Json to_json(const Callback& cb) {
  Json j = Json::object();
  j["name"] = cb.name;
  j["params"] = cb.params;
  j["entry"] = cb.entry;
  std::vector<const Node*> sorted;
  for (const auto& n : cb.nodes) sorted.push_back(&n);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Node* a, const Node* b) { return a->id < b->id; });
  Json nodes = Json::array();
  for (const Node* n : sorted) nodes.push_back(to_json(*n));
  j["nodes"] = std::move(nodes);
  return j;
}

inline Json to_json(const AppModel& m) {
  Json j = Json::object();
  j["app_id"] = m.app_id;
  j["version"] = m.version;
  Json cbs = Json::array();
  for (const auto& cb : m.callbacks) cbs.push_back(to_json(cb));
  j["callbacks"] = std::move(cbs);
  return j;
}

namespace detail {

// Structural decoder that records every problem instead of stopping at the first.
class ModelReader {
 public:
  std::vector<std::string> issues;

  AppModel read_model(const Json& j) {
    AppModel m;
    if (!expect_object(j, "document", {"app_id", "version", "callbacks"})) return m;
    m.app_id = string_field(j, "app_id", "document");
    m.version = string_field(j, "version", "document");
    if (!j.contains("callbacks") || !j["callbacks"].is_array()) {
      issues.push_back("document: 'callbacks' must be an array");
      return m;
    }
    std::size_t i = 0;
    for (const auto& cj : j["callbacks"]) m.callbacks.push_back(read_callback(cj, "callbacks[" + std::to_string(i++) + "]"));
    return m;
  }

 private:
  bool expect_object(const Json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) {
      issues.push_back(where + ": expected an object");
      return false;
    }
    for (const auto& [key, _] : j.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        issues.push_back(where + ": unknown key '" + key + "'");
    }
    return true;
  }

  std::string string_field(const Json& j, std::string_view key, const std::string& where) {
    auto it = j.find(std::string(key));
    if (it == j.end() || !it->is_string()) {
      issues.push_back(where + ": '" + std::string(key) + "' must be a string");
      return {};
    }
    return it->get<std::string>();
  }

  std::int64_t int_field(const Json& j, std::string_view key, const std::string& where, bool non_negative) {
    auto it = j.find(std::string(key));
    if (it == j.end() || !(it->is_number_integer())) {
      issues.push_back(where + ": '" + std::string(key) + "' must be an integer");
      return 0;
    }
    if (it->is_number_unsigned() && it->get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      issues.push_back(where + ": '" + std::string(key) + "' exceeds the signed 64-bit range");
      return 0;
    }
    std::int64_t v = it->get<std::int64_t>();
    if (non_negative && v < 0) {
      issues.push_back(where + ": '" + std::string(key) + "' must be non-negative");
      return 0;
    }
    return v;
  }

  Callback read_callback(const Json& j, const std::string& where) {
    Callback cb;
    if (!expect_object(j, where, {"name", "params", "entry", "nodes"})) return cb;
    cb.name = string_field(j, "name", where);
    cb.entry = string_field(j, "entry", where);
    if (!j.contains("params") || !j["params"].is_array()) {
      issues.push_back(where + ": 'params' must be an array of names");
    } else {
      for (const auto& p : j["params"]) {
        if (p.is_string()) cb.params.push_back(p.get<std::string>());
        else issues.push_back(where + ": param names must be strings");
      }
    }
    if (!j.contains("nodes") || !j["nodes"].is_array()) {
      issues.push_back(where + ": 'nodes' must be an array");
    } else {
      std::size_t i = 0;
      for (const auto& nj : j["nodes"]) cb.nodes.push_back(read_node(nj, where + ".nodes[" + std::to_string(i++) + "]"));
    }
    cb.sort_nodes();
    return cb;
  }

  Node read_node(const Json& j, const std::string& where) {
    Node n;
    if (!expect_object(j, where, {"id", "op", "next", "then", "else"})) return n;
    n.id = string_field(j, "id", where);
    const std::string at = where + " ('" + n.id + "')";
    if (!j.contains("op")) {
      issues.push_back(at + ": missing 'op'");
      return n;
    }
    n.op = read_op(j["op"], at + ".op");
    bool has_next = j.contains("next"), has_then = j.contains("then"), has_else = j.contains("else");
    if (n.is_exit()) {
      if (has_next || has_then || has_else) issues.push_back(at + ": exit node must have no successor");
    } else if (n.is_branch()) {
      if (has_next) issues.push_back(at + ": branch node must not have 'next'");
      if (!has_then || !has_else) issues.push_back(at + ": branch node needs both 'then' and 'else'");
      if (has_then) n.then_target = string_field(j, "then", at);
      if (has_else) n.else_target = string_field(j, "else", at);
    } else {
      if (has_then || has_else) issues.push_back(at + ": only branch nodes have 'then'/'else'");
      if (!has_next) issues.push_back(at + ": missing 'next'");
      else n.next = string_field(j, "next", at);
    }
    return n;
  }

  ValueExpr read_value(const Json& j, const std::string& where) {
    ValueExpr v;
    if (!j.is_object() || j.size() != 1) {
      issues.push_back(where + ": value must be an object with exactly one of literal/var/resp");
      return v;
    }
    const auto& [key, val] = *j.items().begin();
    if (key == "literal") v.kind = ValueExpr::Kind::Literal;
    else if (key == "var") v.kind = ValueExpr::Kind::Var;
    else if (key == "resp") v.kind = ValueExpr::Kind::Resp;
    else {
      issues.push_back(where + ": unknown key '" + key + "'");
      return v;
    }
    if (!val.is_string()) issues.push_back(where + ": '" + key + "' must be a string");
    else v.text = val.get<std::string>();
    return v;
  }

  UrlExpr read_url(const Json& j, const std::string& where) {
    UrlExpr u;
    if (!j.is_array() || j.empty()) {
      issues.push_back(where + ": url must be a non-empty array of parts");
      return u;
    }
    for (const auto& pj : j) {
      if (!pj.is_object() || pj.size() != 1) {
        issues.push_back(where + ": url part must be an object with exactly one of literal/var");
        continue;
      }
      const auto& [key, val] = *pj.items().begin();
      UrlPart p;
      if (key == "literal") p.kind = UrlPart::Kind::Literal;
      else if (key == "var") p.kind = UrlPart::Kind::Var;
      else {
        issues.push_back(where + ": unknown url part key '" + key + "'");
        continue;
      }
      if (!val.is_string()) {
        issues.push_back(where + ": url part must be a string");
        continue;
      }
      p.text = val.get<std::string>();
      u.parts.push_back(std::move(p));
    }
    return u;
  }

  bool bool_field(const Json& j, std::string_view key, const std::string& where) {
    auto it = j.find(std::string(key));
    if (it == j.end() || !it->is_boolean()) {
      issues.push_back(where + ": '" + std::string(key) + "' must be a boolean");
      return false;
    }
    return it->get<bool>();
  }

  Op read_op(const Json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
      issues.push_back(where + ": op must be an object with a string 'kind'");
      return op::Exit{};
    }
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "compute") {
      expect_object(j, where, {"kind", "cost_ms"});
      return op::Compute{int_field(j, "cost_ms", where, true)};
    }
    if (kind == "branch") {
      expect_object(j, where, {"kind", "var", "cmp", "const"});
      op::Branch b;
      b.var = string_field(j, "var", where);
      auto cmp = parse_cmp(string_field(j, "cmp", where));
      if (!cmp) issues.push_back(where + ": 'cmp' must be one of < <= == != > >=");
      else b.cmp = *cmp;
      b.value = int_field(j, "const", where, false);
      return b;
    }
    if (kind == "ui_update") {
      expect_object(j, where, {"kind", "widget", "value"});
      op::UiUpdate u;
      u.widget = string_field(j, "widget", where);
      if (!j.contains("value")) issues.push_back(where + ": missing 'value'");
      else u.value = read_value(j["value"], where + ".value");
      return u;
    }
    if (kind == "net_request") {
      expect_object(j, where, {"kind", "url", "resp_bytes", "cacheable"});
      op::NetRequest r;
      if (!j.contains("url")) issues.push_back(where + ": missing 'url'");
      else r.url = read_url(j["url"], where + ".url");
      r.resp_bytes = int_field(j, "resp_bytes", where, true);
      r.cacheable = bool_field(j, "cacheable", where);
      return r;
    }
    if (kind == "prefetch") {
      expect_object(j, where, {"kind", "url"});
      return op::Prefetch{string_field(j, "url", where)};
    }
    if (kind == "log") {
      expect_object(j, where, {"kind", "tag"});
      return op::Log{string_field(j, "tag", where)};
    }
    if (kind == "send_intent") {
      expect_object(j, where, {"kind", "action"});
      return op::SendIntent{string_field(j, "action", where)};
    }
    if (kind == "exit") {
      expect_object(j, where, {"kind"});
      return op::Exit{};
    }
    issues.push_back(where + ": unknown op kind '" + kind + "'");
    return op::Exit{};
  }
};

}  // namespace detail

// Structural problems are reported first; semantic invariants are checked only
// once the document decodes cleanly, and then every violation is reported.
inline AppModel app_model_from_json(const Json& j) {
  detail::ModelReader reader;
  AppModel m = reader.read_model(j);
  if (!reader.issues.empty()) throw ValidationError(std::move(reader.issues));
  validate(m);
  return m;
}

inline AppModel parse_app_model(std::string_view text) { return app_model_from_json(parse_json(text)); }

inline std::string serialize_app_model(const AppModel& model) { return dump_document(to_json(model)); }

inline std::string canonical_text(const Callback& cb) { return to_json(cb).dump(); }

inline Digest64 canonical_hash(const Callback& cb) { return fnv1a64(canonical_text(cb)); }

// Content address of a whole model: digest of its canonical file bytes.
inline Digest64 model_digest(const AppModel& model) { return fnv1a64(serialize_app_model(model)); }

// Fresh node id not used in the callback, derived from `base`.
inline std::string fresh_node_id(const Callback& cb, const std::string& base) {
  if (!cb.find(base)) return base;
  for (int i = 1;; ++i) {
    std::string candidate = base + "_" + std::to_string(i);
    if (!cb.find(candidate)) return candidate;
  }
}

}  // namespace decree
