#pragma once

// Path-sensitive test generation for changed callbacks: bounded enumeration
// of entry-to-exit paths, then input synthesis by per-variable interval
// intersection over the branch atoms along each path.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "decree/app_model.hpp"
#include "decree/diff.hpp"

namespace decree {

using Inputs = std::map<std::string, std::int64_t>;

inline Json to_json(const Inputs& in) {
  Json j = Json::object();
  for (const auto& [k, v] : in) j[k] = v;
  return j;
}

// ---------------------------------------------------------------------------
// Integer interval sets

struct Interval {
  std::int64_t lo;
  std::int64_t hi;  // inclusive
  bool operator==(const Interval&) const = default;
};

// Sorted, disjoint, non-adjacent closed intervals over signed 64-bit integers.
class IntervalSet {
 public:
  static constexpr std::int64_t kMin = std::numeric_limits<std::int64_t>::min();
  static constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();

  IntervalSet() = default;
  static IntervalSet full() { return IntervalSet({{kMin, kMax}}); }
  static IntervalSet range(std::int64_t lo, std::int64_t hi) {
    return lo <= hi ? IntervalSet({{lo, hi}}) : IntervalSet();
  }

  // Values v such that `v cmp c` holds.
  static IntervalSet from_atom(Cmp cmp, std::int64_t c) {
    switch (cmp) {
      case Cmp::Lt: return c == kMin ? IntervalSet() : range(kMin, c - 1);
      case Cmp::Le: return range(kMin, c);
      case Cmp::Eq: return range(c, c);
      case Cmp::Ne: {
        std::vector<Interval> parts;
        if (c != kMin) parts.push_back({kMin, c - 1});
        if (c != kMax) parts.push_back({c + 1, kMax});
        return IntervalSet(std::move(parts));
      }
      case Cmp::Gt: return c == kMax ? IntervalSet() : range(c + 1, kMax);
      case Cmp::Ge: return range(c, kMax);
    }
    return {};
  }

  bool empty() const { return parts_.empty(); }
  std::int64_t min() const { return parts_.front().lo; }
  const std::vector<Interval>& parts() const { return parts_; }

  bool contains(std::int64_t v) const {
    for (const auto& p : parts_)
      if (p.lo <= v && v <= p.hi) return true;
    return false;
  }

  IntervalSet intersect(const IntervalSet& other) const {
    std::vector<Interval> out;
    std::size_t i = 0, j = 0;
    while (i < parts_.size() && j < other.parts_.size()) {
      const auto& a = parts_[i];
      const auto& b = other.parts_[j];
      std::int64_t lo = std::max(a.lo, b.lo), hi = std::min(a.hi, b.hi);
      if (lo <= hi) out.push_back({lo, hi});
      if (a.hi < b.hi) ++i;
      else ++j;
    }
    return IntervalSet(std::move(out));
  }

  bool operator==(const IntervalSet&) const = default;

 private:
  explicit IntervalSet(std::vector<Interval> parts) : parts_(std::move(parts)) {}
  std::vector<Interval> parts_;
};

// ---------------------------------------------------------------------------
// Paths

struct Path {
  std::string callback;
  std::vector<std::string> nodes;
  Digest64 id;

  bool operator==(const Path&) const = default;
};

inline Digest64 path_id(const std::vector<std::string>& nodes) {
  std::string joined;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) joined += '/';
    joined += nodes[i];
  }
  return fnv1a64(joined);
}

class PathExplosion : public Error {
 public:
  PathExplosion(std::string callback, std::size_t max_paths)
      : Error("path explosion in callback '" + callback + "': more than " + std::to_string(max_paths) + " paths"),
        callback_(std::move(callback)) {}
  const std::string& callback() const { return callback_; }

 private:
  std::string callback_;
};

using Edge = std::pair<std::string, std::string>;

// Back edges of a depth-first search from the entry, successors visited
// then-before-else.
inline std::set<Edge> back_edges(const Callback& cb) {
  std::set<Edge> result;
  std::map<std::string, int> state;  // 1 = on stack, 2 = done
  struct Frame {
    std::string id;
    std::vector<std::string> succ;
    std::size_t next = 0;
  };
  if (!cb.find(cb.entry)) return result;
  std::vector<Frame> stack;
  stack.push_back({cb.entry, cb.find(cb.entry)->successors(), 0});
  state[cb.entry] = 1;
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next == f.succ.size()) {
      state[f.id] = 2;
      stack.pop_back();
      continue;
    }
    std::string s = f.succ[f.next++];
    int st = state[s];
    if (st == 1) {
      result.insert({f.id, s});
    } else if (st == 0) {
      if (const Node* n = cb.find(s)) {
        state[s] = 1;
        stack.push_back({s, n->successors(), 0});
      }
    }
  }
  return result;
}

// Every entry-to-exit node sequence that traverses each back edge at most
// `loop_bound` times, depth-first with then before else. Sequences are unique.
inline std::vector<Path> enumerate_paths(const Callback& cb, std::size_t loop_bound, std::size_t max_paths) {
  std::vector<Path> paths;
  std::set<Digest64> seen;
  const auto backs = back_edges(cb);
  std::map<Edge, std::size_t> used;
  std::vector<std::string> current;

  auto visit = [&](auto&& self, const std::string& id) -> void {
    const Node* n = cb.find(id);
    if (!n) return;
    current.push_back(id);
    if (n->is_exit()) {
      Digest64 pid = path_id(current);
      if (seen.insert(pid).second) {
        if (paths.size() == max_paths) throw PathExplosion(cb.name, max_paths);
        paths.push_back({cb.name, current, pid});
      }
    } else {
      for (const auto& s : n->successors()) {
        Edge e{id, s};
        bool is_back = backs.contains(e);
        if (is_back) {
          if (used[e] == loop_bound) continue;
          ++used[e];
        }
        self(self, s);
        if (is_back) --used[e];
      }
    }
    current.pop_back();
  };
  visit(visit, cb.entry);
  return paths;
}

// ---------------------------------------------------------------------------
// Solving

struct SolverConfig {
  // Witnesses are chosen inside this window when the constraints allow it.
  std::int64_t clamp_lo = -1000;
  std::int64_t clamp_hi = 1000;
  // Optional restriction of every input's domain; feasibility is judged
  // within it.
  std::optional<Interval> domain;
};

struct SolveResult {
  std::optional<Inputs> inputs;  // nullopt when infeasible
  std::string reason;

  bool feasible() const { return inputs.has_value(); }
};

// Per-variable constraint sets implied by following `path`.
inline std::map<std::string, IntervalSet> path_condition(const Path& path, const Callback& cb) {
  std::map<std::string, IntervalSet> cond;
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    const Node* n = cb.find(path.nodes[i]);
    if (!n || !n->is_branch() || n->then_target == n->else_target) continue;
    const auto& b = std::get<op::Branch>(n->op);
    const std::string& next = path.nodes[i + 1];
    Cmp c = next == n->then_target ? b.cmp : negate(b.cmp);
    auto [it, inserted] = cond.try_emplace(b.var, IntervalSet::full());
    it->second = it->second.intersect(IntervalSet::from_atom(c, b.value));
  }
  return cond;
}

// Witness is the minimum feasible value per variable, taken inside the clamp
// window when possible and the true minimum otherwise. Variables the path
// does not constrain get 0 (or the domain's clamped minimum if 0 lies outside it).
inline SolveResult solve_path_condition(const Path& path, const Callback& cb, const SolverConfig& cfg = {}) {
  auto cond = path_condition(path, cb);
  const IntervalSet domain = cfg.domain ? IntervalSet::range(cfg.domain->lo, cfg.domain->hi) : IntervalSet::full();
  const IntervalSet window = IntervalSet::range(cfg.clamp_lo, cfg.clamp_hi);
  Inputs inputs;
  for (const auto& p : cb.params) {
    auto it = cond.find(p);
    if (it == cond.end() && domain.contains(0)) {
      inputs[p] = 0;
      continue;
    }
    IntervalSet s = (it == cond.end() ? IntervalSet::full() : it->second).intersect(domain);
    if (s.empty()) return {std::nullopt, "no value of '" + p + "' satisfies the path condition"};
    IntervalSet clamped = s.intersect(window);
    inputs[p] = clamped.empty() ? s.min() : clamped.min();
  }
  return {std::move(inputs), {}};
}

// ---------------------------------------------------------------------------
// Suites

enum class TestSource { Original, InstrumentedOnly };

struct TestCase {
  std::string id;  // "<callback>@<path id>"
  std::string callback;
  Inputs inputs;
  TestSource source = TestSource::Original;
  Digest64 expected_path_id;

  bool operator==(const TestCase&) const = default;
};

struct SkippedPath {
  std::string callback;
  Digest64 path_id;
  std::string reason;
  bool operator==(const SkippedPath&) const = default;
};

struct TestgenConfig {
  std::size_t loop_bound = 2;
  std::size_t max_paths = 256;
  SolverConfig solver;
};

struct TestSuite {
  std::vector<TestCase> generated;
  std::vector<SkippedPath> skipped_infeasible;
  std::vector<std::string> warnings;
  std::size_t loop_bound = 2;
  std::size_t max_paths = 256;

  bool operator==(const TestSuite&) const = default;
};

inline Json to_json(const TestSuite& s) {
  Json j = Json::object();
  Json cfg = Json::object();
  cfg["loop_bound"] = s.loop_bound;
  cfg["max_paths"] = s.max_paths;
  j["config"] = std::move(cfg);
  Json tests = Json::array();
  for (const auto& t : s.generated) {
    Json tj = Json::object();
    tj["id"] = t.id;
    tj["callback"] = t.callback;
    tj["inputs"] = to_json(t.inputs);
    tj["source"] = t.source == TestSource::Original ? "original" : "instrumented-only";
    tj["expected_path_id"] = t.expected_path_id.hex();
    tests.push_back(std::move(tj));
  }
  j["tests"] = std::move(tests);
  Json skipped = Json::array();
  for (const auto& s2 : s.skipped_infeasible) {
    Json sj = Json::object();
    sj["callback"] = s2.callback;
    sj["path_id"] = s2.path_id.hex();
    sj["reason"] = s2.reason;
    skipped.push_back(std::move(sj));
  }
  j["skipped_infeasible"] = std::move(skipped);
  j["warnings"] = s.warnings;
  return j;
}

inline std::string serialize_suite(const TestSuite& s) { return dump_document(to_json(s)); }

// Modified callbacks are explored on the original version, added callbacks on
// the instrumented one; unchanged callbacks get no tests and removed ones only
// a warning. Output is ordered by callback name, then enumeration order.
inline TestSuite generate_tests(const AppModel& original, const AppModel& instrumented, const CallbackDiff& diff,
                                const TestgenConfig& cfg = {}) {
  TestSuite suite;
  suite.loop_bound = cfg.loop_bound;
  suite.max_paths = cfg.max_paths;
  std::vector<std::pair<std::string, TestSource>> targets;
  for (const auto& n : diff.modified) targets.emplace_back(n, TestSource::Original);
  for (const auto& n : diff.added) targets.emplace_back(n, TestSource::InstrumentedOnly);
  std::sort(targets.begin(), targets.end());
  for (const auto& n : diff.removed)
    suite.warnings.push_back("callback '" + n + "' was removed; no tests generated");

  for (const auto& [name, source] : targets) {
    const AppModel& side = source == TestSource::Original ? original : instrumented;
    const Callback* cb = side.find(name);
    if (!cb) throw Error("callback '" + name + "' listed in diff but missing from model");
    for (const auto& path : enumerate_paths(*cb, cfg.loop_bound, cfg.max_paths)) {
      SolveResult r = solve_path_condition(path, *cb, cfg.solver);
      if (!r.feasible()) {
        suite.skipped_infeasible.push_back({name, path.id, r.reason});
        continue;
      }
      suite.generated.push_back({name + "@" + path.id.hex(), name, std::move(*r.inputs), source, path.id});
    }
  }
  return suite;
}

}  // namespace decree
