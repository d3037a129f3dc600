#pragma once

// Pair comparison of original/instrumented traces and report aggregation.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "decree/diff.hpp"
#include "decree/executor.hpp"
#include "decree/rational.hpp"
#include "decree/testgen.hpp"

namespace decree {

enum class Functional { Pass, Fail, Skipped };

inline std::string_view to_string(Functional f) {
  switch (f) {
    case Functional::Pass: return "pass";
    case Functional::Fail: return "fail";
    case Functional::Skipped: return "skipped";
  }
  return "?";
}

struct CheckpointValue {
  std::string widget;
  std::string value;
  bool operator==(const CheckpointValue&) const = default;
};

// First point where the two UI checkpoint sequences disagree. A missing side
// means that sequence ended earlier.
struct Divergence {
  std::size_t index = 0;
  std::optional<CheckpointValue> original;
  std::optional<CheckpointValue> instrumented;
  bool operator==(const Divergence&) const = default;
};

struct PairVerdict {
  std::string test_id;
  std::string callback;
  Functional functional = Functional::Pass;
  std::string reason;
  std::optional<Divergence> divergence;
  bool perf_ok = true;
  std::optional<std::int64_t> orig_time_ms;
  std::int64_t instr_time_ms = 0;
  std::optional<std::int64_t> delta_ms;
  std::optional<double> ratio;
  std::map<std::string, std::int64_t> orig_nfp;
  std::map<std::string, std::int64_t> instr_nfp;
  std::vector<std::string> errors;
};

inline PairVerdict compare_traces(const RunTrace& orig, const RunTrace& instr, const Rational& perf_tolerance) {
  PairVerdict v;
  v.callback = orig.callback;
  v.orig_nfp = orig.nfp;
  v.instr_nfp = instr.nfp;
  if (!orig.termination.normal) v.errors.push_back("original: " + orig.termination.error_kind);
  if (!instr.termination.normal) v.errors.push_back("instrumented: " + instr.termination.error_kind);

  const auto& a = orig.ui_checkpoints;
  const auto& b = instr.ui_checkpoints;
  std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    bool same = i < a.size() && i < b.size() && a[i].widget == b[i].widget && a[i].value == b[i].value;
    if (same) continue;
    Divergence d;
    d.index = i;
    if (i < a.size()) d.original = CheckpointValue{a[i].widget, a[i].value};
    if (i < b.size()) d.instrumented = CheckpointValue{b[i].widget, b[i].value};
    v.divergence = std::move(d);
    break;
  }
  if (v.divergence) {
    v.functional = Functional::Fail;
    v.reason = "ui checkpoint " + std::to_string(v.divergence->index) + " differs";
  } else if (!v.errors.empty()) {
    v.functional = Functional::Fail;
    v.reason = "abnormal termination";
  }

  std::int64_t ot = orig.metric(kMetricSimTime), it = instr.metric(kMetricSimTime);
  v.orig_time_ms = ot;
  v.instr_time_ms = it;
  v.delta_ms = it - ot;
  if (ot != 0) v.ratio = static_cast<double>(it) / static_cast<double>(ot);
  else if (it == 0) v.ratio = 1.0;
  // instr <= orig * (1 + tolerance), exactly
  __int128 lhs = static_cast<__int128>(it) * perf_tolerance.den();
  __int128 rhs = static_cast<__int128>(ot) * (perf_tolerance.den() + perf_tolerance.num());
  v.perf_ok = lhs <= rhs;
  return v;
}

// Tests of callbacks that exist only in the instrumented app: nothing to
// compare against.
inline PairVerdict compare_added(const RunTrace& instr) {
  PairVerdict v;
  v.callback = instr.callback;
  v.functional = Functional::Skipped;
  v.reason = "added callback";
  v.instr_nfp = instr.nfp;
  v.instr_time_ms = instr.metric(kMetricSimTime);
  if (!instr.termination.normal) v.errors.push_back("instrumented: " + instr.termination.error_kind);
  return v;
}

struct CallbackAggregate {
  std::string callback;
  std::size_t tests = 0;
  std::int64_t orig_time_ms = 0;
  std::int64_t instr_time_ms = 0;
  std::int64_t delta_ms = 0;
};

struct DiffReport {
  std::string name;
  Json environment;
  std::vector<std::string> monitor;
  CallbackDiff diff;
  TestSuite suite;
  std::vector<PairVerdict> verdicts;
  std::size_t passed = 0;
  std::size_t compared = 0;
  std::vector<CallbackAggregate> callbacks;
  Json body;  // canonical body, without the digest
  Digest64 digest;

  // Vacuously 1 when nothing was compared.
  double accuracy() const {
    return compared == 0 ? 1.0 : static_cast<double>(passed) / static_cast<double>(compared);
  }
  Json to_json() const {
    Json j = body;
    j["digest"] = digest.hex();
    return j;
  }
};

namespace detail {

inline Json restricted(const std::map<std::string, std::int64_t>& nfp, const std::vector<std::string>& monitor) {
  Json j = Json::object();
  for (const auto& m : monitor)
    if (auto it = nfp.find(m); it != nfp.end()) j[m] = it->second;
  return j;
}

inline Json to_json(const PairVerdict& v, const std::vector<std::string>& monitor) {
  Json j = Json::object();
  j["test_id"] = v.test_id;
  j["callback"] = v.callback;
  j["functional"] = std::string(to_string(v.functional));
  if (!v.reason.empty()) j["reason"] = v.reason;
  if (v.divergence) {
    Json d = Json::object();
    d["index"] = v.divergence->index;
    auto side = [](const std::optional<CheckpointValue>& c) {
      if (!c) return Json(nullptr);
      Json s = Json::object();
      s["widget"] = c->widget;
      s["value"] = c->value;
      return s;
    };
    d["original"] = side(v.divergence->original);
    d["instrumented"] = side(v.divergence->instrumented);
    j["divergence"] = std::move(d);
  }
  j["perf_ok"] = v.perf_ok;
  j["orig_time_ms"] = v.orig_time_ms ? Json(*v.orig_time_ms) : Json(nullptr);
  j["instr_time_ms"] = v.instr_time_ms;
  j["delta_ms"] = v.delta_ms ? Json(*v.delta_ms) : Json(nullptr);
  j["ratio"] = v.ratio ? Json(*v.ratio) : Json(nullptr);
  Json nfp = Json::object();
  nfp["original"] = v.orig_time_ms ? restricted(v.orig_nfp, monitor) : Json(nullptr);
  nfp["instrumented"] = restricted(v.instr_nfp, monitor);
  if (v.orig_time_ms) {
    Json delta = Json::object();
    for (const auto& m : monitor) {
      auto a = v.orig_nfp.find(m);
      auto b = v.instr_nfp.find(m);
      if (a != v.orig_nfp.end() && b != v.instr_nfp.end()) delta[m] = b->second - a->second;
    }
    nfp["delta"] = std::move(delta);
  } else {
    nfp["delta"] = nullptr;
  }
  j["nfp"] = std::move(nfp);
  j["errors"] = v.errors;
  return j;
}

}  // namespace detail

// `monitor` lists the metrics kept in per-verdict NFP maps; sim_time_ms is
// always included. Accuracy counts only compared (non-skipped) verdicts.
inline DiffReport aggregate_report(std::string name, const CallbackDiff& diff, const TestSuite& suite,
                                   std::vector<PairVerdict> verdicts, Json environment,
                                   std::vector<std::string> monitor = kStandardMetrics) {
  if (verdicts.size() != suite.generated.size())
    throw Error("verdict/test mismatch: " + std::to_string(verdicts.size()) + " verdicts for " +
                std::to_string(suite.generated.size()) + " tests");
  for (std::size_t i = 0; i < verdicts.size(); ++i)
    if (verdicts[i].test_id != suite.generated[i].id)
      throw Error("verdict/test mismatch at position " + std::to_string(i) + ": '" + verdicts[i].test_id + "' vs '" +
                  suite.generated[i].id + "'");
  if (std::find(monitor.begin(), monitor.end(), std::string(kMetricSimTime)) == monitor.end())
    monitor.insert(monitor.begin(), std::string(kMetricSimTime));
  // Report metrics in the standard order.
  std::vector<std::string> ordered;
  for (const auto& m : kStandardMetrics)
    if (std::find(monitor.begin(), monitor.end(), m) != monitor.end()) ordered.push_back(m);

  DiffReport r;
  r.name = std::move(name);
  r.environment = std::move(environment);
  r.monitor = ordered;
  r.diff = diff;
  r.suite = suite;
  r.verdicts = std::move(verdicts);

  std::map<std::string, CallbackAggregate> agg;
  for (const auto& v : r.verdicts) {
    if (v.functional == Functional::Skipped) continue;
    ++r.compared;
    if (v.functional == Functional::Pass) ++r.passed;
    auto& a = agg[v.callback];
    a.callback = v.callback;
    ++a.tests;
    a.orig_time_ms += v.orig_time_ms.value_or(0);
    a.instr_time_ms += v.instr_time_ms;
    a.delta_ms += v.delta_ms.value_or(0);
  }
  for (auto& [_, a] : agg) r.callbacks.push_back(a);

  Json body = Json::object();
  body["kind"] = "difftest";
  body["name"] = r.name;
  body["environment"] = r.environment;
  body["monitor"] = r.monitor;
  body["diff"] = decree::to_json(r.diff);
  body["suite"] = decree::to_json(r.suite);
  Json vs = Json::array();
  for (const auto& v : r.verdicts) vs.push_back(detail::to_json(v, r.monitor));
  body["verdicts"] = std::move(vs);
  body["passed"] = r.passed;
  body["compared"] = r.compared;
  body["accuracy"] = r.accuracy();
  Json cbs = Json::array();
  for (const auto& a : r.callbacks) {
    Json cj = Json::object();
    cj["callback"] = a.callback;
    cj["tests"] = a.tests;
    cj["orig_time_ms"] = a.orig_time_ms;
    cj["instr_time_ms"] = a.instr_time_ms;
    cj["delta_ms"] = a.delta_ms;
    cbs.push_back(std::move(cj));
  }
  body["callbacks"] = std::move(cbs);
  r.digest = fnv1a64(body.dump());
  r.body = std::move(body);
  return r;
}

inline std::string serialize_report(const DiffReport& r) { return dump_document(r.to_json()); }

}  // namespace decree
