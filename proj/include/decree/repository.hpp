#pragma once

// Content-addressed on-disk repository.
//
//   <root>/pools/<pool>/<id>.json    {id, pool, payload, metadata}
//   <root>/runs/<run_id>/            script.dscr, report.json, traces/, record.json
//
// An entry id is the digest of the canonical bytes of its payload: the
// canonical document text for models, manifests and service requests, the
// formatted script text for scripts.

#include <array>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "decree/dsl.hpp"
#include "decree/io.hpp"
#include "decree/script_runner.hpp"

namespace decree {

inline constexpr std::array<std::string_view, 4> kPoolNames = {"microservices", "requests", "scripts", "benchmarks"};

inline bool is_pool_name(std::string_view s) {
  return std::find(kPoolNames.begin(), kPoolNames.end(), s) != kPoolNames.end();
}

struct EntryMetadata {
  std::string submitter;
  std::string description;
  std::vector<std::string> test_results;  // digests of attached reports
};

inline Json to_json(const EntryMetadata& m) {
  Json j = Json::object();
  j["submitter"] = m.submitter;
  j["description"] = m.description;
  j["test_results"] = m.test_results;
  return j;
}

inline EntryMetadata metadata_from_json(const Json& j) {
  EntryMetadata m;
  if (j.is_null()) return m;
  std::vector<std::string> issues;
  if (!j.is_object()) throw ValidationError({"metadata: expected an object"});
  for (const auto& [k, v] : j.items()) {
    if (k == "submitter" || k == "description") {
      if (!v.is_string()) issues.push_back("metadata: '" + k + "' must be a string");
      else (k == "submitter" ? m.submitter : m.description) = v.get<std::string>();
    } else if (k == "test_results") {
      if (!v.is_array()) {
        issues.emplace_back("metadata: 'test_results' must be an array");
        continue;
      }
      for (const auto& d : v) {
        if (!d.is_string() || !Digest64::from_hex(d.get<std::string>()))
          issues.emplace_back("metadata: test_results entries must be digest hex strings");
        else m.test_results.push_back(d.get<std::string>());
      }
    } else {
      issues.push_back("metadata: unknown key '" + k + "'");
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return m;
}

struct PoolEntry {
  std::string pool;
  std::string id;
  Json payload;
  EntryMetadata metadata;
};

inline Json to_json(const PoolEntry& e) {
  Json j = Json::object();
  j["id"] = e.id;
  j["pool"] = e.pool;
  j["payload"] = e.payload;
  j["metadata"] = to_json(e.metadata);
  return j;
}

struct EntrySummary {
  std::string id;
  std::string description;
  bool operator==(const EntrySummary&) const = default;
};

struct CanonicalPayload {
  Json payload;      // normalized payload as stored
  std::string text;  // canonical bytes
};

enum class RunStatus { Queued, Running, Done, Failed };

inline std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Queued: return "queued";
    case RunStatus::Running: return "running";
    case RunStatus::Done: return "done";
    case RunStatus::Failed: return "failed";
  }
  return "?";
}

inline std::optional<RunStatus> parse_run_status(std::string_view s) {
  for (auto st : {RunStatus::Queued, RunStatus::Running, RunStatus::Done, RunStatus::Failed})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

struct RunRecord {
  std::string run_id;
  std::string script_id;
  RunStatus status = RunStatus::Queued;
  std::string message;
  std::optional<std::string> report_digest;
};

inline Json to_json(const RunRecord& r) {
  Json j = Json::object();
  j["run_id"] = r.run_id;
  j["script_id"] = r.script_id;
  j["status"] = std::string(to_string(r.status));
  j["message"] = r.message;
  j["report_digest"] = r.report_digest ? Json(*r.report_digest) : Json(nullptr);
  return j;
}

inline RunRecord run_record_from_json(const Json& j) {
  RunRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.script_id = j.at("script_id").get<std::string>();
  auto st = parse_run_status(j.at("status").get<std::string>());
  if (!st) throw Error("run record: bad status");
  r.status = *st;
  r.message = j.at("message").get<std::string>();
  if (!j.at("report_digest").is_null()) r.report_digest = j.at("report_digest").get<std::string>();
  return r;
}

class Repository {
 public:
  // With `queued`, runs are executed by one background worker in FIFO order.
  explicit Repository(std::filesystem::path root, bool queued = false) : root_(std::move(root)) {
    for (auto p : kPoolNames) std::filesystem::create_directories(root_ / "pools" / p);
    std::filesystem::create_directories(root_ / "runs");
    if (queued) worker_ = std::thread([this] { work(); });
  }

  ~Repository() {
    if (worker_.joinable()) {
      {
        std::lock_guard lock(queue_mu_);
        stopping_ = true;
      }
      queue_cv_.notify_all();
      worker_.join();
    }
  }

  Repository(const Repository&) = delete;
  Repository& operator=(const Repository&) = delete;

  const std::filesystem::path& root() const { return root_; }

  // Validates a payload for its pool and returns its canonical form.
  CanonicalPayload canonicalize(std::string_view pool, const Json& payload) const {
    check_pool(pool);
    if (pool == "benchmarks") {
      AppModel m = app_model_from_json(payload);
      return {to_json(m), serialize_app_model(m)};
    }
    if (pool == "microservices") {
      TechniqueManifest m = manifest_from_json(payload);
      compose_pipeline(m);
      return {to_json(m), serialize_manifest(m)};
    }
    if (pool == "scripts") {
      if (!payload.is_string()) throw ValidationError({"script payload must be the script text"});
      std::string text = dsl::format_script(dsl::parse_script(payload.get<std::string>()));
      return {Json(text), text};
    }
    // requests
    std::vector<std::string> issues;
    if (!payload.is_object()) throw ValidationError({"service request: expected an object"});
    Json out = Json::object();
    for (const auto& [k, _] : payload.items())
      if (k != "need" && k != "attached_script") issues.push_back("service request: unknown key '" + k + "'");
    if (!payload.contains("need") || !payload["need"].is_string())
      issues.emplace_back("service request: 'need' must be a string");
    else out["need"] = payload["need"];
    if (payload.contains("attached_script") && !payload["attached_script"].is_null()) {
      const Json& a = payload["attached_script"];
      if (!a.is_string()) issues.emplace_back("service request: 'attached_script' must be a script id");
      else if (!exists("scripts", a.get<std::string>()))
        issues.push_back("service request: attached script '" + a.get<std::string>() + "' does not exist");
      else out["attached_script"] = a;
    }
    if (!issues.empty()) throw ValidationError(std::move(issues));
    return {out, dump_document(out)};
  }

  // Idempotent: an existing entry with the same id is left untouched.
  std::string put_entry(std::string_view pool, const Json& payload, const Json& metadata = nullptr) {
    CanonicalPayload c = canonicalize(pool, payload);
    EntryMetadata meta = metadata_from_json(metadata);
    std::string id = fnv1a64(c.text).hex();
    std::lock_guard lock(write_mu_);
    auto path = entry_path(pool, id);
    if (!std::filesystem::exists(path)) {
      PoolEntry e{std::string(pool), id, std::move(c.payload), std::move(meta)};
      write_atomic(path, dump_document(to_json(e)));
    }
    return id;
  }

  bool exists(std::string_view pool, std::string_view id) const {
    if (!is_pool_name(pool) || !Digest64::from_hex(id)) return false;
    return std::filesystem::exists(entry_path(pool, id));
  }

  PoolEntry get_entry(std::string_view pool, std::string_view id) const {
    check_pool(pool);
    if (!Digest64::from_hex(id) || !exists(pool, id))
      throw NotFoundError("no entry '" + std::string(id) + "' in pool '" + std::string(pool) + "'");
    Json j = parse_json(read_file(entry_path(pool, id)));
    PoolEntry e;
    e.pool = j.at("pool").get<std::string>();
    e.id = j.at("id").get<std::string>();
    e.payload = j.at("payload");
    e.metadata = metadata_from_json(j.at("metadata"));
    return e;
  }

  // The canonical payload text, as consumed by the script runner.
  std::string payload_text(std::string_view pool, std::string_view id) const {
    PoolEntry e = get_entry(pool, id);
    if (e.payload.is_string()) return e.payload.get<std::string>();
    return dump_document(e.payload);
  }

  // Entries whose description contains `query`, in id order.
  std::vector<EntrySummary> list_entries(std::string_view pool, std::string_view query = {}) const {
    check_pool(pool);
    std::vector<EntrySummary> out;
    for (const auto& id : ids(pool)) {
      PoolEntry e = get_entry(pool, id);
      if (e.metadata.description.find(query) != std::string::npos) out.push_back({e.id, e.metadata.description});
    }
    return out;
  }

  // Recomputes every entry id from its payload. Returns the problems found.
  std::vector<std::string> fsck() const {
    std::vector<std::string> problems;
    for (auto pool : kPoolNames) {
      for (const auto& id : ids(pool)) {
        std::string where = std::string(pool) + "/" + id;
        try {
          Json j = parse_json(read_file(entry_path(pool, id)));
          if (j.at("id") != id) problems.push_back(where + ": id field does not match file name");
          if (j.at("pool") != pool) problems.push_back(where + ": pool field does not match directory");
          CanonicalPayload c = canonicalize(pool, j.at("payload"));
          if (fnv1a64(c.text).hex() != id) problems.push_back(where + ": payload digest does not match id");
          if (c.payload != j.at("payload")) problems.push_back(where + ": payload is not in canonical form");
        } catch (const std::exception& e) {
          problems.push_back(where + ": " + e.what());
        }
      }
    }
    return problems;
  }

  // Script content id plus the script's environment and the artifact version.
  static std::string compute_run_id(const std::string& script_id, const dsl::Script& script) {
    return fnv1a64(script_id + "\n" + fold_environment(script).to_json().dump() + "\n" + std::string(kArtifactVersion))
        .hex();
  }

  // Accepts {"script_id": ...} or {"script_text": ...}. Inline scripts are
  // stored in the scripts pool first. A run that already completed is not
  // executed again.
  std::string submit_run(const Json& request) {
    if (!request.is_object()) throw ValidationError({"run request: expected an object"});
    std::string script_id;
    if (request.contains("script_id") && request.contains("script_text"))
      throw ValidationError({"run request: give either 'script_id' or 'script_text'"});
    if (request.contains("script_id")) {
      if (!request["script_id"].is_string()) throw ValidationError({"run request: 'script_id' must be a string"});
      script_id = request["script_id"].get<std::string>();
      if (!exists("scripts", script_id)) throw NotFoundError("no entry '" + script_id + "' in pool 'scripts'");
    } else if (request.contains("script_text")) {
      if (!request["script_text"].is_string()) throw ValidationError({"run request: 'script_text' must be a string"});
      Json meta = Json::object();
      meta["submitter"] = "run";
      meta["description"] = "submitted with a run";
      script_id = put_entry("scripts", request["script_text"], meta);
    } else {
      throw ValidationError({"run request: needs 'script_id' or 'script_text'"});
    }
    std::string text = payload_text("scripts", script_id);
    dsl::Script script = dsl::parse_script(text);
    std::string run_id = compute_run_id(script_id, script);

    if (auto existing = find_run(run_id); existing && existing->status != RunStatus::Failed) return run_id;
    RunRecord rec{run_id, script_id, RunStatus::Queued, "", std::nullopt};
    save_record(rec);
    if (worker_.joinable()) {
      {
        std::lock_guard lock(queue_mu_);
        queue_.push_back(run_id);
      }
      queue_cv_.notify_all();
    } else {
      execute(rec);
    }
    return run_id;
  }

  std::optional<RunRecord> find_run(std::string_view run_id) const {
    if (!Digest64::from_hex(run_id)) return std::nullopt;
    auto p = run_dir(run_id) / "record.json";
    std::lock_guard lock(record_mu_);
    if (!std::filesystem::exists(p)) return std::nullopt;
    return run_record_from_json(parse_json(read_file(p)));
  }

  RunRecord get_run(std::string_view run_id) const {
    auto r = find_run(run_id);
    if (!r) throw NotFoundError("no run '" + std::string(run_id) + "'");
    return *r;
  }

  // Record plus the report document when the run is done.
  Json run_document(std::string_view run_id) const {
    RunRecord r = get_run(run_id);
    Json j = to_json(r);
    if (r.status == RunStatus::Done) j["report"] = parse_json(read_file(run_dir(run_id) / "report.json"));
    return j;
  }

  std::filesystem::path run_dir(std::string_view run_id) const { return root_ / "runs" / std::string(run_id); }

  // Blocks until the queue is empty and the worker is idle.
  void drain() {
    std::unique_lock lock(queue_mu_);
    queue_cv_.wait(lock, [this] { return queue_.empty() && !busy_; });
  }

 private:
  void check_pool(std::string_view pool) const {
    if (!is_pool_name(pool)) throw ValidationError({"unknown pool '" + std::string(pool) + "'"});
  }

  std::filesystem::path entry_path(std::string_view pool, std::string_view id) const {
    return root_ / "pools" / std::string(pool) / (std::string(id) + ".json");
  }

  std::vector<std::string> ids(std::string_view pool) const {
    std::vector<std::string> out;
    for (const auto& f : std::filesystem::directory_iterator(root_ / "pools" / std::string(pool)))
      if (f.path().extension() == ".json") out.push_back(f.path().stem().string());
    std::sort(out.begin(), out.end());
    return out;
  }

  static void write_atomic(const std::filesystem::path& p, std::string_view content) {
    auto tmp = p;
    tmp += ".tmp";
    write_file(tmp, content);
    std::filesystem::rename(tmp, p);
  }

  void save_record(const RunRecord& r) {
    std::lock_guard lock(record_mu_);
    write_atomic(run_dir(r.run_id) / "record.json", dump_document(to_json(r)));
  }

  void execute(RunRecord rec) {
    std::lock_guard run_lock(run_mu_);
    rec.status = RunStatus::Running;
    save_record(rec);
    auto dir = run_dir(rec.run_id);
    try {
      std::string text = payload_text("scripts", rec.script_id);
      write_file(dir / "script.dscr", text);
      ScriptContext ctx;
      ctx.resolver = [this](std::string_view pool, std::string_view id) { return payload_text(pool, id); };
      ScriptReport report = run_script(dsl::parse_script(text), ctx);
      write_run_outputs(report, dir);
      rec.status = RunStatus::Done;
      rec.report_digest = report.digest.hex();
      rec.message.clear();
    } catch (const std::exception& e) {
      rec.status = RunStatus::Failed;
      rec.message = e.what();
    }
    save_record(rec);
  }

  void work() {
    for (;;) {
      std::string run_id;
      {
        std::unique_lock lock(queue_mu_);
        queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) return;
        run_id = queue_.front();
        queue_.pop_front();
        busy_ = true;
      }
      if (auto rec = find_run(run_id)) execute(*rec);
      {
        std::lock_guard lock(queue_mu_);
        busy_ = false;
      }
      queue_cv_.notify_all();
    }
  }

  std::filesystem::path root_;
  std::mutex write_mu_;
  mutable std::mutex record_mu_;
  std::mutex run_mu_;
  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<std::string> queue_;
  bool stopping_ = false;
  bool busy_ = false;
  std::thread worker_;
};

}  // namespace decree
