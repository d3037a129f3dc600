// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "decree/decree.hpp"
#include "decree/service.hpp"
#include "support/path_oracle.hpp"
#include "support/random_models.hpp"
#include "support/random_scripts.hpp"
#include "support/repo_seed.hpp"
#include "support/support.hpp"

using namespace decree;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream notes;

  void check(bool cond, const std::string& what) {
    if (!cond) {
      if (pass) notes << what;
      else notes << "; " << what;
      pass = false;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

AppModel instrument(const char* manifest, const AppModel& m) {
  return *run_pipeline(compose_pipeline(support::fixture_manifest(manifest)), m).instrumented_model;
}

DifftestConfig quickstart_config() {
  DifftestConfig cfg;
  cfg.profile.net_latency_ms = 100;
  cfg.profile.net_bandwidth_kbps = 1000;
  cfg.profile.battery_pct = 80;
  return cfg;
}

Json strip_wall_clock(const std::string& report) {
  Json j = parse_json(report);
  j.erase("wall_clock");
  return j;
}

void identity(Outcome& o) {
  auto start = std::chrono::steady_clock::now();
  std::vector<AppModel> models{support::fixture_model("shopping.app.json")};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) models.push_back(support::ModelGenerator(seed).model());
  std::size_t forced_tests = 0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const AppModel& m = models[i];
    std::string tag = "model " + std::to_string(i);
    DifftestConfig cfg;
    DiffReport plain = run_difftest("identity", m, m, cfg).report;
    o.check(plain.diff.modified.empty(), tag + ": modified callbacks");
    o.check(plain.suite.generated.empty(), tag + ": test cases generated");
    cfg.force_all = true;
    DiffReport forced = run_difftest("identity", m, m, cfg).report;
    o.check(forced.accuracy() == 1.0, tag + ": forced accuracy below 1");
    for (const auto& v : forced.verdicts) o.check(v.delta_ms && *v.delta_ms == 0, tag + ": nonzero delta");
    forced_tests += forced.verdicts.size();
  }
  double s = seconds_since(start);
  o.check(s < 5.0, "took " + std::to_string(s) + " s");
  o.notes << (o.pass ? "" : "; ") << models.size() << " models, " << forced_tests << " forced tests, " << s << " s";
}

void prefetch_speedup(Outcome& o) {
  AppModel shop = support::fixture_model("shopping.app.json");
  DiffReport r = run_difftest("prefetch", shop, instrument("prefetch.manifest.json", shop), quickstart_config()).report;
  o.check(r.suite.generated.size() == 2, "expected 2 test cases, got " + std::to_string(r.suite.generated.size()));
  o.check(r.accuracy() == 1.0, "accuracy below 1");
  if (r.verdicts.size() == 2) {
    // The then-branch witness (x < 10) is generated first.
    const auto& then_v = r.verdicts[0];
    const auto& else_v = r.verdicts[1];
    o.check(then_v.orig_time_ms == 123 && then_v.instr_time_ms == 7, "then-branch times differ from 123/7");
    o.check(else_v.orig_time_ms == 7 && else_v.instr_time_ms == 7, "else-branch times differ from 7/7");
    o.notes << (o.pass ? "" : "; ") << "then " << then_v.orig_time_ms.value_or(-1) << " -> " << then_v.instr_time_ms
            << " ms, else " << else_v.orig_time_ms.value_or(-1) << " -> " << else_v.instr_time_ms << " ms";
  }
}

void logger_overhead(Outcome& o) {
  AppModel shop = support::fixture_model("shopping.app.json");
  DifftestConfig cfg = quickstart_config();
  cfg.perf_tolerance = Rational(0);
  DifftestResult res = run_difftest("logger", shop, instrument("logger.manifest.json", shop), cfg);
  const DiffReport& r = res.report;
  o.check(r.accuracy() == 1.0, "accuracy below 1");
  o.check(!r.verdicts.empty(), "no tests");
  std::vector<std::int64_t> deltas;
  for (std::size_t t = 0; t < r.verdicts.size(); ++t) {
    const auto& v = r.verdicts[t];
    const auto& orig = res.traces[t].first;
    bool observable = orig && (!orig->ui_checkpoints.empty() || !orig->net_events.empty());
    if (observable) o.check(v.delta_ms && *v.delta_ms > 0, v.test_id + ": delta not positive");
    o.check(!v.perf_ok, v.test_id + ": perf_ok at tolerance 0");
    deltas.push_back(v.delta_ms.value_or(0));
  }
  o.notes << (o.pass ? "" : "; ") << "deltas";
  for (auto d : deltas) o.notes << " +" << d;
  o.notes << " ms";
}

void fault_detection(Outcome& o) {
  AppModel shop = support::fixture_model("shopping.app.json");
  auto manifest = support::fixture_manifest("fault.manifest.json");
  AppModel faulty = instrument("fault.manifest.json", shop);
  std::string widget = manifest.find("fault")->config.at("widget");
  DifftestResult res = run_difftest("fault", shop, faulty, quickstart_config());
  const DiffReport& r = res.report;
  o.check(!r.verdicts.empty(), "no tests");
  for (std::size_t t = 0; t < r.verdicts.size(); ++t) {
    const auto& v = r.verdicts[t];
    o.check(v.functional == Functional::Fail, v.test_id + ": not a functional fail");
    std::size_t first = 0;
    const auto& cps = res.traces[t].first->ui_checkpoints;
    while (first < cps.size() && cps[first].widget != widget) ++first;
    bool at_first = v.divergence && v.divergence->index == first && v.divergence->instrumented &&
                    v.divergence->instrumented->widget == widget && v.divergence->instrumented->value == "FAULT";
    o.check(at_first, v.test_id + ": divergence is not FAULT at the first " + widget + " checkpoint");
  }

  support::TempDir dir;
  write_file(dir / "faulty.app.json", serialize_app_model(faulty));
  auto cli = support::run_cli({"difftest", support::fixture("shopping.app.json").string(),
                               (dir / "faulty.app.json").string(), "-o", (dir / "report.json").string()});
  o.check(cli.exit_code == 1, "CLI exit code " + std::to_string(cli.exit_code));
  o.notes << (o.pass ? "" : "; ") << r.verdicts.size() << " failing tests, CLI exit " << cli.exit_code;
}

void path_oracle(Outcome& o) {
  auto start = std::chrono::steady_clock::now();
  support::ModelShape shape;
  TestgenConfig cfg;
  cfg.loop_bound = 2;
  cfg.solver.domain = Interval{0, 20};
  std::size_t paths = 0;
  for (std::uint64_t seed = 5000; seed < 5050; ++seed) {
    support::ModelGenerator gen(seed, shape);
    AppModel m;
    m.app_id = "oracle";
    m.version = "1";
    m.callbacks.push_back(gen.callback("cb#oracle"));
    TestSuite s = generate_tests(m, m, force_all_modified(diff_apps(m, m)), cfg);
    std::set<Digest64> generated;
    for (const auto& t : s.generated) generated.insert(t.expected_path_id);
    auto exhaustive = support::exhaustive_path_ids(m, m.callbacks[0], 0, 20);
    o.check(generated == exhaustive, "seed " + std::to_string(seed) + ": path sets differ");
    paths += generated.size();
  }
  double s = seconds_since(start);
  o.check(s < 30.0, "took " + std::to_string(s) + " s");
  o.notes << (o.pass ? "" : "; ") << "50 callbacks, " << paths << " feasible paths, " << s << " s";
}

void battery_policy(Outcome& o) {
  AppModel shop = support::fixture_model("shopping.app.json");
  DifftestConfig cfg = quickstart_config();
  cfg.profile.battery_pct = 10;
  cfg.profile.prefetch_battery_min = 20;
  DifftestResult res = run_difftest("battery", shop, instrument("prefetch.manifest.json", shop), cfg);
  const DiffReport& r = res.report;
  o.check(r.accuracy() == 1.0, "accuracy below 1");
  o.check(!r.verdicts.empty(), "no tests");
  for (std::size_t t = 0; t < r.verdicts.size(); ++t) {
    for (const auto& e : res.traces[t].second.net_events)
      o.check(e.kind != "prefetch", r.verdicts[t].test_id + ": prefetch fetch performed");
    o.check(r.verdicts[t].orig_nfp.at("net_bytes") == r.verdicts[t].instr_nfp.at("net_bytes"),
            r.verdicts[t].test_id + ": net_bytes differ");
  }
  if (!r.verdicts.empty())
    o.notes << (o.pass ? "" : "; ") << "then-branch net_bytes " << r.verdicts[0].orig_nfp.at("net_bytes") << " = "
            << r.verdicts[0].instr_nfp.at("net_bytes");
}

void reproducibility(Outcome& o) {
  support::TempDir dir;
  support::copy_fixtures(dir / "ws");
  std::string script = (dir / "ws" / "quickstart.dscr").string();
  std::vector<std::string> reports;
  for (const char* out : {"cli1", "cli2"}) {
    auto r = support::run_cli({"script", script, "-w", (dir / "ws").string(), "--out", (dir / out).string()});
    o.check(r.exit_code == 0, std::string(out) + " exit " + std::to_string(r.exit_code));
    reports.push_back(read_file(dir / out / "report.json"));
  }

  Repository repo(dir / "repo");
  Service svc(repo);
  httplib::Server server;
  svc.mount(server);
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  auto post = [&](const std::string& path, const Json& body) {
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res || res->status != 200) throw Error("POST " + path + " failed");
    return parse_json(res->body);
  };
  try {
    Json b = Json::object();
    b["payload"] = parse_json(support::fixture_text("shopping.app.json"));
    b["metadata"] = support::meta("acceptance", "shopping app");
    support::SeededIds ids;
    ids.shopping = post("/pools/benchmarks", b)["id"].get<std::string>();
    b["payload"] = parse_json(support::fixture_text("prefetch.manifest.json"));
    b["metadata"] = support::meta("acceptance", "prefetch technique");
    ids.prefetch = post("/pools/microservices", b)["id"].get<std::string>();
    Json s = Json::object();
    s["payload"] = support::pool_quickstart(ids);
    Json run = Json::object();
    run["script_id"] = post("/pools/scripts", s)["id"];
    std::string run_id = post("/runs", run)["run_id"].get<std::string>();
    auto got = client.Get("/runs/" + run_id);
    o.check(got && got->status == 200 && parse_json(got->body)["status"] == "done", "service run not done");
    reports.push_back(read_file(repo.run_dir(run_id) / "report.json"));
  } catch (const std::exception& e) {
    o.check(false, e.what());
  }
  server.stop();
  t.join();

  if (reports.size() == 3) {
    std::string a = dump_document(strip_wall_clock(reports[0]));
    o.check(a == dump_document(strip_wall_clock(reports[1])), "CLI reports differ");
    o.check(a == dump_document(strip_wall_clock(reports[2])), "service report differs from CLI");
    o.notes << (o.pass ? "" : "; ") << "3 reports, digest " << strip_wall_clock(reports[0])["digest"].get<std::string>();
  }
}

void repository_integrity(Outcome& o) {
  support::TempDir dir;
  Repository repo(dir.path());
  Service svc(repo);
  std::map<std::string, std::string> ids;
  auto seed = [&](const std::string& pool, const Json& payload, const std::string& description) {
    std::string id = repo.put_entry(pool, payload, support::meta("acceptance", description));
    o.check(repo.put_entry(pool, payload, support::meta("again", "duplicate")) == id, pool + ": duplicate id differs");
    ids[description] = id;
  };
  for (const auto& f : std::filesystem::directory_iterator(DECREE_FIXTURES_DIR)) {
    std::string name = f.path().filename().string();
    std::string text = read_file(f.path());
    if (name.ends_with(".app.json")) seed("benchmarks", parse_json(text), name);
    else if (name.ends_with(".manifest.json")) seed("microservices", parse_json(text), name);
    else if (name.ends_with(".dscr")) seed("scripts", Json(text), name);
  }
  Json request = Json::object();
  request["need"] = "measure prefetch speedup";
  request["attached_script"] = ids.at("quickstart.dscr");
  seed("requests", request, "request");

  auto problems = repo.fsck();
  o.check(problems.empty(), "fsck: " + (problems.empty() ? std::string() : problems[0]));
  o.check(ids.at("shopping.app.json") == "3ed38fa8348d2a9e", "shopping id");

  auto get = svc.handle("GET", "/pools/benchmarks/" + ids.at("gallery.app.json"), "", "");
  o.check(get.status == 200 && get.body["payload"]["app_id"] == "gallery", "GET entry");
  auto list = svc.handle("GET", "/pools/microservices", "prefetch", "");
  o.check(list.status == 200 && list.body.size() == 1 && list.body[0]["id"] == ids.at("prefetch.manifest.json"),
          "GET list ?q=prefetch");
  o.check(svc.handle("GET", "/pools/microservices", "", "").body.size() == 4, "GET list of all manifests");
  o.check(svc.handle("GET", "/pools/scripts/ffffffffffffffff", "", "").status == 404, "missing entry is not 404");
  o.check(svc.handle("GET", "/runs/ffffffffffffffff", "", "").status == 404, "missing run is not 404");
  o.check(svc.handle("GET", "/pools/gadgets", "", "").status == 400, "unknown pool is not 400");
  o.check(svc.handle("POST", "/pools/benchmarks", "", R"({"payload":{"app_id":1}})").status == 400,
          "invalid payload is not 400");
  std::size_t entries = 0;
  for (auto pool : kPoolNames) entries += repo.list_entries(pool).size();
  o.notes << (o.pass ? "" : "; ") << entries << " entries, fsck clean";
}

void round_trips(Outcome& o) {
  std::size_t fixtures = 0;
  for (const auto& f : std::filesystem::directory_iterator(DECREE_FIXTURES_DIR)) {
    std::string name = f.path().filename().string();
    std::string text = read_file(f.path());
    if (name.ends_with(".app.json")) {
      std::string once = serialize_app_model(parse_app_model(text));
      o.check(once == text, name + ": not canonical");
      o.check(serialize_app_model(parse_app_model(once)) == once, name + ": not a fixpoint");
    } else if (name.ends_with(".manifest.json")) {
      std::string once = serialize_manifest(load_manifest(text));
      o.check(serialize_manifest(load_manifest(once)) == once, name + ": not a fixpoint");
    } else if (name.ends_with(".dscr")) {
      dsl::Script s = dsl::parse_script(text);
      std::string once = dsl::format_script(s);
      o.check(dsl::parse_script(once) == s, name + ": AST changed");
      o.check(dsl::format_script(dsl::parse_script(once)) == once, name + ": not a fixpoint");
    } else {
      continue;
    }
    ++fixtures;
  }
  support::ModelShape shape;
  shape.resp_values = true;
  shape.prefetch_nodes = true;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    AppModel m = support::ModelGenerator(seed, shape).model();
    std::string text = serialize_app_model(m);
    AppModel back = parse_app_model(text);
    o.check(back == m, "model seed " + std::to_string(seed) + ": parse(serialize) differs");
    o.check(serialize_app_model(back) == text, "model seed " + std::to_string(seed) + ": not a fixpoint");
  }
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    std::string text = support::ScriptGenerator(seed).text();
    dsl::Script s = dsl::parse_script(text);
    std::string once = dsl::format_script(s);
    o.check(dsl::parse_script(once) == s, "script seed " + std::to_string(seed) + ": AST changed");
    o.check(dsl::format_script(dsl::parse_script(once)) == once, "script seed " + std::to_string(seed) + ": not a fixpoint");
  }
  o.notes << (o.pass ? "" : "; ") << fixtures << " fixtures, 100 models, 100 scripts";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"identity difftest", identity},
      {"prefetch speedup", prefetch_speedup},
      {"logger overhead", logger_overhead},
      {"fault detection", fault_detection},
      {"path generation oracle", path_oracle},
      {"battery policy", battery_policy},
      {"reproducibility", reproducibility},
      {"repository integrity", repository_integrity},
      {"round trips", round_trips},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << o.notes.str()
              << std::endl;
    if (!o.pass) ++failures;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
