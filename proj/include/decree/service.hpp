#pragma once

// REST front end of the repository.
//
//   POST /pools/{pool}        {payload, metadata} -> {id}
//   GET  /pools/{pool}/{id}   -> entry
//   GET  /pools/{pool}?q=     -> [{id, description}]
//   POST /runs                {script_id} | {script_text} -> {run_id}
//   GET  /runs/{run_id}       -> record (+ report when done)
//
// 200 on success, 400 for invalid input, 404 for missing entries or runs.

#include <httplib.h>

#include <string>

#include "decree/repository.hpp"

namespace decree {

struct HttpResponse {
  int status = 200;
  Json body;
};

namespace detail {

inline HttpResponse error_response(int status, const std::string& message, const std::vector<std::string>& issues = {}) {
  Json j = Json::object();
  j["error"] = message;
  if (!issues.empty()) j["issues"] = issues;
  return {status, std::move(j)};
}

inline std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    if (path[i] == '/') {
      ++i;
      continue;
    }
    std::size_t j = path.find('/', i);
    if (j == std::string_view::npos) j = path.size();
    parts.emplace_back(path.substr(i, j - i));
    i = j;
  }
  return parts;
}

}  // namespace detail

class Service {
 public:
  explicit Service(Repository& repo) : repo_(repo) {}

  HttpResponse handle(std::string_view method, std::string_view path, const std::string& query,
                      const std::string& body) {
    try {
      auto parts = detail::split_path(path);
      if (parts.size() >= 2 && parts.size() <= 3 && parts[0] == "pools") {
        const std::string& pool = parts[1];
        if (!is_pool_name(pool)) return detail::error_response(400, "unknown pool '" + pool + "'");
        if (parts.size() == 2 && method == "POST") {
          Json req = parse_json(body);
          if (!req.is_object() || !req.contains("payload"))
            return detail::error_response(400, "expected {payload, metadata}");
          for (const auto& [k, _] : req.items())
            if (k != "payload" && k != "metadata") return detail::error_response(400, "unknown key '" + k + "'");
          std::string id = repo_.put_entry(pool, req["payload"], req.value("metadata", Json(nullptr)));
          Json j = Json::object();
          j["id"] = id;
          return {200, std::move(j)};
        }
        if (parts.size() == 2 && method == "GET") {
          Json arr = Json::array();
          for (const auto& s : repo_.list_entries(pool, query)) {
            Json e = Json::object();
            e["id"] = s.id;
            e["description"] = s.description;
            arr.push_back(std::move(e));
          }
          return {200, std::move(arr)};
        }
        if (parts.size() == 3 && method == "GET") return {200, to_json(repo_.get_entry(pool, parts[2]))};
      }
      if (!parts.empty() && parts[0] == "runs") {
        if (parts.size() == 1 && method == "POST") {
          std::string run_id = repo_.submit_run(parse_json(body));
          Json j = Json::object();
          j["run_id"] = run_id;
          return {200, std::move(j)};
        }
        if (parts.size() == 2 && method == "GET") return {200, repo_.run_document(parts[1])};
      }
      return detail::error_response(404, "no route for " + std::string(method) + " " + std::string(path));
    } catch (const ValidationError& e) {
      return detail::error_response(400, e.what(), e.issues());
    } catch (const ParseError& e) {
      return detail::error_response(400, e.what());
    } catch (const NotFoundError& e) {
      return detail::error_response(404, e.what());
    } catch (const std::exception& e) {
      return detail::error_response(500, e.what());
    }
  }

  // Registers the routes on an httplib server.
  void mount(httplib::Server& server) {
    auto bridge = [this](const httplib::Request& req, httplib::Response& res) {
      std::string q = req.has_param("q") ? req.get_param_value("q") : "";
      HttpResponse r = handle(req.method, req.path, q, req.body);
      res.status = r.status;
      res.set_content(dump_document(r.body), "application/json");
    };
    server.Post(R"(/pools/[^/]+)", bridge);
    server.Get(R"(/pools/[^/]+)", bridge);
    server.Get(R"(/pools/[^/]+/[^/]+)", bridge);
    server.Post("/runs", bridge);
    server.Get(R"(/runs/[^/]+)", bridge);
  }

 private:
  Repository& repo_;
};

}  // namespace decree
