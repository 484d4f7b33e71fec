#pragma once

// HTTP front end over pipeline::Engine. `Service::handle` is a pure
// request -> response function so it can be exercised without sockets;
// `serve` binds it to a listening socket.
//
// Errors use one body shape:
//   {"error": {"code": "...", "message": "...", "path": "...", "issues": [{"path", "message"}]}}
// with 400 for invalid input, 401 for a missing token, 404 for missing
// resources, 409 for frozen weights and 500 otherwise.

#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "wuiq/error.hpp"
#include "wuiq/pipeline.hpp"

namespace wuiq::service {

using nlohmann::json;

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::map<std::string, std::string> headers;  // lower-case names
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";

  json json_body() const { return json::parse(body); }
};

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::weights_frozen: return 409;
    case ErrorCode::unauthorized: return 401;
    case ErrorCode::store:
    case ErrorCode::internal: return 500;
    default: return 400;
  }
}

inline json error_body(const Error& e) {
  json issues = json::array();
  for (const auto& i : e.issues()) issues.push_back({{"path", i.path}, {"message", i.message}});
  json err{{"code", to_string(e.code())}, {"message", e.what()}, {"issues", issues}};
  err["path"] = e.path().empty() ? json(nullptr) : json(e.path());
  return json{{"error", err}};
}

inline constexpr const char* token_header = "x-wuiq-token";
inline constexpr const char* idempotency_header = "idempotency-key";

class Service {
 public:
  explicit Service(pipeline::Engine engine, std::string token = {})
      : engine_(std::move(engine)), token_(std::move(token)) {}

  HttpResponse handle(const HttpRequest& req) {
    try {
      if (!token_.empty()) {
        auto it = req.headers.find(token_header);
        if (it == req.headers.end() || it->second != token_)
          throw Error(ErrorCode::unauthorized, "missing or wrong X-WUIQ-Token header");
      }
      if (req.method == "GET") {
        std::shared_lock lock(mu_);
        return get(req);
      }
      if (req.method == "POST") {
        std::unique_lock lock(mu_);
        std::string key;
        if (auto it = req.headers.find(idempotency_header); it != req.headers.end()) {
          key = req.path + "\n" + it->second;
          if (auto hit = replay_.find(key); hit != replay_.end()) return hit->second;
        }
        auto res = post(req);
        if (!key.empty() && res.status < 500) replay_[key] = res;
        return res;
      }
      throw Error(ErrorCode::not_found, "method " + req.method + " is not supported");
    } catch (const Error& e) {
      return {http_status(e.code()), error_body(e).dump()};
    } catch (const std::exception& e) {
      return {500, error_body(Error(ErrorCode::internal, e.what())).dump()};
    }
  }

  pipeline::Engine& engine() noexcept { return engine_; }

 private:
  static HttpResponse ok(const json& j, int status = 200) { return {status, j.dump()}; }

  static json parse_body(const HttpRequest& req) {
    if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    auto j = json::parse(req.body, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::parse, "request body is not valid JSON", "body");
    return j;
  }

  [[noreturn]] static void missing(const HttpRequest& req) {
    throw Error(ErrorCode::not_found, "no endpoint " + req.method + " " + req.path);
  }

  template <class T>
  static std::optional<T> field(const json& body, const char* key) {
    if (!body.is_object() || !body.contains(key) || body[key].is_null()) return std::nullopt;
    try {
      return body[key].get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::validation, std::string("field '") + key + "' has the wrong type", key);
    }
  }

  HttpResponse get(const HttpRequest& req) {
    const auto& p = req.path;
    if (p == "/api/weights") {
      auto w = engine_.weights();
      if (!w) throw Error(ErrorCode::not_found, "baseline weights have not been computed");
      return ok(*w);
    }
    if (p == "/api/iterations") return ok(engine_.history_json());
    if (p == "/api/segments/latest") {
      auto s = engine_.latest_segments();
      if (!s) throw Error(ErrorCode::not_found, "no segmentation has been run");
      return ok(*s);
    }
    if (p == "/api/segments/latest/explanations") {
      auto it = req.query.find("cluster");
      if (it == req.query.end()) throw Error(ErrorCode::validation, "query parameter 'cluster' is required", "cluster");
      std::size_t cluster = 0;
      try {
        std::size_t used = 0;
        const auto v = std::stoll(it->second, &used);
        if (used != it->second.size() || v < 0) throw std::invalid_argument("cluster");
        cluster = static_cast<std::size_t>(v);
      } catch (const std::exception&) {
        throw Error(ErrorCode::validation, "cluster must be a non-negative integer", "cluster");
      }
      auto mode = explainability::MembershipMode::indicator;
      if (auto m = req.query.find("mode"); m != req.query.end()) mode = explainability::parse_mode(m->second);
      return ok(engine_.explain(cluster, mode, false));
    }
    if (p == "/api/report") return ok(engine_.report());
    missing(req);
  }

  HttpResponse post(const HttpRequest& req) {
    const auto& p = req.path;
    const json body = parse_body(req);
    if (p == "/api/experts/preview") return ok(engine_.preview(body));
    if (p == "/api/experts") return ok(engine_.add_expert(body), 201);
    if (p == "/api/surveys") return ok(engine_.add_survey(body), 201);
    if (p == "/api/lighthouse") return ok(engine_.ingest_lighthouse(req.body), 201);
    if (p == "/api/weights") {
      const bool override_frozen = field<bool>(body, "override").value_or(false);
      return ok(engine_.compute_weights(override_frozen, field<std::vector<double>>(body, "weights")), 201);
    }
    if (p == "/api/iterations") {
      pipeline::EvaluateOptions opt;
      opt.performance = field<double>(body, "performance");
      opt.accessibility = field<double>(body, "accessibility");
      opt.usability = field<double>(body, "usability");
      const auto opened = field<double>(body, "link_opened_at");
      const auto downloaded = field<double>(body, "content_downloaded_at");
      if (opened.has_value() != downloaded.has_value())
        throw Error(ErrorCode::validation, "timing needs both link_opened_at and content_downloaded_at",
                    opened ? "content_downloaded_at" : "link_opened_at");
      if (opened) opt.timing = metrics::TimingRecord{*opened, *downloaded};
      return ok(engine_.evaluate(opt), 201);
    }
    if (p == "/api/segments") {
      pipeline::SegmentOptions opt;
      if (body.is_object() && body.contains("k") && !(body["k"].is_string() && body["k"] == "auto")) {
        const auto k = field<long long>(body, "k");
        if (!k || *k < 1) throw Error(ErrorCode::validation, "k must be a positive integer or \"auto\"", "k");
        opt.k = static_cast<std::size_t>(*k);
      }
      opt.seed = field<std::uint64_t>(body, "seed");
      opt.features = field<std::string>(body, "features").value_or("default");
      opt.raw = field<bool>(body, "raw").value_or(false);
      return ok(engine_.segment(opt), 201);
    }
    missing(req);
  }

  pipeline::Engine engine_;
  std::string token_;
  std::shared_mutex mu_;
  std::map<std::string, HttpResponse> replay_;
};

inline HttpRequest from_httplib(const httplib::Request& r) {
  HttpRequest req{r.method, r.path, {}, r.body, {}};
  for (const auto& [k, v] : r.params) req.query[k] = v;
  for (const auto& [k, v] : r.headers) {
    std::string name = k;
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    req.headers[name] = v;
  }
  return req;
}

// Splits "host:port"; a bare port binds 127.0.0.1.
inline std::pair<std::string, int> parse_listen(const std::string& addr) {
  const auto colon = addr.rfind(':');
  const std::string host = colon == std::string::npos ? "127.0.0.1" : addr.substr(0, colon);
  const std::string port = colon == std::string::npos ? addr : addr.substr(colon + 1);
  try {
    std::size_t used = 0;
    const int n = std::stoi(port, &used);
    if (used != port.size() || n < 0 || n > 65535) throw std::out_of_range("port");
    return {host.empty() ? "127.0.0.1" : host, n};
  } catch (const std::exception&) {
    throw Error(ErrorCode::configuration, "listen address must be host:port", "listen");
  }
}

inline void mount(httplib::Server& server, Service& service) {
  auto handler = [&service](const httplib::Request& r, httplib::Response& res) {
    const auto out = service.handle(from_httplib(r));
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  server.Get(R"(/api/.*)", handler);
  server.Post(R"(/api/.*)", handler);
}

// Blocks until the server stops. `on_ready` receives the bound port.
inline void serve(Service& service, const std::string& listen, const std::function<void(int)>& on_ready = {}) {
  const auto [host, port] = parse_listen(listen);
  httplib::Server server;
  mount(server, service);
  int bound = port;
  if (port == 0) bound = server.bind_to_any_port(host);
  else if (!server.bind_to_port(host, port))
    throw Error(ErrorCode::configuration, "cannot listen on " + listen, "listen");
  if (bound < 0) throw Error(ErrorCode::configuration, "cannot listen on " + listen, "listen");
  if (on_ready) on_ready(bound);
  server.listen_after_bind();
}

}  // namespace wuiq::service
