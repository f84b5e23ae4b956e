#pragma once

#include <string>

#include <json.hpp>

#include "actowl/detail/http.hpp"
#include "actowl/service/session_manager.hpp"

namespace actowl::service {

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, const ServiceError& e) { send_json(res, e.status(), e.body()); }

inline nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ServiceError(400, "invalid_json", "request body is not valid JSON", {{"error", e.what()}});
  }
}

/// Every handler funnels its failures into {code, message, detail}.
template <class F>
auto guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      send_error(res, ServiceError(500, "internal_error", e.what()));
    }
  };
}

}  // namespace detail

/// Routes:
///   GET  /health
///   GET  /scenarios
///   POST /sessions                      {scenario, config}
///   GET  /sessions/{id}/state
///   POST /sessions/{id}/ask
///   POST /sessions/{id}/answer          {text, responding_user}
///   GET  /sessions/{id}/metrics.csv
inline void mount_routes(httplib::Server& server, SessionManager& manager) {
  using detail::guarded;
  using detail::send_json;

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  });

  server.Get("/scenarios", guarded([&manager](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200, {{"scenarios", manager.scenario_names()}});
             }));

  server.Post("/sessions", guarded([&manager](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 201, manager.create_session(detail::parse_body(req)));
              }));

  server.Get(R"(/sessions/([^/]+)/state)", guarded([&manager](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, manager.get_state(req.matches[1])->state);
             }));

  server.Post(R"(/sessions/([^/]+)/ask)", guarded([&manager](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, manager.ask_next(req.matches[1]));
              }));

  server.Post(R"(/sessions/([^/]+)/answer)",
              guarded([&manager](const httplib::Request& req, httplib::Response& res) {
                const auto body = detail::parse_body(req);
                if (!body.is_object() || !body.contains("text") || !body["text"].is_string() ||
                    !body.contains("responding_user") || !body["responding_user"].is_string())
                  throw ServiceError(400, "invalid_request",
                                     "body must be {\"text\": string, \"responding_user\": string}");
                send_json(res, 200,
                          manager.submit_answer(req.matches[1], body["text"].get<std::string>(),
                                                body["responding_user"].get<std::string>()));
              }));

  server.Get(R"(/sessions/([^/]+)/metrics\.csv)",
             guarded([&manager](const httplib::Request& req, httplib::Response& res) {
               res.status = 200;
               res.set_content(manager.get_state(req.matches[1])->metrics_csv, "text/csv; charset=utf-8");
             }));
}

}  // namespace actowl::service
