#pragma once

// HTTP+JSON binding of VerificationService.
//
//   POST   /api/enroll        {user_id, sample_id, events:[...]}
//   POST   /api/verify        same body -> {decision, score}
//   GET    /api/users
//   DELETE /api/users/{id}
//   GET    /api/health
//
// Errors are {error_code, message, details?}.

#include <filesystem>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "keydyn/error.hpp"
#include "keydyn/service/serialization.hpp"
#include "keydyn/service/service.hpp"

namespace keydyn::service {

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadRequest:
    case ErrorCode::InvalidSample: return 400;
    case ErrorCode::UnknownUser: return 404;
    case ErrorCode::NotTrained: return 409;
    case ErrorCode::TrainingFailed: return 422;
    default: return 500;
  }
}

namespace detail {

inline void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, const Error& e) {
  json body{{"error_code", to_string(e.code())}, {"message", e.message()}};
  if (!e.details().empty()) body["details"] = e.details();
  send_json(res, http_status(e.code()), body);
}

template <typename Handler>
auto guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const json::exception& e) {
      send_error(res, Error(ErrorCode::BadRequest, e.what()));
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error_code", "Internal"}, {"message", e.what()}});
    }
  };
}

inline KeystrokeSample parse_body(const httplib::Request& req) {
  const auto body = json::parse(req.body, nullptr, false);
  if (body.is_discarded()) throw Error(ErrorCode::BadRequest, "body is not valid JSON");
  return sample_from_json(body);
}

}  // namespace detail

inline void install_routes(httplib::Server& server, VerificationService& service,
                           const std::filesystem::path& static_dir = {}) {
  server.Post("/api/enroll", detail::guarded([&service](const httplib::Request& req, httplib::Response& res) {
                auto sample = detail::parse_body(req);
                const auto user = sample.user_id;
                const auto st = service.enroll(user, std::move(sample));
                detail::send_json(res, 200,
                                  {{"user_id", st.user_id},
                                   {"samples", st.samples},
                                   {"min_samples", st.min_samples},
                                   {"remaining", st.samples >= st.min_samples ? 0 : st.min_samples - st.samples},
                                   {"trained", st.trained}});
              }));

  server.Post("/api/verify", detail::guarded([&service](const httplib::Request& req, httplib::Response& res) {
                auto sample = detail::parse_body(req);
                const auto user = sample.user_id;
                const auto r = service.verify(user, std::move(sample));
                detail::send_json(res, 200, {{"decision", to_string(r.decision)}, {"score", r.score}});
              }));

  server.Get("/api/users", detail::guarded([&service](const httplib::Request&, httplib::Response& res) {
               json users = json::array();
               for (const auto& u : service.list_users()) {
                 users.push_back({{"user_id", u.user_id}, {"trained", u.trained}, {"samples", u.samples}});
               }
               detail::send_json(res, 200, {{"users", std::move(users)}});
             }));

  server.Delete(R"(/api/users/([^/]+))",
                detail::guarded([&service](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  service.reset(id);
                  detail::send_json(res, 200, {{"user_id", id}, {"removed", true}});
                }));

  server.Get("/api/health", detail::guarded([&service](const httplib::Request&, httplib::Response& res) {
               detail::send_json(res, 200,
                                 {{"status", "ok"},
                                  {"classifier", to_string(service.config().classifier)},
                                  {"layout", service.config().layout},
                                  {"min_samples", service.config().min_samples}});
             }));

  if (!static_dir.empty() && std::filesystem::is_directory(static_dir)) {
    server.set_mount_point("/", static_dir.string());
  }
}

}  // namespace keydyn::service
