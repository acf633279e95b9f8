#ifndef FLOODEVAL_TRIAGE_HTTP_HPP
#define FLOODEVAL_TRIAGE_HTTP_HPP

// Binds a TriageService to a cpp-httplib server.

#include <map>
#include <string>

#include "httplib.h"

#include "floodeval/triage.hpp"

namespace floodeval {

inline void install_triage_routes(httplib::Server& server, TriageService& service,
                                  const std::string& static_ui_dir = "") {
  auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);  // first value wins
    const ApiResponse r = service.handle(req.method, req.path, query, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type.c_str());
  };
  server.Get(R"(/api/.*)", forward);
  server.Post(R"(/api/.*)", forward);
  server.Get(R"(/assets/.*)", forward);
  if (!static_ui_dir.empty()) server.set_mount_point("/", static_ui_dir);
}

/// Blocks serving the API on host:port until the server is stopped.
inline bool serve_triage(TriageService& service, const std::string& host, int port,
                         const std::string& static_ui_dir = "") {
  httplib::Server server;
  install_triage_routes(server, service, static_ui_dir);
  return server.listen(host, port);
}

}  // namespace floodeval

#endif  // FLOODEVAL_TRIAGE_HTTP_HPP
