#pragma once

// HTTP transport for the request handler. POST /v1/requests takes an NDJSON
// body and answers with one response line per request line, in order.

#include <corver/service.hpp>

#include <httplib.h>

#include <sstream>
#include <string>

namespace corver {

class HttpServer {
 public:
  explicit HttpServer(const RequestHandler& handler) : handler_(&handler) {
    server_.Post("/v1/requests", [this](const httplib::Request& req, httplib::Response& res) {
      std::istringstream in(req.body);
      std::string line, out;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        out += handler_->handle(line);
        out += '\n';
      }
      res.set_content(out, "application/x-ndjson");
    });
    server_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(handler_->health().dump() + "\n", "application/json");
    });
  }

  /// Binds and serves until stop(). Returns false when the bind fails.
  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  int bind_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }

  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }

 private:
  const RequestHandler* handler_;
  httplib::Server server_;
};

}  // namespace corver
