#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "compgrid/service.hpp"

namespace compgrid {

struct HttpOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  ///< 0 picks a free port.
  /// Optional directory of static assets served at "/".
  std::filesystem::path static_dir;
};

/// HTTP binding of SessionService. Every endpoint is available under both
/// /api/v1 and /api:
///   POST /session, GET /session/{id}/board, POST /session/{id}/reveal,
///   GET /export (admin token via "Authorization: Bearer" or ?token=), GET /health.
class HttpServer {
 public:
  HttpServer(SessionService& service, HttpOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the socket; returns the bound port. Throws Error on failure.
  int bind();
  /// Serves until stop() is called. bind() must have succeeded.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace compgrid
