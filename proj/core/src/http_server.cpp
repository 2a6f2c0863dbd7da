#include "compgrid/http_server.hpp"

#include <httplib.h>

#include "compgrid/error.hpp"

namespace compgrid {

struct HttpServer::Impl {
  SessionService& service;
  HttpOptions options;
  httplib::Server server;
  int port = -1;

  Impl(SessionService& s, HttpOptions o) : service(s), options(std::move(o)) {}

  static void send(httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.text.empty() ? r.body.dump() : r.text, r.content_type);
  }

  void routes(const std::string& prefix) {
    server.Post(prefix + "/session", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, service.create_session(req.body));
    });
    server.Get(prefix + R"(/session/([^/]+)/board)", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, service.get_board(req.matches[1]));
    });
    server.Post(prefix + R"(/session/([^/]+)/reveal)", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, service.reveal(req.matches[1], req.body));
    });
    server.Get(prefix + "/export", [this](const httplib::Request& req, httplib::Response& res) {
      std::string token = req.get_param_value("token");
      const std::string auth = req.get_header_value("Authorization");
      if (auth.rfind("Bearer ", 0) == 0) token = auth.substr(7);
      const bool all = req.get_param_value("include_incomplete") == "true";
      send(res, service.export_sessions(token, all));
    });
    server.Get(prefix + "/health", [this](const httplib::Request&, httplib::Response& res) {
      send(res, service.health());
    });
  }
};

HttpServer::HttpServer(SessionService& service, HttpOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  impl_->routes("/api/v1");
  impl_->routes("/api");
  if (!impl_->options.static_dir.empty()) {
    if (!impl_->server.set_mount_point("/", impl_->options.static_dir.string())) {
      throw Error("static directory not found: " + impl_->options.static_dir.string());
    }
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  auto& s = impl_->server;
  impl_->port = impl_->options.port == 0 ? s.bind_to_any_port(impl_->options.host)
                                         : (s.bind_to_port(impl_->options.host, impl_->options.port)
                                                ? impl_->options.port
                                                : -1);
  if (impl_->port < 0) throw Error("cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  return impl_->port;
}

void HttpServer::run() {
  if (impl_->port < 0) throw Error("HttpServer::run called before bind");
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace compgrid
