#include "ctxd/server.hpp"

#include "httplib.h"

#include <spdlog/spdlog.h>

#include "ctxd/error.hpp"

namespace ctxd {

struct HttpFrontend::Impl {
  Service& service;
  httplib::Server server;

  explicit Impl(Service& s) : service(s) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      ApiRequest api{req.method, req.path, req.body, {}};
      for (const auto& [k, v] : req.params) api.query[k] = v;
      auto out = service.handle(api);
      res.status = out.status;
      res.set_content(out.body, out.content_type);
      spdlog::debug("{} {} -> {}", req.method, req.path, out.status);
    };
    server.Get(".*", handler);
    server.Post(".*", handler);
    server.Patch(".*", handler);
    server.Put(".*", handler);
    server.Delete(".*", handler);
  }
};

HttpFrontend::HttpFrontend(Service& service) : impl_(std::make_unique<Impl>(service)) {}
HttpFrontend::~HttpFrontend() { stop(); }

int HttpFrontend::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) fail(ErrorCode::io_error, "cannot listen on " + host + ":" + std::to_string(port));
  return bound;
}

void HttpFrontend::run() { impl_->server.listen_after_bind(); }

void HttpFrontend::stop() {
  if (impl_) impl_->server.stop();
}

std::pair<std::string, int> parse_listen_address(const std::string& text) {
  std::string host = "127.0.0.1";
  std::string port = text;
  if (auto colon = text.rfind(':'); colon != std::string::npos) {
    if (colon > 0) host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range("port");
    return {host, p};
  } catch (const std::logic_error&) {
    fail(ErrorCode::invalid_argument, "bad listen address '" + text + "'");
  }
}

}  // namespace ctxd
