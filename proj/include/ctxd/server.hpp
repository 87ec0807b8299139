#pragma once

#include <memory>
#include <string>

#include "ctxd/service.hpp"

namespace ctxd {

/// HTTP transport for a Service.
class HttpFrontend {
 public:
  explicit HttpFrontend(Service& service);
  ~HttpFrontend();
  HttpFrontend(const HttpFrontend&) = delete;
  HttpFrontend& operator=(const HttpFrontend&) = delete;

  /// Port 0 picks a free port. Returns the bound port; throws io_error.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// "host:port", ":port" or "port".
std::pair<std::string, int> parse_listen_address(const std::string& text);

}  // namespace ctxd
