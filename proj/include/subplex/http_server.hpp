#pragma once

#include <memory>
#include <optional>
#include <string>

#include "subplex/service.hpp"

namespace subplex {

struct HttpOptions {
  /// Static files served under "/" (the browser UI bundle).
  std::optional<std::string> ui_dir;
};

/// REST routes over a SessionService. All bodies are JSON except the CSV
/// attribution upload.
class HttpServer {
 public:
  HttpServer(SessionService& service, HttpOptions options = {});
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Returns the bound port, or -1.
  int bind_to_any_port(const std::string& host = "127.0.0.1");
  bool bind(const std::string& host, int port);
  /// Blocks until stop() is called.
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace subplex
