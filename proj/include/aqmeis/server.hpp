#pragma once

#include <memory>
#include <string>
#include <vector>

#include "aqmeis/auth.hpp"
#include "aqmeis/error.hpp"

namespace aqmeis {
class System;
}

namespace aqmeis::api {

struct RouteInfo {
  std::string method;
  std::string path;  // `:name` marks a path parameter
  auth::AccessLevel level = auth::AccessLevel::Public;
  bool ingest_key = false;  // an ingest key passes in place of the level
  bool mutating = false;
  std::string summary;
};

/// Every endpoint the server exposes, in registration order.
const std::vector<RouteInfo>& route_table();

int http_status_for(ErrorCode code);

class Server {
 public:
  explicit Server(System& system);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void run();
  /// bind() + run() on a background thread.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace aqmeis::api
