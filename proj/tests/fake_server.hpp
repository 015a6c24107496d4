#pragma once

// In-process HTTP server for protocol tests: each test installs handlers on
// a loopback port picked by the OS.

#include <atomic>
#include <string>
#include <thread>

#include "httplib.h"

namespace wrinkle::testing {

class FakeServer {
 public:
  FakeServer() = default;
  FakeServer(const FakeServer&) = delete;
  FakeServer& operator=(const FakeServer&) = delete;
  ~FakeServer() { stop(); }

  httplib::Server& http() { return server_; }

  /// Binds and starts serving; returns the base URL.
  std::string start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return "http://127.0.0.1:" + std::to_string(port_);
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::atomic<int> hits{0};

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace wrinkle::testing
