#pragma once

#include <functional>
#include <string>
#include <thread>

#include <httplib.h>

namespace testing_support {

/// An httplib server on an ephemeral loopback port, stopped on destruction.
class LocalServer {
public:
  explicit LocalServer(const std::function<void(httplib::Server&)>& routes) {
    routes(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  LocalServer(const LocalServer&) = delete;
  LocalServer& operator=(const LocalServer&) = delete;

  [[nodiscard]] std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace testing_support
