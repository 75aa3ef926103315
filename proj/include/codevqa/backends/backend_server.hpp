#pragma once

#include <memory>
#include <string>
#include <thread>

#include "codevqa/backends/backend.hpp"

namespace httplib {
class Server;
}

namespace codevqa::backends {

// Serves any Backend over the wire protocol. Used by the tests, by the
// `serve-mock` command and to record the golden protocol fixtures.
class BackendServer {
 public:
  explicit BackendServer(std::shared_ptr<Backend> backend);
  ~BackendServer();
  BackendServer(const BackendServer&) = delete;
  BackendServer& operator=(const BackendServer&) = delete;

  // Binds (port 0 picks a free one), starts a listener thread and returns the
  // bound port once the server accepts connections.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks the caller until stop() is called from elsewhere.
  void run(const std::string& host, int port);
  void stop();

  int port() const { return port_; }

 private:
  void install_routes();

  std::shared_ptr<Backend> backend_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace codevqa::backends
