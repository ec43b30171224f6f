#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>

#include "qta/gateway.hpp"

namespace httplib {
class Server;
}

namespace qta {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8765;  // 0 picks a free port
  std::filesystem::path static_dir;  // optional UI assets served at /
  std::shared_ptr<Transport> transport;  // for stage re-runs; null uses the project default
};

// JSON API over a project directory for the review UI. Reads go straight to
// the artifacts; writes are serialised and go through Project.
class ReviewServer {
 public:
  ReviewServer(std::filesystem::path project_dir, ServerOptions options);
  ~ReviewServer();

  // Binds the socket and returns the port. Throws Error when the port is taken.
  int bind();
  // Blocks until stop() is called.
  void listen();
  void stop();

 private:
  void install_routes();

  std::filesystem::path dir_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::mutex write_mu_;
};

}  // namespace qta
