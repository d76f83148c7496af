#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "fpclean/engine.hpp"
#include "fpclean/oracle.hpp"

namespace httplib {
class Server;
}

namespace fpclean::cli {

/// HTTP front of a running cleanup: read-only views of the latest engine
/// snapshot plus the human queue. Handlers never touch the engine itself;
/// they read the snapshot the engine published between mutations.
class LabelServer {
 public:
  /// `queue` may be null when the run does not use the human oracle.
  LabelServer(DatasetPtr dataset, HumanQueue* queue);
  ~LabelServer();

  LabelServer(const LabelServer&) = delete;
  LabelServer& operator=(const LabelServer&) = delete;

  void publish(std::shared_ptr<const EngineSnapshot> snapshot);
  /// Binds and serves on a background thread; port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  void stop();

  // Response bodies, exposed for tests that skip the socket.
  std::string status_body() const;
  std::string queue_body() const;
  std::string reports_body() const;
  /// nullopt when no record has that id.
  std::optional<std::string> component_body(const std::string& record_id) const;

 private:
  std::shared_ptr<const EngineSnapshot> snapshot() const;

  DatasetPtr dataset_;
  HumanQueue* queue_;
  mutable std::mutex mutex_;
  std::shared_ptr<const EngineSnapshot> snapshot_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace fpclean::cli
