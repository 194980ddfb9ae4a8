#pragma once

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vosd/store.hpp"
#include "vosd/txn.hpp"

namespace vosd {

// TCP daemon exposing the full store + txn API with length-prefixed JSON
// frames (see wire.hpp). One thread per connection; per-connection
// requests execute in arrival order; a store-wide in-flight limit applies
// backpressure by pausing frame reads.
class Server {
 public:
  Server(Store& store, TxnManager& txn, std::string host = "127.0.0.1",
         int port = 0, int max_in_flight = 64);
  ~Server();

  // Binds and starts the accept loop; throws BindFailure.
  void start();
  void stop();
  int port() const { return port_; }

  // Single-request dispatch, also used directly by tests.
  nlohmann::json handle(const nlohmann::json& request);

 private:
  void accept_loop();
  void serve_connection(int fd);
  nlohmann::json dispatch(const std::string& op,
                          const nlohmann::json& params);

  Store& store_;
  TxnManager& txn_;
  std::string host_;
  int port_;
  int max_in_flight_;
  std::mutex gate_mu_;
  std::condition_variable gate_cv_;
  int in_flight_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex conn_mu_;
  std::vector<std::thread> conn_threads_;
  std::set<int> conn_fds_;
};

}  // namespace vosd
