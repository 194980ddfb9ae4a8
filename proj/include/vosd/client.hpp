#pragma once

#include <string>

#include <json.hpp>

#include "vosd/types.hpp"

namespace vosd {

// Blocking request/response client for the Server wire protocol. Typed
// errors from the daemon are rethrown as VosdError with the matching code.
class Client {
 public:
  Client(const std::string& host, int port, int timeout_ms = 5000);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  // Returns the "ok" object of the response; throws on err responses,
  // Timeout, or ConnectionClosed.
  nlohmann::json call(const std::string& op,
                      const nlohmann::json& params = nlohmann::json::object());

  // Convenience for ops that move payload bytes.
  Bytes call_data(const std::string& op, const nlohmann::json& params);

 private:
  int fd_ = -1;
  uint64_t next_id_ = 1;
};

// Parses "host:port" (or just ":port" / "port"), defaulting the host to
// 127.0.0.1. Used for --addr flags and the VOSD_ADDR environment variable.
std::pair<std::string, int> parse_addr(const std::string& addr);

}  // namespace vosd
