#include "vosd/client.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "vosd/wire.hpp"

namespace vosd {

using nlohmann::json;

Client::Client(const std::string& host, int port, int timeout_ms) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) fail(Err::ConnectionClosed, "socket() failed");
  timeval tv{};
  tv.tv_sec = timeout_ms / 1000;
  tv.tv_usec = (timeout_ms % 1000) * 1000;
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    fd_ = -1;
    fail(Err::ConnectionClosed, "bad address: " + host);
  }
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd_);
    fd_ = -1;
    fail(Err::ConnectionClosed,
         "connect " + host + ":" + std::to_string(port) + ": " +
             std::strerror(errno));
  }
}

Client::~Client() {
  if (fd_ >= 0) ::close(fd_);
}

json Client::call(const std::string& op, const json& params) {
  uint64_t id = next_id_++;
  wire::write_frame(fd_, json{{"id", id}, {"op", op}, {"params", params}});
  auto response = wire::read_frame(fd_);
  if (!response) fail(Err::ConnectionClosed, "server closed connection");
  if (response->at("id").get<uint64_t>() != id)
    fail(Err::BadRequest, "response id does not match request id");
  if (response->contains("err")) {
    const auto& err = response->at("err");
    std::string code = err.at("code").get<std::string>();
    std::string detail = err.value("detail", "");
    auto mapped = err_code_from_name(code);
    fail(mapped.value_or(Err::BadRequest), detail.empty() ? code : detail);
  }
  return response->at("ok");
}

Bytes Client::call_data(const std::string& op, const json& params) {
  return wire::base64_decode(call(op, params).at("data").get<std::string>());
}

std::pair<std::string, int> parse_addr(const std::string& addr) {
  std::string host = "127.0.0.1";
  std::string port_text = addr;
  auto colon = addr.rfind(':');
  if (colon != std::string::npos) {
    if (colon > 0) host = addr.substr(0, colon);
    port_text = addr.substr(colon + 1);
  }
  int port = 0;
  try {
    port = std::stoi(port_text);
  } catch (const std::exception&) {
    fail(Err::InvalidArgument, "bad address: " + addr);
  }
  return {host, port};
}

}  // namespace vosd
