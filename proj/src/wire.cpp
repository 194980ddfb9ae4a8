#include "vosd/wire.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>

namespace vosd::wire {

namespace {

constexpr char kB64[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

void read_exact(int fd, char* buf, size_t n) {
  size_t done = 0;
  while (done < n) {
    ssize_t r = ::recv(fd, buf + done, n - done, 0);
    if (r == 0) fail(Err::ConnectionClosed, "peer closed connection");
    if (r < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK)
        fail(Err::Timeout, "socket read timed out");
      fail(Err::ConnectionClosed,
           std::string("recv: ") + std::strerror(errno));
    }
    done += static_cast<size_t>(r);
  }
}

void write_exact(int fd, const char* buf, size_t n) {
  size_t done = 0;
  while (done < n) {
    ssize_t r = ::send(fd, buf + done, n - done, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      fail(Err::ConnectionClosed,
           std::string("send: ") + std::strerror(errno));
    }
    done += static_cast<size_t>(r);
  }
}

}  // namespace

std::string base64_encode(std::string_view data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  size_t i = 0;
  while (i + 3 <= data.size()) {
    uint32_t v = (static_cast<uint8_t>(data[i]) << 16) |
                 (static_cast<uint8_t>(data[i + 1]) << 8) |
                 static_cast<uint8_t>(data[i + 2]);
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(kB64[(v >> 6) & 63]);
    out.push_back(kB64[v & 63]);
    i += 3;
  }
  size_t rem = data.size() - i;
  if (rem == 1) {
    uint32_t v = static_cast<uint8_t>(data[i]) << 16;
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.append("==");
  } else if (rem == 2) {
    uint32_t v = (static_cast<uint8_t>(data[i]) << 16) |
                 (static_cast<uint8_t>(data[i + 1]) << 8);
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(kB64[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

Bytes base64_decode(std::string_view text) {
  static const auto table = [] {
    std::array<int8_t, 256> t;
    t.fill(-1);
    for (int i = 0; i < 64; ++i) t[static_cast<uint8_t>(kB64[i])] = i;
    return t;
  }();
  Bytes out;
  uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=') break;
    int8_t v = table[static_cast<uint8_t>(c)];
    if (v < 0) fail(Err::BadRequest, "invalid base64 payload");
    acc = (acc << 6) | static_cast<uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((acc >> bits) & 0xff));
    }
  }
  return out;
}

void write_frame(int fd, const nlohmann::json& doc) {
  std::string body = doc.dump();
  uint32_t n = static_cast<uint32_t>(body.size() + 1);
  char hdr[5];
  hdr[0] = static_cast<char>(n >> 24);
  hdr[1] = static_cast<char>(n >> 16);
  hdr[2] = static_cast<char>(n >> 8);
  hdr[3] = static_cast<char>(n);
  hdr[4] = static_cast<char>(kCodecJson);
  write_exact(fd, hdr, 5);
  write_exact(fd, body.data(), body.size());
}

std::optional<nlohmann::json> read_frame(int fd) {
  char hdr[4];
  // Clean EOF before the first length byte means the peer is done.
  ssize_t r = ::recv(fd, hdr, 1, 0);
  if (r == 0) return std::nullopt;
  if (r < 0) {
    if (errno == EAGAIN || errno == EWOULDBLOCK)
      fail(Err::Timeout, "socket read timed out");
    fail(Err::ConnectionClosed, std::string("recv: ") + std::strerror(errno));
  }
  read_exact(fd, hdr + 1, 3);
  uint32_t n = (static_cast<uint32_t>(static_cast<uint8_t>(hdr[0])) << 24) |
               (static_cast<uint32_t>(static_cast<uint8_t>(hdr[1])) << 16) |
               (static_cast<uint32_t>(static_cast<uint8_t>(hdr[2])) << 8) |
               static_cast<uint32_t>(static_cast<uint8_t>(hdr[3]));
  if (n == 0) fail(Err::BadRequest, "empty frame");
  std::string payload(n, '\0');
  read_exact(fd, payload.data(), n);
  if (static_cast<uint8_t>(payload[0]) != kCodecJson)
    fail(Err::BadRequest, "unsupported frame codec");
  nlohmann::json doc =
      nlohmann::json::parse(payload.begin() + 1, payload.end(), nullptr,
                            /*allow_exceptions=*/false);
  if (doc.is_discarded()) fail(Err::BadRequest, "malformed JSON payload");
  return doc;
}

}  // namespace vosd::wire
