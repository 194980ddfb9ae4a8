#pragma once

#include <json.hpp>

#include "vosd/types.hpp"

namespace vosd::wire {

// Frame layout, bit-exact:
//   u32 big-endian payload length N
//   N payload bytes: one leading codec byte (0x01 = UTF-8 JSON; other
//   values reserved for future binary codecs), then the JSON document.
//
// Requests:  {"id": u64, "op": string, "params": object}
// Responses: {"id": u64, "ok": object} or
//            {"id": u64, "err": {"code": string, "detail": string}}
// Binary payloads travel base64-encoded inside JSON.
inline constexpr uint8_t kCodecJson = 0x01;

std::string base64_encode(std::string_view data);
Bytes base64_decode(std::string_view text);

// Blocking frame I/O on a connected socket. read_frame returns nullopt on
// clean EOF and throws ConnectionClosed/Timeout on broken reads.
void write_frame(int fd, const nlohmann::json& doc);
std::optional<nlohmann::json> read_frame(int fd);

}  // namespace vosd::wire
