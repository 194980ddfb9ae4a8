#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "vosd/types.hpp"

namespace vosd {

// Minimal log-structured ordered key/value map.
//
// On-disk format (all integers big-endian):
//   header   8 bytes  magic "VOSDKV01"
//   record   u8 type | u32 key_len | key | u32 val_len | value | u32 crc
//     type 1 = put, 2 = delete (val_len 0), 3 = batch commit (key_len 0,
//     val_len 0)
//   crc      CRC-32/ISO-HDLC over type..value
//
// A batch of put/delete records becomes visible only once its commit
// record is durable. Recovery replays committed batches in order and
// truncates the log after the last complete commit; a torn tail is
// discarded, never fatal.
class LogKv {
 public:
  using Entry = std::pair<Bytes, std::optional<Bytes>>;  // nullopt = delete

  explicit LogKv(const std::filesystem::path& path);
  ~LogKv();
  LogKv(const LogKv&) = delete;
  LogKv& operator=(const LogKv&) = delete;

  void put_batch(const std::vector<Entry>& entries);
  std::optional<Bytes> get(const Bytes& key) const;
  // Keys with the given prefix, in lexicographic order.
  std::vector<std::pair<Bytes, Bytes>> scan(const Bytes& prefix) const;
  CompactReport compact();

  uint64_t log_size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  struct ValueLoc {
    uint64_t offset = 0;  // file offset of the value bytes
    uint32_t length = 0;
  };

  void open_and_recover();
  Bytes read_value(const ValueLoc& loc) const;

  std::filesystem::path path_;
  mutable std::mutex mu_;
  int fd_ = -1;
  uint64_t durable_end_ = 0;   // offset just past the last commit record
  uint64_t record_count_ = 0;  // put/delete records in the log
  std::map<Bytes, ValueLoc> index_;
};

}  // namespace vosd
