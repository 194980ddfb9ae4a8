#pragma once

#include <map>
#include <mutex>
#include <utility>

#include "vosd/store_base.hpp"

namespace vosd {

// Naive reference backend: one full in-memory byte copy per object version.
// Deliberately simple so it can serve as the correctness oracle in tests.
class OracleStore : public StoreBase {
 public:
  explicit OracleStore(uint64_t chunk_size = kDefaultChunkSize)
      : StoreBase(chunk_size) {}

  std::string backend_name() const override { return "oracle"; }

 protected:
  void payload_create(const std::string& cid, const std::string& oid,
                      uint64_t vid, std::string_view data) override;
  uint64_t payload_clone(const std::string& cid, const std::string& oid,
                         uint64_t src_vid, uint64_t dst_vid,
                         uint64_t length) override;
  Bytes payload_read(const std::string& cid, const std::string& oid,
                     uint64_t vid, uint64_t offset,
                     uint64_t length) const override;
  void payload_write(const std::string& cid, const std::string& oid,
                     uint64_t vid, uint64_t offset, std::string_view data,
                     uint64_t old_length, uint64_t new_length) override;
  void payload_set(const std::string& cid, const std::string& oid,
                   uint64_t vid, std::string_view data,
                   uint64_t old_length) override;
  FreedStats payload_delete(const std::string& cid, const std::string& oid,
                            uint64_t vid, uint64_t length) override;

 private:
  using Key = std::pair<std::string, std::pair<std::string, uint64_t>>;
  static Key key(const std::string& cid, const std::string& oid,
                 uint64_t vid) {
    return {cid, {oid, vid}};
  }

  mutable std::mutex mu_;
  std::map<Key, Bytes> payloads_;
};

}  // namespace vosd
