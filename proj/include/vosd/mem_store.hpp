#pragma once

#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "vosd/store_base.hpp"

namespace vosd {

// In-memory backend with copy-on-write chunk sharing. Every object version
// is an ordered list of chunk-id slots into a refcounted chunk pool;
// cloning copies slot lists and bumps refcounts, never payload bytes.
class MemStore : public StoreBase {
 public:
  explicit MemStore(uint64_t chunk_size = kDefaultChunkSize)
      : StoreBase(chunk_size) {}

  std::string backend_name() const override { return "mem"; }

  // Test hook: refcount of every live chunk, keyed by chunk id.
  std::map<uint64_t, uint64_t> chunk_refcounts() const;
  // Test hook: slot list of one version.
  std::vector<uint64_t> chunk_slots(const std::string& cid,
                                    const std::string& oid,
                                    uint64_t vid) const;

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
  std::vector<ByteRange> payload_diff(const std::string& cid,
                                      const std::string& oid,
                                      const VersionMeta& a,
                                      const VersionMeta& b) const override;

 private:
  struct Chunk {
    Bytes data;
    uint64_t refcount = 0;
  };
  using SlotKey = std::pair<std::string, std::pair<std::string, uint64_t>>;

  static SlotKey key(const std::string& cid, const std::string& oid,
                     uint64_t vid) {
    return {cid, {oid, vid}};
  }

  uint64_t alloc_chunk(Bytes data);
  void release_chunk(uint64_t id, FreedStats* freed = nullptr);
  // Makes slot `i` of `slots` exclusively owned and returns its chunk.
  Chunk& chunk_for_write(std::vector<uint64_t>& slots, uint64_t i);

  mutable std::mutex pool_mu_;
  std::map<uint64_t, Chunk> chunks_;
  uint64_t next_chunk_id_ = 1;
  std::map<SlotKey, std::vector<uint64_t>> slots_;
};

}  // namespace vosd
