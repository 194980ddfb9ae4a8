#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>

#include "vosd/kv_log.hpp"
#include "vosd/store_base.hpp"

namespace vosd {

// Backend over the LogKv ordered map, one full payload copy per version.
//
// Key encoding (namespace byte, then NUL-separated name components; vids
// and cvids big-endian 64-bit so versions of one object are contiguous
// and ordered under lexicographic key order):
//   'S'                                  store config
//   'C' cid                              collection counter record
//   'o' cid 0x00 oid                     object counter record
//   'v' cid 0x00 oid 0x00 be64(vid)      version graph node
//   'c' cid 0x00 be64(cvid)              collection version
//   'p' cid 0x00 name                    named pointer (value: be64 target)
//   'd' cid 0x00 oid 0x00 be64(vid)      payload bytes
//
// Each store operation's payload and metadata mutations go into a single
// atomic LogKv batch.
class KvStore : public StoreBase {
 public:
  explicit KvStore(const std::filesystem::path& root,
                   uint64_t chunk_size = kDefaultChunkSize);

  std::string backend_name() const override { return "kv"; }

  CompactReport compact() { return log_->compact(); }
  LogKv& log() { return *log_; }

  static Bytes payload_key(const std::string& cid, const std::string& oid,
                           uint64_t vid);

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

  void persist(const std::string& cid, const CollectionMeta& meta,
               const std::vector<MetaChange>& changes) override;

 private:
  void stage_put(Bytes key, Bytes value);
  void stage_del(Bytes key);
  Bytes read_payload_full(const std::string& cid, const std::string& oid,
                          uint64_t vid) const;
  void load();

  std::unique_ptr<LogKv> log_;
  // Writes staged by the current operation, committed in persist().
  mutable std::mutex pending_mu_;
  std::vector<LogKv::Entry> pending_;
  std::map<Bytes, std::optional<Bytes>> pending_overlay_;
};

}  // namespace vosd
