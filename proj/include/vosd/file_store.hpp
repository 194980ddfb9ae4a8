#pragma once

#include <filesystem>

#include "vosd/store_base.hpp"

namespace vosd {

// Filesystem backend with one full payload file per object version:
//
//   root/store.json                        store config (format_version,
//                                          chunk_size)
//   root/<collection>/manifest.json        version graph, collection
//                                          versions, pointers, counters
//   root/<collection>/objects/<oid>/<vid>.dat
//
// The manifest is rewritten as a whole after every metadata mutation via
// write-temp-then-atomic-rename; payload files are created the same way.
// Opening a store discards *.tmp leftovers and orphan .dat files from an
// interrupted operation and reports them.
class FileStore : public StoreBase {
 public:
  explicit FileStore(const std::filesystem::path& root,
                     uint64_t chunk_size = kDefaultChunkSize);

  std::string backend_name() const override { return "file"; }

  const RecoveryReport& recovery_report() const { return recovery_; }
  const std::filesystem::path& root() const { return root_; }

  static constexpr int kFormatVersion = 1;

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
  std::filesystem::path dat_path(const std::string& cid,
                                 const std::string& oid, uint64_t vid) const;
  void load(const std::filesystem::path& root);

  std::filesystem::path root_;
  RecoveryReport recovery_;
};

}  // namespace vosd
