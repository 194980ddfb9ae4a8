#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>

#include "vosd/meta.hpp"
#include "vosd/store.hpp"

namespace vosd {

// Shared implementation of the Store contract. StoreBase owns all version
// metadata (lineage graphs, collection versions, named pointers, counters)
// and the operation semantics; concrete backends supply payload storage
// through the payload_* hooks and, for durable backends, a persist() hook
// that flushes the metadata mutations of the current operation.
//
// Locking: a store-level shared_mutex guards the collection registry; each
// collection has its own shared_mutex. Writers to a collection are
// serialized (single-writer-per-collection), readers run concurrently.
class StoreBase : public Store {
 public:
  explicit StoreBase(uint64_t chunk_size = kDefaultChunkSize);

  uint64_t chunk_size() const override { return chunk_size_; }

  uint64_t create_collection(const std::string& cid) override;
  bool collection_exists(const std::string& cid) const override;
  std::vector<std::string> list_collections() const override;
  std::vector<uint64_t> list_collection_versions(
      const std::string& cid) const override;

  uint64_t create_object(const std::string& cid, uint64_t cvid,
                         const std::string& oid,
                         std::string_view data) override;
  Bytes get(const std::string& cid, uint64_t cvid,
            const std::string& oid) const override;
  Bytes get_range(const std::string& cid, uint64_t cvid,
                  const std::string& oid, uint64_t offset,
                  uint64_t length) const override;
  void set(const std::string& cid, uint64_t cvid, const std::string& oid,
           std::string_view data) override;
  void write_range(const std::string& cid, uint64_t cvid,
                   const std::string& oid, uint64_t offset,
                   std::string_view data) override;
  uint64_t clone_object(const std::string& cid, uint64_t cvid,
                        const std::string& oid) override;
  uint64_t clone_collection(const std::string& cid, uint64_t src_cvid) override;
  std::vector<std::string> list_objects(const std::string& cid,
                                        uint64_t cvid) const override;
  uint64_t version_of(const std::string& cid, uint64_t cvid,
                      const std::string& oid) const override;

  Bytes get_version(const std::string& cid, const std::string& oid,
                    uint64_t vid) const override;
  Bytes get_version_range(const std::string& cid, const std::string& oid,
                          uint64_t vid, uint64_t offset,
                          uint64_t length) const override;
  void write_version_range(const std::string& cid, const std::string& oid,
                           uint64_t vid, uint64_t offset,
                           std::string_view data) override;
  uint64_t clone_version(const std::string& cid, const std::string& oid,
                         uint64_t vid) override;
  uint64_t version_length(const std::string& cid, const std::string& oid,
                          uint64_t vid) const override;
  bool version_frozen(const std::string& cid, const std::string& oid,
                      uint64_t vid) const override;

  std::optional<uint64_t> parent(const std::string& cid,
                                 const std::string& oid,
                                 uint64_t vid) const override;
  std::set<uint64_t> children(const std::string& cid, const std::string& oid,
                              uint64_t vid) const override;
  std::optional<uint64_t> collection_version_parent(
      const std::string& cid, uint64_t cvid) const override;
  bool collection_version_frozen(const std::string& cid,
                                 uint64_t cvid) const override;

  std::vector<ByteRange> diff(const std::string& cid, const std::string& oid,
                              uint64_t v1, uint64_t v2) const override;

  uint64_t pointer_get(const std::string& cid,
                       const std::string& name) const override;
  std::optional<uint64_t> pointer_try_get(
      const std::string& cid, const std::string& name) const override;
  bool pointer_cas(const std::string& cid, const std::string& name,
                   std::optional<uint64_t> expected, uint64_t target) override;
  std::vector<std::string> list_pointers(const std::string& cid) const override;

  void freeze_collection_version(const std::string& cid,
                                 uint64_t cvid) override;
  uint64_t compose_commit(
      const std::string& cid, uint64_t base_cvid,
      const std::map<std::string, uint64_t>& overrides) override;
  uint64_t squash_collection_versions(
      const std::string& cid, uint64_t from_cvid, uint64_t to_cvid,
      const std::vector<uint64_t>& protected_cvids) override;

  void delete_version(const std::string& cid, const std::string& oid,
                      uint64_t vid) override;
  GcReport gc(const std::string& cid,
              const std::vector<uint64_t>& extra_roots = {}) override;

  StoreStats stats() const override;

 protected:
  using VersionMeta = detail::VersionMeta;
  using ObjectMeta = detail::ObjectMeta;
  using CollectionVersionMeta = detail::CollectionVersionMeta;
  using CollectionMeta = detail::CollectionMeta;
  struct CollectionEntry {
    CollectionMeta meta;
    mutable std::shared_mutex mu;
  };

  // One metadata record touched by the current operation; durable backends
  // map these onto their manifest / KV records in persist().
  struct MetaChange {
    enum Kind { kCollection, kVersion, kCVersion, kPointer, kObjectCounter };
    Kind kind;
    std::string oid;   // kVersion, kObjectCounter
    std::string name;  // kPointer
    uint64_t id = 0;   // vid or cvid
    bool removed = false;
  };

  struct FreedStats {
    uint64_t chunks = 0;
    uint64_t bytes = 0;
  };

  // Payload hooks, called with the collection's exclusive (mutations) or
  // shared (reads) lock held.
  virtual void payload_create(const std::string& cid, const std::string& oid,
                              uint64_t vid, std::string_view data) = 0;
  // Returns the number of payload bytes physically copied (0 for CoW).
  virtual uint64_t payload_clone(const std::string& cid,
                                 const std::string& oid, uint64_t src_vid,
                                 uint64_t dst_vid, uint64_t length) = 0;
  virtual Bytes payload_read(const std::string& cid, const std::string& oid,
                             uint64_t vid, uint64_t offset,
                             uint64_t length) const = 0;
  virtual void payload_write(const std::string& cid, const std::string& oid,
                             uint64_t vid, uint64_t offset,
                             std::string_view data, uint64_t old_length,
                             uint64_t new_length) = 0;
  virtual void payload_set(const std::string& cid, const std::string& oid,
                           uint64_t vid, std::string_view data,
                           uint64_t old_length) = 0;
  virtual FreedStats payload_delete(const std::string& cid,
                                    const std::string& oid, uint64_t vid,
                                    uint64_t length) = 0;
  // Default: byte comparison chunk by chunk. MemStore overrides with a
  // shared-chunk-id short circuit.
  virtual std::vector<ByteRange> payload_diff(const std::string& cid,
                                              const std::string& oid,
                                              const VersionMeta& a,
                                              const VersionMeta& b) const;

  // Durability hook, invoked at the end of every mutating operation while
  // the exclusive collection lock is still held. `changes` lists exactly
  // the records mutated by the operation.
  virtual void persist(const std::string& cid, const CollectionMeta& meta,
                       const std::vector<MetaChange>& changes) {}

  // For durable backends to rebuild state on open().
  void restore_collection(const std::string& cid, CollectionMeta meta);

  // Chunk-aligned diff over [0, max(la, lb)) from a chunk-differs predicate.
  std::vector<ByteRange> ranges_from_chunk_predicate(
      uint64_t la, uint64_t lb,
      const std::function<bool(uint64_t chunk_index)>& differs) const;

  std::atomic<uint64_t> stat_chunk_count_{0};
  std::atomic<uint64_t> stat_stored_bytes_{0};
  std::atomic<uint64_t> stat_bytes_copied_{0};
  std::atomic<uint64_t> stat_bytes_written_{0};

 private:
  struct Locked;
  struct LockedConst;
  Locked lock_collection(const std::string& cid);
  LockedConst lock_collection_const(const std::string& cid) const;

  static VersionMeta& find_version(CollectionMeta& meta,
                                   const std::string& oid, uint64_t vid);
  static const VersionMeta& find_version(const CollectionMeta& meta,
                                         const std::string& oid, uint64_t vid);
  static CollectionVersionMeta& find_cversion(CollectionMeta& meta,
                                              uint64_t cvid);
  static const CollectionVersionMeta& find_cversion(const CollectionMeta& meta,
                                                    uint64_t cvid);
  static uint64_t member_version(const CollectionMeta& meta, uint64_t cvid,
                                 const std::string& oid);

  uint64_t clone_version_locked(const std::string& cid, CollectionMeta& meta,
                                const std::string& oid, uint64_t src_vid,
                                std::vector<MetaChange>& changes);
  void write_version_locked(const std::string& cid, CollectionMeta& meta,
                            const std::string& oid, uint64_t vid,
                            uint64_t offset, std::string_view data,
                            std::vector<MetaChange>& changes);
  void freeze_cversion_locked(CollectionMeta& meta, uint64_t cvid,
                              std::vector<MetaChange>& changes);

  uint64_t chunk_size_;
  mutable std::shared_mutex registry_mu_;
  std::map<std::string, std::unique_ptr<CollectionEntry>> collections_;
};

}  // namespace vosd
