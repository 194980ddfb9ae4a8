#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vosd/types.hpp"

namespace vosd {

// The versioned-object store interface. Every backend (MemStore, Oracle,
// FileStore, KvStore) implements all of it with identical semantics; they
// differ only in how version payloads are materialized (chunk sharing vs
// one full copy per version) and in durability.
//
// Addressing: most operations address an object through a collection
// version id (cvid), which resolves to that snapshot's member version.
// The *_version operations address an object version directly; they are
// used by lineage-centric callers (diff, tests, the txn layer).
class Store {
 public:
  virtual ~Store() = default;

  virtual std::string backend_name() const = 0;
  virtual uint64_t chunk_size() const = 0;

  // Collections ----------------------------------------------------------
  virtual uint64_t create_collection(const std::string& cid) = 0;
  virtual bool collection_exists(const std::string& cid) const = 0;
  virtual std::vector<std::string> list_collections() const = 0;
  virtual std::vector<uint64_t> list_collection_versions(
      const std::string& cid) const = 0;

  // Objects, addressed through a collection version ----------------------
  virtual uint64_t create_object(const std::string& cid, uint64_t cvid,
                                 const std::string& oid,
                                 std::string_view data) = 0;
  virtual Bytes get(const std::string& cid, uint64_t cvid,
                    const std::string& oid) const = 0;
  virtual Bytes get_range(const std::string& cid, uint64_t cvid,
                          const std::string& oid, uint64_t offset,
                          uint64_t length) const = 0;
  virtual void set(const std::string& cid, uint64_t cvid,
                   const std::string& oid, std::string_view data) = 0;
  virtual void write_range(const std::string& cid, uint64_t cvid,
                           const std::string& oid, uint64_t offset,
                           std::string_view data) = 0;
  virtual uint64_t clone_object(const std::string& cid, uint64_t cvid,
                                const std::string& oid) = 0;
  virtual uint64_t clone_collection(const std::string& cid,
                                    uint64_t src_cvid) = 0;
  virtual std::vector<std::string> list_objects(const std::string& cid,
                                                uint64_t cvid) const = 0;
  virtual uint64_t version_of(const std::string& cid, uint64_t cvid,
                              const std::string& oid) const = 0;

  // Objects, addressed by version id --------------------------------------
  virtual Bytes get_version(const std::string& cid, const std::string& oid,
                            uint64_t vid) const = 0;
  virtual Bytes get_version_range(const std::string& cid,
                                  const std::string& oid, uint64_t vid,
                                  uint64_t offset, uint64_t length) const = 0;
  virtual void write_version_range(const std::string& cid,
                                   const std::string& oid, uint64_t vid,
                                   uint64_t offset, std::string_view data) = 0;
  virtual uint64_t clone_version(const std::string& cid,
                                 const std::string& oid, uint64_t vid) = 0;
  virtual uint64_t version_length(const std::string& cid,
                                  const std::string& oid,
                                  uint64_t vid) const = 0;
  virtual bool version_frozen(const std::string& cid, const std::string& oid,
                              uint64_t vid) const = 0;

  // Lineage ----------------------------------------------------------------
  virtual std::optional<uint64_t> parent(const std::string& cid,
                                         const std::string& oid,
                                         uint64_t vid) const = 0;
  virtual std::set<uint64_t> children(const std::string& cid,
                                      const std::string& oid,
                                      uint64_t vid) const = 0;
  virtual std::optional<uint64_t> collection_version_parent(
      const std::string& cid, uint64_t cvid) const = 0;
  virtual bool collection_version_frozen(const std::string& cid,
                                         uint64_t cvid) const = 0;

  // Chunk-granular diff between two versions of one object. Ranges are
  // chunk-aligned, sorted, coalesced; a chunk position is reported iff its
  // bytes differ; a length difference shows up as a trailing range.
  virtual std::vector<ByteRange> diff(const std::string& cid,
                                      const std::string& oid, uint64_t v1,
                                      uint64_t v2) const = 0;

  // Named pointers ---------------------------------------------------------
  virtual uint64_t pointer_get(const std::string& cid,
                               const std::string& name) const = 0;
  virtual std::optional<uint64_t> pointer_try_get(
      const std::string& cid, const std::string& name) const = 0;
  // expected == nullopt creates the pointer; returns false on mismatch.
  virtual bool pointer_cas(const std::string& cid, const std::string& name,
                           std::optional<uint64_t> expected,
                           uint64_t target) = 0;
  virtual std::vector<std::string> list_pointers(
      const std::string& cid) const = 0;

  // Snapshot lifecycle (used by the txn layer) -----------------------------
  virtual void freeze_collection_version(const std::string& cid,
                                         uint64_t cvid) = 0;
  // Builds a frozen collection version on top of base_cvid whose members
  // are base's, with `overrides` replacing the entries for the written
  // objects. Override versions get frozen and parented onto base's members.
  virtual uint64_t compose_commit(
      const std::string& cid, uint64_t base_cvid,
      const std::map<std::string, uint64_t>& overrides) = 0;
  // Squashes the collection-version chain (from_cvid, to_cvid]: re-parents
  // to_cvid onto from_cvid's parent. The bypassed versions stay until gc.
  virtual uint64_t squash_collection_versions(
      const std::string& cid, uint64_t from_cvid, uint64_t to_cvid,
      const std::vector<uint64_t>& protected_cvids) = 0;

  // Reclamation ------------------------------------------------------------
  virtual void delete_version(const std::string& cid, const std::string& oid,
                              uint64_t vid) = 0;
  virtual GcReport gc(const std::string& cid,
                      const std::vector<uint64_t>& extra_roots = {}) = 0;

  virtual StoreStats stats() const = 0;

  // OSD-compat convenience: get/set resolve "latest" through HEAD.
  Bytes get_latest(const std::string& cid, const std::string& oid) const {
    return get(cid, pointer_get(cid, kHead), oid);
  }
  void set_latest(const std::string& cid, const std::string& oid,
                  std::string_view data) {
    set(cid, pointer_get(cid, kHead), oid, data);
  }
};

}  // namespace vosd
