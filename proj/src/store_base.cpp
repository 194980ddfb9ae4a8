#include "vosd/store_base.hpp"

#include <algorithm>
#include <cassert>

namespace vosd {

struct StoreBase::Locked {
  CollectionEntry* e;
  std::unique_lock<std::shared_mutex> lk;
  CollectionMeta& meta() { return e->meta; }
};

struct StoreBase::LockedConst {
  const CollectionEntry* e;
  std::shared_lock<std::shared_mutex> lk;
  const CollectionMeta& meta() const { return e->meta; }
};

StoreBase::StoreBase(uint64_t chunk_size) : chunk_size_(chunk_size) {
  if (chunk_size_ == 0) fail(Err::InvalidArgument, "chunk_size must be > 0");
}

StoreBase::Locked StoreBase::lock_collection(const std::string& cid) {
  std::shared_lock reg(registry_mu_);
  auto it = collections_.find(cid);
  if (it == collections_.end())
    fail(Err::NoSuchCollection, "no such collection: " + cid);
  CollectionEntry* e = it->second.get();
  reg.unlock();
  return Locked{e, std::unique_lock(e->mu)};
}

StoreBase::LockedConst StoreBase::lock_collection_const(
    const std::string& cid) const {
  std::shared_lock reg(registry_mu_);
  auto it = collections_.find(cid);
  if (it == collections_.end())
    fail(Err::NoSuchCollection, "no such collection: " + cid);
  const CollectionEntry* e = it->second.get();
  reg.unlock();
  return LockedConst{e, std::shared_lock(e->mu)};
}

StoreBase::VersionMeta& StoreBase::find_version(CollectionMeta& meta,
                                                const std::string& oid,
                                                uint64_t vid) {
  auto oit = meta.objects.find(oid);
  if (oit == meta.objects.end())
    fail(Err::NoSuchObject, "no such object: " + oid);
  auto vit = oit->second.versions.find(vid);
  if (vit == oit->second.versions.end())
    fail(Err::NoSuchVersion,
         "no such version: " + oid + "@" + std::to_string(vid));
  return vit->second;
}

const StoreBase::VersionMeta& StoreBase::find_version(
    const CollectionMeta& meta, const std::string& oid, uint64_t vid) {
  return find_version(const_cast<CollectionMeta&>(meta), oid, vid);
}

StoreBase::CollectionVersionMeta& StoreBase::find_cversion(
    CollectionMeta& meta, uint64_t cvid) {
  auto it = meta.cversions.find(cvid);
  if (it == meta.cversions.end())
    fail(Err::NoSuchVersion,
         "no such collection version: " + std::to_string(cvid));
  return it->second;
}

const StoreBase::CollectionVersionMeta& StoreBase::find_cversion(
    const CollectionMeta& meta, uint64_t cvid) {
  return find_cversion(const_cast<CollectionMeta&>(meta), cvid);
}

uint64_t StoreBase::member_version(const CollectionMeta& meta, uint64_t cvid,
                                   const std::string& oid) {
  const auto& cv = find_cversion(meta, cvid);
  auto it = cv.members.find(oid);
  if (it == cv.members.end())
    fail(Err::NoSuchObject, "object " + oid + " not in collection version " +
                                std::to_string(cvid));
  return it->second;
}

uint64_t StoreBase::create_collection(const std::string& cid) {
  validate_name(cid, "collection");
  std::unique_lock reg(registry_mu_);
  if (collections_.count(cid))
    fail(Err::AlreadyExists, "collection exists: " + cid);
  auto entry = std::make_unique<CollectionEntry>();
  CollectionMeta& meta = entry->meta;
  CollectionVersionMeta cv;
  cv.cvid = meta.next_cvid++;
  meta.cversions[cv.cvid] = cv;
  meta.pointers[kHead] = cv.cvid;
  meta.pointers[kHct] = cv.cvid;
  meta.pointers[kHrc] = cv.cvid;
  CollectionEntry* e = entry.get();
  collections_[cid] = std::move(entry);
  reg.unlock();

  std::vector<MetaChange> ch;
  ch.push_back({MetaChange::kCollection, "", "", 0, false});
  ch.push_back({MetaChange::kCVersion, "", "", cv.cvid, false});
  ch.push_back({MetaChange::kPointer, "", kHead, 0, false});
  ch.push_back({MetaChange::kPointer, "", kHct, 0, false});
  ch.push_back({MetaChange::kPointer, "", kHrc, 0, false});
  std::unique_lock lk(e->mu);
  persist(cid, meta, ch);
  return cv.cvid;
}

bool StoreBase::collection_exists(const std::string& cid) const {
  std::shared_lock reg(registry_mu_);
  return collections_.count(cid) > 0;
}

std::vector<std::string> StoreBase::list_collections() const {
  std::shared_lock reg(registry_mu_);
  std::vector<std::string> out;
  for (const auto& [cid, _] : collections_) out.push_back(cid);
  return out;
}

std::vector<uint64_t> StoreBase::list_collection_versions(
    const std::string& cid) const {
  auto lc = lock_collection_const(cid);
  std::vector<uint64_t> out;
  for (const auto& [cvid, _] : lc.meta().cversions) out.push_back(cvid);
  return out;
}

uint64_t StoreBase::create_object(const std::string& cid, uint64_t cvid,
                                  const std::string& oid,
                                  std::string_view data) {
  validate_name(oid, "object");
  auto lc = lock_collection(cid);
  CollectionMeta& meta = lc.meta();
  auto& cv = find_cversion(meta, cvid);
  if (cv.frozen)
    fail(Err::FrozenVersion,
         "collection version " + std::to_string(cvid) + " is frozen");
  if (cv.members.count(oid))
    fail(Err::AlreadyExists, "object exists in collection version: " + oid);
  ObjectMeta& om = meta.objects[oid];
  uint64_t vid = om.next_vid++;
  payload_create(cid, oid, vid, data);
  VersionMeta vm;
  vm.vid = vid;
  vm.length = data.size();
  om.versions[vid] = vm;
  cv.members[oid] = vid;
  stat_bytes_written_ += data.size();

  std::vector<MetaChange> ch;
  ch.push_back({MetaChange::kObjectCounter, oid, "", 0, false});
  ch.push_back({MetaChange::kVersion, oid, "", vid, false});
  ch.push_back({MetaChange::kCVersion, "", "", cvid, false});
  persist(cid, meta, ch);
  return vid;
}

Bytes StoreBase::get(const std::string& cid, uint64_t cvid,
                     const std::string& oid) const {
  auto lc = lock_collection_const(cid);
  uint64_t vid = member_version(lc.meta(), cvid, oid);
  const auto& vm = find_version(lc.meta(), oid, vid);
  return payload_read(cid, oid, vid, 0, vm.length);
}

Bytes StoreBase::get_range(const std::string& cid, uint64_t cvid,
                           const std::string& oid, uint64_t offset,
                           uint64_t length) const {
  auto lc = lock_collection_const(cid);
  uint64_t vid = member_version(lc.meta(), cvid, oid);
  const auto& vm = find_version(lc.meta(), oid, vid);
  if (offset + length > vm.length)
    fail(Err::OutOfBounds, "range [" + std::to_string(offset) + ", +" +
                               std::to_string(length) + ") exceeds length " +
                               std::to_string(vm.length));
  return payload_read(cid, oid, vid, offset, length);
}

void StoreBase::set(const std::string& cid, uint64_t cvid,
                    const std::string& oid, std::string_view data) {
  auto lc = lock_collection(cid);
  CollectionMeta& meta = lc.meta();
  uint64_t vid = member_version(meta, cvid, oid);
  auto& vm = find_version(meta, oid, vid);
  if (vm.frozen)
    fail(Err::FrozenVersion,
         "version " + std::to_string(vid) + " of " + oid + " is frozen");
  payload_set(cid, oid, vid, data, vm.length);
  vm.length = data.size();
  stat_bytes_written_ += data.size();
  std::vector<MetaChange> ch{{MetaChange::kVersion, oid, "", vid, false}};
  persist(cid, meta, ch);
}

void StoreBase::write_version_locked(const std::string& cid,
                                     CollectionMeta& meta,
                                     const std::string& oid, uint64_t vid,
                                     uint64_t offset, std::string_view data,
                                     std::vector<MetaChange>& changes) {
  auto& vm = find_version(meta, oid, vid);
  if (vm.frozen)
    fail(Err::FrozenVersion,
         "version " + std::to_string(vid) + " of " + oid + " is frozen");
  if (offset > vm.length)
    fail(Err::OutOfBounds, "write offset " + std::to_string(offset) +
                               " beyond length " + std::to_string(vm.length));
  uint64_t new_length = std::max<uint64_t>(vm.length, offset + data.size());
  payload_write(cid, oid, vid, offset, data, vm.length, new_length);
  vm.length = new_length;
  stat_bytes_written_ += data.size();
  changes.push_back({MetaChange::kVersion, oid, "", vid, false});
}

void StoreBase::write_range(const std::string& cid, uint64_t cvid,
                            const std::string& oid, uint64_t offset,
                            std::string_view data) {
  auto lc = lock_collection(cid);
  CollectionMeta& meta = lc.meta();
  uint64_t vid = member_version(meta, cvid, oid);
  std::vector<MetaChange> ch;
  write_version_locked(cid, meta, oid, vid, offset, data, ch);
  persist(cid, meta, ch);
}

void StoreBase::write_version_range(const std::string& cid,
                                    const std::string& oid, uint64_t vid,
                                    uint64_t offset, std::string_view data) {
  auto lc = lock_collection(cid);
  CollectionMeta& meta = lc.meta();
  std::vector<MetaChange> ch;
  write_version_locked(cid, meta, oid, vid, offset, data, ch);
  persist(cid, meta, ch);
}

uint64_t StoreBase::clone_version_locked(const std::string& cid,
                                         CollectionMeta& meta,
                                         const std::string& oid,
                                         uint64_t src_vid,
                                         std::vector<MetaChange>& changes) {
  auto& src = find_version(meta, oid, src_vid);
  ObjectMeta& om = meta.objects[oid];
  uint64_t vid = om.next_vid++;
  uint64_t copied = payload_clone(cid, oid, src_vid, vid, src.length);
  stat_bytes_copied_ += copied;
  VersionMeta vm;
  vm.vid = vid;
  vm.length = src.length;
  vm.parent = src_vid;
  om.versions[vid] = vm;
  auto& src2 = find_version(meta, oid, src_vid);  // map may have rehashed
  src2.children.insert(vid);
  src2.frozen = true;
  changes.push_back({MetaChange::kObjectCounter, oid, "", 0, false});
  changes.push_back({MetaChange::kVersion, oid, "", src_vid, false});
  changes.push_back({MetaChange::kVersion, oid, "", vid, false});
  return vid;
}

uint64_t StoreBase::clone_object(const std::string& cid, uint64_t cvid,
                                 const std::string& oid) {
  auto lc = lock_collection(cid);
  CollectionMeta& meta = lc.meta();
  uint64_t src_vid = member_version(meta, cvid, oid);
  std::vector<MetaChange> ch;
  uint64_t vid = clone_version_locked(cid, meta, oid, src_vid, ch);
  auto& cv = find_cversion(meta, cvid);
  if (!cv.frozen) {
    cv.members[oid] = vid;
    ch.push_back({MetaChange::kCVersion, "", "", cvid, false});
  }
  persist(cid, meta, ch);
  return vid;
}

uint64_t StoreBase::clone_version(const std::string& cid,
                                  const std::string& oid, uint64_t vid) {
  auto lc = lock_collection(cid);
  CollectionMeta& meta = lc.meta();
  std::vector<MetaChange> ch;
  uint64_t nv = clone_version_locked(cid, meta, oid, vid, ch);
  persist(cid, meta, ch);
  return nv;
}

uint64_t StoreBase::clone_collection(const std::string& cid,
                                     uint64_t src_cvid) {
  auto lc = lock_collection(cid);
  CollectionMeta& meta = lc.meta();
  auto& src = find_cversion(meta, src_cvid);
  std::vector<MetaChange> ch;
  CollectionVersionMeta cv;
  cv.cvid = meta.next_cvid++;
  cv.parent = src_cvid;
  for (const auto& [oid, vid] : src.members)
    cv.members[oid] = clone_version_locked(cid, meta, oid, vid, ch);
  auto& src2 = find_cversion(meta, src_cvid);
  src2.frozen = true;
  meta.cversions[cv.cvid] = cv;
  ch.push_back({MetaChange::kCollection, "", "", 0, false});
  ch.push_back({MetaChange::kCVersion, "", "", src_cvid, false});
  ch.push_back({MetaChange::kCVersion, "", "", cv.cvid, false});
  persist(cid, meta, ch);
  return cv.cvid;
}

std::vector<std::string> StoreBase::list_objects(const std::string& cid,
                                                 uint64_t cvid) const {
  auto lc = lock_collection_const(cid);
  const auto& cv = find_cversion(lc.meta(), cvid);
  std::vector<std::string> out;
  for (const auto& [oid, _] : cv.members) out.push_back(oid);
  return out;
}

uint64_t StoreBase::version_of(const std::string& cid, uint64_t cvid,
                               const std::string& oid) const {
  auto lc = lock_collection_const(cid);
  return member_version(lc.meta(), cvid, oid);
}

Bytes StoreBase::get_version(const std::string& cid, const std::string& oid,
                             uint64_t vid) const {
  auto lc = lock_collection_const(cid);
  const auto& vm = find_version(lc.meta(), oid, vid);
  return payload_read(cid, oid, vid, 0, vm.length);
}

Bytes StoreBase::get_version_range(const std::string& cid,
                                   const std::string& oid, uint64_t vid,
                                   uint64_t offset, uint64_t length) const {
  auto lc = lock_collection_const(cid);
  const auto& vm = find_version(lc.meta(), oid, vid);
  if (offset + length > vm.length)
    fail(Err::OutOfBounds, "range exceeds version length");
  return payload_read(cid, oid, vid, offset, length);
}

uint64_t StoreBase::version_length(const std::string& cid,
                                   const std::string& oid,
                                   uint64_t vid) const {
  auto lc = lock_collection_const(cid);
  return find_version(lc.meta(), oid, vid).length;
}

bool StoreBase::version_frozen(const std::string& cid, const std::string& oid,
                               uint64_t vid) const {
  auto lc = lock_collection_const(cid);
  return find_version(lc.meta(), oid, vid).frozen;
}

std::optional<uint64_t> StoreBase::parent(const std::string& cid,
                                          const std::string& oid,
                                          uint64_t vid) const {
  auto lc = lock_collection_const(cid);
  return find_version(lc.meta(), oid, vid).parent;
}

std::set<uint64_t> StoreBase::children(const std::string& cid,
                                       const std::string& oid,
                                       uint64_t vid) const {
  auto lc = lock_collection_const(cid);
  return find_version(lc.meta(), oid, vid).children;
}

std::optional<uint64_t> StoreBase::collection_version_parent(
    const std::string& cid, uint64_t cvid) const {
  auto lc = lock_collection_const(cid);
  return find_cversion(lc.meta(), cvid).parent;
}

bool StoreBase::collection_version_frozen(const std::string& cid,
                                          uint64_t cvid) const {
  auto lc = lock_collection_const(cid);
  return find_cversion(lc.meta(), cvid).frozen;
}

std::vector<ByteRange> StoreBase::ranges_from_chunk_predicate(
    uint64_t la, uint64_t lb,
    const std::function<bool(uint64_t)>& differs) const {
  const uint64_t cs = chunk_size_;
  const uint64_t max_len = std::max(la, lb);
  const uint64_t n = chunks_for_length(max_len, cs);
  std::vector<ByteRange> out;
  for (uint64_t i = 0; i < n; ++i) {
    if (!differs(i)) continue;
    uint64_t off = i * cs;
    uint64_t end = std::min(off + cs, max_len);
    if (!out.empty() && out.back().offset + out.back().length == off) {
      out.back().length = end - out.back().offset;
    } else {
      out.push_back({off, end - off});
    }
  }
  return out;
}

std::vector<ByteRange> StoreBase::payload_diff(const std::string& cid,
                                               const std::string& oid,
                                               const VersionMeta& a,
                                               const VersionMeta& b) const {
  const uint64_t cs = chunk_size_;
  auto chunk_of = [&](const VersionMeta& v, uint64_t i) -> Bytes {
    uint64_t off = i * cs;
    if (off >= v.length) return {};
    return payload_read(cid, oid, v.vid, off, std::min(cs, v.length - off));
  };
  return ranges_from_chunk_predicate(a.length, b.length, [&](uint64_t i) {
    return chunk_of(a, i) != chunk_of(b, i);
  });
}

std::vector<ByteRange> StoreBase::diff(const std::string& cid,
                                       const std::string& oid, uint64_t v1,
                                       uint64_t v2) const {
  auto lc = lock_collection_const(cid);
  const auto& a = find_version(lc.meta(), oid, v1);
  const auto& b = find_version(lc.meta(), oid, v2);
  if (v1 == v2) return {};
  return payload_diff(cid, oid, a, b);
}

uint64_t StoreBase::pointer_get(const std::string& cid,
                                const std::string& name) const {
  auto lc = lock_collection_const(cid);
  auto it = lc.meta().pointers.find(name);
  if (it == lc.meta().pointers.end())
    fail(Err::NoSuchPointer, "no such pointer: " + name);
  return it->second;
}

std::optional<uint64_t> StoreBase::pointer_try_get(
    const std::string& cid, const std::string& name) const {
  auto lc = lock_collection_const(cid);
  auto it = lc.meta().pointers.find(name);
  if (it == lc.meta().pointers.end()) return std::nullopt;
  return it->second;
}

bool StoreBase::pointer_cas(const std::string& cid, const std::string& name,
                            std::optional<uint64_t> expected,
                            uint64_t target) {
  validate_name(name, "pointer");
  auto lc = lock_collection(cid);
  CollectionMeta& meta = lc.meta();
  if (!meta.cversions.count(target))
    fail(Err::DanglingTarget,
         "pointer target does not exist: " + std::to_string(target));
  auto it = meta.pointers.find(name);
  if (expected.has_value()) {
    if (it == meta.pointers.end() || it->second != *expected) return false;
    it->second = target;
  } else {
    if (it != meta.pointers.end()) return false;
    meta.pointers[name] = target;
  }
  std::vector<MetaChange> ch{{MetaChange::kPointer, "", name, 0, false}};
  persist(cid, meta, ch);
  return true;
}

std::vector<std::string> StoreBase::list_pointers(
    const std::string& cid) const {
  auto lc = lock_collection_const(cid);
  std::vector<std::string> out;
  for (const auto& [name, _] : lc.meta().pointers) out.push_back(name);
  return out;
}

void StoreBase::freeze_cversion_locked(CollectionMeta& meta, uint64_t cvid,
                                       std::vector<MetaChange>& changes) {
  auto& cv = find_cversion(meta, cvid);
  if (cv.frozen) return;
  cv.frozen = true;
  changes.push_back({MetaChange::kCVersion, "", "", cvid, false});
  for (const auto& [oid, vid] : cv.members) {
    auto& vm = find_version(meta, oid, vid);
    if (!vm.frozen) {
      vm.frozen = true;
      changes.push_back({MetaChange::kVersion, oid, "", vid, false});
    }
  }
}

void StoreBase::freeze_collection_version(const std::string& cid,
                                          uint64_t cvid) {
  auto lc = lock_collection(cid);
  std::vector<MetaChange> ch;
  freeze_cversion_locked(lc.meta(), cvid, ch);
  if (!ch.empty()) persist(cid, lc.meta(), ch);
}

uint64_t StoreBase::compose_commit(
    const std::string& cid, uint64_t base_cvid,
    const std::map<std::string, uint64_t>& overrides) {
  auto lc = lock_collection(cid);
  CollectionMeta& meta = lc.meta();
  const auto& base = find_cversion(meta, base_cvid);
  std::vector<MetaChange> ch;
  CollectionVersionMeta cv;
  cv.cvid = meta.next_cvid++;
  cv.parent = base_cvid;
  cv.frozen = true;
  cv.members = base.members;
  for (const auto& [oid, vid] : overrides) {
    auto& vm = find_version(meta, oid, vid);
    if (!vm.frozen) {
      vm.frozen = true;
      ch.push_back({MetaChange::kVersion, oid, "", vid, false});
    }
    cv.members[oid] = vid;
  }
  meta.cversions[cv.cvid] = cv;
  ch.push_back({MetaChange::kCollection, "", "", 0, false});
  ch.push_back({MetaChange::kCVersion, "", "", cv.cvid, false});
  persist(cid, meta, ch);
  return cv.cvid;
}

uint64_t StoreBase::squash_collection_versions(
    const std::string& cid, uint64_t from_cvid, uint64_t to_cvid,
    const std::vector<uint64_t>& protected_cvids) {
  auto lc = lock_collection(cid);
  CollectionMeta& meta = lc.meta();
  find_cversion(meta, from_cvid);
  auto& to = find_cversion(meta, to_cvid);
  if (from_cvid == to_cvid)
    fail(Err::NotLinearChain, "from and to are the same collection version");
  // Walk to's ancestry; collect the versions this squash bypasses.
  std::vector<uint64_t> bypassed;
  std::optional<uint64_t> cur = to.parent;
  bool found = false;
  while (cur) {
    bypassed.push_back(*cur);
    if (*cur == from_cvid) {
      found = true;
      break;
    }
    cur = find_cversion(meta, *cur).parent;
  }
  if (!found)
    fail(Err::NotLinearChain, std::to_string(from_cvid) +
                                  " is not an ancestor of " +
                                  std::to_string(to_cvid));
  std::set<uint64_t> in_use(protected_cvids.begin(), protected_cvids.end());
  for (const auto& [_, tgt] : meta.pointers) in_use.insert(tgt);
  for (uint64_t cvid : bypassed) {
    if (in_use.count(cvid))
      fail(Err::InUse, "collection version " + std::to_string(cvid) +
                           " is referenced by a pointer or active handle");
  }
  to.parent = find_cversion(meta, from_cvid).parent;
  std::vector<MetaChange> ch{{MetaChange::kCVersion, "", "", to_cvid, false}};
  persist(cid, meta, ch);
  return to_cvid;
}

void StoreBase::delete_version(const std::string& cid, const std::string& oid,
                               uint64_t vid) {
  auto lc = lock_collection(cid);
  CollectionMeta& meta = lc.meta();
  auto& vm = find_version(meta, oid, vid);
  if (!vm.children.empty())
    fail(Err::VersionInUse,
         "version " + std::to_string(vid) + " of " + oid + " has children");
  std::set<uint64_t> rooted;
  for (const auto& [_, tgt] : meta.pointers) rooted.insert(tgt);
  std::vector<MetaChange> ch;
  for (auto& [cvid, cv] : meta.cversions) {
    auto mit = cv.members.find(oid);
    if (mit == cv.members.end() || mit->second != vid) continue;
    if (cv.frozen && rooted.count(cvid))
      fail(Err::VersionInUse,
           "version is referenced by pointer-rooted snapshot " +
               std::to_string(cvid));
    cv.members.erase(mit);
    ch.push_back({MetaChange::kCVersion, "", "", cvid, false});
  }
  FreedStats freed = payload_delete(cid, oid, vid, vm.length);
  (void)freed;
  if (vm.parent) {
    auto& p = find_version(meta, oid, *vm.parent);
    p.children.erase(vid);
    ch.push_back({MetaChange::kVersion, oid, "", *vm.parent, false});
  }
  meta.objects[oid].versions.erase(vid);
  ch.push_back({MetaChange::kVersion, oid, "", vid, true});
  persist(cid, meta, ch);
}

GcReport StoreBase::gc(const std::string& cid,
                       const std::vector<uint64_t>& extra_roots) {
  auto lc = lock_collection(cid);
  CollectionMeta& meta = lc.meta();
  std::vector<MetaChange> ch;
  GcReport report;

  std::set<uint64_t> keep_cv;
  for (const auto& [_, tgt] : meta.pointers) keep_cv.insert(tgt);
  for (uint64_t r : extra_roots)
    if (meta.cversions.count(r)) keep_cv.insert(r);

  std::map<std::string, std::set<uint64_t>> keep_v;
  for (uint64_t cvid : keep_cv)
    for (const auto& [oid, vid] : meta.cversions.at(cvid).members)
      keep_v[oid].insert(vid);

  // Drop unreachable collection versions, re-parenting survivors onto
  // their nearest surviving ancestor.
  std::map<uint64_t, std::optional<uint64_t>> cv_parent;
  for (const auto& [cvid, cv] : meta.cversions) cv_parent[cvid] = cv.parent;
  for (auto it = meta.cversions.begin(); it != meta.cversions.end();) {
    if (keep_cv.count(it->first)) {
      ++it;
    } else {
      ch.push_back({MetaChange::kCVersion, "", "", it->first, true});
      it = meta.cversions.erase(it);
    }
  }
  for (auto& [cvid, cv] : meta.cversions) {
    std::optional<uint64_t> p = cv.parent;
    while (p && !meta.cversions.count(*p)) p = cv_parent.at(*p);
    if (p != cv.parent) {
      cv.parent = p;
      ch.push_back({MetaChange::kCVersion, "", "", cvid, false});
    }
  }

  // Drop unreachable object versions.
  for (auto& [oid, om] : meta.objects) {
    const auto& keep = keep_v[oid];
    std::map<uint64_t, std::optional<uint64_t>> v_parent;
    for (const auto& [vid, vm] : om.versions) v_parent[vid] = vm.parent;
    for (auto it = om.versions.begin(); it != om.versions.end();) {
      if (keep.count(it->first)) {
        ++it;
      } else {
        FreedStats freed =
            payload_delete(cid, oid, it->first, it->second.length);
        report.versions_removed += 1;
        report.chunks_freed += freed.chunks;
        report.bytes_freed += freed.bytes;
        ch.push_back({MetaChange::kVersion, oid, "", it->first, true});
        it = om.versions.erase(it);
      }
    }
    // Fix lineage links among survivors.
    for (auto& [vid, vm] : om.versions) {
      bool changed = false;
      std::optional<uint64_t> p = vm.parent;
      while (p && !om.versions.count(*p)) p = v_parent.at(*p);
      if (p != vm.parent) {
        vm.parent = p;
        if (p) {
          om.versions.at(*p).children.insert(vid);
          ch.push_back({MetaChange::kVersion, oid, "", *p, false});
        }
        changed = true;
      }
      auto old_children = vm.children;
      for (uint64_t c : old_children)
        if (!om.versions.count(c)) {
          vm.children.erase(c);
          changed = true;
        }
      if (changed) ch.push_back({MetaChange::kVersion, oid, "", vid, false});
    }
  }
  if (!ch.empty()) persist(cid, meta, ch);
  return report;
}

StoreStats StoreBase::stats() const {
  StoreStats s;
  s.chunk_count = stat_chunk_count_.load();
  s.stored_bytes = stat_stored_bytes_.load();
  s.bytes_copied_on_snapshot = stat_bytes_copied_.load();
  s.bytes_written = stat_bytes_written_.load();
  return s;
}

void StoreBase::restore_collection(const std::string& cid,
                                   CollectionMeta meta) {
  std::unique_lock reg(registry_mu_);
  auto entry = std::make_unique<CollectionEntry>();
  entry->meta = std::move(meta);
  collections_[cid] = std::move(entry);
}

}  // namespace vosd
