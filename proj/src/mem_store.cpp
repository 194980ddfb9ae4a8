#include "vosd/mem_store.hpp"

#include <algorithm>
#include <cassert>

namespace vosd {

uint64_t MemStore::alloc_chunk(Bytes data) {
  uint64_t id = next_chunk_id_++;
  stat_chunk_count_ += 1;
  stat_stored_bytes_ += data.size();
  chunks_[id] = Chunk{std::move(data), 1};
  return id;
}

void MemStore::release_chunk(uint64_t id, FreedStats* freed) {
  auto it = chunks_.find(id);
  assert(it != chunks_.end() && it->second.refcount > 0);
  if (--it->second.refcount == 0) {
    stat_chunk_count_ -= 1;
    stat_stored_bytes_ -= it->second.data.size();
    if (freed) {
      freed->chunks += 1;
      freed->bytes += it->second.data.size();
    }
    chunks_.erase(it);
  }
}

MemStore::Chunk& MemStore::chunk_for_write(std::vector<uint64_t>& slots,
                                           uint64_t i) {
  Chunk& c = chunks_.at(slots[i]);
  if (c.refcount == 1) return c;
  // Shared with another version: copy before mutating.
  c.refcount -= 1;
  uint64_t id = alloc_chunk(c.data);
  slots[i] = id;
  return chunks_.at(id);
}

void MemStore::payload_create(const std::string& cid, const std::string& oid,
                              uint64_t vid, std::string_view data) {
  std::lock_guard lk(pool_mu_);
  const uint64_t cs = chunk_size();
  std::vector<uint64_t> slots;
  for (uint64_t off = 0; off < data.size(); off += cs)
    slots.push_back(
        alloc_chunk(Bytes(data.substr(off, std::min<uint64_t>(cs, data.size() - off)))));
  slots_[key(cid, oid, vid)] = std::move(slots);
}

uint64_t MemStore::payload_clone(const std::string& cid,
                                 const std::string& oid, uint64_t src_vid,
                                 uint64_t dst_vid, uint64_t length) {
  std::lock_guard lk(pool_mu_);
  const auto& src = slots_.at(key(cid, oid, src_vid));
  for (uint64_t id : src) chunks_.at(id).refcount += 1;
  slots_[key(cid, oid, dst_vid)] = src;
  return 0;  // no payload bytes copied
}

Bytes MemStore::payload_read(const std::string& cid, const std::string& oid,
                             uint64_t vid, uint64_t offset,
                             uint64_t length) const {
  std::lock_guard lk(pool_mu_);
  const uint64_t cs = chunk_size();
  const auto& slots = slots_.at(key(cid, oid, vid));
  Bytes out;
  out.reserve(length);
  uint64_t pos = offset;
  while (out.size() < length) {
    uint64_t ci = pos / cs;
    uint64_t in_off = pos % cs;
    const Bytes& d = chunks_.at(slots.at(ci)).data;
    uint64_t n = std::min<uint64_t>(d.size() - in_off, length - out.size());
    out.append(d, in_off, n);
    pos += n;
  }
  return out;
}

void MemStore::payload_write(const std::string& cid, const std::string& oid,
                             uint64_t vid, uint64_t offset,
                             std::string_view data, uint64_t old_length,
                             uint64_t new_length) {
  std::lock_guard lk(pool_mu_);
  const uint64_t cs = chunk_size();
  auto& slots = slots_.at(key(cid, oid, vid));
  uint64_t pos = offset;
  uint64_t di = 0;
  while (di < data.size()) {
    uint64_t ci = pos / cs;
    uint64_t in_off = pos % cs;
    uint64_t n = std::min<uint64_t>(cs - in_off, data.size() - di);
    if (ci == slots.size()) {
      // Appending past the current tail; offset <= old_length keeps this
      // contiguous, so in_off is 0 here.
      slots.push_back(alloc_chunk(Bytes(data.substr(di, n))));
    } else {
      Chunk& c = chunk_for_write(slots, ci);
      if (c.data.size() < in_off + n) {
        stat_stored_bytes_ += in_off + n - c.data.size();
        c.data.resize(in_off + n);
      }
      c.data.replace(in_off, n, data.substr(di, n));
    }
    pos += n;
    di += n;
  }
}

void MemStore::payload_set(const std::string& cid, const std::string& oid,
                           uint64_t vid, std::string_view data,
                           uint64_t old_length) {
  std::lock_guard lk(pool_mu_);
  const uint64_t cs = chunk_size();
  auto& slots = slots_.at(key(cid, oid, vid));
  for (uint64_t id : slots) release_chunk(id);
  slots.clear();
  for (uint64_t off = 0; off < data.size(); off += cs)
    slots.push_back(alloc_chunk(
        Bytes(data.substr(off, std::min<uint64_t>(cs, data.size() - off)))));
}

StoreBase::FreedStats MemStore::payload_delete(const std::string& cid,
                                               const std::string& oid,
                                               uint64_t vid, uint64_t length) {
  std::lock_guard lk(pool_mu_);
  FreedStats freed;
  auto it = slots_.find(key(cid, oid, vid));
  for (uint64_t id : it->second) release_chunk(id, &freed);
  slots_.erase(it);
  return freed;
}

std::vector<ByteRange> MemStore::payload_diff(const std::string& cid,
                                              const std::string& oid,
                                              const VersionMeta& a,
                                              const VersionMeta& b) const {
  std::lock_guard lk(pool_mu_);
  const auto& sa = slots_.at(key(cid, oid, a.vid));
  const auto& sb = slots_.at(key(cid, oid, b.vid));
  return ranges_from_chunk_predicate(a.length, b.length, [&](uint64_t i) {
    bool ha = i < sa.size();
    bool hb = i < sb.size();
    if (ha != hb) return true;
    if (!ha) return false;
    if (sa[i] == sb[i]) return false;  // shared chunk, identical by sharing
    return chunks_.at(sa[i]).data != chunks_.at(sb[i]).data;
  });
}

std::map<uint64_t, uint64_t> MemStore::chunk_refcounts() const {
  std::lock_guard lk(pool_mu_);
  std::map<uint64_t, uint64_t> out;
  for (const auto& [id, c] : chunks_) out[id] = c.refcount;
  return out;
}

std::vector<uint64_t> MemStore::chunk_slots(const std::string& cid,
                                            const std::string& oid,
                                            uint64_t vid) const {
  std::lock_guard lk(pool_mu_);
  return slots_.at(key(cid, oid, vid));
}

}  // namespace vosd
