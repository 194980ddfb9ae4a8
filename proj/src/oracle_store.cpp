#include "vosd/oracle_store.hpp"

#include <algorithm>

namespace vosd {

void OracleStore::payload_create(const std::string& cid,
                                 const std::string& oid, uint64_t vid,
                                 std::string_view data) {
  std::lock_guard lk(mu_);
  payloads_[key(cid, oid, vid)] = Bytes(data);
  stat_chunk_count_ += chunks_for_length(data.size(), chunk_size());
  stat_stored_bytes_ += data.size();
}

uint64_t OracleStore::payload_clone(const std::string& cid,
                                    const std::string& oid, uint64_t src_vid,
                                    uint64_t dst_vid, uint64_t length) {
  std::lock_guard lk(mu_);
  const Bytes& src = payloads_.at(key(cid, oid, src_vid));
  payloads_[key(cid, oid, dst_vid)] = src;
  stat_chunk_count_ += chunks_for_length(length, chunk_size());
  stat_stored_bytes_ += length;
  return length;
}

Bytes OracleStore::payload_read(const std::string& cid, const std::string& oid,
                                uint64_t vid, uint64_t offset,
                                uint64_t length) const {
  std::lock_guard lk(mu_);
  return payloads_.at(key(cid, oid, vid)).substr(offset, length);
}

void OracleStore::payload_write(const std::string& cid, const std::string& oid,
                                uint64_t vid, uint64_t offset,
                                std::string_view data, uint64_t old_length,
                                uint64_t new_length) {
  std::lock_guard lk(mu_);
  Bytes& b = payloads_.at(key(cid, oid, vid));
  if (new_length > old_length) {
    stat_stored_bytes_ += new_length - old_length;
    stat_chunk_count_ += chunks_for_length(new_length, chunk_size()) -
                         chunks_for_length(old_length, chunk_size());
    b.resize(new_length);
  }
  b.replace(offset, data.size(), data);
}

void OracleStore::payload_set(const std::string& cid, const std::string& oid,
                              uint64_t vid, std::string_view data,
                              uint64_t old_length) {
  std::lock_guard lk(mu_);
  stat_stored_bytes_ += data.size();
  stat_stored_bytes_ -= old_length;
  stat_chunk_count_ += chunks_for_length(data.size(), chunk_size());
  stat_chunk_count_ -= chunks_for_length(old_length, chunk_size());
  payloads_[key(cid, oid, vid)] = Bytes(data);
}

StoreBase::FreedStats OracleStore::payload_delete(const std::string& cid,
                                                  const std::string& oid,
                                                  uint64_t vid,
                                                  uint64_t length) {
  std::lock_guard lk(mu_);
  payloads_.erase(key(cid, oid, vid));
  uint64_t chunks = chunks_for_length(length, chunk_size());
  stat_chunk_count_ -= chunks;
  stat_stored_bytes_ -= length;
  return FreedStats{chunks, length};
}

}  // namespace vosd
