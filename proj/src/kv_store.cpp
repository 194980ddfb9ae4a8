#include "vosd/kv_store.hpp"

#include <algorithm>

#include "meta_json.hpp"

namespace vosd {

namespace fs = std::filesystem;
using detail::json;

namespace {

Bytes be64(uint64_t v) {
  Bytes out(8, '\0');
  for (int i = 7; i >= 0; --i) {
    out[i] = static_cast<char>(v & 0xff);
    v >>= 8;
  }
  return out;
}

uint64_t from_be64(std::string_view b) {
  uint64_t v = 0;
  for (char c : b) v = (v << 8) | static_cast<uint8_t>(c);
  return v;
}

Bytes key2(char ns, const std::string& a) { return Bytes(1, ns) + a; }
Bytes key3(char ns, const std::string& a, const std::string& b) {
  return Bytes(1, ns) + a + '\0' + b;
}
Bytes key3v(char ns, const std::string& a, uint64_t id) {
  return Bytes(1, ns) + a + '\0' + be64(id);
}
Bytes key4v(char ns, const std::string& a, const std::string& b, uint64_t id) {
  return Bytes(1, ns) + a + '\0' + b + '\0' + be64(id);
}

fs::path log_path(const fs::path& root) { return root / "kv.log"; }

uint64_t resolve_chunk_size(const fs::path& root, uint64_t requested) {
  if (!fs::exists(log_path(root))) return requested;
  LogKv probe(log_path(root));
  auto cfg = probe.get("S");
  if (!cfg) return requested;
  json j = json::parse(*cfg, nullptr, false);
  if (j.is_discarded() || !j.contains("chunk_size"))
    fail(Err::CorruptManifest, "unreadable kv store config");
  return j.at("chunk_size").get<uint64_t>();
}

}  // namespace

Bytes KvStore::payload_key(const std::string& cid, const std::string& oid,
                           uint64_t vid) {
  return key4v('d', cid, oid, vid);
}

KvStore::KvStore(const fs::path& root, uint64_t chunk_size)
    : StoreBase(resolve_chunk_size(root, chunk_size)) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) fail(Err::IoFailure, "create " + root.string() + ": " + ec.message());
  log_ = std::make_unique<LogKv>(log_path(root));
  if (!log_->get("S")) {
    json cfg{{"format_version", 1}, {"chunk_size", this->chunk_size()}};
    log_->put_batch({{Bytes("S"), cfg.dump()}});
  }
  load();
}

void KvStore::load() {
  for (const auto& [key, value] : log_->scan("C")) {
    const std::string cid = key.substr(1);
    detail::CollectionMeta meta;
    json cj = json::parse(value);
    meta.next_cvid = cj.at("next_cvid").get<uint64_t>();
    for (const auto& [k, v] : log_->scan(Bytes("o") + cid + '\0')) {
      const std::string oid = k.substr(2 + cid.size());
      meta.objects[oid].next_vid =
          json::parse(v).at("next_vid").get<uint64_t>();
    }
    for (const auto& [k, v] : log_->scan(Bytes("v") + cid + '\0')) {
      std::string rest = k.substr(2 + cid.size());
      size_t sep = rest.find('\0');
      const std::string oid = rest.substr(0, sep);
      uint64_t vid = from_be64(std::string_view(rest).substr(sep + 1, 8));
      meta.objects[oid].versions[vid] =
          detail::version_from_json(vid, json::parse(v));
      stat_chunk_count_ += chunks_for_length(
          meta.objects[oid].versions[vid].length, chunk_size());
      stat_stored_bytes_ += meta.objects[oid].versions[vid].length;
    }
    for (const auto& [k, v] : log_->scan(Bytes("c") + cid + '\0')) {
      uint64_t cvid =
          from_be64(std::string_view(k).substr(2 + cid.size(), 8));
      meta.cversions[cvid] = detail::cversion_from_json(cvid, json::parse(v));
    }
    for (const auto& [k, v] : log_->scan(Bytes("p") + cid + '\0')) {
      meta.pointers[k.substr(2 + cid.size())] = from_be64(v);
    }
    detail::validate_meta(cid, meta);
    restore_collection(cid, std::move(meta));
  }
}

void KvStore::stage_put(Bytes key, Bytes value) {
  std::lock_guard lk(pending_mu_);
  pending_overlay_[key] = value;
  pending_.emplace_back(std::move(key), std::move(value));
}

void KvStore::stage_del(Bytes key) {
  std::lock_guard lk(pending_mu_);
  pending_overlay_[key] = std::nullopt;
  pending_.emplace_back(std::move(key), std::nullopt);
}

Bytes KvStore::read_payload_full(const std::string& cid,
                                 const std::string& oid, uint64_t vid) const {
  Bytes key = payload_key(cid, oid, vid);
  {
    std::lock_guard lk(pending_mu_);
    auto it = pending_overlay_.find(key);
    if (it != pending_overlay_.end()) {
      if (!it->second) fail(Err::NoSuchVersion, "payload staged for deletion");
      return *it->second;
    }
  }
  auto v = log_->get(key);
  if (!v) fail(Err::IoFailure, "missing payload record");
  return *v;
}

void KvStore::payload_create(const std::string& cid, const std::string& oid,
                             uint64_t vid, std::string_view data) {
  stage_put(payload_key(cid, oid, vid), Bytes(data));
  stat_chunk_count_ += chunks_for_length(data.size(), chunk_size());
  stat_stored_bytes_ += data.size();
}

uint64_t KvStore::payload_clone(const std::string& cid, const std::string& oid,
                                uint64_t src_vid, uint64_t dst_vid,
                                uint64_t length) {
  stage_put(payload_key(cid, oid, dst_vid),
            read_payload_full(cid, oid, src_vid));
  stat_chunk_count_ += chunks_for_length(length, chunk_size());
  stat_stored_bytes_ += length;
  return length;
}

Bytes KvStore::payload_read(const std::string& cid, const std::string& oid,
                            uint64_t vid, uint64_t offset,
                            uint64_t length) const {
  return read_payload_full(cid, oid, vid).substr(offset, length);
}

void KvStore::payload_write(const std::string& cid, const std::string& oid,
                            uint64_t vid, uint64_t offset,
                            std::string_view data, uint64_t old_length,
                            uint64_t new_length) {
  Bytes b = read_payload_full(cid, oid, vid);
  if (new_length > old_length) {
    b.resize(new_length);
    stat_stored_bytes_ += new_length - old_length;
    stat_chunk_count_ += chunks_for_length(new_length, chunk_size()) -
                         chunks_for_length(old_length, chunk_size());
  }
  b.replace(offset, data.size(), data);
  stage_put(payload_key(cid, oid, vid), std::move(b));
}

void KvStore::payload_set(const std::string& cid, const std::string& oid,
                          uint64_t vid, std::string_view data,
                          uint64_t old_length) {
  stage_put(payload_key(cid, oid, vid), Bytes(data));
  stat_stored_bytes_ += data.size();
  stat_stored_bytes_ -= old_length;
  stat_chunk_count_ += chunks_for_length(data.size(), chunk_size());
  stat_chunk_count_ -= chunks_for_length(old_length, chunk_size());
}

StoreBase::FreedStats KvStore::payload_delete(const std::string& cid,
                                              const std::string& oid,
                                              uint64_t vid, uint64_t length) {
  stage_del(payload_key(cid, oid, vid));
  uint64_t chunks = chunks_for_length(length, chunk_size());
  stat_chunk_count_ -= chunks;
  stat_stored_bytes_ -= length;
  return FreedStats{chunks, length};
}

void KvStore::persist(const std::string& cid, const CollectionMeta& meta,
                      const std::vector<MetaChange>& changes) {
  std::lock_guard lk(pending_mu_);
  for (const auto& c : changes) {
    switch (c.kind) {
      case MetaChange::kCollection: {
        json j{{"next_cvid", meta.next_cvid}};
        pending_.emplace_back(key2('C', cid), j.dump());
        break;
      }
      case MetaChange::kObjectCounter: {
        json j{{"next_vid", meta.objects.at(c.oid).next_vid}};
        pending_.emplace_back(key3('o', cid, c.oid), j.dump());
        break;
      }
      case MetaChange::kVersion: {
        Bytes key = key4v('v', cid, c.oid, c.id);
        if (c.removed) {
          pending_.emplace_back(std::move(key), std::nullopt);
        } else {
          const auto& vm = meta.objects.at(c.oid).versions.at(c.id);
          pending_.emplace_back(std::move(key),
                                detail::version_to_json(vm).dump());
        }
        break;
      }
      case MetaChange::kCVersion: {
        Bytes key = key3v('c', cid, c.id);
        if (c.removed) {
          pending_.emplace_back(std::move(key), std::nullopt);
        } else {
          const auto& cv = meta.cversions.at(c.id);
          pending_.emplace_back(std::move(key),
                                detail::cversion_to_json(cv).dump());
        }
        break;
      }
      case MetaChange::kPointer: {
        pending_.emplace_back(key3('p', cid, c.name),
                              be64(meta.pointers.at(c.name)));
        break;
      }
    }
  }
  if (!pending_.empty()) log_->put_batch(pending_);
  pending_.clear();
  pending_overlay_.clear();
}

}  // namespace vosd
