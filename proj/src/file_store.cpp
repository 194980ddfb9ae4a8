#include "vosd/file_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <system_error>

#include "meta_json.hpp"

namespace vosd {

namespace fs = std::filesystem;
using detail::json;

namespace {

[[noreturn]] void io_fail(const std::string& what) {
  fail(Err::IoFailure, what + ": " + std::strerror(errno));
}

void write_file_atomic(const fs::path& target, std::string_view data) {
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) io_fail("open " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) io_fail("write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) fail(Err::IoFailure, "rename " + tmp.string() + ": " + ec.message());
}

uint64_t resolve_chunk_size(const fs::path& root, uint64_t requested) {
  fs::path cfg = root / "store.json";
  if (fs::exists(cfg)) {
    std::ifstream in(cfg);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("chunk_size"))
      fail(Err::CorruptManifest, "unreadable store config: " + cfg.string());
    return j.at("chunk_size").get<uint64_t>();
  }
  return requested;
}

}  // namespace

FileStore::FileStore(const fs::path& root, uint64_t chunk_size)
    : StoreBase(resolve_chunk_size(root, chunk_size)), root_(root) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec)
    fail(Err::IoFailure, "create " + root_.string() + ": " + ec.message());
  fs::path cfg = root_ / "store.json";
  if (!fs::exists(cfg)) {
    json j{{"format_version", kFormatVersion}, {"chunk_size", this->chunk_size()}};
    write_file_atomic(cfg, j.dump());
  }
  load(root_);
}

fs::path FileStore::dat_path(const std::string& cid, const std::string& oid,
                             uint64_t vid) const {
  return root_ / cid / "objects" / oid / (std::to_string(vid) + ".dat");
}

void FileStore::load(const fs::path& root) {
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string cid = entry.path().filename().string();
    fs::path manifest = entry.path() / "manifest.json";
    // Crash leftovers: a manifest temp never renamed into place.
    fs::path manifest_tmp = entry.path() / "manifest.json.tmp";
    if (fs::exists(manifest_tmp)) {
      recovery_.orphan_files_removed.push_back(manifest_tmp.string());
      fs::remove(manifest_tmp);
    }
    if (!fs::exists(manifest)) {
      // Directory created but the first manifest write never landed.
      recovery_.orphan_files_removed.push_back(entry.path().string());
      continue;
    }
    std::ifstream in(manifest);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded())
      fail(Err::CorruptManifest, "unparsable manifest: " + manifest.string());
    detail::CollectionMeta meta = detail::manifest_from_json(j);
    detail::validate_meta(cid, meta);

    // Every manifest version must be backed by a .dat of exactly its
    // length; payload files the manifest does not know about are orphans.
    std::set<fs::path> expected;
    for (const auto& [oid, om] : meta.objects) {
      for (const auto& [vid, vm] : om.versions) {
        fs::path p = dat_path(cid, oid, vid);
        expected.insert(p);
        std::error_code ec;
        uint64_t sz = fs::exists(p) ? fs::file_size(p, ec) : 0;
        if (!fs::exists(p) || ec || sz != vm.length)
          fail(Err::CorruptManifest,
               cid + "/" + oid + "@" + std::to_string(vid) +
                   ": payload size mismatch (manifest " +
                   std::to_string(vm.length) + ", file " + std::to_string(sz) +
                   ")");
        stat_chunk_count_ += chunks_for_length(vm.length, this->chunk_size());
        stat_stored_bytes_ += vm.length;
      }
    }
    fs::path objdir = entry.path() / "objects";
    if (fs::exists(objdir)) {
      for (const auto& od : fs::recursive_directory_iterator(objdir)) {
        if (!od.is_regular_file()) continue;
        if (!expected.count(od.path())) {
          recovery_.orphan_files_removed.push_back(od.path().string());
          fs::remove(od.path());
        }
      }
    }
    restore_collection(cid, std::move(meta));
  }
}

void FileStore::persist(const std::string& cid, const CollectionMeta& meta,
                        const std::vector<MetaChange>& changes) {
  if (changes.empty()) return;
  fs::create_directories(root_ / cid);
  json j = detail::manifest_to_json(meta, kFormatVersion);
  write_file_atomic(root_ / cid / "manifest.json", j.dump());
}

void FileStore::payload_create(const std::string& cid, const std::string& oid,
                               uint64_t vid, std::string_view data) {
  fs::path p = dat_path(cid, oid, vid);
  fs::create_directories(p.parent_path());
  write_file_atomic(p, data);
  stat_chunk_count_ += chunks_for_length(data.size(), chunk_size());
  stat_stored_bytes_ += data.size();
}

uint64_t FileStore::payload_clone(const std::string& cid,
                                  const std::string& oid, uint64_t src_vid,
                                  uint64_t dst_vid, uint64_t length) {
  Bytes data = payload_read(cid, oid, src_vid, 0, length);
  payload_create(cid, oid, dst_vid, data);
  return length;
}

Bytes FileStore::payload_read(const std::string& cid, const std::string& oid,
                              uint64_t vid, uint64_t offset,
                              uint64_t length) const {
  fs::path p = dat_path(cid, oid, vid);
  int fd = ::open(p.c_str(), O_RDONLY);
  if (fd < 0) io_fail("open " + p.string());
  Bytes out(length, '\0');
  uint64_t done = 0;
  while (done < length) {
    ssize_t n = ::pread(fd, out.data() + done, length - done, offset + done);
    if (n <= 0) {
      ::close(fd);
      io_fail("pread " + p.string());
    }
    done += static_cast<uint64_t>(n);
  }
  ::close(fd);
  return out;
}

void FileStore::payload_write(const std::string& cid, const std::string& oid,
                              uint64_t vid, uint64_t offset,
                              std::string_view data, uint64_t old_length,
                              uint64_t new_length) {
  fs::path p = dat_path(cid, oid, vid);
  int fd = ::open(p.c_str(), O_WRONLY);
  if (fd < 0) io_fail("open " + p.string());
  uint64_t done = 0;
  while (done < data.size()) {
    ssize_t n =
        ::pwrite(fd, data.data() + done, data.size() - done, offset + done);
    if (n <= 0) {
      ::close(fd);
      io_fail("pwrite " + p.string());
    }
    done += static_cast<uint64_t>(n);
  }
  ::close(fd);
  if (new_length > old_length) {
    stat_stored_bytes_ += new_length - old_length;
    stat_chunk_count_ += chunks_for_length(new_length, chunk_size()) -
                         chunks_for_length(old_length, chunk_size());
  }
}

void FileStore::payload_set(const std::string& cid, const std::string& oid,
                            uint64_t vid, std::string_view data,
                            uint64_t old_length) {
  write_file_atomic(dat_path(cid, oid, vid), data);
  stat_stored_bytes_ += data.size();
  stat_stored_bytes_ -= old_length;
  stat_chunk_count_ += chunks_for_length(data.size(), chunk_size());
  stat_chunk_count_ -= chunks_for_length(old_length, chunk_size());
}

StoreBase::FreedStats FileStore::payload_delete(const std::string& cid,
                                                const std::string& oid,
                                                uint64_t vid,
                                                uint64_t length) {
  std::error_code ec;
  fs::remove(dat_path(cid, oid, vid), ec);
  uint64_t chunks = chunks_for_length(length, chunk_size());
  stat_chunk_count_ -= chunks;
  stat_stored_bytes_ -= length;
  return FreedStats{chunks, length};
}

}  // namespace vosd
