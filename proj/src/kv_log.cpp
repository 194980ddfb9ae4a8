#include "vosd/kv_log.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <cerrno>
#include <cstring>

namespace vosd {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'V', 'O', 'S', 'D', 'K', 'V', '0', '1'};
constexpr uint8_t kPut = 1;
constexpr uint8_t kDel = 2;
constexpr uint8_t kCommit = 3;

[[noreturn]] void io_fail(const std::string& what) {
  fail(Err::IoFailure, what + ": " + std::strerror(errno));
}

void append_u32be(Bytes& out, uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

uint32_t crc_of(const char* data, size_t n) {
  return static_cast<uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data), n));
}

// Serialized record; value_offset_in_record marks where the value bytes
// start, for index bookkeeping.
Bytes encode_record(uint8_t type, const Bytes& key, const Bytes& value,
                    uint64_t* value_offset_in_record = nullptr) {
  Bytes out;
  out.push_back(static_cast<char>(type));
  append_u32be(out, static_cast<uint32_t>(key.size()));
  out.append(key);
  append_u32be(out, static_cast<uint32_t>(value.size()));
  if (value_offset_in_record) *value_offset_in_record = out.size();
  out.append(value);
  append_u32be(out, crc_of(out.data(), out.size()));
  return out;
}

}  // namespace

LogKv::LogKv(const fs::path& path) : path_(path) { open_and_recover(); }

LogKv::~LogKv() {
  if (fd_ >= 0) ::close(fd_);
}

void LogKv::open_and_recover() {
  fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT, 0644);
  if (fd_ < 0) io_fail("open " + path_.string());
  uint64_t size = static_cast<uint64_t>(::lseek(fd_, 0, SEEK_END));
  if (size == 0) {
    if (::pwrite(fd_, kMagic, sizeof(kMagic), 0) != sizeof(kMagic))
      io_fail("write header " + path_.string());
    durable_end_ = sizeof(kMagic);
    return;
  }
  Bytes buf(size, '\0');
  uint64_t done = 0;
  while (done < size) {
    ssize_t n = ::pread(fd_, buf.data() + done, size - done, done);
    if (n <= 0) io_fail("read " + path_.string());
    done += static_cast<uint64_t>(n);
  }
  if (size < sizeof(kMagic)) {
    // A file shorter than the header can only be a crash during initial
    // creation; recover it to an empty log. Anything else is corruption.
    if (std::memcmp(buf.data(), kMagic, size))
      fail(Err::CorruptManifest, "bad log header: " + path_.string());
    if (::pwrite(fd_, kMagic, sizeof(kMagic), 0) != sizeof(kMagic))
      io_fail("write header " + path_.string());
    durable_end_ = sizeof(kMagic);
    return;
  }
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)))
    fail(Err::CorruptManifest, "bad log header: " + path_.string());

  auto u32 = [&](uint64_t off) -> uint32_t {
    return (static_cast<uint32_t>(static_cast<uint8_t>(buf[off])) << 24) |
           (static_cast<uint32_t>(static_cast<uint8_t>(buf[off + 1])) << 16) |
           (static_cast<uint32_t>(static_cast<uint8_t>(buf[off + 2])) << 8) |
           static_cast<uint32_t>(static_cast<uint8_t>(buf[off + 3]));
  };

  uint64_t pos = sizeof(kMagic);
  durable_end_ = pos;
  std::vector<std::pair<Bytes, std::optional<ValueLoc>>> pending;
  uint64_t pending_records = 0;
  while (true) {
    uint64_t start = pos;
    if (start + 1 + 4 > size) break;
    uint8_t type = static_cast<uint8_t>(buf[start]);
    if (type != kPut && type != kDel && type != kCommit) break;
    uint32_t key_len = u32(start + 1);
    uint64_t p = start + 5;
    if (p + key_len + 4 > size) break;
    Bytes key = buf.substr(p, key_len);
    p += key_len;
    uint32_t val_len = u32(p);
    p += 4;
    if (p + val_len + 4 > size) break;
    uint64_t value_off = p;
    p += val_len;
    uint32_t crc = u32(p);
    p += 4;
    if (crc != crc_of(buf.data() + start, p - 4 - start)) break;

    if (type == kCommit) {
      for (auto& [k, loc] : pending) {
        if (loc)
          index_[k] = *loc;
        else
          index_.erase(k);
      }
      record_count_ += pending_records;
      pending.clear();
      pending_records = 0;
      durable_end_ = p;
    } else {
      pending_records += 1;
      if (type == kPut)
        pending.emplace_back(std::move(key),
                             ValueLoc{value_off, val_len});
      else
        pending.emplace_back(std::move(key), std::nullopt);
    }
    pos = p;
  }
  // Drop any torn tail or uncommitted batch.
  if (durable_end_ < size) {
    if (::ftruncate(fd_, static_cast<off_t>(durable_end_)) != 0)
      io_fail("truncate " + path_.string());
  }
}

void LogKv::put_batch(const std::vector<Entry>& entries) {
  std::lock_guard lk(mu_);
  Bytes out;
  std::vector<std::pair<const Bytes*, std::optional<ValueLoc>>> updates;
  updates.reserve(entries.size());
  for (const auto& [key, value] : entries) {
    uint64_t voff = 0;
    Bytes rec = encode_record(value ? kPut : kDel, key,
                              value ? *value : Bytes(), &voff);
    if (value)
      updates.emplace_back(&key,
                           ValueLoc{durable_end_ + out.size() + voff,
                                    static_cast<uint32_t>(value->size())});
    else
      updates.emplace_back(&key, std::nullopt);
    out.append(rec);
  }
  out.append(encode_record(kCommit, {}, {}));
  uint64_t done = 0;
  while (done < out.size()) {
    ssize_t n = ::pwrite(fd_, out.data() + done, out.size() - done,
                         durable_end_ + done);
    if (n <= 0) io_fail("append " + path_.string());
    done += static_cast<uint64_t>(n);
  }
  durable_end_ += out.size();
  record_count_ += entries.size();
  for (auto& [key, loc] : updates) {
    if (loc)
      index_[*key] = *loc;
    else
      index_.erase(*key);
  }
}

Bytes LogKv::read_value(const ValueLoc& loc) const {
  Bytes out(loc.length, '\0');
  uint64_t done = 0;
  while (done < loc.length) {
    ssize_t n =
        ::pread(fd_, out.data() + done, loc.length - done, loc.offset + done);
    if (n <= 0) io_fail("read " + path_.string());
    done += static_cast<uint64_t>(n);
  }
  return out;
}

std::optional<Bytes> LogKv::get(const Bytes& key) const {
  std::lock_guard lk(mu_);
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return read_value(it->second);
}

std::vector<std::pair<Bytes, Bytes>> LogKv::scan(const Bytes& prefix) const {
  std::lock_guard lk(mu_);
  std::vector<std::pair<Bytes, Bytes>> out;
  for (auto it = index_.lower_bound(prefix); it != index_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    out.emplace_back(it->first, read_value(it->second));
  }
  return out;
}

CompactReport LogKv::compact() {
  std::lock_guard lk(mu_);
  uint64_t old_size = durable_end_;
  uint64_t old_records = record_count_;

  fs::path tmp = path_;
  tmp += ".compact";
  int nfd = ::open(tmp.c_str(), O_RDWR | O_CREAT | O_TRUNC, 0644);
  if (nfd < 0) io_fail("open " + tmp.string());
  Bytes out(kMagic, sizeof(kMagic));
  std::map<Bytes, ValueLoc> nindex;
  for (const auto& [key, loc] : index_) {
    uint64_t voff = 0;
    Bytes rec = encode_record(kPut, key, read_value(loc), &voff);
    nindex[key] = ValueLoc{out.size() + voff, loc.length};
    out.append(rec);
  }
  if (!index_.empty()) out.append(encode_record(kCommit, {}, {}));
  uint64_t done = 0;
  while (done < out.size()) {
    ssize_t n = ::pwrite(nfd, out.data() + done, out.size() - done, done);
    if (n <= 0) io_fail("write " + tmp.string());
    done += static_cast<uint64_t>(n);
  }
  std::error_code ec;
  fs::rename(tmp, path_, ec);
  if (ec) fail(Err::IoFailure, "rename " + tmp.string() + ": " + ec.message());
  ::close(fd_);
  fd_ = nfd;
  durable_end_ = out.size();
  record_count_ = index_.size();
  index_ = std::move(nindex);

  CompactReport report;
  report.records_dropped = old_records - record_count_;
  report.bytes_reclaimed = old_size > durable_end_ ? old_size - durable_end_ : 0;
  return report;
}

uint64_t LogKv::log_size() const {
  std::lock_guard lk(mu_);
  return durable_end_;
}

}  // namespace vosd
