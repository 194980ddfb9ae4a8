#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace vosd {

// Object payloads and raw byte buffers.
using Bytes = std::string;

constexpr uint64_t kDefaultChunkSize = 16 * 1024;

enum class Err {
  AlreadyExists,
  NoSuchCollection,
  NoSuchObject,
  NoSuchVersion,
  NoSuchPointer,
  FrozenVersion,
  OutOfBounds,
  VersionInUse,
  DanglingTarget,
  CorruptManifest,
  IoFailure,
  TxNotActive,
  CkptNotActive,
  UninitializedHct,
  UninitializedHrc,
  ConcurrentCheckpoint,
  TxContention,
  NotLinearChain,
  InUse,
  InvalidSpec,
  InvalidArgument,
  VerificationFailure,
  BadRequest,
  UnknownOp,
  Timeout,
  ConnectionClosed,
  BindFailure,
};

const char* err_code_name(Err e);
std::optional<Err> err_code_from_name(const std::string& name);

class VosdError : public std::runtime_error {
 public:
  VosdError(Err code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Err code() const { return code_; }
  const char* code_name() const { return err_code_name(code_); }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) {
  throw VosdError(code, what);
}

// Validates an object or collection name: non-empty, at most 255 bytes,
// no path separators or NUL (the file backend maps names to directories).
void validate_name(const std::string& name, const char* kind);

struct ByteRange {
  uint64_t offset = 0;
  uint64_t length = 0;
  bool operator==(const ByteRange&) const = default;
};

struct StoreStats {
  uint64_t chunk_count = 0;
  uint64_t stored_bytes = 0;
  uint64_t bytes_copied_on_snapshot = 0;
  uint64_t bytes_written = 0;
};

struct GcReport {
  uint64_t versions_removed = 0;
  uint64_t chunks_freed = 0;
  uint64_t bytes_freed = 0;
};

struct CompactReport {
  uint64_t records_dropped = 0;
  uint64_t bytes_reclaimed = 0;
};

// Populated by file-backend open() when it discards leftovers of an
// interrupted operation.
struct RecoveryReport {
  std::vector<std::string> orphan_files_removed;
};

// Well-known named pointers.
inline constexpr const char* kHead = "HEAD";
inline constexpr const char* kHct = "HCT";
inline constexpr const char* kHrc = "HRC";

inline uint64_t chunks_for_length(uint64_t length, uint64_t chunk_size) {
  return (length + chunk_size - 1) / chunk_size;
}

}  // namespace vosd
