#include "vosd/types.hpp"

#include <array>
#include <utility>

namespace vosd {

namespace {

constexpr std::array<std::pair<Err, const char*>, 27> kErrNames{{
    {Err::AlreadyExists, "already_exists"},
    {Err::NoSuchCollection, "no_such_collection"},
    {Err::NoSuchObject, "no_such_object"},
    {Err::NoSuchVersion, "no_such_version"},
    {Err::NoSuchPointer, "no_such_pointer"},
    {Err::FrozenVersion, "frozen_version"},
    {Err::OutOfBounds, "out_of_bounds"},
    {Err::VersionInUse, "version_in_use"},
    {Err::DanglingTarget, "dangling_target"},
    {Err::CorruptManifest, "corrupt_manifest"},
    {Err::IoFailure, "io_failure"},
    {Err::TxNotActive, "tx_not_active"},
    {Err::CkptNotActive, "ckpt_not_active"},
    {Err::UninitializedHct, "uninitialized_hct"},
    {Err::UninitializedHrc, "uninitialized_hrc"},
    {Err::ConcurrentCheckpoint, "concurrent_checkpoint"},
    {Err::TxContention, "tx_contention"},
    {Err::NotLinearChain, "not_linear_chain"},
    {Err::InUse, "in_use"},
    {Err::InvalidSpec, "invalid_spec"},
    {Err::InvalidArgument, "invalid_argument"},
    {Err::VerificationFailure, "verification_failure"},
    {Err::BadRequest, "bad_request"},
    {Err::UnknownOp, "unknown_op"},
    {Err::Timeout, "timeout"},
    {Err::ConnectionClosed, "connection_closed"},
    {Err::BindFailure, "bind_failure"},
}};

}  // namespace

const char* err_code_name(Err e) {
  for (const auto& [code, name] : kErrNames) {
    if (code == e) return name;
  }
  return "unknown";
}

std::optional<Err> err_code_from_name(const std::string& name) {
  for (const auto& [code, n] : kErrNames) {
    if (name == n) return code;
  }
  return std::nullopt;
}

void validate_name(const std::string& name, const char* kind) {
  if (name.empty())
    fail(Err::InvalidArgument, std::string(kind) + " name is empty");
  if (name.size() > 255)
    fail(Err::InvalidArgument, std::string(kind) + " name exceeds 255 bytes");
  if (name == "." || name == "..")
    fail(Err::InvalidArgument, std::string(kind) + " name is reserved");
  for (char c : name) {
    if (c == '/' || c == '\\' || c == '\0')
      fail(Err::InvalidArgument,
           std::string(kind) + " name contains a path separator or NUL");
  }
}

}  // namespace vosd
