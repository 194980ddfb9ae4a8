#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace vosd::detail {

struct VersionMeta {
  uint64_t vid = 0;
  uint64_t length = 0;
  std::optional<uint64_t> parent;
  std::set<uint64_t> children;
  bool frozen = false;
};

struct ObjectMeta {
  uint64_t next_vid = 1;
  std::map<uint64_t, VersionMeta> versions;
};

struct CollectionVersionMeta {
  uint64_t cvid = 0;
  std::map<std::string, uint64_t> members;
  std::optional<uint64_t> parent;
  bool frozen = false;
};

struct CollectionMeta {
  uint64_t next_cvid = 1;
  std::map<std::string, ObjectMeta> objects;
  std::map<uint64_t, CollectionVersionMeta> cversions;
  std::map<std::string, uint64_t> pointers;
};

}  // namespace vosd::detail
