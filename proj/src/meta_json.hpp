#pragma once

// JSON encoding of the metadata records shared by the file backend
// (whole-collection manifest) and the kv backend (per-record values).

#include <json.hpp>

#include "vosd/meta.hpp"
#include "vosd/types.hpp"

namespace vosd::detail {

using nlohmann::json;

inline json version_to_json(const VersionMeta& v) {
  json j;
  j["length"] = v.length;
  j["parent"] = v.parent ? json(*v.parent) : json(nullptr);
  j["children"] = v.children;
  j["frozen"] = v.frozen;
  return j;
}

inline VersionMeta version_from_json(uint64_t vid, const json& j) {
  VersionMeta v;
  v.vid = vid;
  v.length = j.at("length").get<uint64_t>();
  if (!j.at("parent").is_null()) v.parent = j.at("parent").get<uint64_t>();
  for (const auto& c : j.at("children")) v.children.insert(c.get<uint64_t>());
  v.frozen = j.at("frozen").get<bool>();
  return v;
}

inline json cversion_to_json(const CollectionVersionMeta& cv) {
  json j;
  j["members"] = cv.members;
  j["parent"] = cv.parent ? json(*cv.parent) : json(nullptr);
  j["frozen"] = cv.frozen;
  return j;
}

inline CollectionVersionMeta cversion_from_json(uint64_t cvid, const json& j) {
  CollectionVersionMeta cv;
  cv.cvid = cvid;
  cv.members = j.at("members").get<std::map<std::string, uint64_t>>();
  if (!j.at("parent").is_null()) cv.parent = j.at("parent").get<uint64_t>();
  cv.frozen = j.at("frozen").get<bool>();
  return cv;
}

inline json manifest_to_json(const CollectionMeta& m, int format_version) {
  json j;
  j["format_version"] = format_version;
  j["next_cvid"] = m.next_cvid;
  json objects = json::object();
  for (const auto& [oid, om] : m.objects) {
    json versions = json::object();
    for (const auto& [vid, vm] : om.versions)
      versions[std::to_string(vid)] = version_to_json(vm);
    objects[oid] = {{"next_vid", om.next_vid}, {"versions", versions}};
  }
  j["objects"] = objects;
  json cversions = json::object();
  for (const auto& [cvid, cv] : m.cversions)
    cversions[std::to_string(cvid)] = cversion_to_json(cv);
  j["cversions"] = cversions;
  j["pointers"] = m.pointers;
  return j;
}

inline CollectionMeta manifest_from_json(const json& j) {
  CollectionMeta m;
  if (j.at("format_version").get<int>() != 1)
    fail(Err::CorruptManifest, "unsupported manifest format_version");
  m.next_cvid = j.at("next_cvid").get<uint64_t>();
  for (const auto& [oid, oj] : j.at("objects").items()) {
    ObjectMeta om;
    om.next_vid = oj.at("next_vid").get<uint64_t>();
    for (const auto& [vids, vj] : oj.at("versions").items()) {
      uint64_t vid = std::stoull(vids);
      om.versions[vid] = version_from_json(vid, vj);
    }
    m.objects[oid] = std::move(om);
  }
  for (const auto& [cvids, cvj] : j.at("cversions").items()) {
    uint64_t cvid = std::stoull(cvids);
    m.cversions[cvid] = cversion_from_json(cvid, cvj);
  }
  m.pointers = j.at("pointers").get<std::map<std::string, uint64_t>>();
  return m;
}

// Structural validation shared by backends that load metadata from disk.
// Throws CorruptManifest naming the offending entry.
inline void validate_meta(const std::string& cid, const CollectionMeta& m) {
  for (const auto& [oid, om] : m.objects) {
    for (const auto& [vid, vm] : om.versions) {
      if (vid >= om.next_vid)
        fail(Err::CorruptManifest, cid + "/" + oid + "@" +
                                       std::to_string(vid) +
                                       ": vid beyond counter");
      if (vm.parent) {
        auto pit = om.versions.find(*vm.parent);
        if (pit == om.versions.end() || !pit->second.children.count(vid))
          fail(Err::CorruptManifest, cid + "/" + oid + "@" +
                                         std::to_string(vid) +
                                         ": broken parent link");
      }
      for (uint64_t c : vm.children) {
        auto cit = om.versions.find(c);
        if (cit == om.versions.end() || cit->second.parent != vid)
          fail(Err::CorruptManifest, cid + "/" + oid + "@" +
                                         std::to_string(vid) +
                                         ": broken child link");
      }
    }
  }
  for (const auto& [cvid, cv] : m.cversions) {
    if (cvid >= m.next_cvid)
      fail(Err::CorruptManifest,
           cid + "/cv" + std::to_string(cvid) + ": cvid beyond counter");
    if (cv.parent && !m.cversions.count(*cv.parent))
      fail(Err::CorruptManifest,
           cid + "/cv" + std::to_string(cvid) + ": missing parent");
    for (const auto& [oid, vid] : cv.members) {
      auto oit = m.objects.find(oid);
      if (oit == m.objects.end() || !oit->second.versions.count(vid))
        fail(Err::CorruptManifest, cid + "/cv" + std::to_string(cvid) +
                                       ": member " + oid + "@" +
                                       std::to_string(vid) + " missing");
    }
  }
  for (const auto& [name, tgt] : m.pointers) {
    if (!m.cversions.count(tgt))
      fail(Err::CorruptManifest, cid + ": pointer " + name + " dangles");
  }
}

}  // namespace vosd::detail
