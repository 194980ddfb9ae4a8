#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vosd/store.hpp"

namespace vosd::bench {

// Version-creation / version-retrieval workload parameters. Defaults are
// the desk-scale CI profile; full scale (100 objects x 100 versions x
// 4 MiB x 64 mods) is a flag away in the CLI.
struct WorkloadSpec {
  uint64_t n_objects = 10;
  uint64_t n_versions = 10;
  uint64_t object_size = 256 * 1024;
  uint64_t mods_per_round = 4;
  uint64_t mod_size = 16 * 1024;  // must equal the store's chunk_size
  uint64_t seed = 1;
};

// Fully deterministic plan: round r (0-based, producing version r+2)
// modifies mods[r][o] chunk indices of object o. Chunk indices are drawn
// uniformly with replacement (duplicates within a round are kept), payload
// bytes come from a seeded PRNG stream, so the same seed always yields a
// byte-identical plan.
//
// PRNG family: std::mt19937_64 for index draws (modulo-reduced), a
// splitmix64 stream keyed by (seed, object, round, mod) for payload bytes.
struct WorkloadPlan {
  WorkloadSpec spec;
  std::vector<std::string> object_names;
  std::vector<std::vector<std::vector<uint32_t>>> mods;

  uint64_t chunks_per_object() const {
    return spec.object_size / spec.mod_size;
  }
};

WorkloadPlan generate(const WorkloadSpec& spec);

// Deterministic payload streams used by both the runner and the
// independent replay oracle.
Bytes initial_content(const WorkloadSpec& spec, uint64_t object_index);
Bytes mod_payload(const WorkloadSpec& spec, uint64_t object_index,
                  uint64_t round, uint64_t mod_index);
// Byte-array replay of object `object_index` at version `vid` (1-based),
// independent of any Store implementation.
Bytes expected_bytes(const WorkloadPlan& plan, uint64_t object_index,
                     uint64_t vid);

struct CreationReport {
  std::string backend;
  WorkloadSpec spec;
  double f_ms = 0;
  std::vector<double> s_ms;  // one entry per snapshot round
  std::vector<double> m_ms;  // one entry per modification round
  bool warmup_excluded = true;  // first round left out of the means
  StoreStats f_delta, s_delta, m_delta;

  double s_mean_ms() const;
  double m_mean_ms() const;
};

struct QueryRecord {
  std::string oid;
  uint64_t vid = 0;
  double ms = 0;
  uint64_t bytes = 0;
};

struct RetrievalReport {
  std::string backend;
  WorkloadSpec spec;
  uint64_t query_seed = 0;
  std::vector<QueryRecord> latest;
  std::vector<QueryRecord> random;

  double latest_mean_ms() const;
  double random_mean_ms() const;
};

// Runs the creation workload against a fresh store: fill (F), then per
// round a collection snapshot (S) followed by the round's chunk writes
// (M). HEAD tracks the newest collection version. The store is left with
// the full version history for run_retrieval.
CreationReport run_creation(const WorkloadPlan& plan, Store& store,
                            const std::string& cid = "bench");

// n_queries whole-object reads of the latest version plus n_queries of a
// uniformly random version in [1, n_versions], objects chosen uniformly.
// Every read is verified byte-for-byte against the replay oracle
// (verification excluded from timings; mismatch is a hard failure).
RetrievalReport run_retrieval(const WorkloadPlan& plan, Store& store,
                              const std::string& cid = "bench",
                              uint64_t n_queries = 100, uint64_t seed = 1);

enum class Format { Table, Tsv, Json };
Format format_from_name(const std::string& name);

std::string render_creation(const std::vector<CreationReport>& reports,
                            Format format);
std::string render_retrieval(const std::vector<RetrievalReport>& reports,
                             Format format);
// Renders a report file previously produced with Format::Json (either
// kind; multiple reports as a JSON array also accepted).
std::string render_json_text(const std::string& json_text, Format format);

}  // namespace vosd::bench
