#include "vosd/bench.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace vosd::bench {

using nlohmann::json;

// Stamped into JSON reports so results stay attributable to a build.
constexpr const char* kArtifactVersion = "1.0.0";

namespace {

uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Bytes prng_bytes(uint64_t key, uint64_t n) {
  Bytes out;
  out.reserve(n);
  uint64_t state = key;
  while (out.size() < n) {
    uint64_t w = splitmix64(state);
    for (int i = 0; i < 8 && out.size() < n; ++i) {
      out.push_back(static_cast<char>(w & 0xff));
      w >>= 8;
    }
  }
  return out;
}

uint64_t mix_key(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  uint64_t s = seed;
  uint64_t k = splitmix64(s) ^ (a * 0x9e3779b97f4a7c15ULL);
  k ^= splitmix64(s) + b * 0xc2b2ae3d27d4eb4fULL;
  k ^= splitmix64(s) + c * 0x165667b19e3779f9ULL;
  return k;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

StoreStats delta(const StoreStats& before, const StoreStats& after) {
  StoreStats d;
  d.chunk_count = after.chunk_count - before.chunk_count;
  d.stored_bytes = after.stored_bytes - before.stored_bytes;
  d.bytes_copied_on_snapshot =
      after.bytes_copied_on_snapshot - before.bytes_copied_on_snapshot;
  d.bytes_written = after.bytes_written - before.bytes_written;
  return d;
}

double mean_excluding_warmup(const std::vector<double>& xs, bool skip_first) {
  size_t begin = skip_first && xs.size() > 1 ? 1 : 0;
  if (xs.size() <= begin) return 0;
  return std::accumulate(xs.begin() + begin, xs.end(), 0.0) /
         static_cast<double>(xs.size() - begin);
}

double mean_ms(const std::vector<QueryRecord>& qs) {
  if (qs.empty()) return 0;
  double sum = 0;
  for (const auto& q : qs) sum += q.ms;
  return sum / static_cast<double>(qs.size());
}

json stats_to_json(const StoreStats& s) {
  return json{{"chunk_count", s.chunk_count},
              {"stored_bytes", s.stored_bytes},
              {"bytes_copied_on_snapshot", s.bytes_copied_on_snapshot},
              {"bytes_written", s.bytes_written}};
}

json spec_to_json(const WorkloadSpec& s) {
  return json{{"n_objects", s.n_objects},     {"n_versions", s.n_versions},
              {"object_size", s.object_size}, {"mods_per_round", s.mods_per_round},
              {"mod_size", s.mod_size},       {"seed", s.seed}};
}

std::string fmt_ms(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

WorkloadPlan generate(const WorkloadSpec& spec) {
  if (spec.n_objects == 0 || spec.n_versions == 0 || spec.object_size == 0 ||
      spec.mod_size == 0)
    fail(Err::InvalidSpec, "workload dimensions must be positive");
  if (spec.object_size % spec.mod_size != 0)
    fail(Err::InvalidSpec, "object_size must be a multiple of mod_size");
  if (spec.mods_per_round * spec.mod_size > spec.object_size)
    fail(Err::InvalidSpec, "mods_per_round * mod_size exceeds object_size");

  WorkloadPlan plan;
  plan.spec = spec;
  for (uint64_t o = 0; o < spec.n_objects; ++o) {
    char name[32];
    std::snprintf(name, sizeof(name), "obj%03llu",
                  static_cast<unsigned long long>(o));
    plan.object_names.push_back(name);
  }
  const uint64_t n_chunks = plan.chunks_per_object();
  std::mt19937_64 rng(spec.seed);
  plan.mods.resize(spec.n_versions > 0 ? spec.n_versions - 1 : 0);
  for (auto& round : plan.mods) {
    round.resize(spec.n_objects);
    for (auto& per_object : round) {
      per_object.reserve(spec.mods_per_round);
      for (uint64_t k = 0; k < spec.mods_per_round; ++k)
        per_object.push_back(static_cast<uint32_t>(rng() % n_chunks));
    }
  }
  return plan;
}

Bytes initial_content(const WorkloadSpec& spec, uint64_t object_index) {
  return prng_bytes(mix_key(spec.seed, object_index, 0, 0), spec.object_size);
}

Bytes mod_payload(const WorkloadSpec& spec, uint64_t object_index,
                  uint64_t round, uint64_t mod_index) {
  return prng_bytes(mix_key(spec.seed, object_index, round + 1, mod_index + 1),
                    spec.mod_size);
}

Bytes expected_bytes(const WorkloadPlan& plan, uint64_t object_index,
                     uint64_t vid) {
  if (vid < 1 || vid > plan.spec.n_versions)
    fail(Err::NoSuchVersion, "vid outside plan history");
  Bytes b = initial_content(plan.spec, object_index);
  for (uint64_t r = 0; r + 2 <= vid; ++r) {
    const auto& idxs = plan.mods[r][object_index];
    for (uint64_t k = 0; k < idxs.size(); ++k) {
      Bytes payload = mod_payload(plan.spec, object_index, r, k);
      b.replace(static_cast<size_t>(idxs[k]) * plan.spec.mod_size,
                payload.size(), payload);
    }
  }
  return b;
}

double CreationReport::s_mean_ms() const {
  return mean_excluding_warmup(s_ms, warmup_excluded);
}
double CreationReport::m_mean_ms() const {
  return mean_excluding_warmup(m_ms, warmup_excluded);
}
double RetrievalReport::latest_mean_ms() const { return mean_ms(latest); }
double RetrievalReport::random_mean_ms() const { return mean_ms(random); }

CreationReport run_creation(const WorkloadPlan& plan, Store& store,
                            const std::string& cid) {
  const WorkloadSpec& spec = plan.spec;
  if (spec.mod_size != store.chunk_size())
    fail(Err::InvalidSpec, "mod_size must equal the store's chunk_size");
  if (store.collection_exists(cid))
    fail(Err::InvalidSpec, "run_creation needs a fresh collection");

  CreationReport report;
  report.backend = store.backend_name();
  report.spec = spec;

  uint64_t cvid = store.create_collection(cid);
  StoreStats before = store.stats();
  auto t0 = std::chrono::steady_clock::now();
  for (uint64_t o = 0; o < spec.n_objects; ++o)
    store.create_object(cid, cvid, plan.object_names[o],
                        initial_content(spec, o));
  report.f_ms = ms_since(t0);
  report.f_delta = delta(before, store.stats());

  auto accumulate_stats = [](StoreStats& into, const StoreStats& d) {
    into.chunk_count += d.chunk_count;
    into.stored_bytes += d.stored_bytes;
    into.bytes_copied_on_snapshot += d.bytes_copied_on_snapshot;
    into.bytes_written += d.bytes_written;
  };
  for (uint64_t r = 0; r + 1 < spec.n_versions; ++r) {
    before = store.stats();
    t0 = std::chrono::steady_clock::now();
    uint64_t next = store.clone_collection(cid, cvid);
    store.pointer_cas(cid, kHead, cvid, next);
    report.s_ms.push_back(ms_since(t0));
    accumulate_stats(report.s_delta, delta(before, store.stats()));
    cvid = next;

    before = store.stats();
    t0 = std::chrono::steady_clock::now();
    for (uint64_t o = 0; o < spec.n_objects; ++o) {
      const auto& idxs = plan.mods[r][o];
      for (uint64_t k = 0; k < idxs.size(); ++k)
        store.write_range(cid, cvid, plan.object_names[o],
                          static_cast<uint64_t>(idxs[k]) * spec.mod_size,
                          mod_payload(spec, o, r, k));
    }
    report.m_ms.push_back(ms_since(t0));
    accumulate_stats(report.m_delta, delta(before, store.stats()));
  }
  return report;
}

RetrievalReport run_retrieval(const WorkloadPlan& plan, Store& store,
                              const std::string& cid, uint64_t n_queries,
                              uint64_t seed) {
  const WorkloadSpec& spec = plan.spec;
  RetrievalReport report;
  report.backend = store.backend_name();
  report.spec = spec;
  report.query_seed = seed;

  std::mt19937_64 rng(seed);
  auto run_query = [&](uint64_t vid, std::vector<QueryRecord>& out) {
    uint64_t o = rng() % spec.n_objects;
    const std::string& oid = plan.object_names[o];
    auto t0 = std::chrono::steady_clock::now();
    Bytes data = store.get(cid, vid, oid);
    double ms = ms_since(t0);
    if (data != expected_bytes(plan, o, vid))
      fail(Err::VerificationFailure,
           "retrieval mismatch for " + oid + "@" + std::to_string(vid) +
               " on backend " + store.backend_name());
    out.push_back({oid, vid, ms, data.size()});
  };

  // Collection version v holds version v of every object: the initial fill
  // is cv1 and every snapshot+modify round adds one cv and one vid.
  for (uint64_t q = 0; q < n_queries; ++q)
    run_query(spec.n_versions, report.latest);
  for (uint64_t q = 0; q < n_queries; ++q)
    run_query(rng() % spec.n_versions + 1, report.random);
  return report;
}

Format format_from_name(const std::string& name) {
  if (name == "table") return Format::Table;
  if (name == "tsv") return Format::Tsv;
  if (name == "json") return Format::Json;
  fail(Err::InvalidArgument, "unknown format: " + name);
}

namespace {

json creation_to_json(const CreationReport& r) {
  return json{{"kind", "creation"},
              {"backend", r.backend},
              {"spec", spec_to_json(r.spec)},
              {"seed", r.spec.seed},
              {"f_ms", r.f_ms},
              {"s_ms", r.s_ms},
              {"m_ms", r.m_ms},
              {"s_mean_ms", r.s_mean_ms()},
              {"m_mean_ms", r.m_mean_ms()},
              {"warmup_excluded", r.warmup_excluded},
              {"f_delta", stats_to_json(r.f_delta)},
              {"s_delta", stats_to_json(r.s_delta)},
              {"m_delta", stats_to_json(r.m_delta)},
              {"artifact_version", kArtifactVersion}};
}

json retrieval_to_json(const RetrievalReport& r) {
  auto queries = [](const std::vector<QueryRecord>& qs) {
    json out = json::array();
    for (const auto& q : qs)
      out.push_back(json{
          {"oid", q.oid}, {"vid", q.vid}, {"ms", q.ms}, {"bytes", q.bytes}});
    return out;
  };
  return json{{"kind", "retrieval"},
              {"backend", r.backend},
              {"spec", spec_to_json(r.spec)},
              {"seed", r.spec.seed},
              {"query_seed", r.query_seed},
              {"latest_mean_ms", r.latest_mean_ms()},
              {"random_mean_ms", r.random_mean_ms()},
              {"latest", queries(r.latest)},
              {"random", queries(r.random)},
              {"artifact_version", kArtifactVersion}};
}

std::string render_creation_rows(
    const std::vector<std::array<std::string, 3>>& rows, Format format) {
  std::ostringstream out;
  const char* sep = format == Format::Tsv ? "\t" : "\t";
  out << "Backend" << sep << "Phase" << sep << "Time (ms)" << "\n";
  for (const auto& row : rows)
    out << row[0] << sep << row[1] << sep << row[2] << "\n";
  return out.str();
}

}  // namespace

std::string render_creation(const std::vector<CreationReport>& reports,
                            Format format) {
  if (format == Format::Json) {
    json out = json::array();
    for (const auto& r : reports) out.push_back(creation_to_json(r));
    return out.dump(2) + "\n";
  }
  std::vector<std::array<std::string, 3>> rows;
  for (const auto& r : reports) {
    rows.push_back({r.backend, "F", fmt_ms(r.f_ms)});
    rows.push_back({r.backend, "S", fmt_ms(r.s_mean_ms())});
    rows.push_back({r.backend, "M", fmt_ms(r.m_mean_ms())});
  }
  std::string body = render_creation_rows(rows, format);
  if (format == Format::Table && !reports.empty()) {
    std::ostringstream hdr;
    const auto& s = reports.front().spec;
    hdr << "# creation workload: objects=" << s.n_objects
        << " versions=" << s.n_versions << " object_size=" << s.object_size
        << " mods=" << s.mods_per_round << " mod_size=" << s.mod_size
        << " seed=" << s.seed << "\n";
    return hdr.str() + body;
  }
  return body;
}

std::string render_retrieval(const std::vector<RetrievalReport>& reports,
                             Format format) {
  if (format == Format::Json) {
    json out = json::array();
    for (const auto& r : reports) out.push_back(retrieval_to_json(r));
    return out.dump(2) + "\n";
  }
  std::ostringstream out;
  if (format == Format::Table && !reports.empty()) {
    const auto& s = reports.front().spec;
    out << "# retrieval workload: objects=" << s.n_objects
        << " versions=" << s.n_versions << " seed=" << s.seed
        << " query_seed=" << reports.front().query_seed << "\n";
  }
  out << "Backend\tLatest (ms)\tRandom (ms)\n";
  for (const auto& r : reports)
    out << r.backend << "\t" << fmt_ms(r.latest_mean_ms()) << "\t"
        << fmt_ms(r.random_mean_ms()) << "\n";
  return out.str();
}

std::string render_json_text(const std::string& json_text, Format format) {
  json j = json::parse(json_text);
  json arr = j.is_array() ? j : json::array({j});
  if (arr.empty()) return "";
  std::string kind = arr.front().at("kind").get<std::string>();
  if (format == Format::Json) return arr.dump(2) + "\n";

  std::ostringstream out;
  if (kind == "creation") {
    out << "Backend\tPhase\tTime (ms)\n";
    for (const auto& r : arr) {
      out << r.at("backend").get<std::string>() << "\tF\t"
          << fmt_ms(r.at("f_ms").get<double>()) << "\n";
      out << r.at("backend").get<std::string>() << "\tS\t"
          << fmt_ms(r.at("s_mean_ms").get<double>()) << "\n";
      out << r.at("backend").get<std::string>() << "\tM\t"
          << fmt_ms(r.at("m_mean_ms").get<double>()) << "\n";
    }
  } else if (kind == "retrieval") {
    out << "Backend\tLatest (ms)\tRandom (ms)\n";
    for (const auto& r : arr)
      out << r.at("backend").get<std::string>() << "\t"
          << fmt_ms(r.at("latest_mean_ms").get<double>()) << "\t"
          << fmt_ms(r.at("random_mean_ms").get<double>()) << "\n";
  } else {
    fail(Err::BadRequest, "unknown report kind: " + kind);
  }
  return out.str();
}

}  // namespace vosd::bench
