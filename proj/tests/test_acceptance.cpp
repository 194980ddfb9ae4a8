// Standalone acceptance harness: one line of output per criterion,
// exit code = number of failed criteria.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "equiv.hpp"
#include "test_util.hpp"
#include "vosd/bench.hpp"
#include "vosd/file_store.hpp"
#include "vosd/kv_log.hpp"
#include "vosd/kv_store.hpp"
#include "vosd/mem_store.hpp"
#include "vosd/oracle_store.hpp"
#include "vosd/txn.hpp"

using namespace vosd;
using namespace vosd::testutil;
namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error(what);
}

// ---------------------------------------------------------------------------
// Criterion 1: backend equivalence under seeded random operation sequences.

std::string criterion_equivalence() {
  auto t0 = std::chrono::steady_clock::now();
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    TempDir tmp("accept-equiv");
    auto stores = all_backends(tmp, kDefaultChunkSize);
    std::vector<Store*> ptrs;
    for (auto& s : stores) ptrs.push_back(s.get());
    EquivalenceDriver(ptrs, seed, 1 << 20).run(1000);
  }
  double elapsed = seconds_since(t0);
  std::ostringstream out;
  out << "20 seeds x 1000 ops byte-identical across mem/oracle/file/kv in "
      << elapsed << " s";
  require(elapsed < 60.0, out.str() + " (over the 60 s budget)");
  return out.str();
}

// ---------------------------------------------------------------------------
// Criteria 2/3/4/7 share one desk-scale creation run per backend.

struct DeskScale {
  bench::WorkloadPlan plan;
  std::unique_ptr<MemStore> mem;
  std::unique_ptr<OracleStore> oracle;
  bench::CreationReport mem_report, oracle_report;
};

std::unique_ptr<DeskScale> run_desk_scale() {
  auto desk = std::make_unique<DeskScale>();
  desk->plan = bench::generate(bench::WorkloadSpec{});  // desk-scale defaults
  desk->mem = std::make_unique<MemStore>(desk->plan.spec.mod_size);
  desk->oracle = std::make_unique<OracleStore>(desk->plan.spec.mod_size);
  desk->mem_report = bench::run_creation(desk->plan, *desk->mem);
  desk->oracle_report = bench::run_creation(desk->plan, *desk->oracle);
  return desk;
}

std::string criterion_zero_copy_snapshot(const DeskScale& desk) {
  constexpr uint64_t kExpected = 9ull * 10 * 256 * 1024;  // 23,592,960
  uint64_t mem_copied = desk.mem_report.s_delta.bytes_copied_on_snapshot;
  require(mem_copied == 0, "mem copied " + std::to_string(mem_copied) +
                               " bytes on snapshot, expected 0");
  TempDir tmp("accept-snapshot");
  FileStore file(tmp.sub("file"), desk.plan.spec.mod_size);
  KvStore kv(tmp.sub("kv"), desk.plan.spec.mod_size);
  uint64_t file_copied =
      bench::run_creation(desk.plan, file).s_delta.bytes_copied_on_snapshot;
  uint64_t kv_copied =
      bench::run_creation(desk.plan, kv).s_delta.bytes_copied_on_snapshot;
  require(file_copied == kExpected,
          "file copied " + std::to_string(file_copied) + ", expected " +
              std::to_string(kExpected));
  require(kv_copied == kExpected, "kv copied " + std::to_string(kv_copied) +
                                      ", expected " + std::to_string(kExpected));
  return "snapshot copy bytes: mem=0, file=kv=" + std::to_string(kExpected);
}

std::string criterion_cow_space(const DeskScale& desk) {
  uint64_t mem_chunks = desk.mem->stats().chunk_count;
  uint64_t oracle_chunks = desk.oracle->stats().chunk_count;
  require(mem_chunks <= 520, "mem holds " + std::to_string(mem_chunks) +
                                 " chunks, bound is 520");
  require(oracle_chunks == 1600, "oracle holds " +
                                     std::to_string(oracle_chunks) +
                                     " chunks, expected exactly 1600");
  return "mem " + std::to_string(mem_chunks) + " chunks (bound 520) vs oracle " +
         std::to_string(oracle_chunks);
}

std::string criterion_diff_oracle(const DeskScale& desk) {
  std::mt19937_64 rng(404);
  const auto& names = desk.plan.object_names;
  uint64_t n_versions = desk.plan.spec.n_versions;
  for (int i = 0; i < 100; ++i) {
    const std::string& oid = names[rng() % names.size()];
    uint64_t v1 = 1 + rng() % n_versions;
    uint64_t v2 = 1 + rng() % n_versions;
    auto got = desk.mem->diff("bench", oid, v1, v2);
    auto want = byte_diff_ranges(desk.mem->get_version("bench", oid, v1),
                                 desk.mem->get_version("bench", oid, v2),
                                 desk.plan.spec.mod_size);
    if (got != want) {
      std::ostringstream msg;
      msg << "diff mismatch for " << oid << " v" << v1 << " vs v" << v2 << " ("
          << got.size() << " ranges, reference " << want.size() << ")";
      throw std::runtime_error(msg.str());
    }
  }
  return "100 random version pairs match the brute-force chunk diff";
}

std::string criterion_retrieval_parity(const DeskScale& desk) {
  // run_retrieval verifies every read byte-for-byte against the replay
  // reference and throws on mismatch: that part is the hard gate.
  auto report = bench::run_retrieval(desk.plan, *desk.mem, "bench", 100, 7);
  double latest = report.latest_mean_ms();
  double random = report.random_mean_ms();
  double ratio = latest > 0 ? random / latest : 0;
  std::ostringstream out;
  out << "200 retrievals byte-verified; latest " << latest << " ms, random "
      << random << " ms, ratio " << ratio;
  if (ratio > 2.0 || ratio < 0.5)
    out << " [WARN: outside 2x parity band, informational only]";
  return out.str();
}

// ---------------------------------------------------------------------------
// Criterion 5: MVCC correctness under randomized schedules.

std::string criterion_mvcc() {
  constexpr int kSchedules = 50;
  constexpr int kTxs = 20;
  constexpr int kObjects = 8;
  constexpr size_t kPayload = 4096;
  int total_committed = 0, total_aborted = 0;

  for (int sched = 0; sched < kSchedules; ++sched) {
    std::mt19937_64 rng(9000 + sched);
    // Per-transaction write sets (1-3 objects) with distinct full-object
    // payloads, so same-object overlap is always a real byte conflict.
    std::vector<std::vector<std::string>> writes(kTxs);
    auto payload = [&](int t, int o) {
      std::mt19937_64 prng(1'000'000ull * sched + 1000ull * t + o);
      return rand_bytes(prng, kPayload);
    };
    for (int t = 0; t < kTxs; ++t) {
      std::set<int> chosen;
      size_t n = 1 + rng() % 3;
      while (chosen.size() < n) chosen.insert(rng() % kObjects);
      for (int o : chosen) writes[t].push_back("obj" + std::to_string(o));
    }

    // Random interleaving of begin/commit events, begin always first.
    std::vector<std::pair<bool, int>> events;  // (is_begin, tx)
    {
      std::vector<int> state(kTxs, 0);  // 0 not begun, 1 active, 2 done
      for (int left = 2 * kTxs; left > 0; --left) {
        std::vector<std::pair<bool, int>> eligible;
        for (int t = 0; t < kTxs; ++t) {
          if (state[t] == 0) eligible.emplace_back(true, t);
          if (state[t] == 1) eligible.emplace_back(false, t);
        }
        auto pick = eligible[rng() % eligible.size()];
        state[pick.second] = pick.first ? 1 : 2;
        events.push_back(pick);
      }
    }

    MemStore store;
    TxnManager txn(store);
    store.create_collection("c");
    std::map<std::string, Bytes> model;
    for (int o = 0; o < kObjects; ++o) {
      std::string oid = "obj" + std::to_string(o);
      Bytes init(kPayload, static_cast<char>('a' + o));
      store.create_object("c", 1, oid, init);
      model[oid] = init;
    }

    std::vector<uint64_t> tx_id(kTxs, 0);
    std::vector<int> begin_at(kTxs, -1), commit_at(kTxs, -1);
    std::vector<bool> committed(kTxs, false);
    std::vector<std::set<std::string>> conflicts(kTxs);
    std::vector<int> commit_order;
    for (size_t e = 0; e < events.size(); ++e) {
      auto [is_begin, t] = events[e];
      if (is_begin) {
        tx_id[t] = txn.tx_begin("c");
        begin_at[t] = static_cast<int>(e);
        continue;
      }
      for (size_t i = 0; i < writes[t].size(); ++i)
        txn.tx_write(tx_id[t], writes[t][i], 0,
                     payload(t, static_cast<int>(i)));
      auto outcome = txn.tx_commit(tx_id[t]);
      commit_at[t] = static_cast<int>(e);
      committed[t] = outcome.committed;
      conflicts[t] = outcome.conflicts;
      if (outcome.committed) commit_order.push_back(t);
    }

    // (a) Final state == serial replay of committed write sets in commit
    // order.
    for (int t : commit_order)
      for (size_t i = 0; i < writes[t].size(); ++i)
        model[writes[t][i]] = payload(t, static_cast<int>(i));
    uint64_t hct = txn.hct_get("c");
    for (const auto& [oid, want] : model)
      require(store.get("c", hct, oid) == want,
              "schedule " + std::to_string(sched) + ": final bytes of " + oid +
                  " differ from serial replay");

    // (b) Every abort names a genuine conflict: a transaction that wrote
    // the same object and committed between this one's begin and commit.
    auto tx_writes = [&](int t, const std::string& oid) {
      for (const auto& w : writes[t])
        if (w == oid) return true;
      return false;
    };
    for (int t = 0; t < kTxs; ++t) {
      if (committed[t]) continue;
      require(!conflicts[t].empty(), "schedule " + std::to_string(sched) +
                                         ": tx aborted with no conflict set");
      for (const auto& oid : conflicts[t]) {
        require(tx_writes(t, oid),
                "conflict names an object outside the write set");
        bool genuine = false;
        for (int u = 0; u < kTxs && !genuine; ++u)
          genuine = u != t && committed[u] && tx_writes(u, oid) &&
                    commit_at[u] > begin_at[t] && commit_at[u] < commit_at[t];
        require(genuine, "schedule " + std::to_string(sched) +
                             ": abort on " + oid +
                             " with no concurrent committed writer");
      }
    }

    // (c) At most one committer per concurrent same-object writer pair.
    for (int t = 0; t < kTxs; ++t)
      for (int u = t + 1; u < kTxs; ++u) {
        if (!committed[t] || !committed[u]) continue;
        bool overlap = begin_at[t] < commit_at[u] && begin_at[u] < commit_at[t];
        if (!overlap) continue;
        for (const auto& oid : writes[t])
          require(!tx_writes(u, oid),
                  "schedule " + std::to_string(sched) +
                      ": two concurrent committers both wrote " + oid);
      }

    for (int t = 0; t < kTxs; ++t) (committed[t] ? total_committed
                                                 : total_aborted)++;
  }
  std::ostringstream out;
  out << kSchedules << " schedules serial-replay equivalent ("
      << total_committed << " commits, " << total_aborted
      << " genuine aborts)";
  return out.str();
}

// ---------------------------------------------------------------------------
// Criterion 6: read-atomic checkpoints, no fractured reads.

std::string criterion_read_atomicity() {
  constexpr int kTrials = 100;
  constexpr int kObjects = 4;
  constexpr int kRounds = 10;
  std::atomic<int> fractured{0};
  for (int trial = 0; trial < kTrials; ++trial) {
    MemStore store;
    TxnManager txn(store);
    store.create_collection("c");
    std::vector<std::string> oids;
    for (int o = 0; o < kObjects; ++o) {
      oids.push_back("obj" + std::to_string(o));
      store.create_object("c", 1, oids.back(), "tag-0000");
    }
    std::atomic<bool> done{false};
    std::thread writer([&] {
      for (int round = 1; round <= kRounds; ++round) {
        char tag[16];
        std::snprintf(tag, sizeof(tag), "tag-%04d", round);
        uint64_t ck = txn.ckpt_begin("c");
        for (const auto& oid : oids) txn.ckpt_write(ck, oid, 0, tag);
        txn.ckpt_commit(ck);
      }
      done.store(true);
    });
    std::vector<std::thread> readers;
    for (int r = 0; r < 4; ++r)
      readers.emplace_back([&] {
        int reads = 0;
        while (!done.load() || reads < 5) {
          // Read-atomic access pattern: pin the readable checkpoint once,
          // then read every object at that snapshot.
          uint64_t hrc = txn.hrc_get("c");
          Bytes first = store.get("c", hrc, oids[0]);
          for (const auto& oid : oids)
            if (store.get("c", hrc, oid) != first) fractured.fetch_add(1);
          ++reads;
        }
      });
    writer.join();
    for (auto& r : readers) r.join();
  }
  require(fractured.load() == 0, std::to_string(fractured.load()) +
                                     " fractured reads observed");
  return "100 writer-vs-4-reader trials, zero fractured reads";
}

// ---------------------------------------------------------------------------
// Criterion 8: crash safety.

std::string criterion_crash_kv() {
  TempDir tmp("accept-kvcrash");
  auto path = tmp.sub("kv.log");
  std::vector<uint64_t> batch_end;
  std::vector<std::vector<LogKv::Entry>> batches;
  std::mt19937_64 rng(31);
  {
    LogKv kv(path);
    for (int b = 0; b < 100; ++b) {
      std::vector<LogKv::Entry> entries;
      for (int i = 0; i < 2; ++i) {
        Bytes key = "k" + std::to_string(rng() % 20);
        if (rng() % 6 == 0)
          entries.emplace_back(key, std::nullopt);
        else
          entries.emplace_back(key, rand_bytes(rng, 4 + rng() % 12));
      }
      kv.put_batch(entries);
      batches.push_back(entries);
      batch_end.push_back(kv.log_size());
    }
  }
  Bytes full;
  {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    full = buf.str();
  }
  auto trunc_path = tmp.sub("cut.log");
  for (uint64_t cut = 0; cut <= full.size(); ++cut) {
    std::ofstream(trunc_path, std::ios::binary | std::ios::trunc)
        << full.substr(0, cut);
    std::map<Bytes, Bytes> model;
    uint64_t last_end = 8;
    for (size_t b = 0; b < batches.size(); ++b) {
      if (batch_end[b] > cut) break;
      last_end = batch_end[b];
      for (const auto& [k, v] : batches[b]) {
        if (v)
          model[k] = *v;
        else
          model.erase(k);
      }
    }
    LogKv kv(trunc_path);
    auto rows = kv.scan("");
    if (std::map<Bytes, Bytes>(rows.begin(), rows.end()) != model ||
        kv.log_size() != last_end)
      throw std::runtime_error(
          "recovery at truncation offset " + std::to_string(cut) +
          " is not the committed prefix");
  }
  return "log recovers to a committed prefix at all " +
         std::to_string(full.size() + 1) + " truncation offsets";
}

Bytes store_fingerprint(const Store& s) {
  std::ostringstream out;
  for (const auto& cid : s.list_collections()) {
    out << "C " << cid << "\n";
    std::map<std::string, std::set<uint64_t>> vids;
    for (uint64_t cvid : s.list_collection_versions(cid)) {
      auto p = s.collection_version_parent(cid, cvid);
      out << " cv " << cvid << " parent="
          << (p ? std::to_string(*p) : "none")
          << " frozen=" << s.collection_version_frozen(cid, cvid) << ":";
      for (const auto& oid : s.list_objects(cid, cvid)) {
        out << " " << oid << "@" << s.version_of(cid, cvid, oid);
        vids[oid].insert(s.version_of(cid, cvid, oid));
      }
      out << "\n";
    }
    for (const auto& name : s.list_pointers(cid))
      out << " ptr " << name << "=" << s.pointer_get(cid, name) << "\n";
    // Close each object's version set over the lineage graph, then dump
    // every version's metadata and bytes.
    for (auto& [oid, set] : vids) {
      std::vector<uint64_t> frontier(set.begin(), set.end());
      while (!frontier.empty()) {
        uint64_t v = frontier.back();
        frontier.pop_back();
        if (auto p = s.parent(cid, oid, v); p && set.insert(*p).second)
          frontier.push_back(*p);
        for (uint64_t c : s.children(cid, oid, v))
          if (set.insert(c).second) frontier.push_back(c);
      }
      for (uint64_t v : set) {
        auto p = s.parent(cid, oid, v);
        out << " v " << oid << "@" << v << " parent="
            << (p ? std::to_string(*p) : "none")
            << " frozen=" << s.version_frozen(cid, oid, v) << " len="
            << s.version_length(cid, oid, v) << " bytes="
            << std::hash<Bytes>{}(s.get_version(cid, oid, v)) << "\n";
      }
    }
  }
  return out.str();
}

// Relative paths of all regular files under root.
std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  return out;
}

std::string criterion_crash_file() {
  TempDir tmp("accept-filecrash");
  auto live = tmp.sub("live");
  FileStore store(live, kDefaultChunkSize);
  store.create_collection("c");
  std::mt19937_64 rng(55);
  uint64_t head = 1;
  int next_obj = 0;
  std::vector<std::string> oids;

  // Mutations whose payload side effects are whole-file creations, so a
  // crash during the manifest update leaves either orphan payload files
  // (pre state) or a stale temp manifest (post state).
  std::vector<std::function<void()>> ops;
  for (int step = 0; step < 15; ++step)
    ops.push_back([&, step] {
      int kind = step < 3 ? 0 : static_cast<int>(rng() % 4);
      switch (kind) {
        case 0: {
          std::string oid = "obj" + std::to_string(next_obj++);
          store.create_object("c", head, oid, rand_bytes(rng, 40000));
          oids.push_back(oid);
          break;
        }
        case 1:
          store.clone_object("c", head, oids[rng() % oids.size()]);
          break;
        case 2: {
          uint64_t cvid = store.clone_collection("c", head);
          store.pointer_cas("c", kHead, head, cvid);
          head = cvid;
          break;
        }
        default:
          store.pointer_cas("c", "mark",
                            store.pointer_try_get("c", "mark"), head);
          break;
      }
    });

  int checked = 0;
  for (size_t step = 0; step < ops.size(); ++step) {
    Bytes fp_pre = store_fingerprint(store);
    auto pre = tmp.sub("pre" + std::to_string(step));
    fs::copy(live, pre, fs::copy_options::recursive);
    ops[step]();
    Bytes fp_post = store_fingerprint(store);
    auto post = tmp.sub("post" + std::to_string(step));
    fs::copy(live, post, fs::copy_options::recursive);

    // Kill before the manifest rename: payload files written, new manifest
    // only half-written as the temp file.
    {
      auto pre_files = files_under(pre);
      for (const auto& rel : files_under(post)) {
        if (std::find(pre_files.begin(), pre_files.end(), rel) ==
            pre_files.end()) {
          fs::create_directories((pre / rel).parent_path());
          fs::copy_file(post / rel, pre / rel);
        }
      }
      std::ifstream in(post / "c" / "manifest.json", std::ios::binary);
      std::ostringstream buf;
      buf << in.rdbuf();
      Bytes manifest = buf.str();
      std::ofstream(pre / "c" / "manifest.json.tmp", std::ios::binary)
          << manifest.substr(0, manifest.size() / 2);
      FileStore reopened(pre, kDefaultChunkSize);
      require(store_fingerprint(reopened) == fp_pre,
              "step " + std::to_string(step) +
                  ": pre-crash reopen is not the pre-update state");
    }
    // Kill just after the rename: old manifest survives as a stale temp.
    {
      std::ifstream in(pre / "c" / "manifest.json", std::ios::binary);
      std::ostringstream buf;
      buf << in.rdbuf();
      std::ofstream(post / "c" / "manifest.json.tmp", std::ios::binary)
          << buf.str();
      FileStore reopened(post, kDefaultChunkSize);
      require(store_fingerprint(reopened) == fp_post,
              "step " + std::to_string(step) +
                  ": post-crash reopen is not the post-update state");
    }
    ++checked;
  }
  return std::to_string(checked) +
         " interrupted manifest updates all reopen to a valid pre or post "
         "state";
}

// ---------------------------------------------------------------------------
// Criterion 9: report structure.

std::string criterion_report_fidelity(const DeskScale& desk) {
  std::string creation =
      bench::render_creation({desk.mem_report}, bench::Format::Table);
  for (const char* needle :
       {"Backend\tPhase\tTime (ms)", "mem\tF\t", "mem\tS\t", "mem\tM\t",
        "objects=10", "versions=10", "object_size=262144", "mods=4",
        "mod_size=16384", "seed=1"})
    require(creation.find(needle) != std::string::npos,
            std::string("creation table is missing \"") + needle + "\"");
  auto retr = bench::run_retrieval(desk.plan, *desk.mem, "bench", 10, 3);
  std::string retrieval =
      bench::render_retrieval({retr}, bench::Format::Table);
  for (const char* needle : {"Backend\tLatest (ms)\tRandom (ms)", "mem\t",
                             "seed=1", "query_seed=3"})
    require(retrieval.find(needle) != std::string::npos,
            std::string("retrieval table is missing \"") + needle + "\"");
  return "tables carry the F/S/M and Latest/Random structure with spec and "
         "seed embedded";
}

}  // namespace

int main() {
  int failures = 0;
  auto criterion = [&](int n, const char* title,
                       const std::function<std::string()>& fn) {
    try {
      std::string detail = fn();
      std::printf("PASS  %d. %s — %s\n", n, title, detail.c_str());
    } catch (const std::exception& e) {
      std::printf("FAIL  %d. %s — %s\n", n, title, e.what());
      ++failures;
    }
    std::fflush(stdout);
  };

  std::unique_ptr<DeskScale> desk;
  try {
    desk = run_desk_scale();
  } catch (const std::exception& e) {
    std::printf("desk-scale setup failed: %s\n", e.what());
  }
  auto need_desk = [&](const std::function<std::string(const DeskScale&)>& fn) {
    return [&, fn]() -> std::string {
      if (!desk) throw std::runtime_error("desk-scale setup unavailable");
      return fn(*desk);
    };
  };

  criterion(1, "backend equivalence", criterion_equivalence);
  criterion(2, "zero-copy snapshot", need_desk(criterion_zero_copy_snapshot));
  criterion(3, "CoW space bound", need_desk(criterion_cow_space));
  criterion(4, "diff matches brute force", need_desk(criterion_diff_oracle));
  criterion(5, "MVCC correctness", criterion_mvcc);
  criterion(6, "read-atomic checkpoints", criterion_read_atomicity);
  criterion(7, "retrieval parity", need_desk(criterion_retrieval_parity));
  criterion(8, "crash safety", [] {
    return criterion_crash_kv() + "; " + criterion_crash_file();
  });
  criterion(9, "report fidelity", need_desk(criterion_report_fidelity));

  std::printf("%s: %d criterion check(s) failed\n",
              failures == 0 ? "ALL PASS" : "RESULT", failures);
  return failures;
}
