#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vosd/bench.hpp"
#include "vosd/client.hpp"
#include "vosd/file_store.hpp"
#include "vosd/kv_store.hpp"
#include "vosd/mem_store.hpp"
#include "vosd/oracle_store.hpp"
#include "vosd/server.hpp"
#include "vosd/txn.hpp"
#include "vosd/wire.hpp"

using nlohmann::json;

namespace {

struct CliConfig {
  std::string backend = "mem";
  std::string path;
  std::string chunk_size_text = "16KiB";
  std::string format = "table";
  std::string addr;
};

uint64_t parse_size(const std::string& text) {
  size_t pos = 0;
  unsigned long long value = std::stoull(text, &pos);
  std::string suffix = text.substr(pos);
  if (suffix.empty() || suffix == "B") return value;
  if (suffix == "KiB" || suffix == "K" || suffix == "k") return value << 10;
  if (suffix == "MiB" || suffix == "M" || suffix == "m") return value << 20;
  if (suffix == "GiB" || suffix == "G" || suffix == "g") return value << 30;
  vosd::fail(vosd::Err::InvalidArgument, "bad size suffix: " + suffix);
}

std::unique_ptr<vosd::Store> open_store(const CliConfig& cfg) {
  uint64_t cs = parse_size(cfg.chunk_size_text);
  bool needs_path = cfg.backend == "file" || cfg.backend == "kv";
  if (needs_path && cfg.path.empty())
    vosd::fail(vosd::Err::InvalidArgument,
               cfg.backend + " backend requires --path");
  if (!needs_path && !cfg.path.empty())
    vosd::fail(vosd::Err::InvalidArgument,
               cfg.backend + " backend does not take --path");
  if (cfg.backend == "mem") return std::make_unique<vosd::MemStore>(cs);
  if (cfg.backend == "oracle") return std::make_unique<vosd::OracleStore>(cs);
  if (cfg.backend == "file")
    return std::make_unique<vosd::FileStore>(cfg.path, cs);
  if (cfg.backend == "kv") return std::make_unique<vosd::KvStore>(cfg.path, cs);
  vosd::fail(vosd::Err::InvalidArgument, "unknown backend: " + cfg.backend);
}

std::string read_input(const std::string& in_file) {
  if (in_file.empty() || in_file == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(in_file, std::ios::binary);
  if (!in) vosd::fail(vosd::Err::IoFailure, "cannot read " + in_file);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

vosd::Server* g_server = nullptr;
void handle_signal(int) {
  if (g_server) g_server->stop();
}

int tx_demo(vosd::Store& store) {
  // Two optimistic transactions over one collection: a disjoint pair that
  // both land, then a write-write conflict where the loser aborts.
  vosd::TxnManager txn(store);
  uint64_t cv1 = store.create_collection("demo");
  store.create_object("demo", cv1, "account-a", std::string(32, 'A'));
  store.create_object("demo", cv1, "account-b", std::string(32, 'B'));
  std::cout << "created collection 'demo' with account-a, account-b (cv"
            << cv1 << ", HCT -> cv" << txn.hct_get("demo") << ")\n";

  uint64_t t1 = txn.tx_begin("demo");
  uint64_t t2 = txn.tx_begin("demo");
  std::cout << "T1 and T2 begin; both snapshot HCT cv"
            << txn.tx_info(t1).start_hct << "\n";
  txn.tx_write(t1, "account-a", 0, "T1 was here");
  txn.tx_write(t2, "account-b", 0, "T2 was here");
  std::cout << "T1 writes account-a, T2 writes account-b (disjoint)\n";
  auto o1 = txn.tx_commit(t1);
  auto o2 = txn.tx_commit(t2);
  std::cout << "T1 commit: " << (o1.committed ? "Committed" : "Aborted")
            << ", HCT -> cv" << o1.new_hct << "\n";
  std::cout << "T2 commit: " << (o2.committed ? "Committed" : "Aborted")
            << ", HCT -> cv" << o2.new_hct
            << " (disjoint writers both land)\n";

  uint64_t t3 = txn.tx_begin("demo");
  uint64_t t4 = txn.tx_begin("demo");
  txn.tx_write(t3, "account-a", 0, "T3 update");
  txn.tx_write(t4, "account-a", 0, "T4 update");
  std::cout << "T3 and T4 both write account-a\n";
  auto o3 = txn.tx_commit(t3);
  auto o4 = txn.tx_commit(t4);
  std::cout << "T3 commit: " << (o3.committed ? "Committed" : "Aborted")
            << "\n";
  std::cout << "T4 commit: " << (o4.committed ? "Committed" : "Aborted");
  if (!o4.committed) {
    std::cout << " (conflicts:";
    for (const auto& oid : o4.conflicts) std::cout << " " << oid;
    std::cout << ") -- first committer wins";
  }
  std::cout << "\n";
  auto gc = txn.txn_gc("demo");
  std::cout << "txn_gc reclaimed " << gc.versions_removed
            << " versions, " << gc.bytes_freed << " bytes\n";
  std::cout << "final account-a: "
            << store.get("demo", txn.hct_get("demo"), "account-a").substr(0, 9)
            << "...\n";
  return 0;
}

int ckpt_demo(vosd::Store& store) {
  // One checkpoint writer, read-atomic readers: readers always see a
  // whole checkpoint, never a mix.
  vosd::TxnManager txn(store);
  uint64_t cv1 = store.create_collection("demo");
  for (int i = 0; i < 3; ++i)
    store.create_object("demo", cv1, "field" + std::to_string(i),
                        "ckpt-0");
  std::cout << "created 3 objects tagged ckpt-0; HRC -> cv"
            << txn.hrc_get("demo") << "\n";

  for (int round = 1; round <= 3; ++round) {
    uint64_t ck = txn.ckpt_begin("demo");
    std::string tag = "ckpt-" + std::to_string(round);
    for (int i = 0; i < 3; ++i)
      txn.ckpt_write(ck, "field" + std::to_string(i), 0, tag);
    std::cout << "writer stages " << tag
              << "; readers still see: "
              << txn.read_atomic_get("demo", "field0") << "\n";
    uint64_t cvid = txn.ckpt_commit(ck);
    std::cout << "commit -> HRC cv" << cvid
              << "; readers now see: " << txn.read_atomic_get("demo", "field0")
              << "\n";
  }
  uint64_t hrc = txn.hrc_get("demo");
  uint64_t merged = txn.merge_checkpoints("demo", 2, hrc);
  std::cout << "merge_checkpoints(cv2.." << "cv" << hrc << ") -> cv" << merged
            << " (intermediates squashed)\n";
  auto gc = txn.txn_gc("demo");
  std::cout << "txn_gc reclaimed " << gc.versions_removed << " versions, "
            << gc.bytes_freed << " bytes\n";
  std::cout << "final field0: " << txn.read_atomic_get("demo", "field0")
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vosd: versioned object storage engine"};
  app.require_subcommand(1);

  CliConfig cfg;
  if (const char* env = std::getenv("VOSD_ADDR")) cfg.addr = env;
  app.add_option("--backend", cfg.backend, "mem|file|kv|oracle")
      ->envname("VOSD_BACKEND");
  app.add_option("--path", cfg.path, "store directory (file/kv backends)");
  app.add_option("--chunk-size", cfg.chunk_size_text,
                 "chunk size, human suffixes allowed (default 16KiB)");
  app.add_option("--format", cfg.format, "table|tsv|json");
  app.add_option("--addr", cfg.addr,
                 "host:port for serve (env VOSD_ADDR)");

  std::string cid, oid, name, in_file, out_file;
  uint64_t cvid = 0, vid = 0, v1 = 0, v2 = 0, target = 0;
  std::string expected_text = "none";
  uint64_t offset = 0, length = 0;

  // obj ------------------------------------------------------------------
  auto* obj = app.add_subcommand("obj", "object-level operations");
  obj->require_subcommand(1);
  auto* obj_put = obj->add_subcommand("put", "write an object (stdin or --in)");
  obj_put->add_option("-c,--cid", cid)->required();
  obj_put->add_option("-o,--oid", oid)->required();
  obj_put->add_option("--cv", cvid, "collection version (default HEAD)");
  obj_put->add_option("--in", in_file, "input file (default stdin)");
  auto* obj_get = obj->add_subcommand("get", "read an object to stdout");
  obj_get->add_option("-c,--cid", cid)->required();
  obj_get->add_option("-o,--oid", oid)->required();
  obj_get->add_option("--cv", cvid, "collection version (default HEAD)");
  obj_get->add_option("--vid", vid, "address by version id instead");
  obj_get->add_option("--offset", offset);
  obj_get->add_option("--length", length);
  auto* obj_clone = obj->add_subcommand("clone", "clone an object version");
  obj_clone->add_option("-c,--cid", cid)->required();
  obj_clone->add_option("-o,--oid", oid)->required();
  obj_clone->add_option("--cv", cvid, "clone the member of this cv");
  obj_clone->add_option("--vid", vid, "clone this version directly");
  auto* obj_diff = obj->add_subcommand("diff", "chunk-granular diff");
  obj_diff->add_option("-c,--cid", cid)->required();
  obj_diff->add_option("-o,--oid", oid)->required();
  obj_diff->add_option("--v1", v1)->required();
  obj_diff->add_option("--v2", v2)->required();
  auto* obj_lineage = obj->add_subcommand("lineage", "parent chain + children");
  obj_lineage->add_option("-c,--cid", cid)->required();
  obj_lineage->add_option("-o,--oid", oid)->required();
  obj_lineage->add_option("--vid", vid, "starting version (default HEAD's)");

  // col ------------------------------------------------------------------
  auto* col = app.add_subcommand("col", "collection-level operations");
  col->require_subcommand(1);
  auto* col_clone = col->add_subcommand("clone", "snapshot a collection");
  col_clone->add_option("-c,--cid", cid)->required();
  col_clone->add_option("--cv", cvid, "source cv (default HEAD)");
  auto* col_list = col->add_subcommand("list", "list collections or versions");
  col_list->add_option("-c,--cid", cid, "collection to list versions of");

  // ptr ------------------------------------------------------------------
  auto* ptr = app.add_subcommand("ptr", "named pointers");
  ptr->require_subcommand(1);
  auto* ptr_get = ptr->add_subcommand("get", "read a pointer");
  ptr_get->add_option("-c,--cid", cid)->required();
  ptr_get->add_option("-n,--name", name)->required();
  auto* ptr_cas = ptr->add_subcommand("cas", "compare-and-swap a pointer");
  ptr_cas->add_option("-c,--cid", cid)->required();
  ptr_cas->add_option("-n,--name", name)->required();
  ptr_cas->add_option("--expected", expected_text,
                      "expected cvid or 'none' to create");
  ptr_cas->add_option("--target", target)->required();

  // misc store ops -------------------------------------------------------
  auto* gc_cmd = app.add_subcommand("gc", "collect unreachable versions");
  gc_cmd->add_option("-c,--cid", cid)->required();
  auto* stats_cmd = app.add_subcommand("stats", "store counters");

  // demos ----------------------------------------------------------------
  auto* tx = app.add_subcommand("tx", "transaction layer");
  auto* tx_demo_cmd = tx->add_subcommand("demo", "narrated MVCC scenario");
  auto* ckpt = app.add_subcommand("ckpt", "checkpoint layer");
  auto* ckpt_demo_cmd =
      ckpt->add_subcommand("demo", "narrated read-atomic checkpoint scenario");

  // bench ----------------------------------------------------------------
  uint64_t n_objects = 10, n_versions = 10, mods = 4, seed = 1,
           n_queries = 100;
  std::string size_text = "256KiB", mod_size_text = "16KiB";
  auto* bench_cmd = app.add_subcommand("bench", "workload harness");
  bench_cmd->require_subcommand(1);
  auto add_bench_opts = [&](CLI::App* c) {
    c->add_option("--objects", n_objects, "objects in the collection");
    c->add_option("--versions", n_versions, "versions per object");
    c->add_option("--size", size_text, "object size (e.g. 256KiB, 4MiB)");
    c->add_option("--mods", mods, "chunk modifications per round");
    c->add_option("--mod-size", mod_size_text, "modification size");
    c->add_option("--seed", seed, "workload seed");
    c->add_option("--out", out_file, "also write the JSON report here");
  };
  auto* bench_create =
      bench_cmd->add_subcommand("create", "version-creation experiment");
  add_bench_opts(bench_create);
  auto* bench_read =
      bench_cmd->add_subcommand("read", "version-retrieval experiment");
  add_bench_opts(bench_read);
  bench_read->add_option("--queries", n_queries, "queries per type");

  // render ---------------------------------------------------------------
  auto* render_cmd =
      app.add_subcommand("render", "re-render a JSON report file");
  render_cmd->add_option("--in", in_file, "report file (default stdin)");

  // serve ----------------------------------------------------------------
  auto* serve_cmd = app.add_subcommand("serve", "run the daemon");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (*tx_demo_cmd) return tx_demo(*open_store(cfg));
    if (*ckpt_demo_cmd) return ckpt_demo(*open_store(cfg));

    if (*render_cmd) {
      std::cout << vosd::bench::render_json_text(
          read_input(in_file), vosd::bench::format_from_name(cfg.format));
      return 0;
    }

    if (*bench_create || *bench_read) {
      vosd::bench::WorkloadSpec spec;
      spec.n_objects = n_objects;
      spec.n_versions = n_versions;
      spec.object_size = parse_size(size_text);
      spec.mods_per_round = mods;
      spec.mod_size = parse_size(mod_size_text);
      spec.seed = seed;
      cfg.chunk_size_text = mod_size_text;  // workload writes chunk-aligned
      auto store = open_store(cfg);
      auto plan = vosd::bench::generate(spec);
      auto format = vosd::bench::format_from_name(cfg.format);
      if (*bench_create) {
        auto report = vosd::bench::run_creation(plan, *store);
        std::cout << vosd::bench::render_creation({report}, format);
        if (!out_file.empty())
          std::ofstream(out_file) << vosd::bench::render_creation(
              {report}, vosd::bench::Format::Json);
      } else {
        if (!store->collection_exists("bench"))
          vosd::bench::run_creation(plan, *store);
        auto report =
            vosd::bench::run_retrieval(plan, *store, "bench", n_queries, seed);
        std::cout << vosd::bench::render_retrieval({report}, format);
        if (!out_file.empty())
          std::ofstream(out_file) << vosd::bench::render_retrieval(
              {report}, vosd::bench::Format::Json);
      }
      return 0;
    }

    auto store = open_store(cfg);

    if (*serve_cmd) {
      std::string host = "127.0.0.1";
      int port = 4870;
      if (!cfg.addr.empty()) std::tie(host, port) = vosd::parse_addr(cfg.addr);
      vosd::TxnManager txn(*store);
      vosd::Server server(*store, txn, host, port);
      server.start();
      g_server = &server;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::cerr << "vosd: serving " << cfg.backend << " backend on " << host
                << ":" << server.port() << "\n";
      // stop() is driven by the signal handler; wait for it.
      while (g_server) {
        pause();
        break;
      }
      server.stop();
      return 0;
    }

    auto resolve_cv = [&](uint64_t requested) {
      return requested ? requested : store->pointer_get(cid, vosd::kHead);
    };

    if (*obj_put) {
      std::string data = read_input(in_file);
      if (!store->collection_exists(cid)) store->create_collection(cid);
      uint64_t cv = resolve_cv(cvid);
      auto members = store->list_objects(cid, cv);
      bool exists = false;
      for (const auto& m : members) exists |= (m == oid);
      if (exists) {
        store->set(cid, cv, oid, data);
        std::cout << "set " << oid << "@cv" << cv << " (" << data.size()
                  << " bytes)\n";
      } else {
        uint64_t nv = store->create_object(cid, cv, oid, data);
        std::cout << "created " << oid << " v" << nv << " (" << data.size()
                  << " bytes)\n";
      }
      return 0;
    }
    if (*obj_get) {
      vosd::Bytes data;
      if (vid)
        data = length ? store->get_version_range(cid, oid, vid, offset, length)
                      : store->get_version(cid, oid, vid);
      else if (length)
        data = store->get_range(cid, resolve_cv(cvid), oid, offset, length);
      else
        data = store->get(cid, resolve_cv(cvid), oid);
      std::cout.write(data.data(), static_cast<std::streamsize>(data.size()));
      return 0;
    }
    if (*obj_clone) {
      uint64_t nv = vid ? store->clone_version(cid, oid, vid)
                        : store->clone_object(cid, resolve_cv(cvid), oid);
      std::cout << nv << "\n";
      return 0;
    }
    if (*obj_diff) {
      auto ranges = store->diff(cid, oid, v1, v2);
      if (cfg.format == "json") {
        json out = json::array();
        for (const auto& r : ranges)
          out.push_back({{"offset", r.offset}, {"length", r.length}});
        std::cout << out.dump() << "\n";
      } else {
        for (const auto& r : ranges)
          std::cout << r.offset << " " << r.length << "\n";
      }
      return 0;
    }
    if (*obj_lineage) {
      uint64_t v = vid ? vid : store->version_of(cid, resolve_cv(0), oid);
      std::optional<uint64_t> cur = v;
      while (cur) {
        auto kids = store->children(cid, oid, *cur);
        std::cout << "v" << *cur << " length="
                  << store->version_length(cid, oid, *cur) << " frozen="
                  << (store->version_frozen(cid, oid, *cur) ? "yes" : "no")
                  << " children={";
        bool first = true;
        for (uint64_t k : kids) {
          std::cout << (first ? "" : ",") << "v" << k;
          first = false;
        }
        std::cout << "}\n";
        cur = store->parent(cid, oid, *cur);
      }
      return 0;
    }
    if (*col_clone) {
      std::cout << store->clone_collection(cid, resolve_cv(cvid)) << "\n";
      return 0;
    }
    if (*col_list) {
      if (cid.empty()) {
        for (const auto& c : store->list_collections()) std::cout << c << "\n";
      } else {
        for (uint64_t cv : store->list_collection_versions(cid))
          std::cout << "cv" << cv
                    << (store->collection_version_frozen(cid, cv)
                            ? " frozen"
                            : " writable")
                    << "\n";
      }
      return 0;
    }
    if (*ptr_get) {
      std::cout << store->pointer_get(cid, name) << "\n";
      return 0;
    }
    if (*ptr_cas) {
      std::optional<uint64_t> expected;
      if (expected_text != "none") expected = std::stoull(expected_text);
      bool ok = store->pointer_cas(cid, name, expected, target);
      std::cout << (ok ? "true" : "false") << "\n";
      return 0;
    }
    if (*gc_cmd) {
      auto r = store->gc(cid);
      std::cout << "versions_removed=" << r.versions_removed
                << " chunks_freed=" << r.chunks_freed
                << " bytes_freed=" << r.bytes_freed << "\n";
      return 0;
    }
    if (*stats_cmd) {
      auto s = store->stats();
      if (cfg.format == "json") {
        std::cout << json{{"chunk_count", s.chunk_count},
                          {"stored_bytes", s.stored_bytes},
                          {"bytes_copied_on_snapshot",
                           s.bytes_copied_on_snapshot},
                          {"bytes_written", s.bytes_written}}
                         .dump()
                  << "\n";
      } else {
        std::cout << "chunk_count=" << s.chunk_count
                  << " stored_bytes=" << s.stored_bytes
                  << " bytes_copied_on_snapshot=" << s.bytes_copied_on_snapshot
                  << " bytes_written=" << s.bytes_written << "\n";
      }
      return 0;
    }
  } catch (const vosd::VosdError& e) {
    std::cerr << "vosd: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "vosd: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
