#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "test_util.hpp"
#include "vosd/bench.hpp"
#include "vosd/file_store.hpp"
#include "vosd/mem_store.hpp"
#include "vosd/oracle_store.hpp"

using namespace vosd;
using namespace vosd::testutil;
using nlohmann::json;

namespace {

bench::WorkloadSpec small_spec() {
  bench::WorkloadSpec spec;
  spec.n_objects = 4;
  spec.n_versions = 4;
  spec.object_size = 64 << 10;
  spec.mods_per_round = 2;
  spec.mod_size = 16 << 10;
  spec.seed = 42;
  return spec;
}

}  // namespace

TEST_CASE("generate is deterministic and correctly sized") {
  auto spec = small_spec();
  auto a = bench::generate(spec);
  auto b = bench::generate(spec);
  CHECK(a.object_names == b.object_names);
  CHECK(a.mods == b.mods);
  REQUIRE(a.object_names.size() == 4);
  CHECK(a.object_names[0] == "obj000");
  CHECK(a.object_names[3] == "obj003");
  REQUIRE(a.mods.size() == 3);  // n_versions - 1 rounds
  for (const auto& round : a.mods) {
    REQUIRE(round.size() == 4);
    for (const auto& per_object : round) {
      REQUIRE(per_object.size() == 2);
      for (uint32_t chunk : per_object) CHECK(chunk < 4);  // 64 KiB / 16 KiB
    }
  }
  // A different seed gives a different plan.
  spec.seed = 43;
  CHECK(bench::generate(spec).mods != a.mods);
}

TEST_CASE("generate rejects bad specs") {
  auto spec = small_spec();
  spec.n_objects = 0;
  CHECK_THROWS_AS((void)bench::generate(spec), VosdError);
  spec = small_spec();
  spec.object_size = (64 << 10) + 1;  // not a multiple of mod_size
  CHECK_THROWS_AS((void)bench::generate(spec), VosdError);
  spec = small_spec();
  spec.mods_per_round = 5;  // 5 * 16 KiB > 64 KiB
  CHECK_THROWS_AS((void)bench::generate(spec), VosdError);
}

TEST_CASE("expected_bytes replays the plan independently of any store") {
  auto plan = bench::generate(small_spec());
  MemStore s(16 << 10);
  auto report = bench::run_creation(plan, s);
  for (uint64_t o = 0; o < 4; ++o)
    for (uint64_t vid = 1; vid <= 4; ++vid)
      CHECK(s.get_version("bench", plan.object_names[o], vid) ==
            bench::expected_bytes(plan, o, vid));
  CHECK(report.backend == "mem");
}

TEST_CASE("run_creation phase accounting") {
  auto plan = bench::generate(small_spec());
  MemStore s(16 << 10);
  auto report = bench::run_creation(plan, s);
  REQUIRE(report.s_ms.size() == 3);
  REQUIRE(report.m_ms.size() == 3);
  CHECK(report.warmup_excluded);
  for (double ms : report.s_ms) CHECK(ms > 0);
  for (double ms : report.m_ms) CHECK(ms > 0);
  // Means exclude the first (warm-up) round.
  CHECK(report.s_mean_ms() ==
        doctest::Approx((report.s_ms[1] + report.s_ms[2]) / 2));
  CHECK(report.m_mean_ms() ==
        doctest::Approx((report.m_ms[1] + report.m_ms[2]) / 2));
  // Fill writes every object once; MemStore snapshots copy nothing.
  CHECK(report.f_delta.bytes_written == 4 * (64 << 10));
  CHECK(report.s_delta.bytes_copied_on_snapshot == 0);
  CHECK(report.m_delta.bytes_written == 3 * 4 * 2 * (16 << 10));
  // HEAD tracks the newest collection version.
  CHECK(s.pointer_get("bench", kHead) == 4);
}

TEST_CASE("run_creation on the file backend copies on every snapshot") {
  TempDir tmp("bench-file");
  auto plan = bench::generate(small_spec());
  FileStore s(tmp.sub("store"), 16 << 10);
  auto report = bench::run_creation(plan, s);
  CHECK(report.s_delta.bytes_copied_on_snapshot == 3 * 4 * (64 << 10));
}

TEST_CASE("run_creation rejects chunk-size mismatch and reused collections") {
  auto plan = bench::generate(small_spec());
  MemStore wrong(8 << 10);
  CHECK_THROWS_AS((void)bench::run_creation(plan, wrong), VosdError);
  MemStore s(16 << 10);
  (void)bench::run_creation(plan, s);
  CHECK_THROWS_AS((void)bench::run_creation(plan, s), VosdError);
}

TEST_CASE("run_retrieval queries verified whole objects in range") {
  auto plan = bench::generate(small_spec());
  MemStore s(16 << 10);
  (void)bench::run_creation(plan, s);
  auto report = bench::run_retrieval(plan, s, "bench", 20, 99);
  REQUIRE(report.latest.size() == 20);
  REQUIRE(report.random.size() == 20);
  for (const auto& q : report.latest) {
    CHECK(q.vid == 4);
    CHECK(q.bytes == 64 << 10);
  }
  for (const auto& q : report.random) {
    CHECK(q.vid >= 1);
    CHECK(q.vid <= 4);
    CHECK(q.bytes == 64 << 10);
  }
  CHECK(report.latest_mean_ms() > 0);
  CHECK(report.random_mean_ms() > 0);
  CHECK(report.query_seed == 99);
}

TEST_CASE("retrieval verification catches corruption") {
  auto plan = bench::generate(small_spec());
  MemStore s(16 << 10);
  (void)bench::run_creation(plan, s);
  // Corrupt the newest version of one object behind the harness's back.
  s.write_version_range("bench", "obj000", 4, 0, "corrupted!");
  try {
    (void)bench::run_retrieval(plan, s, "bench", 50, 1);
    FAIL("expected VerificationFailure");
  } catch (const VosdError& e) {
    CHECK(e.code() == Err::VerificationFailure);
  }
}

TEST_CASE("creation table output has F, S, M rows per backend") {
  auto plan = bench::generate(small_spec());
  MemStore s(16 << 10);
  auto report = bench::run_creation(plan, s);
  std::string table = bench::render_creation({report}, bench::Format::Table);
  CHECK(table.find("Backend\tPhase\tTime (ms)") != std::string::npos);
  CHECK(table.find("mem\tF\t") != std::string::npos);
  CHECK(table.find("mem\tS\t") != std::string::npos);
  CHECK(table.find("mem\tM\t") != std::string::npos);
  CHECK(table.find("seed=42") != std::string::npos);

  std::string retr_table = bench::render_retrieval(
      {bench::run_retrieval(plan, s, "bench", 5, 1)}, bench::Format::Table);
  CHECK(retr_table.find("Backend\tLatest (ms)\tRandom (ms)") !=
        std::string::npos);
  CHECK(retr_table.find("mem\t") != std::string::npos);
}

TEST_CASE("tsv output round-trips through a parser") {
  auto plan = bench::generate(small_spec());
  MemStore s(16 << 10);
  auto report = bench::run_creation(plan, s);
  std::string tsv = bench::render_creation({report}, bench::Format::Tsv);
  std::istringstream in(tsv);
  std::string line;
  std::getline(in, line);  // header
  std::map<std::string, double> phases;
  while (std::getline(in, line)) {
    auto t1 = line.find('\t'), t2 = line.rfind('\t');
    REQUIRE(t1 != std::string::npos);
    REQUIRE(t2 > t1);
    CHECK(line.substr(0, t1) == "mem");
    phases[line.substr(t1 + 1, t2 - t1 - 1)] = std::stod(line.substr(t2 + 1));
  }
  REQUIRE(phases.size() == 3);
  // Values are printed with three decimals, so parse-back is within 0.0005.
  CHECK(std::abs(phases["F"] - report.f_ms) < 0.001);
  CHECK(std::abs(phases["S"] - report.s_mean_ms()) < 0.001);
  CHECK(std::abs(phases["M"] - report.m_mean_ms()) < 0.001);
}

TEST_CASE("json report embeds kind, backend, spec, and seed") {
  auto plan = bench::generate(small_spec());
  MemStore s(16 << 10);
  auto report = bench::run_creation(plan, s);
  json j = json::parse(bench::render_creation({report}, bench::Format::Json));
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 1);
  CHECK(j[0]["kind"] == "creation");
  CHECK(j[0]["backend"] == "mem");
  CHECK(j[0]["seed"] == 42);
  CHECK(j[0]["spec"]["n_objects"] == 4);
  CHECK(j[0]["spec"]["mod_size"] == 16 << 10);
  CHECK(j[0].contains("artifact_version"));

  // render_json_text re-renders the same document as a table.
  std::string again = bench::render_json_text(j.dump(), bench::Format::Table);
  CHECK(again.find("mem\tF\t") != std::string::npos);

  auto retr = bench::run_retrieval(plan, s, "bench", 5, 7);
  json rj = json::parse(bench::render_retrieval({retr}, bench::Format::Json));
  CHECK(rj[0]["kind"] == "retrieval");
  CHECK(rj[0]["query_seed"] == 7);
  std::string rt = bench::render_json_text(rj.dump(), bench::Format::Table);
  CHECK(rt.find("Latest (ms)") != std::string::npos);
}

TEST_CASE("empty report list renders header-only output") {
  CHECK(bench::render_creation({}, bench::Format::Tsv) ==
        "Backend\tPhase\tTime (ms)\n");
  CHECK(bench::render_retrieval({}, bench::Format::Tsv) ==
        "Backend\tLatest (ms)\tRandom (ms)\n");
}

TEST_CASE("all backends replay the plan to identical bytes") {
  TempDir tmp("bench-equiv");
  auto plan = bench::generate(small_spec());
  OracleStore oracle(16 << 10);
  (void)bench::run_creation(plan, oracle);
  auto stores = all_backends(tmp, 16 << 10);
  for (auto& s : stores) {
    if (s->backend_name() == "oracle") continue;
    (void)bench::run_creation(plan, *s);
    for (uint64_t o = 0; o < 4; ++o)
      for (uint64_t vid = 1; vid <= 4; ++vid)
        CHECK(s->get_version("bench", plan.object_names[o], vid) ==
              oracle.get_version("bench", plan.object_names[o], vid));
  }
}
