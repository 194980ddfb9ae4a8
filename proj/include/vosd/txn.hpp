#pragma once

#include <map>
#include <mutex>
#include <set>
#include <string>

#include "vosd/store.hpp"

namespace vosd {

// Outcome of tx_commit: either a new committed frontier or the set of
// objects whose concurrent modification forced the abort.
struct CommitOutcome {
  bool committed = false;
  uint64_t new_hct = 0;               // valid when committed
  std::set<std::string> conflicts;    // non-empty when aborted
};

struct TxInfo {
  uint64_t tx_id = 0;
  std::string cid;
  uint64_t snapshot_cvid = 0;
  uint64_t start_hct = 0;
  std::set<std::string> write_set;
  enum class State { Active, Committed, Aborted } state = State::Active;
};

struct CkptInfo {
  uint64_t ckpt_id = 0;
  std::string cid;
  uint64_t ckpt_cvid = 0;  // doubles as the checkpoint tag
  uint64_t begin_hrc = 0;
  enum class State { Active, Committed, Aborted } state = State::Active;
};

// Optimistic-MVCC transactions (HCT protocol) and read-atomic
// checkpointing (HRC protocol) over any Store backend.
//
// Every transaction runs against a writable snapshot cloned from the HCT
// target at begin. Commit validates the write set against the current HCT
// by diffing and advances HCT by compare-and-swap; when HCT moved but no
// written object conflicts, the committed state is composed from the
// current frontier plus this transaction's written versions, so disjoint
// writers all land. Write-write conflicts at object granularity; the
// delivered isolation level is snapshot isolation.
class TxnManager {
 public:
  explicit TxnManager(Store& store, int max_commit_retries = 64)
      : store_(store), max_retries_(max_commit_retries) {}

  // MVCC ------------------------------------------------------------------
  uint64_t tx_begin(const std::string& cid);
  Bytes tx_get(uint64_t tx_id, const std::string& oid);
  void tx_write(uint64_t tx_id, const std::string& oid, uint64_t offset,
                std::string_view data);
  CommitOutcome tx_commit(uint64_t tx_id);
  void tx_abort(uint64_t tx_id);
  uint64_t hct_get(const std::string& cid) const;
  TxInfo tx_info(uint64_t tx_id) const;

  // Read-atomic checkpointing --------------------------------------------
  uint64_t ckpt_begin(const std::string& cid);
  void ckpt_write(uint64_t ckpt_id, const std::string& oid, uint64_t offset,
                  std::string_view data);
  // Returns the committed checkpoint's cvid; throws ConcurrentCheckpoint
  // if HRC moved since begin.
  uint64_t ckpt_commit(uint64_t ckpt_id);
  uint64_t hrc_get(const std::string& cid) const;
  Bytes read_atomic_get(const std::string& cid, const std::string& oid) const;

  uint64_t merge_checkpoints(const std::string& cid, uint64_t from_cvid,
                             uint64_t to_cvid);
  GcReport txn_gc(const std::string& cid);

 private:
  TxInfo& active_tx(uint64_t tx_id);
  CkptInfo& active_ckpt(uint64_t ckpt_id);
  std::vector<uint64_t> live_roots(const std::string& cid) const;

  Store& store_;
  int max_retries_;
  mutable std::mutex mu_;
  uint64_t next_id_ = 1;
  std::map<uint64_t, TxInfo> txs_;
  std::map<uint64_t, CkptInfo> ckpts_;
};

}  // namespace vosd
