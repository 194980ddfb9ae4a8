#include "vosd/txn.hpp"

namespace vosd {

TxInfo& TxnManager::active_tx(uint64_t tx_id) {
  auto it = txs_.find(tx_id);
  if (it == txs_.end() || it->second.state != TxInfo::State::Active)
    fail(Err::TxNotActive, "transaction " + std::to_string(tx_id) +
                               " is not active");
  return it->second;
}

CkptInfo& TxnManager::active_ckpt(uint64_t ckpt_id) {
  auto it = ckpts_.find(ckpt_id);
  if (it == ckpts_.end() || it->second.state != CkptInfo::State::Active)
    fail(Err::CkptNotActive,
         "checkpoint " + std::to_string(ckpt_id) + " is not active");
  return it->second;
}

uint64_t TxnManager::tx_begin(const std::string& cid) {
  auto hct = store_.pointer_try_get(cid, kHct);
  if (!hct) fail(Err::UninitializedHct, "HCT pointer missing for " + cid);
  // The snapshot is a clone of the exact cvid recorded as start_hct, so
  // the pair stays consistent even if HCT advances concurrently.
  uint64_t snapshot = store_.clone_collection(cid, *hct);
  std::lock_guard lk(mu_);
  TxInfo tx;
  tx.tx_id = next_id_++;
  tx.cid = cid;
  tx.snapshot_cvid = snapshot;
  tx.start_hct = *hct;
  txs_[tx.tx_id] = tx;
  return tx.tx_id;
}

Bytes TxnManager::tx_get(uint64_t tx_id, const std::string& oid) {
  std::string cid;
  uint64_t cvid;
  {
    std::lock_guard lk(mu_);
    TxInfo& tx = active_tx(tx_id);
    cid = tx.cid;
    cvid = tx.snapshot_cvid;
  }
  return store_.get(cid, cvid, oid);
}

void TxnManager::tx_write(uint64_t tx_id, const std::string& oid,
                          uint64_t offset, std::string_view data) {
  std::string cid;
  uint64_t cvid;
  {
    std::lock_guard lk(mu_);
    TxInfo& tx = active_tx(tx_id);
    cid = tx.cid;
    cvid = tx.snapshot_cvid;
  }
  store_.write_range(cid, cvid, oid, offset, data);
  std::lock_guard lk(mu_);
  active_tx(tx_id).write_set.insert(oid);
}

CommitOutcome TxnManager::tx_commit(uint64_t tx_id) {
  TxInfo snapshot;
  {
    std::lock_guard lk(mu_);
    snapshot = active_tx(tx_id);
  }
  const std::string& cid = snapshot.cid;

  for (int attempt = 0; attempt < max_retries_; ++attempt) {
    uint64_t cur = store_.pointer_get(cid, kHct);
    std::set<std::string> conflicts;
    if (cur != snapshot.start_hct) {
      for (const std::string& oid : snapshot.write_set) {
        uint64_t vs = store_.version_of(cid, snapshot.start_hct, oid);
        uint64_t vc = store_.version_of(cid, cur, oid);
        if (vs != vc && !store_.diff(cid, oid, vs, vc).empty())
          conflicts.insert(oid);
      }
    }
    if (!conflicts.empty()) {
      std::lock_guard lk(mu_);
      active_tx(tx_id).state = TxInfo::State::Aborted;
      CommitOutcome out;
      out.conflicts = std::move(conflicts);
      return out;
    }
    if (snapshot.write_set.empty()) {
      // Read-only: nothing to publish, HCT stays put.
      std::lock_guard lk(mu_);
      active_tx(tx_id).state = TxInfo::State::Committed;
      return CommitOutcome{true, cur, {}};
    }
    uint64_t new_hct;
    if (cur == snapshot.start_hct) {
      store_.freeze_collection_version(cid, snapshot.snapshot_cvid);
      new_hct = snapshot.snapshot_cvid;
    } else {
      // HCT moved but nothing we wrote conflicts: publish the current
      // frontier plus our written versions.
      std::map<std::string, uint64_t> overrides;
      for (const std::string& oid : snapshot.write_set)
        overrides[oid] = store_.version_of(cid, snapshot.snapshot_cvid, oid);
      new_hct = store_.compose_commit(cid, cur, overrides);
    }
    if (store_.pointer_cas(cid, kHct, cur, new_hct)) {
      std::lock_guard lk(mu_);
      active_tx(tx_id).state = TxInfo::State::Committed;
      return CommitOutcome{true, new_hct, {}};
    }
    // Lost the CAS race; re-validate against the new frontier.
  }
  fail(Err::TxContention, "commit retries exhausted for transaction " +
                              std::to_string(tx_id));
}

void TxnManager::tx_abort(uint64_t tx_id) {
  std::lock_guard lk(mu_);
  active_tx(tx_id).state = TxInfo::State::Aborted;
}

uint64_t TxnManager::hct_get(const std::string& cid) const {
  auto hct = store_.pointer_try_get(cid, kHct);
  if (!hct) fail(Err::UninitializedHct, "HCT pointer missing for " + cid);
  return *hct;
}

TxInfo TxnManager::tx_info(uint64_t tx_id) const {
  std::lock_guard lk(mu_);
  auto it = txs_.find(tx_id);
  if (it == txs_.end())
    fail(Err::TxNotActive, "unknown transaction " + std::to_string(tx_id));
  return it->second;
}

uint64_t TxnManager::ckpt_begin(const std::string& cid) {
  auto hrc = store_.pointer_try_get(cid, kHrc);
  if (!hrc) fail(Err::UninitializedHrc, "HRC pointer missing for " + cid);
  uint64_t cvid = store_.clone_collection(cid, *hrc);
  std::lock_guard lk(mu_);
  CkptInfo ck;
  ck.ckpt_id = next_id_++;
  ck.cid = cid;
  ck.ckpt_cvid = cvid;
  ck.begin_hrc = *hrc;
  ckpts_[ck.ckpt_id] = ck;
  return ck.ckpt_id;
}

void TxnManager::ckpt_write(uint64_t ckpt_id, const std::string& oid,
                            uint64_t offset, std::string_view data) {
  std::string cid;
  uint64_t cvid;
  {
    std::lock_guard lk(mu_);
    CkptInfo& ck = active_ckpt(ckpt_id);
    cid = ck.cid;
    cvid = ck.ckpt_cvid;
  }
  store_.write_range(cid, cvid, oid, offset, data);
}

uint64_t TxnManager::ckpt_commit(uint64_t ckpt_id) {
  CkptInfo ck;
  {
    std::lock_guard lk(mu_);
    ck = active_ckpt(ckpt_id);
  }
  store_.freeze_collection_version(ck.cid, ck.ckpt_cvid);
  if (!store_.pointer_cas(ck.cid, kHrc, ck.begin_hrc, ck.ckpt_cvid)) {
    std::lock_guard lk(mu_);
    active_ckpt(ckpt_id).state = CkptInfo::State::Aborted;
    fail(Err::ConcurrentCheckpoint,
         "HRC moved since checkpoint begin; single-writer checkpoints only");
  }
  std::lock_guard lk(mu_);
  active_ckpt(ckpt_id).state = CkptInfo::State::Committed;
  return ck.ckpt_cvid;
}

uint64_t TxnManager::hrc_get(const std::string& cid) const {
  auto hrc = store_.pointer_try_get(cid, kHrc);
  if (!hrc) fail(Err::UninitializedHrc, "HRC pointer missing for " + cid);
  return *hrc;
}

Bytes TxnManager::read_atomic_get(const std::string& cid,
                                  const std::string& oid) const {
  return store_.get(cid, hrc_get(cid), oid);
}

std::vector<uint64_t> TxnManager::live_roots(const std::string& cid) const {
  std::vector<uint64_t> roots;
  for (const auto& [_, tx] : txs_)
    if (tx.cid == cid && tx.state == TxInfo::State::Active)
      roots.push_back(tx.snapshot_cvid);
  for (const auto& [_, ck] : ckpts_)
    if (ck.cid == cid && ck.state == CkptInfo::State::Active)
      roots.push_back(ck.ckpt_cvid);
  return roots;
}

uint64_t TxnManager::merge_checkpoints(const std::string& cid,
                                       uint64_t from_cvid, uint64_t to_cvid) {
  std::vector<uint64_t> roots;
  {
    std::lock_guard lk(mu_);
    roots = live_roots(cid);
  }
  return store_.squash_collection_versions(cid, from_cvid, to_cvid, roots);
}

GcReport TxnManager::txn_gc(const std::string& cid) {
  std::vector<uint64_t> roots;
  {
    std::lock_guard lk(mu_);
    roots = live_roots(cid);
  }
  GcReport report = store_.gc(cid, roots);
  // Retired handle records have served their debugging purpose once their
  // snapshots are reclaimed.
  std::lock_guard lk(mu_);
  for (auto it = txs_.begin(); it != txs_.end();)
    it = (it->second.cid == cid && it->second.state != TxInfo::State::Active)
             ? txs_.erase(it)
             : std::next(it);
  for (auto it = ckpts_.begin(); it != ckpts_.end();)
    it = (it->second.cid == cid &&
          it->second.state != CkptInfo::State::Active)
             ? ckpts_.erase(it)
             : std::next(it);
  return report;
}

}  // namespace vosd
