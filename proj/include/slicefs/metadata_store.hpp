#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "slicefs/common.hpp"
#include "slicefs/status.hpp"

// Serializable optimistic-concurrency transactional key-value store with
// multiple named spaces, versioned values, atomic list append, conditional
// operations, and multi-key transactions validated at commit time.
// Transactions buffer mutations client-side (TxnContext below); the store's
// single validation point checks every read-set version and applies the
// write set atomically, first committer wins.

namespace slicefs {

enum class ValueKind : uint8_t { Blob = 0, List = 1 };

struct StoredValue {
  ValueKind kind = ValueKind::Blob;
  Bytes blob;
  std::vector<Bytes> list;
  uint64_t aux = 0;     // auxiliary counter; region lists keep their end offset here
  uint64_t version = 0; // bumps by exactly 1 per successful mutation
};

struct Mutation {
  enum class Op : uint8_t {
    Put = 0,
    CondPut = 1,
    ListAppend = 2,
    CondListAppend = 3,
    PutList = 4,
    Del = 5,
  };

  Op op = Op::Put;
  std::string space;
  std::string key;
  Bytes blob;                    // Put, CondPut
  uint64_t expected_version = 0; // CondPut: apply iff current version matches
  Bytes element;                 // ListAppend, CondListAppend
  uint64_t bump_aux = 0;         // ListAppend: aux = max(aux, bump_aux)
  uint64_t guard_add = 0;        // CondListAppend: applies iff aux + add <= bound
  uint64_t guard_bound = 0;
  std::vector<Bytes> elements;   // PutList
  uint64_t new_aux = 0;          // PutList

  static Mutation put(std::string space, std::string key, Bytes blob) {
    Mutation m;
    m.op = Op::Put;
    m.space = std::move(space);
    m.key = std::move(key);
    m.blob = std::move(blob);
    return m;
  }
  static Mutation cond_put(std::string space, std::string key, Bytes blob, uint64_t expected) {
    Mutation m = put(std::move(space), std::move(key), std::move(blob));
    m.op = Op::CondPut;
    m.expected_version = expected;
    return m;
  }
  static Mutation list_append(std::string space, std::string key, Bytes element,
                              uint64_t bump_aux = 0) {
    Mutation m;
    m.op = Op::ListAppend;
    m.space = std::move(space);
    m.key = std::move(key);
    m.element = std::move(element);
    m.bump_aux = bump_aux;
    return m;
  }
  static Mutation cond_list_append(std::string space, std::string key, Bytes element,
                                   uint64_t add, uint64_t bound) {
    Mutation m;
    m.op = Op::CondListAppend;
    m.space = std::move(space);
    m.key = std::move(key);
    m.element = std::move(element);
    m.guard_add = add;
    m.guard_bound = bound;
    return m;
  }
  static Mutation put_list(std::string space, std::string key, std::vector<Bytes> elements,
                           uint64_t aux) {
    Mutation m;
    m.op = Op::PutList;
    m.space = std::move(space);
    m.key = std::move(key);
    m.elements = std::move(elements);
    m.new_aux = aux;
    return m;
  }
  static Mutation del(std::string space, std::string key) {
    Mutation m;
    m.op = Op::Del;
    m.space = std::move(space);
    m.key = std::move(key);
    return m;
  }
};

struct ReadObservation {
  std::string space;
  std::string key;
  uint64_t version = 0;  // 0 = observed absent (never written)
};

using ReadSet = std::vector<ReadObservation>;

struct CommitResult {
  enum class Outcome : uint8_t { Committed = 0, Conflict = 1, GuardFailed = 2 };
  Outcome outcome = Outcome::Committed;
  size_t failed_mutation = 0;       // index of the first failed guard
  std::vector<uint64_t> aux_after;  // post-apply aux per mutation (0 for non-list ops)

  bool committed() const { return outcome == Outcome::Committed; }
};

struct MetaCounters {
  std::atomic<uint64_t> gets{0};
  std::atomic<uint64_t> commits{0};
  std::atomic<uint64_t> conflicts{0};
  std::atomic<uint64_t> guard_failures{0};
  std::atomic<uint64_t> mutations{0};
};

// Abstract surface the client library programs against: point reads plus
// atomic validated commits. The embedded store and the wire-protocol stub
// both implement it; every non-transactional operation is a one-mutation
// commit with an empty read set.
class MetadataBackend {
 public:
  virtual ~MetadataBackend() = default;

  // Returns the committed value. NotFound carries the key's current version
  // in the result's aux-free way: callers needing the observed version for
  // a read set use observe() instead.
  virtual Result<StoredValue> get(std::string_view space, std::string_view key) = 0;

  // Version the key currently has (0 when never written). Used to record
  // reads of absent keys.
  virtual Result<uint64_t> current_version(std::string_view space, std::string_view key) = 0;

  virtual Result<CommitResult> commit(const ReadSet& reads,
                                      const std::vector<Mutation>& mutations) = 0;

  // -- convenience single-op forms ------------------------------------------

  Result<uint64_t> put(std::string space, std::string key, Bytes blob) {
    auto r = commit({}, {Mutation::put(std::move(space), std::move(key), std::move(blob))});
    if (!r.ok()) return r.status();
    return r->aux_after.empty() ? 0 : r->aux_after[0];
  }

  // Returns the aux value after the append (the new end offset).
  Result<uint64_t> list_append(std::string space, std::string key, Bytes element,
                               uint64_t bump_aux = 0) {
    auto r = commit({}, {Mutation::list_append(std::move(space), std::move(key),
                                               std::move(element), bump_aux)});
    if (!r.ok()) return r.status();
    return r->aux_after[0];
  }

  struct CondOutcome {
    bool applied = false;
    uint64_t aux_after = 0;
  };

  Result<CondOutcome> cond_list_append(std::string space, std::string key, Bytes element,
                                       uint64_t add, uint64_t bound) {
    auto r = commit({}, {Mutation::cond_list_append(std::move(space), std::move(key),
                                                    std::move(element), add, bound)});
    if (!r.ok()) return r.status();
    if (r->outcome == CommitResult::Outcome::GuardFailed) return CondOutcome{false, r->aux_after[0]};
    return CondOutcome{true, r->aux_after[0]};
  }

  Result<uint64_t> del(std::string space, std::string key) {
    auto r = commit({}, {Mutation::del(std::move(space), std::move(key))});
    if (!r.ok()) return r.status();
    return uint64_t{0};
  }
};

namespace detail {

inline std::string full_key(std::string_view space, std::string_view key) {
  std::string s;
  s.reserve(space.size() + key.size() + 1);
  s.append(space);
  s.push_back('\0');
  s.append(key);
  return s;
}

// WAL record payloads. A commit group is a run of MUT records closed by a
// COMMIT record; an unterminated or corrupt tail is discarded on replay.
constexpr uint8_t kWalMut = 0;
constexpr uint8_t kWalCommit = 1;

inline Bytes encode_wal_mutation(const Mutation& m, uint64_t version_after) {
  Bytes out;
  put_u8(out, kWalMut);
  put_u8(out, static_cast<uint8_t>(m.op));
  put_bytes16(out, m.space);
  put_bytes16(out, m.key);
  put_u64(out, version_after);
  switch (m.op) {
    case Mutation::Op::Put:
    case Mutation::Op::CondPut:
      put_bytes32(out, m.blob);
      break;
    case Mutation::Op::ListAppend:
      put_bytes32(out, m.element);
      put_u64(out, m.bump_aux);
      break;
    case Mutation::Op::CondListAppend:
      put_bytes32(out, m.element);
      put_u64(out, m.guard_add);
      break;
    case Mutation::Op::PutList:
      put_u64(out, m.new_aux);
      put_u32(out, static_cast<uint32_t>(m.elements.size()));
      for (const auto& e : m.elements) put_bytes32(out, e);
      break;
    case Mutation::Op::Del:
      break;
  }
  return out;
}

}  // namespace detail

// Embedded store. Thread-safe; all operations serialize through one mutex,
// which doubles as the commit validation point.
class MetadataStore : public MetadataBackend {
 public:
  MetadataStore() = default;

  // Opens (and replays) a durable store backed by a write-ahead log.
  static Result<std::unique_ptr<MetadataStore>> open(const std::string& wal_path,
                                                     bool fsync_each_commit = false) {
    auto store = std::make_unique<MetadataStore>();
    store->fsync_ = fsync_each_commit;
    store->wal_path_ = wal_path;
    if (Status s = store->replay_wal(); !s.ok()) return s;
    store->wal_.open(wal_path, std::ios::binary | std::ios::app);
    if (!store->wal_.is_open()) return Status{Err::IoFailure, "cannot open wal: " + wal_path};
    return store;
  }

  Result<StoredValue> get(std::string_view space, std::string_view key) override {
    std::lock_guard lock(mu_);
    counters_.gets.fetch_add(1, std::memory_order_relaxed);
    auto it = records_.find(detail::full_key(space, key));
    if (it == records_.end()) return Err::NotFound;
    return it->second;
  }

  Result<uint64_t> current_version(std::string_view space, std::string_view key) override {
    std::lock_guard lock(mu_);
    return version_locked(detail::full_key(space, key));
  }

  Result<CommitResult> commit(const ReadSet& reads,
                              const std::vector<Mutation>& mutations) override {
    std::lock_guard lock(mu_);
    counters_.commits.fetch_add(1, std::memory_order_relaxed);

    for (const auto& obs : reads) {
      if (version_locked(detail::full_key(obs.space, obs.key)) != obs.version) {
        counters_.conflicts.fetch_add(1, std::memory_order_relaxed);
        return CommitResult{CommitResult::Outcome::Conflict};
      }
    }

    // Stage sequentially on copies so guards and type checks see earlier
    // mutations from the same commit, then swap in atomically.
    std::map<std::string, std::optional<StoredValue>> staged;
    auto view = [&](const std::string& fk) -> std::optional<StoredValue>& {
      auto it = staged.find(fk);
      if (it != staged.end()) return it->second;
      auto rec = records_.find(fk);
      auto [ins, _] = staged.emplace(
          fk, rec == records_.end() ? std::nullopt : std::optional<StoredValue>(rec->second));
      return ins->second;
    };

    CommitResult result;
    result.aux_after.resize(mutations.size(), 0);
    for (size_t i = 0; i < mutations.size(); ++i) {
      const Mutation& m = mutations[i];
      const std::string fk = detail::full_key(m.space, m.key);
      std::optional<StoredValue>& cur = view(fk);
      const uint64_t cur_version = cur ? cur->version : version_locked(fk);

      switch (m.op) {
        case Mutation::Op::CondPut:
          if (cur_version != m.expected_version) {
            counters_.conflicts.fetch_add(1, std::memory_order_relaxed);
            return CommitResult{CommitResult::Outcome::Conflict};
          }
          [[fallthrough]];
        case Mutation::Op::Put: {
          StoredValue v;
          v.kind = ValueKind::Blob;
          v.blob = m.blob;
          v.version = cur_version + 1;
          cur = std::move(v);
          break;
        }
        case Mutation::Op::ListAppend:
        case Mutation::Op::CondListAppend: {
          if (cur && cur->kind != ValueKind::List) {
            return Status{Err::TypeMismatch, "append to non-list value"};
          }
          if (!cur) {
            StoredValue v;
            v.kind = ValueKind::List;
            v.version = cur_version;
            cur = std::move(v);
          }
          if (m.op == Mutation::Op::CondListAppend) {
            if (cur->aux + m.guard_add > m.guard_bound) {
              counters_.guard_failures.fetch_add(1, std::memory_order_relaxed);
              CommitResult failed;
              failed.outcome = CommitResult::Outcome::GuardFailed;
              failed.failed_mutation = i;
              failed.aux_after.assign(mutations.size(), 0);
              failed.aux_after[i] = cur->aux;
              return failed;
            }
            cur->list.push_back(m.element);
            cur->aux += m.guard_add;
          } else {
            cur->list.push_back(m.element);
            cur->aux = std::max(cur->aux, m.bump_aux);
          }
          cur->version += 1;
          result.aux_after[i] = cur->aux;
          break;
        }
        case Mutation::Op::PutList: {
          StoredValue v;
          v.kind = ValueKind::List;
          v.list = m.elements;
          v.aux = m.new_aux;
          v.version = cur_version + 1;
          cur = std::move(v);
          result.aux_after[i] = v.aux;
          break;
        }
        case Mutation::Op::Del:
          cur = std::nullopt;
          erased_staged_[fk] = cur_version + 1;
          break;
      }
    }

    // Validation passed and every guard held: make it visible and durable.
    Bytes wal_buf;
    for (size_t i = 0; i < mutations.size(); ++i) {
      const Mutation& m = mutations[i];
      const std::string fk = detail::full_key(m.space, m.key);
      uint64_t version_after = staged[fk] ? staged[fk]->version : erased_staged_[fk];
      if (wal_enabled()) append_wal_record(wal_buf, detail::encode_wal_mutation(m, version_after));
    }
    for (auto& [fk, v] : staged) {
      if (v) {
        records_[fk] = std::move(*v);
        erased_.erase(fk);
      } else if (records_.erase(fk) > 0 || erased_staged_.count(fk)) {
        erased_[fk] = erased_staged_[fk];
      }
    }
    erased_staged_.clear();
    counters_.mutations.fetch_add(mutations.size(), std::memory_order_relaxed);

    if (wal_enabled() && !mutations.empty()) {
      Bytes commit_rec;
      put_u8(commit_rec, detail::kWalCommit);
      put_u32(commit_rec, static_cast<uint32_t>(mutations.size()));
      append_wal_record(wal_buf, commit_rec);
      wal_.write(wal_buf.data(), static_cast<std::streamsize>(wal_buf.size()));
      wal_.flush();
      if (fsync_) {
        // flush() above pushes to the OS; fsync via C API for durability.
        wal_.rdbuf()->pubsync();
      }
    }
    return result;
  }

  // Point-in-time snapshot of one space. Embedded-only helper for scans and
  // verification; not part of the wire surface.
  std::vector<std::pair<std::string, StoredValue>> scan(std::string_view space) {
    std::lock_guard lock(mu_);
    std::vector<std::pair<std::string, StoredValue>> out;
    std::string prefix(space);
    prefix.push_back('\0');
    for (const auto& [fk, v] : records_) {
      if (fk.size() >= prefix.size() && fk.compare(0, prefix.size(), prefix) == 0) {
        out.emplace_back(fk.substr(prefix.size()), v);
      }
    }
    return out;
  }

  const MetaCounters& counters() const { return counters_; }

 private:
  bool wal_enabled() const { return !wal_path_.empty(); }

  uint64_t version_locked(const std::string& fk) const {
    auto it = records_.find(fk);
    if (it != records_.end()) return it->second.version;
    auto er = erased_.find(fk);
    return er != erased_.end() ? er->second : 0;
  }

  static void append_wal_record(Bytes& out, const Bytes& payload) {
    put_u32(out, static_cast<uint32_t>(payload.size()));
    put_u32(out, crc32(payload));
    out.append(payload);
  }

  Status replay_wal() {
    std::ifstream in(wal_path_, std::ios::binary);
    if (!in.is_open()) return Status::OK();  // fresh store
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ByteReader r(data);

    struct Pending {
      Mutation m;
      uint64_t version_after = 0;
    };
    std::vector<Pending> pending;

    while (r.remaining() >= 8) {
      uint32_t len, crc;
      if (!r.get_u32(len) || !r.get_u32(crc)) break;
      BytesView payload;
      if (!r.get_bytes(len, payload)) break;  // truncated tail
      if (crc32(payload) != crc) break;       // corrupt tail

      ByteReader pr(payload);
      uint8_t kind;
      if (!pr.get_u8(kind)) break;
      if (kind == detail::kWalCommit) {
        uint32_t n;
        if (!pr.get_u32(n) || n > pending.size()) break;
        for (size_t i = pending.size() - n; i < pending.size(); ++i) {
          apply_replayed(pending[i].m, pending[i].version_after);
        }
        pending.clear();
        continue;
      }
      Pending p;
      uint8_t op;
      BytesView space, key;
      if (!pr.get_u8(op) || !pr.get_bytes16(space) || !pr.get_bytes16(key) ||
          !pr.get_u64(p.version_after)) {
        break;
      }
      p.m.op = static_cast<Mutation::Op>(op);
      p.m.space.assign(space);
      p.m.key.assign(key);
      bool ok = true;
      switch (p.m.op) {
        case Mutation::Op::Put:
        case Mutation::Op::CondPut: {
          BytesView blob;
          ok = pr.get_bytes32(blob);
          p.m.blob.assign(blob);
          break;
        }
        case Mutation::Op::ListAppend: {
          BytesView elem;
          ok = pr.get_bytes32(elem) && pr.get_u64(p.m.bump_aux);
          p.m.element.assign(elem);
          break;
        }
        case Mutation::Op::CondListAppend: {
          BytesView elem;
          ok = pr.get_bytes32(elem) && pr.get_u64(p.m.guard_add);
          p.m.element.assign(elem);
          break;
        }
        case Mutation::Op::PutList: {
          uint32_t n = 0;
          ok = pr.get_u64(p.m.new_aux) && pr.get_u32(n);
          for (uint32_t i = 0; ok && i < n; ++i) {
            BytesView e;
            ok = pr.get_bytes32(e);
            if (ok) p.m.elements.emplace_back(e);
          }
          break;
        }
        case Mutation::Op::Del:
          break;
        default:
          ok = false;
      }
      if (!ok) break;
      pending.push_back(std::move(p));
    }
    return Status::OK();
  }

  void apply_replayed(const Mutation& m, uint64_t version_after) {
    const std::string fk = detail::full_key(m.space, m.key);
    switch (m.op) {
      case Mutation::Op::Put:
      case Mutation::Op::CondPut: {
        StoredValue v;
        v.kind = ValueKind::Blob;
        v.blob = m.blob;
        v.version = version_after;
        records_[fk] = std::move(v);
        erased_.erase(fk);
        break;
      }
      case Mutation::Op::ListAppend:
      case Mutation::Op::CondListAppend: {
        StoredValue& v = records_[fk];
        v.kind = ValueKind::List;
        v.list.push_back(m.element);
        if (m.op == Mutation::Op::ListAppend) {
          v.aux = std::max(v.aux, m.bump_aux);
        } else {
          v.aux += m.guard_add;
        }
        v.version = version_after;
        erased_.erase(fk);
        break;
      }
      case Mutation::Op::PutList: {
        StoredValue v;
        v.kind = ValueKind::List;
        v.list = m.elements;
        v.aux = m.new_aux;
        v.version = version_after;
        records_[fk] = std::move(v);
        erased_.erase(fk);
        break;
      }
      case Mutation::Op::Del:
        records_.erase(fk);
        erased_[fk] = version_after;
        break;
    }
  }

  std::mutex mu_;
  std::map<std::string, StoredValue> records_;
  std::unordered_map<std::string, uint64_t> erased_;         // last version of deleted keys
  std::unordered_map<std::string, uint64_t> erased_staged_;  // scratch during commit
  MetaCounters counters_;
  std::string wal_path_;
  std::ofstream wal_;
  bool fsync_ = false;
};

// Client-side transaction context: a read set of observed versions plus an
// ordered buffer of mutations, invisible to others until commit. Reads see
// the transaction's own buffered writes.
class TxnContext {
 public:
  enum class State { Open, Committed, Aborted };

  explicit TxnContext(MetadataBackend& backend) : backend_(&backend) {}

  State state() const { return state_; }
  const std::vector<Mutation>& mutations() const { return mutations_; }
  const ReadSet& reads() const { return reads_; }

  // Committed-state observation plus overlay of buffered mutations.
  // Returns nullopt when the key does not exist in this transaction's view.
  Result<std::optional<StoredValue>> get(std::string_view space, std::string_view key) {
    if (state_ != State::Open) return Status{Err::UseAfterClose};
    const std::string fk = detail::full_key(space, key);

    std::optional<StoredValue> base;
    if (fully_replaced_.count(fk) == 0) {
      auto cached = base_cache_.find(fk);
      if (cached != base_cache_.end()) {
        base = cached->second;
      } else {
        auto got = backend_->get(space, key);
        if (got.ok()) {
          base = std::move(got.value());
        } else if (got.error() != Err::NotFound) {
          return got.status();
        }
        auto ver = backend_->current_version(space, key);
        if (!ver.ok()) return ver.status();
        reads_.push_back({std::string(space), std::string(key), *ver});
        base_cache_[fk] = base;
      }
    }

    // Overlay buffered mutations in order.
    std::optional<StoredValue> v = std::move(base);
    for (const Mutation& m : mutations_) {
      if (m.space != space || m.key != key) continue;
      switch (m.op) {
        case Mutation::Op::Put:
        case Mutation::Op::CondPut: {
          StoredValue nv;
          nv.kind = ValueKind::Blob;
          nv.blob = m.blob;
          v = std::move(nv);
          break;
        }
        case Mutation::Op::ListAppend:
        case Mutation::Op::CondListAppend: {
          if (!v) v = StoredValue{ValueKind::List, {}, {}, 0, 0};
          if (v->kind != ValueKind::List) return Status{Err::TypeMismatch};
          v->list.push_back(m.element);
          if (m.op == Mutation::Op::ListAppend) {
            v->aux = std::max(v->aux, m.bump_aux);
          } else {
            v->aux += m.guard_add;  // optimistic view; the guard re-checks at commit
          }
          break;
        }
        case Mutation::Op::PutList: {
          StoredValue nv;
          nv.kind = ValueKind::List;
          nv.list = m.elements;
          nv.aux = m.new_aux;
          v = std::move(nv);
          break;
        }
        case Mutation::Op::Del:
          v = std::nullopt;
          break;
      }
    }
    return v;
  }

  void put(std::string space, std::string key, Bytes blob) {
    buffer(Mutation::put(std::move(space), std::move(key), std::move(blob)));
  }
  void cond_put(std::string space, std::string key, Bytes blob, uint64_t expected_version) {
    buffer(Mutation::cond_put(std::move(space), std::move(key), std::move(blob),
                              expected_version));
  }
  void list_append(std::string space, std::string key, Bytes element, uint64_t bump_aux = 0) {
    buffer(Mutation::list_append(std::move(space), std::move(key), std::move(element), bump_aux));
  }
  void cond_list_append(std::string space, std::string key, Bytes element, uint64_t add,
                        uint64_t bound) {
    buffer(Mutation::cond_list_append(std::move(space), std::move(key), std::move(element), add,
                                      bound));
  }
  void put_list(std::string space, std::string key, std::vector<Bytes> elements, uint64_t aux) {
    buffer(Mutation::put_list(std::move(space), std::move(key), std::move(elements), aux));
  }
  void del(std::string space, std::string key) {
    buffer(Mutation::del(std::move(space), std::move(key)));
  }

  Result<CommitResult> commit() {
    if (state_ != State::Open) return Status{Err::UseAfterClose};
    auto r = backend_->commit(reads_, mutations_);
    if (!r.ok()) {
      state_ = State::Aborted;
      return r;
    }
    state_ = r->committed() ? State::Committed : State::Aborted;
    return r;
  }

  void abort() { state_ = State::Aborted; }

 private:
  void buffer(Mutation m) {
    const std::string fk = detail::full_key(m.space, m.key);
    if (m.op == Mutation::Op::Put || m.op == Mutation::Op::PutList ||
        m.op == Mutation::Op::Del) {
      // The buffered value no longer depends on committed state, so a
      // subsequent read of this key inside the txn is not a conflict source.
      if (base_cache_.count(fk) == 0) fully_replaced_.insert(fk);
    }
    mutations_.push_back(std::move(m));
  }

  MetadataBackend* backend_;
  State state_ = State::Open;
  ReadSet reads_;
  std::vector<Mutation> mutations_;
  std::map<std::string, std::optional<StoredValue>> base_cache_;
  std::set<std::string> fully_replaced_;
};

}  // namespace slicefs
