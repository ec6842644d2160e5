#pragma once

#include <algorithm>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lumiere/types.hpp"

namespace lumiere {

struct ForgeryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InsufficientSigners : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PayloadMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Who is asking the ledger to sign. The adversary may sign for any corrupted
// processor; a processor may sign only for itself.
struct Caller {
  bool adversary = false;
  ProcessorId id = 0;

  static Caller processor(ProcessorId p) { return {false, p}; }
  static Caller the_adversary() { return {true, 0}; }
};

// Per-run signature oracle. Forgery is impossible rather than negligible:
// every partial must be issued through sign_partial and every aggregate
// through aggregate, and verify only accepts what was registered.
class Ledger {
 public:
  Ledger() = default;
  explicit Ledger(std::vector<bool> corrupted) : corrupted_(std::move(corrupted)) {}

  bool is_corrupted(ProcessorId p) const {
    return p < corrupted_.size() && corrupted_[p];
  }

  PartialSig sign_partial(Caller caller, ProcessorId signer, Payload payload) {
    const bool allowed = caller.adversary ? is_corrupted(signer) : caller.id == signer;
    if (!allowed) {
      throw ForgeryError("forged partial for processor " + std::to_string(signer));
    }
    PartialSig sig{signer, payload};
    partials_.insert(sig);
    return sig;
  }

  bool has_partial(const PartialSig& sig) const { return partials_.contains(sig); }

  ThresholdSig aggregate(std::span<const PartialSig> partials, int m) {
    if (partials.empty()) throw InsufficientSigners("no partials");
    const Payload payload = partials.front().payload;
    std::vector<ProcessorId> signers;
    signers.reserve(partials.size());
    for (const auto& p : partials) {
      if (p.payload != payload) throw PayloadMismatch("partials disagree on payload");
      if (!partials_.contains(p)) {
        throw ForgeryError("unregistered partial from " + std::to_string(p.signer));
      }
      signers.push_back(p.signer);
    }
    std::sort(signers.begin(), signers.end());
    signers.erase(std::unique(signers.begin(), signers.end()), signers.end());
    if (static_cast<int>(signers.size()) < m) {
      throw InsufficientSigners(std::to_string(signers.size()) + " distinct signers, need " +
                                std::to_string(m));
    }
    ThresholdSig sig{payload, std::move(signers), m};
    aggregates_.insert(sig);
    return sig;
  }

  // Aggregate directly from a signer set whose partials are already registered.
  ThresholdSig aggregate(Payload payload, std::span<const ProcessorId> signers, int m) {
    std::vector<PartialSig> partials;
    partials.reserve(signers.size());
    for (auto s : signers) partials.push_back({s, payload});
    return aggregate(partials, m);
  }

  bool verify(const ThresholdSig& sig) const {
    if (static_cast<int>(sig.signers.size()) < sig.threshold) return false;
    if (!std::is_sorted(sig.signers.begin(), sig.signers.end())) return false;
    if (std::adjacent_find(sig.signers.begin(), sig.signers.end()) != sig.signers.end()) {
      return false;
    }
    return aggregates_.contains(sig);
  }

  // Holds when no registered aggregate names a signer without a matching
  // partial. Checked at the end of every run.
  bool consistent() const {
    for (const auto& agg : aggregates_) {
      for (auto s : agg.signers) {
        if (!partials_.contains(PartialSig{s, agg.payload})) return false;
      }
    }
    return true;
  }

  std::size_t partial_count() const { return partials_.size(); }
  std::size_t aggregate_count() const { return aggregates_.size(); }

 private:
  std::vector<bool> corrupted_;
  std::set<PartialSig> partials_;
  std::set<ThresholdSig> aggregates_;
};

}  // namespace lumiere
