#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "lumiere/protocol.hpp"

namespace lumiere {

// When a leader may propose in a view it has entered.
enum class ProposalGate {
  VcForInitial,          // initial views need the leader's own VC first
  VcForInitialNonEpoch,  // as above, but epoch views propose on entry
  OnEntry,               // every view proposes on entry
};

// Minimal underlying protocol: one proposal, one vote per processor, one QC
// per view. A QC is the only way a view completes.
struct EngineState {
  View proposed_upto = kNoView;
  View voted_upto = kNoView;
  std::set<View> pending_proposals;  // received before entering the view
  std::map<View, std::vector<ProcessorId>> votes;
  std::map<View, Tick> vc_sent_at;
  std::map<View, Tick> qc_sent_at;
  std::map<View, Tick> entered_at;
  std::set<View> qc_closed;  // QC sent or deadline missed
  std::set<View> voted_any;  // colluder votes, cast regardless of view

  // Drops bookkeeping for views well behind `view`.
  void prune(View view) {
    const View keep = view - 4;
    auto drop = [keep](auto& m) { m.erase(m.begin(), m.lower_bound(keep)); };
    drop(votes);
    drop(vc_sent_at);
    drop(qc_sent_at);
    drop(entered_at);
    qc_closed.erase(qc_closed.begin(), qc_closed.lower_bound(keep));
    pending_proposals.erase(pending_proposals.begin(), pending_proposals.lower_bound(keep));
    voted_any.erase(voted_any.begin(), voted_any.lower_bound(keep));
  }
};

struct EnginePolicy {
  ProposalGate gate = ProposalGate::VcForInitial;
  bool deadline = true;  // QC only within Γ/2 − 2Δ of the anchor
};

namespace engine {

inline Tick qc_budget(const StepContext& ctx) { return ctx.gamma / 2 - 2 * ctx.delta; }

// Anchor for the QC deadline: the VC send time for initial views; for other
// views the leader's own send time of the previous QC, or its entry time
// into the view when it did not send that QC.
inline std::optional<Tick> anchor_of(const EngineState& s, View v, const EpochLayout& layout,
                                     ProposalGate gate) {
  const bool needs_vc = is_initial(v) &&
                        (gate == ProposalGate::VcForInitial ||
                         (gate == ProposalGate::VcForInitialNonEpoch && !layout.is_epoch_view(v)));
  if (needs_vc) {
    auto it = s.vc_sent_at.find(v);
    if (it == s.vc_sent_at.end()) return std::nullopt;
    return it->second;
  }
  if (auto it = s.qc_sent_at.find(v - 1); it != s.qc_sent_at.end()) return it->second;
  if (auto it = s.entered_at.find(v); it != s.entered_at.end()) return it->second;
  return std::nullopt;
}

inline void note_entered(EngineState& s, View v, Tick now) { s.entered_at.try_emplace(v, now); }
inline void note_vc_sent(EngineState& s, View v, Tick now) { s.vc_sent_at.try_emplace(v, now); }

// Proposes if this processor leads `view` and is allowed to, and votes on a
// buffered proposal for `view`.
inline void drive(EngineState& s, View view, const EnginePolicy& policy, StepContext& ctx,
                  Outbox& out) {
  if (view < 0) return;
  if (ctx.leader(view) == ctx.self && s.proposed_upto < view &&
      anchor_of(s, view, ctx.layout, policy.gate)) {
    s.proposed_upto = view;
    out.broadcast(ctx.make_partial(MsgKind::Proposal, view));
  }
  if (s.voted_upto < view && s.pending_proposals.contains(view)) {
    s.pending_proposals.erase(view);
    s.voted_upto = view;
    out.send(ctx.leader(view), ctx.make_partial(MsgKind::Vote, view));
  }
}

inline void on_proposal(EngineState& s, const Message& m, View view, StepContext& ctx,
                        Outbox& out) {
  const auto* p = m.partial();
  if (!p || p->signer != m.sender || m.sender != ctx.leader(m.view)) return;
  if (!ctx.ledger->has_partial(*p)) return;
  if (ctx.deviation.vote_any_view) {
    if (s.voted_any.insert(m.view).second) {
      out.send(ctx.leader(m.view), ctx.make_partial(MsgKind::Vote, m.view));
    }
    return;
  }
  if (m.view < view || s.voted_upto >= m.view) return;
  s.pending_proposals.insert(m.view);
}

// Leader side: collects votes and forms the QC if the deadline allows.
inline void on_vote(EngineState& s, const Message& m, View view, const EnginePolicy& policy,
                    StepContext& ctx, Outbox& out) {
  const auto* p = m.partial();
  if (!p || p->signer != m.sender || ctx.leader(m.view) != ctx.self) return;
  if (!ctx.ledger->has_partial(*p)) return;
  if (s.qc_closed.contains(m.view)) return;
  auto& signers = s.votes[m.view];
  if (std::find(signers.begin(), signers.end(), m.sender) != signers.end()) return;
  signers.push_back(m.sender);
  const int quorum = 2 * ctx.f + 1;
  if (static_cast<int>(signers.size()) < quorum || view != m.view) return;

  const auto anchor = anchor_of(s, m.view, ctx.layout, policy.gate);
  const Tick base = anchor.value_or(ctx.now);
  const Tick deadline = base + qc_budget(ctx);
  if (policy.deadline && ctx.enforce_qc_deadline() && ctx.now > deadline) {
    s.qc_closed.insert(m.view);
    return;
  }
  s.qc_closed.insert(m.view);
  s.qc_sent_at[m.view] = ctx.now;
  out.emit(QcFormed{m.view, base, deadline, signers.size()});
  out.broadcast(ctx.make_cert(MsgKind::QC, m.view, signers, quorum));
}

}  // namespace engine
}  // namespace lumiere
