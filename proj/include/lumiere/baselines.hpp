#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "lumiere/engine.hpp"
#include "lumiere/lumiere.hpp"
#include "lumiere/protocol.hpp"

namespace lumiere {

// Shared state for LP22 and Basic Lumiere. Both run a heavy epoch change at
// every epoch view.
struct BaselineState {
  Tick lc = 0;
  bool paused = false;
  View pause_view = kNoView;
  View view = kNoView;
  Epoch epoch = kNoEpoch;

  View clock_fired = kNoView;  // last view whose clock handler ran
  Tick clock_eval = -1;        // clock value the clock handler last saw
  std::set<View> sent_view_msgs;
  std::set<View> sent_epoch_view_msgs;
  std::map<View, std::vector<ProcessorId>> view_msgs;
  std::map<View, std::vector<ProcessorId>> epoch_msgs;
  std::set<View> vc_formed;
  std::set<View> ec_formed;
  std::set<View> qc_seen;

  EngineState engine;
};

namespace baseline {

class Machine {
 public:
  Machine(BaselineVariant variant, BaselineState& s, StepContext& ctx, Outbox& out)
      : variant_(variant), s_(s), ctx_(ctx), out_(out) {}

  void handle(const Event& ev) {
    if (const auto* d = std::get_if<Deliver>(&ev)) deliver(d->msg);
    settle();
    while (out_.has_inbox()) {
      deliver(out_.pop_inbox());
      settle();
    }
  }

  EnginePolicy policy() const {
    if (variant_ == BaselineVariant::Lp22) return {ProposalGate::OnEntry, false};
    return {ProposalGate::VcForInitialNonEpoch, true};
  }

 private:
  bool basic() const { return variant_ == BaselineVariant::Basic; }

  void set_view(View v) {
    if (v <= s_.view) return;
    s_.view = v;
    s_.epoch = ctx_.layout.epoch_of(v);
    out_.emit(EnterView{v, s_.epoch});
    engine::note_entered(s_.engine, v, ctx_.now);
    s_.engine.prune(v);
    const View keep = v - 4;
    s_.view_msgs.erase(s_.view_msgs.begin(), s_.view_msgs.lower_bound(keep));
    s_.epoch_msgs.erase(s_.epoch_msgs.begin(), s_.epoch_msgs.lower_bound(keep));
  }

  void bump(Tick to) {
    if (s_.lc >= to) return;
    out_.emit(BumpClock{s_.lc, to});
    s_.lc = to;
  }

  void unpause() {
    if (!s_.paused) return;
    s_.paused = false;
    s_.pause_view = kNoView;
    out_.emit(UnpauseClock{});
  }

  void deliver(const Message& m) {
    switch (m.kind) {
      case MsgKind::View:
        if (basic() && core::partial_ok(m, ctx_)) on_view_msg(m);
        break;
      case MsgKind::EpochView:
        if (core::partial_ok(m, ctx_) && ctx_.layout.is_epoch_view(m.view)) on_epoch_view_msg(m);
        break;
      case MsgKind::VC:
        if (basic() && core::cert_ok(m, ctx_, ctx_.f + 1)) bump(ctx_.c(m.view));
        break;
      case MsgKind::EC:
        if (core::cert_ok(m, ctx_, ctx_.ec_threshold()) && ctx_.layout.is_epoch_view(m.view)) {
          on_ec(m.view);
        }
        break;
      case MsgKind::QC:
        if (core::cert_ok(m, ctx_, 2 * ctx_.f + 1)) on_qc(m.view);
        break;
      case MsgKind::Proposal:
        engine::on_proposal(s_.engine, m, s_.view, ctx_, out_);
        break;
      case MsgKind::Vote:
        engine::on_vote(s_.engine, m, s_.view, policy(), ctx_, out_);
        break;
      case MsgKind::TC:
        break;
    }
  }

  void on_view_msg(const Message& m) {
    const View v = m.view;
    if (!is_initial(v) || ctx_.leader(v) != ctx_.self || s_.vc_formed.contains(v)) return;
    if (v < s_.view) return;
    auto& senders = s_.view_msgs[v];
    if (std::find(senders.begin(), senders.end(), m.sender) != senders.end()) return;
    senders.push_back(m.sender);
    if (static_cast<int>(senders.size()) < ctx_.f + 1) return;
    s_.vc_formed.insert(v);
    engine::note_vc_sent(s_.engine, v, ctx_.now);
    out_.broadcast(ctx_.make_cert(MsgKind::VC, v, senders, ctx_.f + 1));
  }

  // 2f+1 epoch-view messages while in a lower view: form the EC and send it
  // to everyone.
  void on_epoch_view_msg(const Message& m) {
    const View v = m.view;
    auto& senders = s_.epoch_msgs[v];
    if (std::find(senders.begin(), senders.end(), m.sender) != senders.end()) return;
    senders.push_back(m.sender);
    const int need = ctx_.ec_threshold();
    if (static_cast<int>(senders.size()) < need || s_.view >= v) return;
    if (!s_.ec_formed.insert(v).second) return;
    out_.broadcast(ctx_.make_cert(MsgKind::EC, v, senders, need));
  }

  void on_ec(View v) {
    if (s_.view >= v) return;
    bump(ctx_.c(v));
    if (s_.pause_view <= v) unpause();
    set_view(v);
  }

  void on_qc(View v) {
    if (!s_.qc_seen.insert(v).second) return;
    const View next = v + 1;
    if (basic()) bump(ctx_.c(next));
    if (ctx_.layout.is_epoch_view(next)) return;
    if (basic() && is_initial(next)) return;  // entered through the clock handler
    set_view(next);
  }

  void on_clock() {
    const Tick g = ctx_.gamma;
    s_.clock_eval = s_.lc;
    if (s_.lc % g != 0) return;
    const View w = s_.lc / g;
    if (w <= s_.clock_fired) return;
    if (basic() && !is_initial(w)) return;
    s_.clock_fired = w;
    if (s_.view >= w) return;
    if (ctx_.layout.is_epoch_view(w)) {
      if (!s_.paused) {
        s_.paused = true;
        s_.pause_view = w;
        out_.emit(PauseClock{w});
      }
      if (s_.sent_epoch_view_msgs.insert(w).second) {
        out_.broadcast(ctx_.make_partial(MsgKind::EpochView, w));
      }
      return;
    }
    set_view(w);
    if (basic() && s_.sent_view_msgs.insert(w).second) {
      out_.send(ctx_.leader(w), ctx_.make_partial(MsgKind::View, w));
    }
  }

  void settle() {
    for (int guard = 0; guard < 8; ++guard) {
      const auto before = std::tuple{s_.view, s_.lc, s_.paused};
      on_clock();
      engine::drive(s_.engine, s_.view, policy(), ctx_, out_);
      if (before == std::tuple{s_.view, s_.lc, s_.paused}) break;
    }
  }

  BaselineVariant variant_;
  BaselineState& s_;
  StepContext& ctx_;
  Outbox& out_;
};

template <BaselineVariant V>
struct BaselineProtocol {
  using State = BaselineState;
  static constexpr SynchronizerKind kind =
      V == BaselineVariant::Lp22 ? SynchronizerKind::Lp22 : SynchronizerKind::Basic;

  static void step(State& s, const Event& ev, StepContext& ctx, std::vector<Action>& actions) {
    Outbox out(ctx.self, actions);
    Machine(V, s, ctx, out).handle(ev);
  }

  static std::optional<Tick> next_clock_target(const State& s, const StepContext& ctx) {
    if (s.paused) return std::nullopt;
    if (s.lc != s.clock_eval && s.lc % ctx.gamma == 0) return s.lc;
    View w = s.lc / ctx.gamma + 1;
    if (V == BaselineVariant::Basic && w % 2 != 0) ++w;
    return ctx.c(w);
  }
};

}  // namespace baseline

using Lp22Protocol = baseline::BaselineProtocol<BaselineVariant::Lp22>;
using BasicProtocol = baseline::BaselineProtocol<BaselineVariant::Basic>;

}  // namespace lumiere
