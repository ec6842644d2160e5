#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "lumiere/engine.hpp"
#include "lumiere/protocol.hpp"

namespace lumiere {

struct LumiereState {
  Tick lc = 0;
  bool paused = false;
  std::optional<Tick> pause_started_at;
  View pause_view = kNoView;
  View view = kNoView;
  Epoch epoch = kNoEpoch;

  std::set<Epoch> succeeded;  // success(e) == 1; epoch -1 never succeeds
  std::map<std::pair<Epoch, ProcessorId>, std::set<View>> qc_tally;
  std::map<Epoch, int> full_leaders;  // leaders whose every view in e has a QC

  std::set<View> sent_view_msgs;
  std::set<View> sent_epoch_view_msgs;

  View best_qc = kNoView;
  View best_vc = kNoView;
  View best_ec = kNoView;
  View best_tc = kNoView;

  View epoch_clock_seen = kNoView;  // last epoch view whose clock handler ran
  View initial_fired = kNoView;     // last initial view whose clock handler ran
  Tick clock_eval = -1;             // clock value the clock handlers last saw

  std::map<View, std::vector<ProcessorId>> view_msgs;   // as leader
  std::map<View, std::vector<ProcessorId>> epoch_msgs;  // epoch-view senders
  std::set<View> vc_formed;
  std::set<View> tc_seen;
  std::set<View> ec_seen;
  std::set<View> vc_seen;
  std::set<View> qc_seen;

  EngineState engine;

  bool success(Epoch e) const { return e >= 0 && succeeded.contains(e); }
};

namespace core {

inline constexpr EnginePolicy kEnginePolicy{ProposalGate::VcForInitial, true};

inline bool cert_ok(const Message& m, const StepContext& ctx, int threshold) {
  const auto* c = m.cert();
  if (!c) return false;
  if (c->payload != Payload{payload_kind_of(m.kind), m.view}) return false;
  if (c->threshold < threshold) return false;
  return ctx.ledger->verify(*c);
}

inline bool partial_ok(const Message& m, const StepContext& ctx) {
  const auto* p = m.partial();
  return p && p->signer == m.sender && p->payload == Payload{payload_kind_of(m.kind), m.view} &&
         ctx.ledger->has_partial(*p);
}

class Machine {
 public:
  Machine(LumiereState& s, StepContext& ctx, Outbox& out) : s_(s), ctx_(ctx), out_(out) {}

  void handle(const Event& ev) {
    if (const auto* d = std::get_if<Deliver>(&ev)) {
      deliver(d->msg);
    } else if (const auto* t = std::get_if<Timer>(&ev)) {
      on_pause_timer(t->tag);
    }
    settle();
    while (out_.has_inbox()) {
      deliver(out_.pop_inbox());
      settle();
    }
  }

 private:
  // --- state helpers -------------------------------------------------------

  void set_view(View v, Epoch e) {
    if (v == s_.view && e == s_.epoch) return;
    s_.view = v;
    s_.epoch = e;
    out_.emit(EnterView{v, e});
    engine::note_entered(s_.engine, v, ctx_.now);
    s_.engine.prune(v);
    prune(v);
  }

  void prune(View v) {
    const View keep = v - 4;
    auto drop = [keep](auto& m) { m.erase(m.begin(), m.lower_bound(keep)); };
    drop(s_.view_msgs);
    drop(s_.epoch_msgs);
  }

  void bump(Tick to) {
    if (s_.lc >= to) return;
    out_.emit(BumpClock{s_.lc, to});
    s_.lc = to;
  }

  void pause(View v) {
    s_.paused = true;
    s_.pause_started_at = ctx_.now;
    s_.pause_view = v;
    out_.emit(PauseClock{v});
  }

  void unpause() {
    s_.paused = false;
    s_.pause_started_at.reset();
    s_.pause_view = kNoView;
    out_.emit(UnpauseClock{});
  }

  void send_view_msg(View v) {
    if (!s_.sent_view_msgs.insert(v).second) return;
    out_.send(ctx_.leader(v), ctx_.make_partial(MsgKind::View, v));
  }

  void send_epoch_view_msg(View v) {
    if (!s_.sent_epoch_view_msgs.insert(v).second) return;
    out_.broadcast(ctx_.make_partial(MsgKind::EpochView, v));
  }

  // View messages for every initial v' with view <= v' < v, ascending.
  void catch_up(View v) {
    View from = std::max<View>(s_.view, 0);
    if (from % 2 != 0) ++from;
    for (View w = from; w < v; w += 2) send_view_msg(w);
  }

  // --- message handling ----------------------------------------------------

  void deliver(const Message& m) {
    switch (m.kind) {
      case MsgKind::View:
        if (partial_ok(m, ctx_)) on_view_msg(m);
        break;
      case MsgKind::EpochView:
        if (partial_ok(m, ctx_) && ctx_.layout.is_epoch_view(m.view)) on_epoch_view_msg(m);
        break;
      case MsgKind::VC:
        if (cert_ok(m, ctx_, ctx_.f + 1) && is_initial(m.view)) on_vc(m.view);
        break;
      case MsgKind::TC:
        if (cert_ok(m, ctx_, ctx_.f + 1) && ctx_.layout.is_epoch_view(m.view)) on_tc(m.view);
        break;
      case MsgKind::EC:
        if (cert_ok(m, ctx_, ctx_.ec_threshold()) && ctx_.layout.is_epoch_view(m.view)) {
          on_ec(m.view);
        }
        break;
      case MsgKind::QC:
        if (cert_ok(m, ctx_, 2 * ctx_.f + 1)) on_qc(m.view);
        break;
      case MsgKind::Proposal:
        engine::on_proposal(s_.engine, m, s_.view, ctx_, out_);
        break;
      case MsgKind::Vote:
        engine::on_vote(s_.engine, m, s_.view, kEnginePolicy, ctx_, out_);
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

  // TC and EC are formed locally from epoch-view messages.
  void on_epoch_view_msg(const Message& m) {
    const View v = m.view;
    auto& senders = s_.epoch_msgs[v];
    if (std::find(senders.begin(), senders.end(), m.sender) != senders.end()) return;
    senders.push_back(m.sender);
    const int count = static_cast<int>(senders.size());
    if (count >= ctx_.f + 1 && !s_.tc_seen.contains(v)) {
      ctx_.make_cert(MsgKind::TC, v, senders, ctx_.f + 1);
      on_tc(v);
    }
    if (count >= ctx_.ec_threshold() && !s_.ec_seen.contains(v)) {
      ctx_.make_cert(MsgKind::EC, v, senders, ctx_.ec_threshold());
      on_ec(v);
    }
  }

  void on_tc(View v) {
    if (!s_.tc_seen.insert(v).second) return;
    s_.best_tc = std::max(s_.best_tc, v);
    if (ctx_.layout.epoch_of(v) < s_.epoch) return;
    if (s_.lc < ctx_.c(v)) {
      catch_up(v);
      bump(ctx_.c(v));
    }
    if (s_.view < v - 1) set_view(v - 1, ctx_.layout.epoch_of(v) - 1);
    send_epoch_view_msg(v);
  }

  // An EC contains a TC, so the TC handler runs first.
  void on_ec(View v) {
    on_tc(v);
    if (!s_.ec_seen.insert(v).second) return;
    s_.best_ec = std::max(s_.best_ec, v);
    if (ctx_.layout.epoch_of(v) <= s_.epoch) return;
    set_view(v, ctx_.layout.epoch_of(v));
  }

  void on_vc(View v) {
    if (!s_.vc_seen.insert(v).second) return;
    s_.best_vc = std::max(s_.best_vc, v);
    if (v <= s_.view) return;
    if (s_.lc < ctx_.c(v)) {
      catch_up(v);
      bump(ctx_.c(v));
    }
    set_view(v, ctx_.layout.epoch_of(v));
  }

  void on_qc(View v) {
    if (!s_.qc_seen.insert(v).second) return;
    update_success(v);
    s_.best_qc = std::max(s_.best_qc, v);
    if (v < s_.view) return;
    if (s_.lc < ctx_.c(v + 1)) {
      catch_up(v);
      bump(ctx_.c(v + 1));
    }
    if (!ctx_.layout.is_epoch_view(v + 1)) {
      set_view(v + 1, ctx_.layout.epoch_of(v + 1));
    } else if (s_.view < v) {
      set_view(v, ctx_.layout.epoch_of(v));
    }
  }

  void update_success(View v) {
    const Epoch e = ctx_.layout.epoch_of(v);
    auto& views = s_.qc_tally[{e, ctx_.leader(v)}];
    if (!views.insert(v).second) return;
    const auto per_leader = static_cast<std::size_t>(ctx_.layout.views_per_epoch / ctx_.n);
    if (views.size() != per_leader) return;
    if (++s_.full_leaders[e] >= 2 * ctx_.f + 1) s_.succeeded.insert(e);
  }

  // --- clock-driven handlers -----------------------------------------------

  void on_pause_timer(View v) {
    if (s_.paused && s_.pause_view == v) send_epoch_view_msg(v);
  }

  void maybe_unpause() {
    if (!s_.paused) return;
    const View pv = s_.pause_view;
    const View best = std::max({s_.best_ec, s_.best_qc, s_.best_vc});
    if (best >= pv || s_.best_tc > pv) {
      unpause();
    } else if (s_.success(ctx_.layout.epoch_of(pv) - 1)) {
      unpause();
      set_view(pv, ctx_.layout.epoch_of(pv));
    }
  }

  void on_clock() {
    const Tick g = ctx_.gamma;
    s_.clock_eval = s_.lc;
    if (s_.lc % g != 0) return;
    const View w = s_.lc / g;
    if (!is_initial(w)) return;
    const Epoch e = ctx_.layout.epoch_of(w);
    if (ctx_.layout.is_epoch_view(w) && w > s_.view && w > s_.epoch_clock_seen) {
      s_.epoch_clock_seen = w;
      if (s_.success(e - 1)) {
        set_view(w, e);
      } else if (!s_.paused) {
        pause(w);
        if (ctx_.mutation == Mutation::NoEpochWait) {
          send_epoch_view_msg(w);
        } else {
          out_.emit(SetTimer{ctx_.now + ctx_.delta, w});
        }
      }
    }
    if (s_.epoch == e && w > s_.initial_fired) {
      s_.initial_fired = w;
      if (s_.view < w) set_view(w, e);
      send_view_msg(w);
    }
  }

  void settle() {
    for (int guard = 0; guard < 8; ++guard) {
      const auto before = std::tuple{s_.view, s_.epoch, s_.lc, s_.paused};
      maybe_unpause();
      on_clock();
      engine::drive(s_.engine, s_.view, kEnginePolicy, ctx_, out_);
      if (before == std::tuple{s_.view, s_.epoch, s_.lc, s_.paused}) break;
    }
  }

  LumiereState& s_;
  StepContext& ctx_;
  Outbox& out_;
};

}  // namespace core

// Full Lumiere. step mutates the state in place and appends the resulting
// actions; messages to self are handled before it returns.
struct LumiereProtocol {
  using State = LumiereState;
  static constexpr SynchronizerKind kind = SynchronizerKind::Lumiere;

  static void step(State& s, const Event& ev, StepContext& ctx, std::vector<Action>& actions) {
    Outbox out(ctx.self, actions);
    core::Machine(s, ctx, out).handle(ev);
  }

  // Local clock value at which the next clock handler may fire.
  static std::optional<Tick> next_clock_target(const State& s, const StepContext& ctx) {
    if (s.paused) return std::nullopt;
    if (s.lc != s.clock_eval && s.lc % ctx.gamma == 0 && is_initial(s.lc / ctx.gamma)) return s.lc;
    View w = s.lc / ctx.gamma + 1;
    if (w % 2 != 0) ++w;
    return ctx.c(w);
  }
};

}  // namespace lumiere
