#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "lumiere/adversary.hpp"
#include "lumiere/baselines.hpp"
#include "lumiere/config.hpp"
#include "lumiere/crypto.hpp"
#include "lumiere/lumiere.hpp"
#include "lumiere/protocol.hpp"
#include "lumiere/schedule.hpp"
#include "lumiere/trace.hpp"

namespace lumiere {

// A delay policy chose a delivery time outside the partial-synchrony
// contract. This is a harness bug, never protocol behavior.
struct ContractViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void check_delivery(Tick now, Tick d, Tick gst, Tick delta, Tick delta_actual) {
  const auto w = delay_window(now, gst, delta, delta_actual);
  if (d < w.earliest || d > w.latest) {
    throw ContractViolation("delivery at " + std::to_string(d) + " for send at " +
                            std::to_string(now) + " outside [" + std::to_string(w.earliest) +
                            ", " + std::to_string(w.latest) + "]");
  }
}

// Local clock as a linear function of real time from its last anchor.
struct SimClock {
  Tick t0 = 0;
  Tick lc0 = 0;
  int rate = 1000;  // per mille; 0 when paused
  std::uint64_t gen = 0;
  Tick pending = -1;  // target of the live tick, -1 if none

  Tick read(Tick now) const { return lc0 + (now - t0) * rate / 1000; }

  // Earliest real time at which the reading reaches `target`.
  std::optional<Tick> time_of(Tick target) const {
    if (rate == 0) return std::nullopt;
    if (target <= lc0) return t0;
    return t0 + ((target - lc0) * 1000 + rate - 1) / rate;
  }
};

template <typename Protocol>
class Simulator {
 public:
  explicit Simulator(ScenarioConfig cfg) : cfg_(std::move(cfg)), adversary_(cfg_, cfg_.layout()) {
    validate(cfg_);
    const int n = cfg_.n;
    std::vector<bool> corrupted(n, false);
    for (auto p : cfg_.corrupted) corrupted[p] = true;
    ledger_ = Ledger(corrupted);

    trace_.config = cfg_;
    trace_.gamma = cfg_.gamma();
    trace_.layout = cfg_.layout();
    trace_.honest.assign(n, true);
    for (auto p : cfg_.corrupted) trace_.honest[p] = false;

    LeaderMap leader{nullptr, BaselineVariant::Lp22, n};
    if constexpr (Protocol::kind == SynchronizerKind::Lumiere) {
      schedule_ = std::make_unique<Schedule>(build_schedule(n, cfg_.z, cfg_.seed));
      trace_.schedule = *schedule_;
      leader.schedule = schedule_.get();
    } else if constexpr (Protocol::kind == SynchronizerKind::Basic) {
      leader.variant = BaselineVariant::Basic;
    }

    states_.resize(n);
    clocks_.resize(n);
    started_.assign(n, false);
    buffered_.resize(n);
    ctx_.resize(n);
    for (ProcessorId p = 0; p < static_cast<ProcessorId>(n); ++p) {
      auto& c = ctx_[p];
      c.self = p;
      c.n = n;
      c.f = cfg_.f;
      c.delta = cfg_.delta;
      c.gamma = trace_.gamma;
      c.layout = trace_.layout;
      c.leader = leader;
      c.ledger = &ledger_;
      c.caller = corrupted[p] ? Caller::the_adversary() : Caller::processor(p);
      c.mutation = corrupted[p] ? Mutation::None : cfg_.mutation;
      c.deviation = adversary_.deviation(p);
    }
  }

  RunTrace run() {
    for (ProcessorId p = 0; p < static_cast<ProcessorId>(cfg_.n); ++p) {
      if (adversary_.silent(p)) continue;
      push(make(cfg_.start_offset(p), Kind::Start, p));
    }
    if (cfg_.gst > 0) push(make(cfg_.gst, Kind::Gst, 0));

    while (!queue_.empty() && !stop_) {
      QEvent ev = queue_.top();
      queue_.pop();
      if (ev.t > cfg_.horizon) break;
      now_ = ev.t;
      ++trace_.events;
      dispatch(ev);
    }
    trace_.stopped_early = stop_;
    trace_.end_time = stop_ ? now_ : cfg_.horizon;
    trace_.ledger_consistent = ledger_.consistent();
    return std::move(trace_);
  }

 private:
  enum class Kind : std::uint8_t { Start, Gst, Deliver, ClockTick, Timer };

  struct QEvent {
    Tick t = 0;
    Kind kind = Kind::Start;
    ProcessorId p = 0;
    std::uint64_t gen = 0;
    View tag = 0;
    std::shared_ptr<const Message> msg;
    std::uint64_t seq = 0;
  };
  struct Later {
    bool operator()(const QEvent& a, const QEvent& b) const {
      return a.t != b.t ? a.t > b.t : a.seq > b.seq;
    }
  };

  static QEvent make(Tick t, Kind kind, ProcessorId p, std::uint64_t gen = 0, View tag = 0) {
    QEvent ev;
    ev.t = t;
    ev.kind = kind;
    ev.p = p;
    ev.gen = gen;
    ev.tag = tag;
    return ev;
  }

  void push(QEvent ev) {
    ev.seq = seq_++;
    queue_.push(std::move(ev));
  }

  bool honest(ProcessorId p) const { return trace_.honest[p]; }

  void dispatch(const QEvent& ev) {
    switch (ev.kind) {
      case Kind::Start: {
        started_[ev.p] = true;
        clocks_[ev.p] = SimClock{now_, 0, rate_for(ev.p), 0};
        step(ev.p, ClockTick{});
        auto pending = std::move(buffered_[ev.p]);
        buffered_[ev.p].clear();
        for (auto& m : pending) {
          if (stop_) break;
          step(ev.p, Deliver{*m});
        }
        break;
      }
      case Kind::Gst:
        for (ProcessorId p = 0; p < static_cast<ProcessorId>(cfg_.n); ++p) {
          if (!started_[p]) continue;
          auto& c = clocks_[p];
          if (fire_due_tick(p)) continue;
          const Tick lc = c.read(now_);
          const bool paused = c.rate == 0;
          c.t0 = now_;
          c.lc0 = lc;
          c.rate = paused ? 0 : 1000;
          states_[p].lc = lc;
          record_state(p, lc);
          schedule_tick(p);
        }
        break;
      case Kind::Deliver:
        if (adversary_.silent(ev.p)) break;
        if (!started_[ev.p]) {
          buffered_[ev.p].push_back(ev.msg);
          break;
        }
        fire_due_tick(ev.p);
        step(ev.p, Deliver{*ev.msg});
        break;
      case Kind::ClockTick:
        if (ev.gen != clocks_[ev.p].gen) break;
        step(ev.p, ClockTick{}, ev.tag);
        break;
      case Kind::Timer:
        fire_due_tick(ev.p);
        step(ev.p, Timer{ev.tag});
        break;
    }
  }

  // A tick due at this instant may still sit behind other events in the
  // queue. Run it first so no clock handler is skipped.
  bool fire_due_tick(ProcessorId p) {
    const auto& c = clocks_[p];
    if (c.pending < 0 || c.rate == 0 || c.pending > c.read(now_)) return false;
    step(p, ClockTick{}, c.pending);
    return true;
  }

  int rate_for(ProcessorId p) const { return now_ >= cfg_.gst ? 1000 : cfg_.drift(p); }

  // `tick_target` is the exact clock value a tick fires at; -1 otherwise.
  void step(ProcessorId p, const Event& ev, Tick tick_target = -1) {
    auto& st = states_[p];
    auto& clk = clocks_[p];
    const Tick reading = tick_target >= 0 ? std::max(tick_target, clk.lc0) : clk.read(now_);
    st.lc = reading;
    auto& ctx = ctx_[p];
    ctx.now = now_;
    actions_.clear();
    Protocol::step(st, ev, ctx, actions_);

    clk.t0 = now_;
    clk.lc0 = st.lc;
    clk.rate = st.paused ? 0 : rate_for(p);
    record_state(p, reading);
    schedule_tick(p);

    const auto acts = std::move(actions_);
    actions_ = {};
    for (const auto& a : acts) apply(p, a);
  }

  void record_state(ProcessorId p, Tick lc_before) {
    if (!honest(p)) return;
    const auto& st = states_[p];
    trace_.states.push_back(StateRec{now_, p, lc_before, st.lc, clocks_[p].rate, st.paused,
                                     st.view, st.epoch});
  }

  void schedule_tick(ProcessorId p) {
    auto& clk = clocks_[p];
    ++clk.gen;
    clk.pending = -1;
    const auto target = Protocol::next_clock_target(states_[p], ctx_[p]);
    if (!target) return;
    const auto at = clk.time_of(*target);
    if (!at) return;
    clk.pending = *target;
    push(make(std::max(*at, now_), Kind::ClockTick, p, clk.gen, *target));
  }

  void apply(ProcessorId p, const Action& a) {
    if (const auto* s = std::get_if<Send>(&a)) {
      auto msg = std::make_shared<const Message>(s->msg);
      transmit(p, s->to, msg);
      react(p, s->msg);
    } else if (const auto* b = std::get_if<Broadcast>(&a)) {
      auto msg = std::make_shared<const Message>(b->msg);
      for (ProcessorId to = 0; to < static_cast<ProcessorId>(cfg_.n); ++to) transmit(p, to, msg);
      react(p, b->msg);
    } else if (const auto* e = std::get_if<EnterView>(&a)) {
      if (!honest(p)) return;
      trace_.entries.push_back({now_, p, e->view, e->epoch});
      if (cfg_.stop_epoch >= 0 && e->epoch >= cfg_.stop_epoch) stop_ = true;
    } else if (const auto* bc = std::get_if<BumpClock>(&a)) {
      if (honest(p)) trace_.bumps.push_back({now_, p, bc->from, bc->to});
    } else if (const auto* t = std::get_if<SetTimer>(&a)) {
      push(make(t->at, Kind::Timer, p, 0, t->tag));
    } else if (const auto* q = std::get_if<QcFormed>(&a)) {
      trace_.qcs.push_back({now_, p, q->view, q->anchor, q->deadline, honest(p)});
    }
  }

  void transmit(ProcessorId from, ProcessorId to, const std::shared_ptr<const Message>& msg) {
    if (to == from) {
      // Already handled inside the step.
      trace_.sends.push_back({now_, now_, from, to, msg->kind, msg->view, honest(from)});
      return;
    }
    if (!adversary_.delivers_to(from, *msg, to)) return;
    const Tick d = adversary_.delivery_time(*msg, from, to, now_);
    check_delivery(now_, d, cfg_.gst, cfg_.delta, cfg_.delta_actual);
    trace_.sends.push_back({now_, d, from, to, msg->kind, msg->view, honest(from)});
    QEvent ev = make(d, Kind::Deliver, to);
    ev.msg = msg;
    push(std::move(ev));
  }

  // Rushing adversary: corrupted processors may answer an honest send at once.
  void react(ProcessorId from, const Message& m) {
    if (!honest(from)) return;
    for (const auto& inj : adversary_.react(from, m)) {
      auto sig = ledger_.sign_partial(Caller::the_adversary(), inj.from,
                                      Payload{payload_kind_of(inj.kind), inj.view});
      auto msg = std::make_shared<const Message>(Message{inj.kind, inj.view, inj.from, sig});
      for (ProcessorId to = 0; to < static_cast<ProcessorId>(cfg_.n); ++to) {
        if (to == inj.from) {
          trace_.sends.push_back({now_, now_, inj.from, to, inj.kind, inj.view, false});
          QEvent ev = make(now_, Kind::Deliver, to);
          ev.msg = msg;
          push(std::move(ev));
          continue;
        }
        transmit(inj.from, to, msg);
      }
    }
  }

  ScenarioConfig cfg_;
  Adversary adversary_;
  Ledger ledger_;
  std::unique_ptr<Schedule> schedule_;
  RunTrace trace_;

  std::vector<typename Protocol::State> states_;
  std::vector<SimClock> clocks_;
  std::vector<bool> started_;
  std::vector<std::vector<std::shared_ptr<const Message>>> buffered_;
  std::vector<StepContext> ctx_;
  std::vector<Action> actions_;

  std::priority_queue<QEvent, std::vector<QEvent>, Later> queue_;
  std::uint64_t seq_ = 0;
  Tick now_ = 0;
  bool stop_ = false;
};

// Runs one scenario with the synchronizer it names.
inline RunTrace simulate(const ScenarioConfig& cfg) {
  switch (cfg.synchronizer) {
    case SynchronizerKind::Lumiere: return Simulator<LumiereProtocol>(cfg).run();
    case SynchronizerKind::Lp22: return Simulator<Lp22Protocol>(cfg).run();
    case SynchronizerKind::Basic: return Simulator<BasicProtocol>(cfg).run();
  }
  throw ConfigError("unknown synchronizer");
}

}  // namespace lumiere
