#pragma once

#include <deque>
#include <variant>
#include <vector>

#include "lumiere/config.hpp"
#include "lumiere/crypto.hpp"
#include "lumiere/schedule.hpp"
#include "lumiere/types.hpp"

namespace lumiere {

// ---------------------------------------------------------------------------
// Events fed to a synchronizer's step function. The simulator writes the
// current clock reading into the state before each step.

struct ClockTick {};
struct Deliver {
  Message msg;
};
struct Timer {
  View tag = 0;
};
using Event = std::variant<ClockTick, Deliver, Timer>;

// ---------------------------------------------------------------------------
// Actions emitted by a step. Clock actions are informational: the simulator
// reads lc and paused back from the state after the step.

struct Send {
  ProcessorId to = 0;
  Message msg;
};
struct Broadcast {
  Message msg;
};
struct EnterView {
  View view = 0;
  Epoch epoch = 0;
};
struct PauseClock {
  View at_view = 0;
};
struct UnpauseClock {};
struct BumpClock {
  Tick from = 0;
  Tick to = 0;
};
struct SetTimer {
  Tick at = 0;  // simulated real time
  View tag = 0;
};
struct QcFormed {
  View view = 0;
  Tick anchor = 0;
  Tick deadline = 0;  // anchor + Γ/2 − 2Δ; unbounded leaders still report it
  std::size_t signers = 0;
};
using Action =
    std::variant<Send, Broadcast, EnterView, PauseClock, UnpauseClock, BumpClock, SetTimer, QcFormed>;

// Who leads view v, for whichever synchronizer is running.
struct LeaderMap {
  const Schedule* schedule = nullptr;  // full Lumiere
  BaselineVariant variant = BaselineVariant::Lp22;
  int n = 4;

  ProcessorId operator()(View v) const {
    if (schedule) return schedule->leader_of(v);
    return baseline_leader_of(variant, v, n);
  }
};

// Deviations a corrupted processor running the honest code may apply.
struct Deviation {
  bool vote_any_view = false;
  bool ignore_qc_deadline = false;
};

struct StepContext {
  ProcessorId self = 0;
  int n = 4;
  int f = 1;
  Tick delta = 40;
  Tick gamma = 320;
  EpochLayout layout;
  LeaderMap leader;
  Ledger* ledger = nullptr;
  Caller caller;
  Tick now = 0;
  Mutation mutation = Mutation::None;
  Deviation deviation;

  int ec_threshold() const {
    return mutation == Mutation::EcThresholdFPlus1 ? f + 1 : 2 * f + 1;
  }
  bool enforce_qc_deadline() const {
    return mutation != Mutation::NoQcDeadline && !deviation.ignore_qc_deadline;
  }
  Tick c(View v) const { return clock_time_of(v, gamma); }

  Message make_partial(MsgKind kind, View v) const {
    auto sig = ledger->sign_partial(caller, self, Payload{payload_kind_of(kind), v});
    return Message{kind, v, self, sig};
  }
  Message make_cert(MsgKind kind, View v, std::span<const ProcessorId> signers, int m) const {
    auto sig = ledger->aggregate(Payload{payload_kind_of(kind), v}, signers, m);
    return Message{kind, v, self, std::move(sig)};
  }
};

// Collects a step's actions. Messages addressed to the processor itself,
// including its copy of every broadcast, go to the inbox and are handled
// before the step returns.
class Outbox {
 public:
  Outbox(ProcessorId self, std::vector<Action>& out) : self_(self), out_(out) {}

  void send(ProcessorId to, Message msg) {
    if (to == self_) inbox_.push_back(msg);
    out_.push_back(Send{to, std::move(msg)});
  }
  void broadcast(Message msg) {
    inbox_.push_back(msg);
    out_.push_back(Broadcast{std::move(msg)});
  }
  void emit(Action a) { out_.push_back(std::move(a)); }

  bool has_inbox() const { return !inbox_.empty(); }
  Message pop_inbox() {
    Message m = std::move(inbox_.front());
    inbox_.pop_front();
    return m;
  }

 private:
  ProcessorId self_;
  std::vector<Action>& out_;
  std::deque<Message> inbox_;
};

}  // namespace lumiere
