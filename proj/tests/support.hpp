#pragma once

// Single-processor fixture for handler-level tests: one state machine, a
// ledger it shares with the test, and helpers to mint messages from any
// processor and inspect the actions a step produced.

#include <algorithm>
#include <numeric>
#include <vector>

#include "lumiere/baselines.hpp"
#include "lumiere/lumiere.hpp"
#include "lumiere/schedule.hpp"

namespace lumiere::testing {

// g_0 = identity, g_1 = its reverse.
inline Schedule identity_schedule(int n) {
  Permutation id(static_cast<std::size_t>(n));
  std::iota(id.begin(), id.end(), ProcessorId{0});
  return Schedule(n, {id, reversed(id)});
}

template <typename Protocol>
struct Node {
  int n;
  int f;
  Schedule schedule;
  Ledger ledger;
  typename Protocol::State st;
  StepContext ctx;
  std::vector<Action> acts;

  explicit Node(ProcessorId self, int f_ = 1, Tick delta = 10, Mutation m = Mutation::None)
      : n(3 * f_ + 1), f(f_), schedule(identity_schedule(3 * f_ + 1)) {
    ctx.self = self;
    ctx.n = n;
    ctx.f = f;
    ctx.delta = delta;
    ctx.mutation = m;
    ctx.ledger = &ledger;
    ctx.caller = Caller::processor(self);
    if constexpr (Protocol::kind == SynchronizerKind::Lumiere) {
      ctx.gamma = lumiere_gamma(2, delta);
      ctx.layout = EpochLayout{10 * View{n}};
      ctx.leader = LeaderMap{&schedule, BaselineVariant::Lp22, n};
    } else if constexpr (Protocol::kind == SynchronizerKind::Lp22) {
      ctx.gamma = lp22_gamma(2, delta);
      ctx.layout = EpochLayout{View{f + 1}};
      ctx.leader = LeaderMap{nullptr, BaselineVariant::Lp22, n};
    } else {
      ctx.gamma = lumiere_gamma(2, delta);
      ctx.layout = EpochLayout{2 * View{f + 1}};
      ctx.leader = LeaderMap{nullptr, BaselineVariant::Basic, n};
    }
  }

  Tick c(View v) const { return ctx.c(v); }

  // Puts the processor in `view` with its clock at `lc`, as if it had got
  // there normally.
  void place(View view, Tick lc) {
    st.view = view;
    st.epoch = ctx.layout.epoch_of(view);
    st.lc = lc;
    st.clock_eval = lc;
  }

  void step(const Event& ev) {
    acts.clear();
    Protocol::step(st, ev, ctx, acts);
  }
  void tick(Tick lc) {
    st.lc = lc;
    step(ClockTick{});
  }
  void timer(View tag) { step(Timer{tag}); }
  void deliver(const Message& m) { step(Deliver{m}); }

  Message partial(MsgKind kind, View v, ProcessorId from) {
    auto sig = ledger.sign_partial(Caller::processor(from), from, {payload_kind_of(kind), v});
    return Message{kind, v, from, sig};
  }
  Message cert(MsgKind kind, View v, std::vector<ProcessorId> signers, ProcessorId from = 0) {
    for (auto s : signers) ledger.sign_partial(Caller::processor(s), s, {payload_kind_of(kind), v});
    const int m = static_cast<int>(signers.size());
    auto sig = ledger.aggregate(Payload{payload_kind_of(kind), v}, signers, m);
    return Message{kind, v, from, std::move(sig)};
  }
  Message quorum_cert(MsgKind kind, View v) {
    std::vector<ProcessorId> s(static_cast<std::size_t>(required_threshold(kind, f)));
    std::iota(s.begin(), s.end(), ProcessorId{0});
    return cert(kind, v, s);
  }

  // --- inspection ----------------------------------------------------------

  template <typename A>
  std::vector<A> all() const {
    std::vector<A> out;
    for (const auto& a : acts) {
      if (const auto* x = std::get_if<A>(&a)) out.push_back(*x);
    }
    return out;
  }
  template <typename A>
  std::size_t count() const {
    return all<A>().size();
  }
  std::vector<View> broadcasts(MsgKind kind) const {
    std::vector<View> out;
    for (const auto& b : all<Broadcast>()) {
      if (b.msg.kind == kind) out.push_back(b.msg.view);
    }
    return out;
  }
  std::vector<Send> sends(MsgKind kind) const {
    std::vector<Send> out;
    for (const auto& s : all<Send>()) {
      if (s.msg.kind == kind) out.push_back(s);
    }
    return out;
  }
  std::vector<View> entered() const {
    std::vector<View> out;
    for (const auto& e : all<EnterView>()) out.push_back(e.view);
    return out;
  }
};

using LumiereNode = Node<LumiereProtocol>;
using Lp22Node = Node<Lp22Protocol>;
using BasicNode = Node<BasicProtocol>;

}  // namespace lumiere::testing
