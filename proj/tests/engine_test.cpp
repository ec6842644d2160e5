#include <gtest/gtest.h>

#include "lumiere/engine.hpp"
#include "support.hpp"

using namespace lumiere;
using lumiere::testing::LumiereNode;

// Drives the engine directly. n = 4, Δ = 10, Γ = 80: the QC budget is
// Γ/2 − 2Δ = 20 ticks. Processor 2 leads views 4 and 5.

namespace {

struct Rig {
  LumiereNode node;
  EngineState es;
  EnginePolicy policy{ProposalGate::VcForInitial, true};
  std::vector<Action> acts;

  explicit Rig(ProcessorId self, Mutation m = Mutation::None) : node(self, 1, 10, m) {}

  void drive(View view) {
    acts.clear();
    Outbox out(node.ctx.self, acts);
    engine::drive(es, view, policy, node.ctx, out);
  }
  void proposal(View v, View view) {
    acts.clear();
    Outbox out(node.ctx.self, acts);
    engine::on_proposal(es, node.partial(MsgKind::Proposal, v, node.schedule.leader_of(v)), view,
                        node.ctx, out);
  }
  void vote(View v, ProcessorId from, View view) {
    acts.clear();
    Outbox out(node.ctx.self, acts);
    engine::on_vote(es, node.partial(MsgKind::Vote, v, from), view, policy, node.ctx, out);
  }
  std::size_t count(MsgKind k) const {
    std::size_t c = 0;
    for (const auto& a : acts) {
      if (const auto* b = std::get_if<Broadcast>(&a); b && b->msg.kind == k) ++c;
      if (const auto* s = std::get_if<Send>(&a); s && s->msg.kind == k) ++c;
    }
    return c;
  }
};

}  // namespace

TEST(Proposals, InitialViewWaitsForOwnVc) {
  Rig r(2);
  r.drive(4);
  EXPECT_EQ(r.count(MsgKind::Proposal), 0u);
  engine::note_vc_sent(r.es, 4, 100);
  r.drive(4);
  EXPECT_EQ(r.count(MsgKind::Proposal), 1u);
  r.drive(4);
  EXPECT_EQ(r.count(MsgKind::Proposal), 0u);
}

TEST(Proposals, NonInitialViewProposesOnEntry) {
  Rig r(2);
  engine::note_entered(r.es, 5, 100);
  r.drive(5);
  EXPECT_EQ(r.count(MsgKind::Proposal), 1u);
}

TEST(Proposals, NoProposalForAViewAlreadyLeft) {
  Rig r(2);
  engine::note_vc_sent(r.es, 4, 100);
  r.drive(6);
  EXPECT_EQ(r.count(MsgKind::Proposal), 0u);
}

TEST(Votes, VoteOnceInTheProposedView) {
  Rig r(0);
  r.proposal(4, 4);
  r.drive(4);
  EXPECT_EQ(r.count(MsgKind::Vote), 1u);
  r.proposal(4, 4);
  r.drive(4);
  EXPECT_EQ(r.count(MsgKind::Vote), 0u);
}

TEST(Votes, HonestProcessorDoesNotVoteOutsideTheView) {
  Rig r(0);
  r.proposal(4, 6);
  r.drive(6);
  EXPECT_EQ(r.count(MsgKind::Vote), 0u);
}

TEST(Votes, FutureProposalIsHeldUntilEntry) {
  Rig r(0);
  r.proposal(6, 4);
  r.drive(4);
  EXPECT_EQ(r.count(MsgKind::Vote), 0u);
  r.drive(6);
  EXPECT_EQ(r.count(MsgKind::Vote), 1u);
}

TEST(Votes, ColluderVotesRegardlessOfView) {
  Rig r(0);
  r.node.ctx.deviation.vote_any_view = true;
  r.proposal(4, 10);
  EXPECT_EQ(r.count(MsgKind::Vote), 1u);
}

TEST(Qc, FormsWellInsideTheDeadline) {
  Rig r(2);
  engine::note_vc_sent(r.es, 4, 100);
  r.node.ctx.now = 102;
  r.vote(4, 0, 4);
  r.vote(4, 1, 4);
  EXPECT_EQ(r.count(MsgKind::QC), 0u);
  r.vote(4, 3, 4);
  EXPECT_EQ(r.count(MsgKind::QC), 1u);
  bool reported = false;
  for (const auto& a : r.acts) {
    if (const auto* q = std::get_if<QcFormed>(&a)) {
      reported = true;
      EXPECT_EQ(q->anchor, 100);
      EXPECT_EQ(q->deadline, 120);
    }
  }
  EXPECT_TRUE(reported);
}

TEST(Qc, SuppressedPastTheDeadline) {
  Rig r(2);
  engine::note_vc_sent(r.es, 4, 100);
  r.node.ctx.now = 100 + 40 - 10;  // anchor + Γ/2 − Δ
  for (ProcessorId p : {0u, 1u, 3u}) r.vote(4, p, 4);
  EXPECT_EQ(r.count(MsgKind::QC), 0u);
  r.vote(4, 2, 4);
  EXPECT_EQ(r.count(MsgKind::QC), 0u);
}

TEST(Qc, DeadlineIsInclusive) {
  Rig r(2);
  engine::note_vc_sent(r.es, 4, 100);
  r.node.ctx.now = 120;
  for (ProcessorId p : {0u, 1u, 3u}) r.vote(4, p, 4);
  EXPECT_EQ(r.count(MsgKind::QC), 1u);
}

TEST(Qc, TwoFVotesNeverSuffice) {
  Rig r(2);
  engine::note_vc_sent(r.es, 4, 100);
  r.node.ctx.now = 101;
  r.vote(4, 0, 4);
  r.vote(4, 1, 4);
  r.vote(4, 1, 4);
  EXPECT_EQ(r.count(MsgKind::QC), 0u);
}

TEST(Qc, DeadlineMutationAndColluderIgnoreIt) {
  Rig m(2, Mutation::NoQcDeadline);
  engine::note_vc_sent(m.es, 4, 100);
  m.node.ctx.now = 400;
  for (ProcessorId p : {0u, 1u, 3u}) m.vote(4, p, 4);
  EXPECT_EQ(m.count(MsgKind::QC), 1u);

  Rig c(2);
  c.node.ctx.deviation.ignore_qc_deadline = true;
  engine::note_vc_sent(c.es, 4, 100);
  c.node.ctx.now = 400;
  for (ProcessorId p : {0u, 1u, 3u}) c.vote(4, p, 4);
  EXPECT_EQ(c.count(MsgKind::QC), 1u);
}

TEST(Qc, NonInitialAnchorIsPreviousQc) {
  Rig r(2);
  r.es.qc_sent_at[4] = 200;
  engine::note_entered(r.es, 5, 150);
  const auto a = engine::anchor_of(r.es, 5, r.node.ctx.layout, ProposalGate::VcForInitial);
  ASSERT_TRUE(a);
  EXPECT_EQ(*a, 200);
  r.es.qc_sent_at.clear();
  EXPECT_EQ(*engine::anchor_of(r.es, 5, r.node.ctx.layout, ProposalGate::VcForInitial), 150);
}

TEST(Qc, OnlyTheLeaderCollects) {
  Rig r(0);
  for (ProcessorId p : {1u, 2u, 3u}) r.vote(4, p, 4);
  EXPECT_EQ(r.count(MsgKind::QC), 0u);
}
