#include <gtest/gtest.h>

#include <map>

#include "lumiere/harness.hpp"
#include "lumiere/sim.hpp"
#include "support.hpp"

using namespace lumiere;
using lumiere::testing::BasicNode;
using lumiere::testing::Lp22Node;

// n=4, f=1, Δ=10. LP22: Γ=30, epochs of 2 views. Basic: Γ=80, epochs of 4.

TEST(Lp22Handlers, EpochViewPausesAndBroadcasts) {
  Lp22Node p(0);
  p.place(1, 59);
  p.tick(p.c(2));
  EXPECT_EQ(p.count<PauseClock>(), 1u);
  EXPECT_EQ(p.broadcasts(MsgKind::EpochView), std::vector<View>{2});
  EXPECT_TRUE(p.entered().empty());
  EXPECT_TRUE(p.st.paused);
}

TEST(Lp22Handlers, QuorumOfEpochViewMessagesFormsAnEc) {
  Lp22Node p(0);
  p.place(1, 40);
  for (ProcessorId q : {1, 2}) {
    p.deliver(p.partial(MsgKind::EpochView, 2, q));
    EXPECT_TRUE(p.broadcasts(MsgKind::EC).empty());
  }
  p.deliver(p.partial(MsgKind::EpochView, 2, 3));
  EXPECT_EQ(p.broadcasts(MsgKind::EC), std::vector<View>{2});
}

TEST(Lp22Handlers, EcBumpsUnpausesAndEnters) {
  Lp22Node p(0);
  p.place(1, 59);
  p.tick(p.c(2));
  ASSERT_TRUE(p.st.paused);
  p.deliver(p.quorum_cert(MsgKind::EC, 2));
  EXPECT_EQ(p.entered(), std::vector<View>{2});
  EXPECT_EQ(p.count<UnpauseClock>(), 1u);
  EXPECT_FALSE(p.st.paused);

  Lp22Node behind(1);
  behind.place(1, 35);
  behind.deliver(behind.quorum_cert(MsgKind::EC, 4));
  EXPECT_EQ(behind.entered(), std::vector<View>{4});
  EXPECT_EQ(behind.st.lc, behind.c(4));
}

TEST(Lp22Handlers, EcWithTooFewSignersIsIgnored) {
  Lp22Node p(0);
  p.place(1, 35);
  p.deliver(p.cert(MsgKind::EC, 2, {1, 2}));
  EXPECT_TRUE(p.entered().empty());
}

TEST(Lp22Handlers, QcAdvancesWithinAnEpochButNotAcrossIt) {
  Lp22Node p(0);
  p.place(2, 60);
  p.deliver(p.quorum_cert(MsgKind::QC, 2));
  EXPECT_EQ(p.entered(), std::vector<View>{3});
  EXPECT_EQ(p.count<BumpClock>(), 0u);
  p.deliver(p.quorum_cert(MsgKind::QC, 3));
  EXPECT_TRUE(p.entered().empty());
}

TEST(Lp22Handlers, ClockEntersNonEpochViewsWithoutMessages) {
  Lp22Node p(0);
  p.place(2, 89);
  p.tick(p.c(3));
  EXPECT_EQ(p.entered(), std::vector<View>{3});
  EXPECT_TRUE(p.broadcasts(MsgKind::EpochView).empty());
  EXPECT_TRUE(p.sends(MsgKind::View).empty());
}

TEST(BasicHandlers, InitialViewSendsViewMessageToLeader) {
  BasicNode p(0);
  p.place(1, 159);
  p.tick(p.c(2));
  EXPECT_EQ(p.entered(), std::vector<View>{2});
  const auto s = p.sends(MsgKind::View);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].to, p.ctx.leader(2));
}

TEST(BasicHandlers, QcBumpsToNextView) {
  BasicNode p(0);
  p.place(2, 170);
  p.deliver(p.quorum_cert(MsgKind::QC, 2));
  EXPECT_EQ(p.entered(), std::vector<View>{3});
  EXPECT_EQ(p.st.lc, p.c(3));
}

TEST(BasicHandlers, EpochViewIsHeavy) {
  BasicNode p(0);
  p.place(3, 319);
  p.tick(p.c(4));
  EXPECT_EQ(p.count<PauseClock>(), 1u);
  EXPECT_EQ(p.broadcasts(MsgKind::EpochView), std::vector<View>{4});
  p.deliver(p.quorum_cert(MsgKind::EC, 4));
  EXPECT_EQ(p.entered(), std::vector<View>{4});
}

namespace {

ScenarioConfig baseline_run(SynchronizerKind k, int f) {
  ScenarioConfig c;
  c.synchronizer = k;
  c.f = f;
  c.n = 3 * f + 1;
  c.delta = 40;
  c.delta_actual = 4;
  c.gst = 1000;
  c.horizon = 40000;
  return c;
}

}  // namespace

class BaselineRuns : public ::testing::TestWithParam<SynchronizerKind> {};

TEST_P(BaselineRuns, EveryEpochAfterGstIsHeavy) {
  for (int f : {1, 2}) {
    auto c = baseline_run(GetParam(), f);
    randomize_desync(c, 3);
    const auto tr = simulate(c);
    // Each epoch view costs every honest processor a broadcast.
    std::map<View, std::size_t> per_view;
    for (const auto& s : tr.sends) {
      if (s.honest && s.kind == MsgKind::EpochView && s.t >= c.gst) ++per_view[s.view];
    }
    const Epoch last = TraceIndex(tr).max_epoch_entered();
    EXPECT_GE(static_cast<Epoch>(per_view.size()) + 2, last - tr.layout.epoch_of(c.gst / c.gamma()));
    EXPECT_GT(per_view.size(), 5u);
    // A processor already moved into the epoch view by someone else's EC
    // skips its own broadcast; the EC still needs 2f+1 of them.
    for (const auto& [v, k] : per_view) {
      EXPECT_LE(k, static_cast<std::size_t>(c.n * c.n));
      EXPECT_GE(k, static_cast<std::size_t>((2 * f + 1) * c.n)) << "view " << v;
    }
    EXPECT_TRUE(check_lemma_suite(tr).ok());
  }
}

TEST_P(BaselineRuns, LemmaSuiteHoldsUnderAdversaries) {
  for (const char* strat : {"silent_leaders", "fast_colluders", "max_delay"}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      auto c = baseline_run(GetParam(), 2);
      c.adversary.name = strat;
      c.corrupted = pick_corrupted(c.n, 2, s);
      c.seed = s;
      randomize_desync(c, s);
      const auto r = run_one(strat, c);
      EXPECT_TRUE(r.ok()) << strat << " seed " << s << ": " << r.first_violation
                          << r.contract_error;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Baselines, BaselineRuns,
                         ::testing::Values(SynchronizerKind::Lp22, SynchronizerKind::Basic),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Lp22Stall, SilentLastLeaderCostsAboutOneViewPerFaultyLeader) {
  for (int f : {1, 2, 4}) {
    auto c = baseline_run(SynchronizerKind::Lp22, f);
    c.adversary.name = "silent_leaders";
    // The last leader of each epoch is corrupted.
    c.corrupted = {static_cast<ProcessorId>(baseline_leader_of(BaselineVariant::Lp22, f, c.n))};
    c.horizon = 100000;
    const auto r = run_one("lp22_silent", c);
    ASSERT_TRUE(r.ok()) << r.first_violation;
    EXPECT_GE(r.latency_max, c.gamma() * (f + 1) * 8 / 10) << "f=" << f;
  }
}
