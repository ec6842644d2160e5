#include <gtest/gtest.h>

#include <map>
#include <numeric>

#include "lumiere/schedule.hpp"
#include "support.hpp"

using namespace lumiere;

TEST(Schedule, TwoPermutationsAreReverses) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = build_schedule(4, 2, seed);
    EXPECT_EQ(s.permutations()[1], reversed(s.permutations()[0]));
  }
}

TEST(Schedule, ReverseOfIdentity) {
  const auto s = lumiere::testing::identity_schedule(4);
  EXPECT_EQ(s.permutations()[1], (Permutation{3, 2, 1, 0}));
}

TEST(Schedule, IdentityLeaders) {
  const auto s = lumiere::testing::identity_schedule(4);
  EXPECT_EQ(s.leader_of(0), 0u);
  EXPECT_EQ(s.leader_of(1), 0u);
  EXPECT_EQ(s.leader_of(6), 3u);
  EXPECT_EQ(s.leader_of(7), 3u);
  EXPECT_EQ(s.leader_of(8), 3u);
}

// The last leader of every epoch is the first leader of the next.
TEST(Schedule, EpochBoundaryLeaderCarriesOver) {
  for (int n : {4, 7, 13, 22}) {
    for (int z : {2, 4, 6, 10}) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = build_schedule(n, z, seed);
        const View per = 10 * View{n};
        for (Epoch e = 0; e < 3 * z; ++e) {
          const View next = (e + 1) * per;
          EXPECT_EQ(s.leader_of(next - 1), s.leader_of(next))
              << "n=" << n << " z=" << z << " seed=" << seed << " e=" << e;
        }
      }
    }
  }
}

TEST(Schedule, OddLinksAreReversed) {
  for (int z : {2, 4, 8}) {
    const auto s = build_schedule(7, z, 3);
    for (int i = 1; i < z; i += 2) {
      EXPECT_EQ(s.permutations()[static_cast<std::size_t>((i + 1) % z)],
                reversed(s.permutations()[static_cast<std::size_t>(i)]));
    }
  }
}

TEST(Schedule, EveryLeaderLeadsTenViewsPerEpoch) {
  for (int n : {4, 7, 13}) {
    const auto s = build_schedule(n, 4, 11);
    const View per = 10 * View{n};
    for (Epoch e = 0; e < 6; ++e) {
      std::map<ProcessorId, int> count;
      for (View v = e * per; v < (e + 1) * per; ++v) ++count[s.leader_of(v)];
      ASSERT_EQ(static_cast<int>(count.size()), n);
      for (const auto& [p, c] : count) EXPECT_EQ(c, 10) << "n=" << n << " e=" << e << " p=" << p;
    }
  }
}

TEST(Schedule, EachLeaderHoldsTwoConsecutiveViews) {
  const auto s = build_schedule(7, 4, 5);
  for (View v = 0; v < 500; v += 2) EXPECT_EQ(s.leader_of(v), s.leader_of(v + 1));
}

TEST(Schedule, DeterministicInSeed) {
  EXPECT_EQ(build_schedule(7, 4, 9), build_schedule(7, 4, 9));
  EXPECT_NE(build_schedule(7, 4, 9), build_schedule(7, 4, 10));
}

TEST(Schedule, RejectsBadParameters) {
  EXPECT_THROW(build_schedule(4, 3, 0), ConfigError);
  EXPECT_THROW(build_schedule(4, 0, 0), ConfigError);
  EXPECT_THROW(build_schedule(3, 2, 0), ConfigError);
}

TEST(BaselineLeaders, Formulas) {
  EXPECT_EQ(baseline_leader_of(BaselineVariant::Lp22, 5, 4), 1u);
  EXPECT_EQ(baseline_leader_of(BaselineVariant::Basic, 5, 4), 2u);
  EXPECT_EQ(baseline_leader_of(BaselineVariant::Basic, 0, 4), 0u);
}
