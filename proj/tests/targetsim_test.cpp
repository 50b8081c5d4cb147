#include <gtest/gtest.h>

#include "ppf/error.hpp"
#include "ppf/neighborhood.hpp"
#include "ppf/targetsim.hpp"
#include "test_util.hpp"

namespace ppf {
namespace {

TEST(Reassign, NoTargetsIsIdentity) {
  test::Gen g(1);
  const AreaCatalog cat = test::all_known(g.catalog(5));
  FlowTensor ft{Period::MorningRush, {g.count_matrix(5, 5, 9), g.count_matrix(5, 5, 9)}};
  const auto [out, plan] = reassign(ft, cat, geo_distances(cat));
  EXPECT_TRUE(plan.targets.empty());
  ASSERT_EQ(out.days.size(), 2u);
  EXPECT_EQ(out.days[0], ft.days[0]);
  EXPECT_EQ(out.days[1], ft.days[1]);
}

TEST(Reassign, TargetMergesIntoClosestNeighbor) {
  // a_1 is a target; a_2 is its closest known area.
  AreaCatalog cat;
  cat.ids = {"a1", "a2", "a3"};
  cat.coords = {{-33.80, 151.00}, {-33.81, 151.00}, {-33.90, 151.00}};
  cat.known = {false, true, true};
  Matrix f(3, 3);
  f << 1, 2, 3,
       4, 5, 6,
       7, 8, 9;
  const auto [out, plan] = reassign(FlowTensor{Period::MorningRush, {f}}, cat, geo_distances(cat));
  EXPECT_EQ(plan.receiver_of(0), 1);
  EXPECT_EQ(plan.receiver_of(1), -1);
  // Departures of a_1 join a_2's row, then arrivals join a_2's column.
  Matrix expected(3, 3);
  expected << 0, 0, 0,
              0, 1 + 2 + 4 + 5, 3 + 6,
              0, 7 + 8, 9;
  EXPECT_EQ(out.days[0], expected);
}

TEST(Reassign, MatchesAccumulationOracle) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    test::Gen g(seed);
    const int n = g.integer(3, 9);
    AreaCatalog cat = g.catalog(n, 0.6, 1);
    const Matrix geo = geo_distances(cat);
    const Matrix f = g.count_matrix(n, n, 20);
    const auto [out, plan] = reassign(FlowTensor{Period::NonRush, {f}}, cat, geo);

    std::vector<int> home(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      home[static_cast<std::size_t>(i)] = i;
      if (cat.known[static_cast<std::size_t>(i)]) continue;
      int best = -1;
      for (int c : cat.known_indices())
        if (best < 0 || geo(i, c) < geo(i, best)) best = c;
      home[static_cast<std::size_t>(i)] = best;
    }
    Matrix expected = Matrix::Zero(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        expected(home[static_cast<std::size_t>(a)], home[static_cast<std::size_t>(b)]) += f(a, b);

    EXPECT_EQ(out.days[0], expected) << "seed " << seed;
    EXPECT_EQ(out.days[0].sum(), f.sum());
    for (int t : cat.target_indices()) {
      EXPECT_EQ(out.days[0].row(t).sum(), 0.0);
      EXPECT_EQ(out.days[0].col(t).sum(), 0.0);
    }
  }
}

TEST(Reassign, SharedReceiverCollectsEveryTarget) {
  AreaCatalog cat;
  cat.ids = {"t1", "hub", "t2", "far"};
  cat.coords = {{-33.80, 151.00}, {-33.81, 151.00}, {-33.82, 151.00}, {-34.5, 151.0}};
  cat.known = {false, true, false, true};
  const auto plan = plan_reassignment(cat, geo_distances(cat));
  ASSERT_EQ(plan.merged_into.size(), 1u);
  EXPECT_EQ(plan.merged_into.at(1), (std::vector<int>{0, 2}));
}

TEST(Reassign, NeedsAKnownArea) {
  AreaCatalog cat;
  cat.ids = {"a", "b"};
  cat.coords = {{0, 0}, {0, 1}};
  cat.known = {false, false};
  EXPECT_THROW(plan_reassignment(cat, geo_distances(cat)), InvalidInput);
}

}  // namespace
}  // namespace ppf
