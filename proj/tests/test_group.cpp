#include "cmdim/group.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cmdim;

TEST(Group, MultiplyAddsCoordinates) {
  EXPECT_EQ(multiply({1, 0}, {2, 3}), GroupElement({3, 3}));
  GroupElement s{4, -1};
  EXPECT_EQ(multiply(s, GroupElement::identity(2)), s);
  EXPECT_EQ(multiply({-1}, {1}), GroupElement({0}));
  EXPECT_THROW(multiply({1}, {1, 2}), std::invalid_argument);
}

TEST(Group, TranslateShiftsEveryElement) {
  EXPECT_EQ(translate(interval(0, 2), {3}), interval(3, 5));
  auto F = box(2, 3);
  EXPECT_EQ(translate(F, GroupElement::identity(2)), F);
  Window two(2, {{0, 0}, {1, 0}});
  EXPECT_EQ(translate(two, {0, 2}), Window(2, {{0, 2}, {1, 2}}));
}

TEST(Group, WindowDeduplicatesAndTagsEmpty) {
  Window w(1, {{2}, {0}, {2}});
  EXPECT_EQ(w.size(), 2u);
  Window e(3);
  EXPECT_TRUE(e.empty());
  EXPECT_THROW(invariance_defect(e, box(3, 1)), std::invalid_argument);
}

// independent count: t is good iff t + k stays inside the box for every k
static Rational brute_defect_box(std::int64_t n, const std::vector<GroupElement>& K) {
  std::int64_t good = 0;
  for (std::int64_t x = 0; x < n; ++x)
    for (std::int64_t y = 0; y < n; ++y) {
      bool ok = true;
      for (auto& k : K) {
        auto a = x + k[0], b = y + k[1];
        ok = ok && a >= 0 && a < n && b >= 0 && b < n;
      }
      good += ok;
    }
  return Rational(1) - Rational(good, n * n);
}

TEST(Group, InvarianceDefectMatchesCounts) {
  EXPECT_EQ(invariance_defect(interval(0, 10), interval(0, 2)), Rational(1, 10));
  EXPECT_EQ(invariance_defect(box(2, 5), box(2, 1)), Rational(0));
  std::vector<GroupElement> K{{0, 0}, {1, 0}, {0, 1}};
  for (std::int64_t n = 1; n <= 7; ++n) {
    auto v = invariance_defect(box(2, n), Window(K));
    EXPECT_EQ(v, brute_defect_box(n, K));
    EXPECT_EQ(v, Rational(2 * n - 1, n * n));
  }
}

TEST(Group, DefectIsRightInvariantAndMonotoneInK) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> coin(0, 2);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<GroupElement> pts;
    for (int x = 0; x < 6; ++x)
      for (int y = 0; y < 6; ++y)
        if (coin(rng)) pts.push_back({x, y});
    if (pts.empty()) continue;
    Window F(2, pts);
    Window K(2, {{0, 0}, {1, 0}});
    Window K2 = unite(K, Window(2, {{0, 1}}));
    GroupElement s{static_cast<std::int64_t>(coin(rng)) - 1, 5};
    EXPECT_EQ(invariance_defect(translate(F, s), K), invariance_defect(F, K));
    EXPECT_LE(invariance_defect(F, K), invariance_defect(F, K2));
  }
}

TEST(Group, NetOrderShrinksInvariantFamilies) {
  InvariancePair coarse(interval(0, 2), Rational(1, 2));
  InvariancePair fine(interval(-1, 3), Rational(1, 4));
  ASSERT_TRUE(succeeds(fine, coarse));
  for (std::int64_t a = -3; a < 3; ++a)
    for (std::int64_t b = a + 1; b < 12; ++b) {
      auto F = interval(a, b);
      if (fine.admits(F)) {
        EXPECT_TRUE(coarse.admits(F)) << F.str();
      }
    }
}

TEST(Group, BoxFolnerSchedule) {
  auto s = box_folner(1, {1, 2, 4});
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], interval(0, 1));
  EXPECT_EQ(s[2], interval(0, 4));
  EXPECT_TRUE(s.tiling_flag);
  EXPECT_EQ(box_folner(2, {2})[0].size(), 4u);
  EXPECT_THROW(box_folner(1, {2, 2}), std::invalid_argument);
  auto big = box_folner(1, {1, 2, 3, 5, 8});
  EXPECT_TRUE(big.decay_violations().empty());
  for (std::size_t i = 0; i < big.size(); ++i)
    EXPECT_EQ(invariance_defect(big[i], interval(0, 2)), Rational(1, static_cast<std::int64_t>(big[i].size())));
  auto K = box(2, 2);
  auto sq = box_folner(2, {3, 9});
  EXPECT_LT(invariance_defect(sq[1], K), invariance_defect(sq[0], K));
}

TEST(Group, TileSearch) {
  auto b = is_tile(box(2, 3));
  EXPECT_EQ(b.verdict, Verdict::yes);
  EXPECT_EQ(b.period, (std::vector<std::int64_t>{3, 3}));

  auto two = is_tile(Window(1, {{0}, {2}}));
  ASSERT_EQ(two.verdict, Verdict::yes);
  EXPECT_EQ(two.period, std::vector<std::int64_t>{4});
  EXPECT_EQ(two.residues, (std::vector<GroupElement>{{0}, {1}}));
  // independent check that the centers partition a long stretch of Z
  for (std::int64_t x = -20; x < 20; ++x) {
    int hits = 0;
    for (std::int64_t c = -25; c < 25; ++c)
      if (two.is_center({c}) && (x - c == 0 || x - c == 2)) ++hits;
    EXPECT_EQ(hits, 1) << x;
  }

  EXPECT_EQ(is_tile(Window(1, {{0}, {1}, {3}})).verdict, Verdict::no);
  // an L-tromino in Z^2 tiles with period 3 (searched, not decided)
  auto L = is_tile(Window(2, {{0, 0}, {1, 0}, {0, 1}}), 6);
  EXPECT_EQ(L.verdict, Verdict::yes);
}
