#include "cmdim/tiling.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <random>

using namespace cmdim;

// brute force: assign every element to at most one translate containing it
static bool brute_eps_disjoint(const std::vector<Window>& T, const Rational& eps) {
  Window uni(T.front().dim());
  for (auto& t : T) uni = unite(uni, t);
  std::vector<std::int64_t> need(T.size()), got(T.size(), 0);
  for (std::size_t j = 0; j < T.size(); ++j) need[j] = ceil_of((Rational(1) - eps) * Rational((std::int64_t)T[j].size()));
  std::function<bool(std::size_t)> go = [&](std::size_t i) -> bool {
    if (i == uni.size()) {
      for (std::size_t j = 0; j < T.size(); ++j)
        if (got[j] < need[j]) return false;
      return true;
    }
    if (go(i + 1)) return true;
    for (std::size_t j = 0; j < T.size(); ++j)
      if (T[j].contains(uni[i])) {
        ++got[j];
        bool ok = go(i + 1);
        --got[j];
        if (ok) return true;
      }
    return false;
  };
  return go(0);
}

TEST(Tiling, CertifierExamples) {
  std::vector<Window> disjoint{interval(0, 3), interval(3, 5)};
  auto r = certify_eps_disjoint(disjoint, Rational(1, 10));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.certificate->kept, disjoint);

  std::vector<Window> twice{interval(0, 10), interval(0, 10)};
  auto half = certify_eps_disjoint(twice, Rational(1, 2));
  ASSERT_TRUE(half.ok());
  EXPECT_EQ(half.certificate->kept[0].size(), 5u);
  EXPECT_TRUE(half.certificate->verify(twice, Rational(1, 2)));

  auto tight = certify_eps_disjoint(twice, Rational(2, 5));
  ASSERT_FALSE(tight.ok());
  ASSERT_TRUE(tight.obstruction);
  EXPECT_EQ(tight.obstruction->elements, interval(0, 10));
  EXPECT_EQ(tight.obstruction->demand, 12);
  EXPECT_TRUE(tight.obstruction->verify(twice, Rational(2, 5)));
}

TEST(Tiling, CertifierAgreesWithBruteForceOnSmallInputs) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> count(2, 4), len(1, 5), start(0, 7), epsn(1, 9);
  int checked = 0;
  for (int rep = 0; rep < 400; ++rep) {
    std::vector<Window> T;
    int m = count(rng);
    for (int j = 0; j < m; ++j) {
      auto a = start(rng);
      T.push_back(interval(a, a + len(rng)));
    }
    Window uni(1);
    for (auto& t : T) uni = unite(uni, t);
    if (uni.size() > 12) continue;
    Rational eps(epsn(rng), 10);
    auto r = certify_eps_disjoint(T, eps);
    EXPECT_EQ(r.ok(), brute_eps_disjoint(T, eps));
    if (r.ok()) {
      EXPECT_TRUE(r.certificate->verify(T, eps));
    } else {
      EXPECT_TRUE(r.obstruction->verify(T, eps));
    }
    ++checked;
  }
  EXPECT_GT(checked, 200);
}

TEST(Tiling, GreedyExamples) {
  auto g = greedy_quasi_tile(TileFamily({interval(0, 3)}, Rational(1, 10)), interval(0, 10));
  EXPECT_TRUE(g.success);
  EXPECT_EQ(g.tiling.centers[0], (std::vector<GroupElement>{{0}, {3}, {6}}));
  EXPECT_EQ(g.tiling.uncovered, Window(1, {{9}}));
  EXPECT_EQ(g.tiling.uncovered_fraction, Rational(1, 10));
  EXPECT_TRUE(audit(g.tiling).all());

  auto exact = greedy_quasi_tile(TileFamily({box(2, 2)}, Rational(1, 5)), box(2, 6));
  EXPECT_TRUE(exact.success);
  EXPECT_EQ(exact.tiling.uncovered_fraction, Rational(0));

  // a thin set is far from invariant under the tile
  auto thin = greedy_quasi_tile(TileFamily({box(2, 3)}, Rational(1, 10)), box_from({0, 0}, {20, 2}));
  EXPECT_FALSE(thin.success);
  EXPECT_EQ(thin.tiling.uncovered_fraction, Rational(1));
}

TEST(Tiling, ExactBoxTiling) {
  auto a = exact_box_tiling(interval(0, 2), interval(0, 8));
  EXPECT_EQ(a.centers[0], (std::vector<GroupElement>{{0}, {2}, {4}, {6}}));
  EXPECT_EQ(a.uncovered_fraction, Rational(0));
  EXPECT_TRUE(audit(a).all());

  auto b = exact_box_tiling(interval(0, 3), interval(0, 8));
  EXPECT_EQ(b.centers[0], (std::vector<GroupElement>{{0}, {3}}));
  EXPECT_EQ(b.uncovered, Window(1, {{6}, {7}}));
  EXPECT_EQ(b.uncovered_fraction, Rational(1, 4));

  auto c = exact_box_tiling(box(2, 4), box(2, 4));
  EXPECT_EQ(c.centers[0], std::vector<GroupElement>{GroupElement::identity(2)});
}

TEST(Tiling, FamilyValidation) {
  EXPECT_THROW(TileFamily({interval(1, 3)}, Rational(1, 4)), std::invalid_argument);
  EXPECT_THROW(TileFamily({interval(0, 3)}, Rational(1)), std::invalid_argument);
  // [0,3) has defect 1/3 against {0,1}
  EXPECT_THROW(TileFamily({interval(0, 3)}, Rational(1, 4), interval(0, 2)), std::invalid_argument);
  EXPECT_NO_THROW(TileFamily({interval(0, 4)}, Rational(1, 4), interval(0, 2)));
}

TEST(Tiling, ThresholdSearchOverSchedule) {
  TileFamily fam({interval(0, 4), interval(0, 2)}, Rational(1, 4));
  std::vector<Window> ws{interval(0, 1), interval(0, 3), interval(0, 8)};
  auto t = quasi_tiling_threshold(fam, ws);
  ASSERT_TRUE(t);
  EXPECT_EQ(*t, 2u);
}
