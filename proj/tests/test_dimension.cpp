#include "oracle.hpp"

#include <gtest/gtest.h>

using namespace cmdim;

namespace {

ComplexPtr unit_interval(int r) { return make_complex({Factor::interval(r)}); }

Cover interval_cover(const ComplexPtr& K, std::vector<std::tuple<Rational, bool, Rational, bool>> pieces) {
  std::vector<CellSet> ms;
  for (auto& [lo, lc, hi, hc] : pieces) ms.push_back(product_cells(*K, {factor_interval(K->factor(0), lo, lc, hi, hc)}));
  return Cover(K, ms);
}

// {[0,a), (b,1]} on the interval
Cover two_piece(const ComplexPtr& K, Rational a, Rational b) {
  return interval_cover(K, {{Rational(0), true, a, false}, {b, false, Rational(1), true}});
}

// 2^n bricks: per coordinate the coarse vertex stars [0,1) and (0,1], refined k times
Cover brick_cover(int n, int k) {
  auto coarse = make_complex(std::vector<Factor>(n, Factor::interval(1)));
  std::vector<std::vector<std::size_t>> sets;
  for (std::size_t v = 0; v < coarse->num_vertices(); ++v) sets.push_back({v});
  return refined(Cover::from_vertex_sets(coarse, sets), k);
}

}  // namespace

TEST(Covers, OrdExamples) {
  auto K = unit_interval(10);
  EXPECT_EQ(ord(two_piece(K, Rational(3, 5), Rational(2, 5))), 1);
  // disjoint opens in a disconnected space
  auto D = make_complex({Factor::discrete(3)});
  EXPECT_EQ(ord(Cover::from_vertex_sets(D, {{0}, {1}, {2}})), 0);
  for (int n = 1; n <= 3; ++n) {
    auto B = brick_cover(n, 1);
    EXPECT_EQ(B.size(), std::size_t{1} << n);
    EXPECT_EQ(ord(B), (1 << n) - 1);  // all bricks share the open cube
  }
}

TEST(Covers, InvalidCoversRejected) {
  auto K = unit_interval(4);
  CellSet half(K->num_cells());
  half.set(0);  // a vertex without its edge is not open
  EXPECT_THROW(Cover(K, {half, full_set(*K)}), invalid_cover);
  EXPECT_THROW(Cover(K, {star_of(*K, {0})}), invalid_cover);
  // [0.3, 1] at r = 4: the vertex 0.5 loses its left edge, leaving (0.5, 1]
  auto inner = factor_interval(K->factor(0), Rational(3, 10), true, Rational(1), true);
  EXPECT_EQ(inner, (std::vector<char>{0, 0, 0, 0, 0, 1, 1, 1, 1}));
  auto U = Cover(K, {star_of(*K, {0}), CellSet(K->num_cells()), full_set(*K)});
  EXPECT_EQ(U.size(), 2u);  // empty member pruned
}

TEST(Covers, JoinAndRefines) {
  auto K = unit_interval(10);
  auto U = two_piece(K, Rational(3, 5), Rational(2, 5));
  auto V = two_piece(K, Rational(1, 2), Rational(3, 10));
  auto whole = whole_cover(K);
  EXPECT_EQ(join(U, whole).members(), U.members());
  // U v U also holds the overlap as a member, so its order can grow; D cannot
  auto UU = join(U, U);
  EXPECT_EQ(UU.size(), 3u);
  EXPECT_EQ(ord(UU), 2);
  EXPECT_EQ(D_unconditional(UU).upper, D_unconditional(U).upper);
  auto UV = join(U, V);
  EXPECT_LE(UV.size(), 4u);
  EXPECT_TRUE(refines(UV, U));
  EXPECT_TRUE(refines(UV, V));
  // [0,0.6) lies in neither [0,0.5) nor (0.3,1]
  EXPECT_FALSE(refines(U, V));
  EXPECT_TRUE(refines(Cover::from_vertex_sets(K, {{0, 1, 2}, {3, 4, 5, 6, 7, 8, 9, 10}}), whole));
  auto other = unit_interval(5);
  EXPECT_THROW(join(U, whole_cover(other)), std::invalid_argument);
}

TEST(Covers, Pullback) {
  auto sq = make_complex({Factor::interval(4), Factor::interval(4)});
  auto pi = FiberPartition::projection(sq, {0});
  auto whole = pullback(whole_cover(pi.base_ptr()), pi);
  EXPECT_EQ(whole.size(), 1u);
  EXPECT_TRUE(whole[0].all());
  auto base = two_piece(pi.base_ptr(), Rational(3, 4), Rational(1, 4));
  auto strips = pullback(base, pi);
  EXPECT_EQ(strips.size(), 2u);
  EXPECT_EQ(ord(strips), ord(base));
  // strips are vertical: membership ignores the second coordinate
  for (std::size_t c = 0; c < sq->num_cells(); ++c) {
    auto xy = sq->cell_coords(c);
    EXPECT_EQ(strips[0].test(c), base[0].test(static_cast<std::size_t>(xy[0])));
  }
}

TEST(Covers, FiberPartitionValidation) {
  auto K = unit_interval(2);
  auto B = make_complex({Factor::discrete(2)});
  // cell-respecting means vertex and edges of a fiber stay together under closure
  EXPECT_THROW(FiberPartition::custom(K, B, {0, 0, 1, 1, 1}), std::invalid_argument);
  EXPECT_THROW(FiberPartition::custom(K, B, {0, 0, 0, 0, 0}), std::invalid_argument);
  auto P = make_complex({Factor::discrete(1)});
  EXPECT_NO_THROW(FiberPartition::custom(K, P, {0, 0, 0, 0, 0}));
}

TEST(Dimension, TrivialCases) {
  auto K = unit_interval(6);
  auto U = two_piece(K, Rational(2, 3), Rational(1, 3));
  EXPECT_EQ(D_conditional(U, FiberPartition::identity(K)).upper, 0);
  auto point = D_conditional(U, FiberPartition::to_point(K));
  auto uncond = D_unconditional(U);
  EXPECT_EQ(point.upper, uncond.upper);
  EXPECT_TRUE(uncond.exact);
  EXPECT_EQ(uncond.upper, 1);
  auto Z = make_complex({Factor::discrete(5)});
  EXPECT_EQ(D_unconditional(Cover::from_vertex_sets(Z, {{0, 1}, {1, 2, 3, 4}})).upper, 0);
}

TEST(Dimension, SquareOverIntervalWithPulledBackCover) {
  auto sq = make_complex({Factor::interval(4), Factor::interval(4)});
  auto pi = FiberPartition::projection(sq, {0});
  auto base = two_piece(pi.base_ptr(), Rational(3, 4), Rational(1, 4));
  auto U = pullback(base, pi);
  auto d = D_conditional(U, pi);
  EXPECT_TRUE(d.exact);
  EXPECT_EQ(d.upper, 0);
  // cross-checked exhaustively on a coarser square
  auto small = make_complex({Factor::interval(2), Factor::interval(2)});
  auto spi = FiberPartition::projection(small, {0});
  auto sU = pullback(Cover::from_vertex_sets(spi.base_ptr(), {{0, 1}, {1, 2}}), spi);
  EXPECT_EQ(oracle::D_by_partitions(sU, spi), 0);
  EXPECT_EQ(D_conditional(sU, spi).upper, 0);
  // and unconditionally the same cover needs order 1
  EXPECT_EQ(D_unconditional(sU).upper, 1);
}

TEST(Dimension, TwoPieceIntervalCover) {
  for (int r : {4, 8, 16}) {
    auto U = two_piece(unit_interval(r), Rational(3, 4), Rational(1, 4));
    auto d = D_unconditional(U);
    EXPECT_TRUE(d.exact) << r;
    EXPECT_EQ(d.upper, 1) << r;
    EXPECT_EQ(d.lower, 1) << r;
  }
  // {[0,0.6),(0.4,1]} has Lebesgue number 0.2; at r = 4, 8 the grid interiors
  // of its members miss the vertex 1/2
  for (int r : {4, 8}) EXPECT_THROW(two_piece(unit_interval(r), Rational(3, 5), Rational(2, 5)), invalid_cover);
  for (int r : {10, 16}) {
    auto d = D_unconditional(two_piece(unit_interval(r), Rational(3, 5), Rational(2, 5)));
    EXPECT_TRUE(d.exact);
    EXPECT_EQ(d.upper, 1);
  }
}

TEST(Dimension, BrickCoverBracket) {
  for (int n = 1; n <= 3; ++n) {
    auto U = brick_cover(n, 4);
    EXPECT_EQ(lebesgue_face_lower_bound(U), n);
    auto d = D_unconditional(U);
    EXPECT_EQ(d.lower, n);
    EXPECT_EQ(d.upper, n);
    auto W = labeling_cover(U.complex_ptr(), d.witness);
    EXPECT_EQ(check_refinement(U, FiberPartition::to_point(U.complex_ptr()), W), n);
  }
  auto K = unit_interval(4);
  EXPECT_EQ(lebesgue_face_lower_bound(whole_cover(K)), 0);
  EXPECT_EQ(lebesgue_face_lower_bound(two_piece(unit_interval(10), Rational(3, 5), Rational(2, 5))), 1);
}

TEST(Dimension, CircleNeedsOrderOne) {
  // three arcs around a circle
  auto K = make_complex({Factor::circle(6)});
  auto U = Cover::from_vertex_sets(K, {{0, 1, 2}, {2, 3, 4}, {4, 5, 0}});
  auto d = D_unconditional(U);
  EXPECT_TRUE(d.exact);
  EXPECT_EQ(d.upper, 1);
  EXPECT_EQ(oracle::D_by_partitions(U, FiberPartition::to_point(K)), 1);
}

TEST(Dimension, SearchMatchesExhaustivePartitions) {
  auto st = oracle::sweep(11, 4);
  EXPECT_EQ(st.agree, st.cases) << st.first_mismatch;
  EXPECT_GT(st.cases, 200);
}

TEST(Dimension, PartitionsSufficeAmongStarFamilies) {
  std::mt19937 rng(3);
  using F = Factor;
  std::vector<std::vector<Factor>> shapes{{F::interval(1)}, {F::interval(2)}, {F::interval(3)}, {F::circle(3)},
                                          {F::circle(4)},   {F::interval(1), F::interval(1)}};
  int checked = 0;
  for (auto& s : shapes) {
    auto K = make_complex(s);
    for (int rep = 0; rep < 6; ++rep) {
      auto U = oracle::random_cover(K, rng, 3);
      for (auto& pi : oracle::partitions_of(K)) {
        EXPECT_EQ(oracle::D_by_families(U, pi, U.size() + 2), oracle::D_by_partitions(U, pi)) << K->str();
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(Dimension, StructuralProperties) {
  std::mt19937 rng(17);
  for (auto shape : {std::vector<Factor>{Factor::interval(3), Factor::interval(2)},
                     std::vector<Factor>{Factor::circle(4), Factor::interval(2)},
                     std::vector<Factor>{Factor::discrete(2), Factor::interval(4)}}) {
    auto K = make_complex(shape);
    for (int rep = 0; rep < 8; ++rep) {
      auto U = oracle::random_cover(K, rng, 4);
      auto V = oracle::random_cover(K, rng, 3);
      for (auto& pi : oracle::partitions_of(K)) {
        auto du = D_conditional(U, pi), dv = D_conditional(V, pi), duv = D_conditional(join(U, V), pi);
        ASSERT_TRUE(du.exact && dv.exact && duv.exact);
        EXPECT_LE(duv.upper, du.upper + dv.upper);
        // U v V refines U
        EXPECT_LE(du.upper, duv.upper);
        EXPECT_LE(du.upper, D_unconditional(U).upper);
        auto fine = D_conditional_refined(U, pi, 2);
        ASSERT_TRUE(fine.exact);
        EXPECT_LE(fine.upper, du.upper);
        auto W = labeling_cover(K, du.witness);
        EXPECT_EQ(check_refinement(U, pi, W), du.upper);
      }
    }
  }
}

TEST(Dimension, DiameterProblem) {
  auto K = unit_interval(10);
  auto pt = FiberPartition::to_point(K);
  std::vector<Rational> w{Rational(1)};
  // eps above the diameter: a single class
  auto big = minimize_order(diameter_problem(K, pt, w, Rational(2)));
  EXPECT_EQ(big.upper, 0);
  auto d = minimize_order(diameter_problem(K, pt, w, Rational(3, 10)), diameter_lower_bound(*K, pt, w, Rational(3, 10)));
  EXPECT_TRUE(d.exact);
  EXPECT_EQ(d.upper, 1);
  // identity factor: fibers are cells
  EXPECT_EQ(minimize_order(diameter_problem(K, FiberPartition::identity(K), w, Rational(3, 10))).upper, 0);
  // below the star width nothing fits
  EXPECT_FALSE(minimize_order(diameter_problem(K, pt, w, Rational(1, 10))).feasible);
}
