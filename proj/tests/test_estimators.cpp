#include "cmdim/estimators.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cmdim;
using namespace fixtures;

namespace {

SystemPtr with_lambda(const SystemPtr& X, Rational lam) {
  SystemModel m = *X;
  m.lambda = lam;
  return make_system(m);
}

// brute-force packing number on a small separation graph
std::size_t brute_packing(const std::vector<boost::dynamic_bitset<>>& sep) {
  const std::size_t n = sep.size();
  std::size_t best = 0;
  for (std::uint32_t s = 0; s < (1u << n); ++s) {
    bool ok = true;
    for (std::size_t a = 0; a < n && ok; ++a)
      for (std::size_t b = a + 1; b < n && ok; ++b)
        if ((s >> a & 1) && (s >> b & 1) && !sep[a].test(b)) ok = false;
    if (ok) best = std::max<std::size_t>(best, static_cast<std::size_t>(__builtin_popcount(s)));
  }
  return best;
}

}  // namespace

TEST(Estimators, BandOrderMatchesDimension) {
  EXPECT_EQ(band_order(1, 2), 1);
  EXPECT_EQ(band_order(2, 3), 2);
  EXPECT_EQ(band_order(3, 4), 3);
  EXPECT_EQ(band_order(4, 6), 4);
  EXPECT_EQ(band_order(0, 5), 0);
}

TEST(Estimators, ProductPathAgreesWithExplicitSearch) {
  auto X = full_shift(1, SiteAlphabet::interval(8));
  StageOptions product, plain;
  plain.prefer_product = false;
  for (std::int64_t n = 1; n <= 3; ++n) {
    auto a = stage_D_conditional(*X, interval_seed(), win(0, n), product);
    auto b = stage_D_conditional(*X, interval_seed(), win(0, n), plain);
    EXPECT_EQ(a.path, "product");
    EXPECT_TRUE(a.exact);
    EXPECT_TRUE(b.exact);
    EXPECT_EQ(a.upper, n);
    EXPECT_EQ(b.upper, n);
  }
}

TEST(Estimators, ExplicitCoverOfProductMatchesStageCover) {
  auto X = full_shift(1, SiteAlphabet::interval(4));
  auto wm = X->window(win(0, 2));
  auto pc = product_cover_on_word(*wm, interval_seed(), 0);
  auto a = reduced(explicit_cover(pc, wm->fiber));
  auto b = reduced(stage_cover_on_word(*wm, interval_seed(), 0));
  ASSERT_EQ(a.size(), b.size());
  auto ma = a.members(), mb = b.members();
  std::sort(ma.begin(), ma.end());
  std::sort(mb.begin(), mb.end());
  EXPECT_EQ(ma, mb);
  EXPECT_EQ(product_lower_bound(pc), 2);
}

TEST(Estimators, BandNeedsRoomInTheMembers) {
  // at resolution 12 a period-9 block does not fit in [0,3/4); at 16 it does
  auto coarse = full_shift(1, SiteAlphabet::interval(12));
  auto fine = full_shift(1, SiteAlphabet::interval(16));
  auto pc12 = product_cover_on_word(*coarse->window(win(0, 8)), interval_seed(), 0);
  auto pc16 = product_cover_on_word(*fine->window(win(0, 8)), interval_seed(), 0);
  bool any12 = false;
  for (int off = 0; off < 9; ++off) any12 = any12 || band_admissible(pc12, 9, off);
  EXPECT_FALSE(any12);
  auto band = product_band(pc16);
  ASSERT_TRUE(band);
  EXPECT_EQ(band->period, 9);
  EXPECT_EQ(band->ord, 8);
}

TEST(Estimators, WindowOfEightAtResolutionSixteen) {
  auto X = full_shift(1, SiteAlphabet::interval(16));
  auto st = stage_D_unconditional(*X, interval_seed(), win(0, 8));
  EXPECT_TRUE(st.exact);
  EXPECT_EQ(st.upper, 8);
  auto au = audit_stage(*X, interval_seed(), st);
  EXPECT_TRUE(au.ok) << au.failure;
}

TEST(Estimators, AuditCatchesTamperedWitness) {
  auto X = full_shift(1, SiteAlphabet::interval(4));
  StageOptions plain;
  plain.prefer_product = false;
  auto st = stage_D_conditional(*X, interval_seed(), win(0, 2), plain);
  ASSERT_TRUE(audit_stage(*X, interval_seed(), st).ok);
  auto bad = st;
  std::fill(bad.witnesses[0].labeling.begin(), bad.witnesses[0].labeling.end(), 0u);
  EXPECT_FALSE(audit_stage(*X, interval_seed(), bad).ok);
  auto lying = st;
  lying.witnesses[0].ord = 1;
  lying.upper = 1;
  EXPECT_FALSE(audit_stage(*X, interval_seed(), lying).ok);
  auto band = stage_D_conditional(*X, interval_seed(), win(0, 2));
  ASSERT_EQ(band.witnesses[0].kind, "band");
  EXPECT_TRUE(audit_stage(*X, interval_seed(), band).ok);
  band.witnesses[0].band.period = 2;  // too short for two coordinates
  EXPECT_FALSE(audit_stage(*X, interval_seed(), band).ok);
}

TEST(Estimators, WholeModelPathOnAPeriodicBase) {
  auto X = product_system(period_two(), SiteAlphabet::interval(4));
  StageOptions whole;
  whole.prefer_product = false;
  auto a = stage_D_unconditional(*X, interval_seed(), win(0, 2), whole);
  auto b = stage_D_conditional(*X, interval_seed(), win(0, 2));
  EXPECT_EQ(a.path, "explicit");
  EXPECT_EQ(stage_D_unconditional(*X, interval_seed(), win(0, 2)).path, "product+clopen");
  EXPECT_EQ(a.upper, 2);
  EXPECT_EQ(b.upper, 2);
  EXPECT_TRUE(audit_stage(*X, interval_seed(), a).ok);
  EXPECT_TRUE(audit_stage(*X, interval_seed(), b).ok);
}

TEST(Estimators, TupleSearchWhereNoBandFits) {
  // three sites at r = 4: bands need period 4 and overflow the members
  auto X = product_system(period_two(), SiteAlphabet::interval(4));
  auto wm = X->window(win(0, 3));
  auto pc = product_cover_on_word(*wm, interval_seed(), 0);
  EXPECT_FALSE(product_band(pc).has_value());
  auto st = stage_D_conditional(*X, interval_seed(), win(0, 3));
  EXPECT_TRUE(st.exact);
  EXPECT_EQ(st.upper, 3);
  EXPECT_EQ(st.witnesses[0].kind, "labeling");
  EXPECT_TRUE(audit_stage(*X, interval_seed(), st).ok);
}

TEST(Estimators, TupleSearchMatchesExplicitSearch) {
  auto X = product_system(period_two(), SiteAlphabet::interval(4));
  for (int n = 1; n <= 2; ++n) {
    auto wm = X->window(win(0, n));
    auto pc = product_cover_on_word(*wm, interval_seed(), 1);
    auto r = D_unconditional(explicit_cover(pc, wm->fiber));
    ASSERT_TRUE(r.exact);
    EXPECT_FALSE(product_tuple_labeling(pc, *wm->fiber, r.upper - 1, 1u << 20).has_value());
    auto lab = product_tuple_labeling(pc, *wm->fiber, r.upper, 1u << 20);
    ASSERT_TRUE(lab.has_value());
    auto W = labeling_cover(wm->fiber, *lab);
    EXPECT_EQ(check_refinement(explicit_cover(pc, wm->fiber), FiberPartition::to_point(wm->fiber), W), r.upper);
  }
}

TEST(Estimators, SkewFibersAreCircles) {
  auto X = skew_product(period_two(), rotation());
  auto st = stage_D_conditional(*X, arc_seed(), win(0, 3));
  EXPECT_EQ(st.path, "fibers");
  EXPECT_TRUE(st.exact);
  EXPECT_EQ(st.upper, 1);
  EXPECT_TRUE(audit_stage(*X, arc_seed(), st).ok);
}

TEST(Estimators, FiniteAlphabetCountsWords) {
  for (int m : {2, 3, 4}) {
    auto X = with_lambda(full_shift(1, SiteAlphabet::net(m)), Rational(1, 32));
    for (std::int64_t n = 1; n <= 3; ++n) {
      auto ns = stage_N_eps_conditional(*X, Rational(1, 4), win(0, n));
      EXPECT_TRUE(ns.exact);
      EXPECT_EQ(ns.E, win(0, n));
      EXPECT_EQ(ns.N, static_cast<std::size_t>(std::pow(m, n)));
      EXPECT_EQ(ns.mesh_cover, ns.N);
    }
  }
}

TEST(Estimators, IntervalPackingNumber) {
  // points k/8 at spacing >= 1/4 on one site
  auto X = with_lambda(full_shift(1, SiteAlphabet::interval(8)), Rational(1, 32));
  auto ns = stage_N_eps_conditional(*X, Rational(1, 4), win(0, 1));
  EXPECT_EQ(ns.N, 5u);
  auto two = stage_N_eps_conditional(*X, Rational(1, 4), win(0, 2));
  EXPECT_EQ(two.N, 25u);
  EXPECT_GE(two.mesh_cover, two.N);
}

TEST(Estimators, PackingSearchMatchesBruteForce) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t n = 4 + trial % 9;
    std::vector<boost::dynamic_bitset<>> sep(n, boost::dynamic_bitset<>(n));
    std::bernoulli_distribution coin(0.2 + 0.01 * trial);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        if (coin(rng)) {
          sep[a].set(b);
          sep[b].set(a);
        }
    auto pk = max_separated(sep);
    EXPECT_TRUE(pk.exact);
    EXPECT_EQ(pk.size, brute_packing(sep)) << "trial " << trial;
    for (auto a : pk.chosen)
      for (auto b : pk.chosen)
        if (a != b) {
          EXPECT_TRUE(sep[a].test(b));
        }
    EXPECT_GE(greedy_mesh_cover(sep), pk.size);
  }
}

TEST(Estimators, PackingBudgetFallsBackToGreedy) {
  std::size_t n = 60;
  std::vector<boost::dynamic_bitset<>> sep(n, boost::dynamic_bitset<>(n));
  std::mt19937 rng(3);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (coin(rng)) {
        sep[a].set(b);
        sep[b].set(a);
      }
  auto pk = max_separated(sep, 3);
  EXPECT_FALSE(pk.exact);
  EXPECT_GE(pk.size, 1u);
}

TEST(Estimators, WdimOfTheIntervalShiftAtOneSite) {
  // small lambda: the neighbours sit below eps and do not count
  auto X = with_lambda(full_shift(1, SiteAlphabet::interval(8)), Rational(1, 4));
  auto ws = stage_Wdim_relative(*X, Rational(3, 10), win(0, 1));
  EXPECT_EQ(ws.E, win(0, 1));
  EXPECT_TRUE(ws.exact);
  EXPECT_EQ(ws.upper, 1);
  EXPECT_TRUE(ws.embedding_verified);
}

TEST(Estimators, WdimSeesNeighboursAtHalfWeight) {
  // lambda = 1/2: both neighbours weigh 1/2 > 3/10, so three coordinates count
  auto X = full_shift(1, SiteAlphabet::interval(8));
  auto E = X->support_window(win(0, 1), Rational(3, 10));
  EXPECT_EQ(E, win(-1, 2));
  auto wm = X->window(win(0, 1), E);
  auto w = factor_weights(*wm);
  EXPECT_EQ(diameter_lower_bound(*wm->complex, *wm->pi, w, Rational(3, 10)), 3);
}

TEST(Estimators, WdimRejectsCoarseGrids) {
  auto X = with_lambda(full_shift(1, SiteAlphabet::interval(2)), Rational(1, 4));
  EXPECT_THROW(stage_Wdim_relative(*X, Rational(3, 10), win(0, 1)), std::invalid_argument);
}

TEST(Estimators, MeasureValuesAreEquivariant) {
  auto X = product_system(period_two(), SiteAlphabet::interval(4));
  auto nu = invariant_measure(X->base, X->base.points(), {Rational(1, 2), Rational(1, 2)});
  auto ms = stage_D_measure(*X, nu, interval_seed(), win(0, 2));
  EXPECT_TRUE(ms.equivariant) << ms.equivariance_failure;
  EXPECT_EQ(ms.value, Rational(2));
  EXPECT_EQ(ms.max_fiber, 2);
}

TEST(Estimators, SymbolDependentSeedChangesFibers) {
  // only y_0 = 1 carries the split cover; y_0 = 0 gets the whole site
  Seed seed = interval_seed();
  for (auto& m : seed) m.symbols = {1};
  SeedMember whole;
  whole.symbols = {0};
  seed.push_back(whole);
  auto X = product_system(period_two(), SiteAlphabet::interval(4));
  auto nu = invariant_measure(X->base, X->base.points(), {Rational(1, 2), Rational(1, 2)});
  auto ms = stage_D_measure(*X, nu, seed, win(0, 2));
  EXPECT_TRUE(ms.equivariant) << ms.equivariance_failure;
  EXPECT_EQ(ms.max_fiber, 1);
  EXPECT_EQ(ms.value, Rational(1));
  auto st = stage_D_conditional(*X, seed, win(0, 2));
  EXPECT_EQ(st.upper, 1);
}

TEST(Estimators, UscProbeOnFullBase) {
  Seed seed = interval_seed();
  for (auto& m : seed) m.symbols = {1};
  SeedMember whole;
  whole.symbols = {0};
  seed.push_back(whole);
  auto base = SymbolicBase::full(1, 2).with_points({{{1}, {1}}});
  auto X = product_system(base, SiteAlphabet::interval(4));
  SymbolicBase::Point y{0, GroupElement{0}};
  auto p = usc_probe(*X, seed, y, win(0, 2), 2);
  EXPECT_TRUE(p.holds);
  EXPECT_LE(p.stable_from, 1);
}

TEST(Estimators, OrnsteinWeissSummary) {
  Window K = win(0, 2);
  auto phi = [&](const Window& F) { return Rational(static_cast<std::int64_t>(product_set(K, F).size())); };
  auto sch = box_folner(1, {2, 4, 8, 16, 32});
  std::vector<Window> samples{win(0, 1), win(0, 2), win(0, 3), win(2, 4), unite(win(0, 1), win(5, 7))};
  auto s = ow_limit(phi, sch, samples);
  EXPECT_TRUE(s.ow()) << s.flagged;
  EXPECT_NEAR(s.best_bound, 33.0 / 32.0, 1e-12);

  auto fake = [](const Window& F) {
    auto n = static_cast<std::int64_t>(F.size());
    return Rational(n % 2 ? 3 * n : n);
  };
  auto f = ow_limit(fake, sch, samples);
  EXPECT_FALSE(f.monotone);
  EXPECT_FALSE(f.ow());
}

TEST(Estimators, TraceFeketeAndExport) {
  auto X = full_shift(1, SiteAlphabet::interval(8));
  std::vector<StageD> stages;
  for (std::int64_t n : {1, 2, 4}) stages.push_back(stage_D_conditional(*X, interval_seed(), win(0, n)));
  auto t = trace_D("D", stages);
  EXPECT_TRUE(t.fekete_violations.empty());
  EXPECT_DOUBLE_EQ(t.best_upper, 1.0);
  auto csv = t.csv();
  EXPECT_NE(csv.find("window_size,raw,normalized"), std::string::npos);
  EXPECT_NE(csv.find("4,4,1,D#2,exact"), std::string::npos);
  EXPECT_NE(t.svg().find("<svg"), std::string::npos);
}

TEST(Estimators, MetricTraceForFiniteAlphabet) {
  auto X = with_lambda(full_shift(1, SiteAlphabet::net(4)), Rational(1, 32));
  auto mt = stage_mdimM_conditional(*X, {Rational(1, 4)}, box_folner(1, {1, 2, 3}));
  ASSERT_EQ(mt.per_eps.size(), 1u);
  for (auto& r : mt.per_eps[0].rows) EXPECT_NEAR(r.normalized, 1.0, 1e-12);
  EXPECT_THROW(stage_mdimM_conditional(*X, {Rational(1, 8), Rational(1, 4)}, box_folner(1, {1})), std::invalid_argument);
}

TEST(Estimators, GroupPackingOnTheCircle) {
  auto ns = stage_N_eps_group(rotation(), Rational(1, 4), win(0, 2));
  EXPECT_EQ(ns.N, 4u);
  EXPECT_TRUE(ns.exact);
}
