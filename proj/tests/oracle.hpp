#pragma once

// Brute-force references shared by the unit tests and the acceptance binary.

#include "cmdim/dimension.hpp"

#include <functional>
#include <random>
#include <vector>

namespace oracle {

using namespace cmdim;

// minimal ord over all vertex partitions, checked cell by cell; -1 if none works
inline int D_by_partitions(const Cover& U, const FiberPartition& pi) {
  const auto& K = U.complex();
  const std::size_t n = K.num_vertices();
  std::vector<CellSet> fibers(pi.num_fibers(), CellSet(K.num_cells()));
  for (std::size_t c = 0; c < K.num_cells(); ++c) fibers[pi.fiber_of(c)].set(c);
  std::vector<CellSet> stars;
  for (std::size_t v = 0; v < n; ++v) stars.push_back(star_of(K, {v}));

  auto admissible = [&](const CellSet& w) {
    for (auto& f : fibers) {
      CellSet t = w & f;
      if (t.none()) continue;
      bool ok = false;
      for (auto& u : U.members()) ok = ok || t.is_subset_of(u);
      if (!ok) return false;
    }
    return true;
  };
  int best = -1;
  std::vector<int> rgs(n, 0);
  std::vector<CellSet> members;
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int used) {
    if (i == n) {
      members.assign(used, CellSet(K.num_cells()));
      for (std::size_t v = 0; v < n; ++v) members[rgs[v]] |= stars[v];
      for (auto& m : members)
        if (!admissible(m)) return;
      std::vector<int> cnt(K.num_cells(), 0);
      for (auto& m : members)
        for (std::size_t c = 0; c < K.num_cells(); ++c) cnt[c] += m.test(c);
      int o = *std::max_element(cnt.begin(), cnt.end()) - 1;
      if (best < 0 || o < best) best = o;
      return;
    }
    for (int l = 0; l <= used; ++l) {
      rgs[i] = l;
      rec(i + 1, std::max(used, l + 1));
    }
  };
  rec(0, 0);
  return best;
}

// minimal ord over families of at most `max_members` star-unions (any vertex
// subsets, repetition-free); only for very small complexes
inline int D_by_families(const Cover& U, const FiberPartition& pi, std::size_t max_members) {
  const auto& K = U.complex();
  const std::size_t n = K.num_vertices();
  std::vector<CellSet> cand;
  for (std::uint32_t s = 1; s < (1u << n); ++s) {
    std::vector<std::size_t> vs;
    for (std::size_t v = 0; v < n; ++v)
      if (s >> v & 1) vs.push_back(v);
    cand.push_back(star_of(K, vs));
  }
  std::vector<CellSet> fibers(pi.num_fibers(), CellSet(K.num_cells()));
  for (std::size_t c = 0; c < K.num_cells(); ++c) fibers[pi.fiber_of(c)].set(c);
  std::vector<CellSet> ok;
  for (auto& w : cand) {
    bool good = true;
    for (auto& f : fibers) {
      CellSet t = w & f;
      if (t.none()) continue;
      bool in = false;
      for (auto& u : U.members()) in = in || t.is_subset_of(u);
      good = good && in;
    }
    if (good) ok.push_back(w);
  }
  int best = -1;
  std::vector<std::size_t> pick;
  std::vector<int> cnt(K.num_cells(), 0);
  std::function<void(std::size_t)> rec = [&](std::size_t from) {
    if (!pick.empty()) {
      bool covered = std::all_of(cnt.begin(), cnt.end(), [](int x) { return x > 0; });
      if (covered) {
        int o = *std::max_element(cnt.begin(), cnt.end()) - 1;
        if (best < 0 || o < best) best = o;
      }
    }
    if (pick.size() == max_members) return;
    for (std::size_t i = from; i < ok.size(); ++i) {
      pick.push_back(i);
      for (auto c = ok[i].find_first(); c != CellSet::npos; c = ok[i].find_next(c)) ++cnt[c];
      rec(i + 1);
      for (auto c = ok[i].find_first(); c != CellSet::npos; c = ok[i].find_next(c)) --cnt[c];
      pick.pop_back();
    }
  };
  rec(0);
  return best;
}

// random open cover with at most `max_members` members
inline Cover random_cover(const ComplexPtr& K, std::mt19937& rng, int max_members) {
  std::uniform_int_distribution<std::size_t> cell(0, K->num_cells() - 1);
  std::uniform_int_distribution<int> count(1, max_members - 1), seeds(1, 3);
  std::vector<CellSet> ms;
  int m = count(rng);
  CellSet uni(K->num_cells());
  for (int i = 0; i < m; ++i) {
    CellSet s(K->num_cells());
    int q = seeds(rng);
    for (int j = 0; j < q; ++j)
      for (auto d : K->cofaces(cell(rng))) s.set(d);
    // sometimes a star-union
    if (rng() % 2) {
      CellSet t(K->num_cells());
      for (std::size_t v = 0; v < K->num_vertices(); ++v)
        if (s.test(K->vertex_cell(v))) t |= star_of(*K, {v});
      if (t.any()) s = t;
    }
    uni |= s;
    ms.push_back(s);
  }
  CellSet rest(K->num_cells());
  for (std::size_t c = 0; c < K->num_cells(); ++c)
    if (!uni.test(c))
      for (auto d : K->cofaces(c)) rest.set(d);
  if (rest.any()) ms.push_back(rest);
  return Cover(K, ms);
}

// small complexes with at most nine vertices
inline std::vector<std::vector<Factor>> small_shapes() {
  using F = Factor;
  std::vector<std::vector<Factor>> out;
  for (int r = 1; r <= 8; ++r) out.push_back({F::interval(r)});
  for (int r = 3; r <= 9; ++r) out.push_back({F::circle(r)});
  out.push_back({F::interval(1), F::interval(1)});
  out.push_back({F::interval(2), F::interval(1)});
  out.push_back({F::interval(1), F::interval(2)});
  out.push_back({F::interval(2), F::interval(2)});
  out.push_back({F::interval(1), F::interval(1), F::interval(1)});
  out.push_back({F::circle(3), F::interval(1)});
  out.push_back({F::circle(3), F::interval(2)});
  out.push_back({F::discrete(2), F::interval(2)});
  out.push_back({F::discrete(3), F::interval(1)});
  out.push_back({F::discrete(2), F::interval(1), F::interval(1)});
  out.push_back({F::discrete(2), F::circle(4)});
  return out;
}

// identity, point and every coordinate projection
inline std::vector<FiberPartition> partitions_of(const ComplexPtr& K) {
  std::vector<FiberPartition> out{FiberPartition::identity(K), FiberPartition::to_point(K)};
  const std::size_t n = K->num_factors();
  for (std::uint32_t s = 1; s + 1 < (1u << n); ++s) {
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < n; ++j)
      if (s >> j & 1) keep.push_back(j);
    out.push_back(FiberPartition::projection(K, keep));
  }
  return out;
}

struct EquivalenceStats {
  int cases = 0;
  int agree = 0;
  std::string first_mismatch;
};

// criterion-1 sweep: search vs exhaustive partitions
inline EquivalenceStats sweep(unsigned seed, int covers_per_shape) {
  std::mt19937 rng(seed);
  EquivalenceStats st;
  for (auto& shape : small_shapes()) {
    auto K = make_complex(shape);
    auto parts = partitions_of(K);
    for (int rep = 0; rep < covers_per_shape; ++rep) {
      auto U = random_cover(K, rng, 4);
      for (auto& pi : parts) {
        int ref = D_by_partitions(U, pi);
        auto got = D_conditional(U, pi);
        int mine = got.feasible ? (got.exact ? got.upper : -2) : -1;
        ++st.cases;
        if (mine == ref) ++st.agree;
        else if (st.first_mismatch.empty())
          st.first_mismatch = K->str() + " rep " + std::to_string(rep) + ": search " + std::to_string(mine) +
                              " exhaustive " + std::to_string(ref);
      }
    }
  }
  return st;
}

}  // namespace oracle
