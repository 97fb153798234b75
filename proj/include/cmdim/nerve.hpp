#pragma once

// Barycentric partition of unity and the induced map to the nerve.

#include "cmdim/dimension.hpp"

#include <map>
#include <set>
#include <vector>

namespace cmdim {

// Each grid vertex is sent to the member it is assigned to (the first member
// containing its star); a point of an open cell goes to the barycentric mix of
// its vertices' images, so the support of g at any point of cell c is the set
// of members assigned to vertices of c.
struct NerveMap {
  ComplexPtr complex;
  std::vector<std::uint32_t> vertex_image;            // grid vertex -> nerve vertex (member index)
  std::vector<std::vector<std::uint32_t>> simplices;  // maximal supports, sorted
  int dimension = -1;

  // g at the barycenter of a cell
  std::map<std::uint32_t, Rational> at_barycenter(std::size_t cell) const {
    auto vs = complex->cell_vertices(cell);
    std::map<std::uint32_t, Rational> out;
    for (auto v : vs) out[vertex_image[v]] += Rational(1, static_cast<std::int64_t>(vs.size()));
    return out;
  }

  // support of g on an open cell
  std::vector<std::uint32_t> support(std::size_t cell) const {
    std::vector<std::uint32_t> s;
    for (auto v : complex->cell_vertices(cell)) s.push_back(vertex_image[v]);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
  }
};

// nullopt if some vertex star lies in no member (W is not a star-union cover)
inline std::optional<NerveMap> nerve_map(const Cover& W) {
  const auto& K = W.complex();
  NerveMap g;
  g.complex = W.complex_ptr();
  g.vertex_image.resize(K.num_vertices());
  for (std::size_t v = 0; v < K.num_vertices(); ++v) {
    auto st = star_of(K, {v});
    bool found = false;
    for (std::size_t i = 0; i < W.size() && !found; ++i)
      if (st.is_subset_of(W[i])) {
        g.vertex_image[v] = static_cast<std::uint32_t>(i);
        found = true;
      }
    if (!found) return std::nullopt;
  }
  std::set<std::vector<std::uint32_t>> simp;
  for (std::size_t c = 0; c < K.num_cells(); ++c)
    if (K.is_top(c)) simp.insert(g.support(c));
  for (auto& s : simp) {
    g.simplices.push_back(s);
    g.dimension = std::max(g.dimension, static_cast<int>(s.size()) - 1);
  }
  return g;
}

// g^{-1}(q) lies in every member of supp(q): check cell by cell
inline bool nerve_preimages_inside(const Cover& W, const NerveMap& g) {
  for (std::size_t c = 0; c < W.complex().num_cells(); ++c)
    for (auto m : g.support(c))
      if (!W[m].test(c)) return false;
  return true;
}

struct BridgeReport {
  bool holds = false;
  bool decided = true;  // false when the D bracket straddles k
  DResult d;
  int nerve_dimension = -1;
  bool forward = false;   // f^{-1}(p) ∩ fiber refines U
  bool backward = false;  // pullback of nerve stars certifies D <= k
};

// Both directions of the bridge between D(U|Y) <= k and maps to k-dimensional
// polyhedra, replayed on a minimizing labeling.
inline BridgeReport verify_bridge(const Cover& U, const FiberPartition& pi, int k, const SearchOptions& opt = {}) {
  BridgeReport rep;
  rep.d = D_conditional(U, pi, opt);
  if (!rep.d.feasible) {
    rep.decided = true;
    return rep;
  }
  auto W = labeling_cover(U.complex_ptr(), rep.d.witness);
  auto g = nerve_map(W);
  if (!g) return rep;
  rep.nerve_dimension = g->dimension;
  const auto& K = U.complex();
  // forward: a point set g^{-1}(q) ∩ fiber sits inside one member of supp(q),
  // whose fiber trace sits inside a member of U
  rep.forward = nerve_preimages_inside(W, *g) && check_refinement(U, pi, W).has_value();
  // backward: preimages of open nerve stars are again a cover of order dim
  std::vector<CellSet> pulled(W.size(), CellSet(K.num_cells()));
  for (std::size_t c = 0; c < K.num_cells(); ++c)
    for (auto m : g->support(c)) pulled[m].set(c);
  Cover P(U.complex_ptr(), pulled, false);
  auto o = check_refinement(U, pi, P);
  rep.backward = o.has_value() && *o == g->dimension;
  if (rep.d.upper <= k) rep.holds = rep.forward && rep.backward && g->dimension <= k;
  else if (rep.d.lower > k) rep.holds = false;
  else rep.decided = false;
  return rep;
}

}  // namespace cmdim
