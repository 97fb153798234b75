#pragma once

#include "cmdim/group.hpp"
#include "cmdim/rational.hpp"

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/boykov_kolmogorov_max_flow.hpp>

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmdim {

struct TileFamily {
  std::vector<Window> tiles;
  Rational epsilon;
  std::optional<Window> K;

  TileFamily(std::vector<Window> t, Rational eps, std::optional<Window> k = std::nullopt)
      : tiles(std::move(t)), epsilon(eps), K(std::move(k)) {
    if (tiles.empty()) throw std::invalid_argument("TileFamily: no tiles");
    if (epsilon <= 0 || epsilon >= 1) throw std::invalid_argument("TileFamily: epsilon must lie in (0,1)");
    const auto d = tiles.front().dim();
    for (const auto& F : tiles) {
      if (F.empty() || F.dim() != d) throw std::invalid_argument("TileFamily: tiles must be nonempty and share d");
      if (!F.contains(GroupElement::identity(d)))
        throw std::invalid_argument("TileFamily: tile " + F.str() + " misses the identity");
      if (K && invariance_defect(F, *K) > epsilon)
        throw std::invalid_argument("TileFamily: tile " + F.str() + " is not (K, epsilon)-invariant");
    }
  }
};

// ceil((1 - eps) |F|)
inline std::int64_t disjointness_demand(std::size_t size, const Rational& eps) {
  return ceil_of((Rational(1) - eps) * Rational(static_cast<std::int64_t>(size)));
}

struct DisjointnessCertificate {
  std::vector<Window> kept;  // F' for each translate, same order as the input

  bool verify(const std::vector<Window>& translates, const Rational& eps, std::string* why = nullptr) const {
    auto fail = [&](std::string msg) {
      if (why) *why = std::move(msg);
      return false;
    };
    if (kept.size() != translates.size()) return fail("certificate size mismatch");
    std::map<GroupElement, std::size_t> owner;
    for (std::size_t j = 0; j < kept.size(); ++j) {
      if (!translates[j].contains(kept[j])) return fail("kept set " + std::to_string(j) + " leaves its translate");
      if (static_cast<std::int64_t>(kept[j].size()) < disjointness_demand(translates[j].size(), eps))
        return fail("kept set " + std::to_string(j) + " is below the (1-eps) bound");
      for (const auto& g : kept[j])
        if (!owner.emplace(g, j).second)
          return fail("element " + g.str() + " kept twice (" + std::to_string(owner[g]) + "," + std::to_string(j) + ")");
    }
    return true;
  }
};

// Hall-type obstruction: the listed translates demand more than their union holds.
struct FlowObstruction {
  std::vector<std::size_t> translates;
  Window elements;
  std::int64_t demand = 0;

  bool verify(const std::vector<Window>& all, const Rational& eps) const {
    if (translates.empty()) return false;
    Window uni(all.front().dim());
    std::int64_t need = 0;
    for (auto j : translates) {
      if (j >= all.size()) return false;
      uni = unite(uni, all[j]);
      need += disjointness_demand(all[j].size(), eps);
    }
    return uni == elements && need == demand && demand > static_cast<std::int64_t>(elements.size());
  }
};

struct CertifyResult {
  std::optional<DisjointnessCertificate> certificate;
  std::optional<FlowObstruction> obstruction;
  bool ok() const { return certificate.has_value(); }
};

namespace detail {

using FlowTraits = boost::adjacency_list_traits<boost::vecS, boost::vecS, boost::directedS>;
using FlowGraph = boost::adjacency_list<
    boost::vecS, boost::vecS, boost::directedS,
    boost::property<boost::vertex_index_t, long,
                    boost::property<boost::vertex_color_t, boost::default_color_type,
                                    boost::property<boost::vertex_distance_t, long,
                                                    boost::property<boost::vertex_predecessor_t,
                                                                    FlowTraits::edge_descriptor>>>>,
    boost::property<boost::edge_capacity_t, long,
                    boost::property<boost::edge_residual_capacity_t, long,
                                    boost::property<boost::edge_reverse_t, FlowTraits::edge_descriptor>>>>;

class FlowNetwork {
 public:
  explicit FlowNetwork(std::size_t n) : g_(n) {}

  FlowTraits::edge_descriptor add(std::size_t u, std::size_t v, long cap) {
    auto cap_map = boost::get(boost::edge_capacity, g_);
    auto rev_map = boost::get(boost::edge_reverse, g_);
    auto e = boost::add_edge(u, v, g_).first;
    auto r = boost::add_edge(v, u, g_).first;
    cap_map[e] = cap;
    cap_map[r] = 0;
    rev_map[e] = r;
    rev_map[r] = e;
    return e;
  }

  long solve(std::size_t s, std::size_t t) { return boost::boykov_kolmogorov_max_flow(g_, s, t); }

  long flow_on(FlowTraits::edge_descriptor e) const {
    return boost::get(boost::edge_capacity, g_, e) - boost::get(boost::edge_residual_capacity, g_, e);
  }

  std::vector<char> residual_reachable(std::size_t s) const {
    std::vector<char> seen(boost::num_vertices(g_), 0);
    std::deque<std::size_t> queue{s};
    seen[s] = 1;
    while (!queue.empty()) {
      auto u = queue.front();
      queue.pop_front();
      for (auto [it, end] = boost::out_edges(u, g_); it != end; ++it) {
        auto v = boost::target(*it, g_);
        if (!seen[v] && boost::get(boost::edge_residual_capacity, g_, *it) > 0) {
          seen[v] = 1;
          queue.push_back(v);
        }
      }
    }
    return seen;
  }

 private:
  FlowGraph g_;
};

}  // namespace detail

inline CertifyResult certify_eps_disjoint(const std::vector<Window>& translates, const Rational& eps) {
  if (eps <= 0 || eps >= 1) throw std::invalid_argument("certify_eps_disjoint: epsilon must lie in (0,1)");
  CertifyResult out;
  if (translates.empty()) {
    out.certificate = DisjointnessCertificate{};
    return out;
  }
  const auto d = translates.front().dim();
  Window uni(d);
  for (const auto& T : translates) {
    if (T.dim() != d) throw std::invalid_argument("certify_eps_disjoint: mixed dimensions");
    uni = unite(uni, T);
  }
  const std::size_t m = translates.size(), n = uni.size();
  const std::size_t source = 0, sink = 1;
  auto tnode = [](std::size_t j) { return 2 + j; };
  auto enode = [m](std::size_t i) { return 2 + m + i; };
  detail::FlowNetwork net(2 + m + n);
  std::vector<std::int64_t> demand(m);
  long total = 0;
  for (std::size_t j = 0; j < m; ++j) {
    demand[j] = disjointness_demand(translates[j].size(), eps);
    total += demand[j];
  }
  // middle capacities exceed any cut so a minimum cut is of Hall type
  std::vector<std::vector<std::pair<std::size_t, detail::FlowTraits::edge_descriptor>>> mid(m);
  for (std::size_t j = 0; j < m; ++j) {
    net.add(source, tnode(j), demand[j]);
    for (const auto& g : translates[j]) {
      auto i = uni.index_of(g);
      mid[j].emplace_back(i, net.add(tnode(j), enode(i), total + 1));
    }
  }
  for (std::size_t i = 0; i < n; ++i) net.add(enode(i), sink, 1);
  const long flow = net.solve(source, sink);
  if (flow == total) {
    DisjointnessCertificate cert;
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<GroupElement> kept;
      for (auto& [i, e] : mid[j])
        if (net.flow_on(e) > 0) kept.push_back(uni[i]);
      cert.kept.emplace_back(d, std::move(kept));
    }
    out.certificate = std::move(cert);
    return out;
  }
  auto seen = net.residual_reachable(source);
  FlowObstruction obs;
  obs.elements = Window(d);
  for (std::size_t j = 0; j < m; ++j)
    if (seen[tnode(j)]) {
      obs.translates.push_back(j);
      obs.demand += demand[j];
      obs.elements = unite(obs.elements, translates[j]);
    }
  out.obstruction = std::move(obs);
  return out;
}

struct QuasiTiling {
  std::vector<Window> tiles;
  Rational epsilon;
  Window A;
  std::vector<std::vector<GroupElement>> centers;  // D_j, aligned with tiles
  std::optional<DisjointnessCertificate> certificate;
  Window uncovered;
  Rational uncovered_fraction;

  std::vector<Window> translates() const {
    std::vector<Window> out;
    for (std::size_t j = 0; j < tiles.size(); ++j)
      for (const auto& c : centers[j]) out.push_back(translate(tiles[j], c));
    return out;
  }

  Window covered() const {
    Window u(A.dim());
    for (const auto& T : translates()) u = unite(u, T);
    return u;
  }

  // sum_j |F_j| |D_j|
  std::int64_t tile_mass() const {
    std::int64_t s = 0;
    for (std::size_t j = 0; j < tiles.size(); ++j)
      s += static_cast<std::int64_t>(tiles[j].size() * centers[j].size());
    return s;
  }

  bool meets_fraction() const { return uncovered_fraction <= epsilon; }
};

struct TilingAudit {
  bool containment = false;
  bool disjointness = false;
  bool uncovered_consistent = false;
  bool fraction_within_epsilon = false;
  bool density_bound = false;
  std::string detail;

  bool all() const {
    return containment && disjointness && uncovered_consistent && fraction_within_epsilon && density_bound;
  }
};

// Re-verifies every claim of a tiling from scratch (no search).
inline TilingAudit audit(const QuasiTiling& q) {
  TilingAudit a;
  auto translates = q.translates();
  a.containment = std::all_of(translates.begin(), translates.end(), [&](const Window& T) { return q.A.contains(T); });
  if (!a.containment) a.detail = "a translate leaves A";
  if (q.certificate) {
    std::string why;
    a.disjointness = q.certificate->verify(translates, q.epsilon, &why);
    if (!a.disjointness) a.detail = why;
  } else if (q.epsilon > 0 && q.epsilon < 1) {
    a.disjointness = certify_eps_disjoint(translates, q.epsilon).ok();
  }
  auto unc = subtract(q.A, q.covered());
  a.uncovered_consistent =
      unc == q.uncovered &&
      q.uncovered_fraction == Rational(static_cast<std::int64_t>(unc.size()), static_cast<std::int64_t>(q.A.size()));
  a.fraction_within_epsilon = q.uncovered_fraction <= q.epsilon;
  // sum |F_j||D_j| <= |A| / (1 - eps)
  a.density_bound = Rational(q.tile_mass()) * (Rational(1) - q.epsilon) <= Rational(static_cast<std::int64_t>(q.A.size()));
  return a;
}

struct GreedyOutcome {
  bool success = false;  // uncovered fraction <= epsilon and certified
  QuasiTiling tiling;
};

// Largest tile first; centers scanned lexicographically; a translate is taken
// when it lies in A and meets the selected union in at most eps |F_j| points.
inline GreedyOutcome greedy_quasi_tile(const TileFamily& family, const Window& A) {
  if (A.empty()) throw std::invalid_argument("greedy_quasi_tile: A must be nonempty");
  const auto d = A.dim();
  QuasiTiling q;
  q.tiles = family.tiles;
  q.epsilon = family.epsilon;
  q.A = A;
  q.centers.assign(q.tiles.size(), {});
  std::vector<std::size_t> order(q.tiles.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return q.tiles[a].size() > q.tiles[b].size(); });
  std::vector<char> covered(A.size(), 0);
  for (auto j : order) {
    const auto& F = q.tiles[j];
    const auto& anchor = F[0];
    const Rational allowed = family.epsilon * Rational(static_cast<std::int64_t>(F.size()));
    std::vector<std::size_t> idx(F.size());
    for (const auto& a : A) {
      auto c = a - anchor;
      bool inside = true;
      std::int64_t overlap = 0;
      for (std::size_t k = 0; k < F.size() && inside; ++k) {
        auto g = F[k] + c;
        auto it = std::lower_bound(A.begin(), A.end(), g);
        if (it == A.end() || *it != g) {
          inside = false;
          break;
        }
        idx[k] = static_cast<std::size_t>(it - A.begin());
        overlap += covered[idx[k]];
      }
      if (!inside || Rational(overlap) > allowed) continue;
      for (auto i : idx) covered[i] = 1;
      q.centers[j].push_back(c);
    }
  }
  std::vector<GroupElement> unc;
  for (std::size_t i = 0; i < A.size(); ++i)
    if (!covered[i]) unc.push_back(A[i]);
  q.uncovered = Window(d, std::move(unc));
  q.uncovered_fraction = Rational(static_cast<std::int64_t>(q.uncovered.size()), static_cast<std::int64_t>(A.size()));
  auto cert = certify_eps_disjoint(q.translates(), q.epsilon);
  q.certificate = cert.certificate;
  GreedyOutcome out;
  out.success = cert.ok() && q.meets_fraction();
  out.tiling = std::move(q);
  return out;
}

// Partition of box A by translates of box T when the sides divide; otherwise
// the disjoint greedy packing (overlap tolerance below one point).
inline QuasiTiling exact_box_tiling(const Window& T, const Window& A) {
  if (!T.is_box() || !A.is_box()) throw std::invalid_argument("exact_box_tiling: both arguments must be boxes");
  if (T.dim() != A.dim()) throw std::invalid_argument("exact_box_tiling: dimension mismatch");
  const auto d = T.dim();
  auto [tlo, thi] = T.bounds();
  auto [alo, ahi] = A.bounds();
  std::vector<std::int64_t> tside(d), aside(d);
  bool divides = true;
  for (std::size_t i = 0; i < d; ++i) {
    tside[i] = thi[i] - tlo[i] + 1;
    aside[i] = ahi[i] - alo[i] + 1;
    divides = divides && aside[i] % tside[i] == 0;
  }
  // tiles are normalized to contain the identity at their lexicographic minimum
  auto tile = translate(T, inverse(GroupElement(tlo)));
  const Rational eps(1, static_cast<std::int64_t>(T.size()) + 1);
  if (!divides) return greedy_quasi_tile(TileFamily({tile}, eps), A).tiling;
  QuasiTiling q;
  q.tiles = {tile};
  q.epsilon = eps;
  q.A = A;
  std::vector<std::int64_t> counts(d);
  for (std::size_t i = 0; i < d; ++i) counts[i] = aside[i] / tside[i];
  q.centers.assign(1, {});
  for (const auto& k : box_from(std::vector<std::int64_t>(d, 0), counts)) {
    GroupElement c(alo);
    for (std::size_t i = 0; i < d; ++i) c.coords[i] += k[i] * tside[i];
    q.centers[0].push_back(c);
  }
  std::vector<Window> kept;
  for (const auto& c : q.centers[0]) kept.push_back(translate(tile, c));
  q.certificate = DisjointnessCertificate{kept};
  q.uncovered = Window(d);
  q.uncovered_fraction = 0;
  return q;
}

// (delta, K') are only known to exist; this reports the first window of a
// schedule on which the greedy construction succeeds.
inline std::optional<std::size_t> quasi_tiling_threshold(const TileFamily& family, const std::vector<Window>& windows) {
  for (std::size_t i = 0; i < windows.size(); ++i)
    if (greedy_quasi_tile(family, windows[i]).success) return i;
  return std::nullopt;
}

}  // namespace cmdim
