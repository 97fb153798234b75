#pragma once

// Minimal-order refinements on cell complexes.
//
// A refinement is searched among covers whose members are unions of open vertex
// stars. Any such cover can be shrunk to the stars of a vertex partition
// without raising the order or breaking admissibility, so the search runs over
// vertex labelings. The order of a labeling is the largest number of distinct
// labels on one top cell, minus one.
//
// Admissibility is abstracted as masks: every vertex carries (key, bitmask)
// pairs and a class is admissible iff, for every key met by the class, the AND
// of its members' masks is nonzero. For covers the key is a fiber and the bits
// are U-members; for diameter constraints the key is (fiber, factor) and the
// bits are allowed grid windows.

#include "cmdim/cover.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace cmdim {

struct MaskEntry {
  std::uint32_t key;
  std::uint32_t offset;  // into MaskProblem::words
};

struct MaskProblem {
  ComplexPtr complex;
  std::size_t width = 1;  // 64-bit words per mask
  std::vector<std::vector<MaskEntry>> vertex_entries;  // sorted by key
  std::vector<std::uint64_t> words;

  bool mask_zero(std::uint32_t off) const {
    for (std::size_t w = 0; w < width; ++w)
      if (words[off + w]) return false;
    return true;
  }
  // vertices whose own constraint is already unsatisfiable
  std::vector<std::size_t> infeasible_vertices() const {
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < vertex_entries.size(); ++v)
      for (auto& e : vertex_entries[v])
        if (mask_zero(e.offset)) {
          out.push_back(v);
          break;
        }
    return out;
  }
};

namespace detail {

inline std::size_t words_for(std::size_t bits) { return std::max<std::size_t>(1, (bits + 63) / 64); }

// build entries from per-(vertex, key) AND-accumulation
class MaskBuilder {
 public:
  MaskBuilder(ComplexPtr K, std::size_t bits) {
    p_.complex = std::move(K);
    p_.width = words_for(bits);
    p_.vertex_entries.resize(p_.complex->num_vertices());
    bits_ = bits;
  }
  // AND the given mask into (v, key); the first call initializes
  void and_into(std::size_t v, std::uint32_t key, const std::uint64_t* mask) {
    auto& es = p_.vertex_entries[v];
    auto it = std::lower_bound(es.begin(), es.end(), key, [](const MaskEntry& e, std::uint32_t k) { return e.key < k; });
    if (it != es.end() && it->key == key) {
      for (std::size_t w = 0; w < p_.width; ++w) p_.words[it->offset + w] &= mask[w];
      return;
    }
    auto off = static_cast<std::uint32_t>(p_.words.size());
    p_.words.insert(p_.words.end(), mask, mask + p_.width);
    es.insert(it, MaskEntry{key, off});
  }
  std::size_t width() const { return p_.width; }
  MaskProblem finish() { return std::move(p_); }

 private:
  MaskProblem p_;
  std::size_t bits_ = 0;
};

}  // namespace detail

// Admissibility for D(U|Y): on every fiber the trace of a class must sit in one
// member of U.
inline MaskProblem cover_problem(const Cover& U, const FiberPartition& pi) {
  const auto& K = U.complex();
  if (!(K == pi.complex())) throw std::invalid_argument("cover and fiber partition live on different complexes");
  if (U.size() == 0) throw std::invalid_argument("empty cover");
  detail::MaskBuilder b(U.complex_ptr(), U.size());
  const std::size_t W = b.width();
  std::vector<std::uint64_t> cell_mask(K.num_cells() * W, 0);
  for (std::size_t i = 0; i < U.size(); ++i)
    for (auto c = U[i].find_first(); c != CellSet::npos; c = U[i].find_next(c)) cell_mask[c * W + i / 64] |= std::uint64_t{1} << (i % 64);
  for (std::size_t v = 0; v < K.num_vertices(); ++v)
    for (auto c : K.star(v)) b.and_into(v, pi.fiber_of(c), &cell_mask[c * W]);
  return b.finish();
}

// Admissibility for the ε-diameter cover: on every fiber the trace of a class
// has sup-metric diameter < eps, where factor j contributes weight[j] * |dx|.
// A trace fits iff each coordinate projection fits in one grid window (an
// interval, or an arc on circles) of the longest allowed length.
inline MaskProblem diameter_problem(const ComplexPtr& K, const FiberPartition& pi, const std::vector<Rational>& weight,
                                    const Rational& eps) {
  if (weight.size() != K->num_factors()) throw std::invalid_argument("diameter_problem: one weight per factor");
  if (eps <= Rational(0)) throw std::invalid_argument("diameter_problem: eps must be positive");
  const std::size_t nf = K->num_factors();
  struct Axis {
    bool constrained = false;
    int L = 0;        // longest window in grid steps
    int windows = 0;  // number of candidate windows
  };
  std::vector<Axis> ax(nf);
  std::size_t maxw = 1;
  for (std::size_t j = 0; j < nf; ++j) {
    const auto& f = K->factor(j);
    if (!f.continuous() || weight[j] <= Rational(0)) continue;
    Rational span = f.kind == FactorKind::interval ? Rational(1) : Rational(1, 2);
    if (weight[j] * span < eps) continue;
    // w * L / r < eps
    Rational lim = eps * Rational(f.size) / weight[j];
    int L = static_cast<int>(ceil_of(lim)) - 1;
    if (L < 0) L = 0;
    ax[j].constrained = true;
    ax[j].L = L;
    ax[j].windows = f.kind == FactorKind::interval ? f.size - L + 1 : f.size;
    if (ax[j].windows < 1) ax[j].constrained = false;
    maxw = std::max<std::size_t>(maxw, static_cast<std::size_t>(ax[j].windows));
  }
  if (maxw > 4096) throw std::invalid_argument("diameter_problem: grid too fine");
  detail::MaskBuilder b(K, maxw);
  const std::size_t W = b.width();
  std::vector<std::uint64_t> mask(W);
  // projection of one cell closure on factor j, as [lo, hi] in grid steps
  auto closure = [&](const Factor& f, int c) -> std::pair<int, int> {
    if (f.is_vertex(c)) return {c / 2, c / 2};
    return {(c - 1) / 2, (c - 1) / 2 + 1};
  };
  for (std::size_t v = 0; v < K->num_vertices(); ++v) {
    // accumulate per fiber the union of closure projections (as lifted ranges)
    std::map<std::uint32_t, std::vector<std::pair<int, int>>> ranges;
    auto vc = K->vertex_coords(v);
    for (auto c : K->star(v)) {
      auto fib = pi.fiber_of(c);
      auto& rs = ranges[fib];
      if (rs.empty()) {
        rs.resize(nf);
        for (std::size_t j = 0; j < nf; ++j) rs[j] = {vc[j], vc[j]};
      }
      for (std::size_t j = 0; j < nf; ++j) {
        if (!ax[j].constrained) continue;
        const auto& f = K->factor(j);
        auto [lo, hi] = closure(f, K->cell_coord(c, j));
        if (f.kind == FactorKind::circle) {
          // lift next to the vertex position
          if (lo - vc[j] > f.size / 2) lo -= f.size, hi -= f.size;
          if (vc[j] - lo > f.size / 2) lo += f.size, hi += f.size;
        }
        rs[j].first = std::min(rs[j].first, lo);
        rs[j].second = std::max(rs[j].second, hi);
      }
    }
    for (auto& [fib, rs] : ranges)
      for (std::size_t j = 0; j < nf; ++j) {
        if (!ax[j].constrained) continue;
        const auto& f = K->factor(j);
        std::fill(mask.begin(), mask.end(), 0);
        auto [lo, hi] = rs[j];
        for (int s = 0; s < ax[j].windows; ++s) {
          bool fits = false;
          if (f.kind == FactorKind::interval) fits = s <= lo && hi <= s + ax[j].L;
          else
            for (int m = -1; m <= 1 && !fits; ++m) fits = s <= lo + m * f.size && hi + m * f.size <= s + ax[j].L;
          if (fits) mask[s / 64] |= std::uint64_t{1} << (s % 64);
        }
        b.and_into(v, static_cast<std::uint32_t>(fib * nf + j), mask.data());
      }
  }
  return b.finish();
}

// ---------------------------------------------------------------------------
// labelings

using Labeling = std::vector<std::uint32_t>;  // vertex -> class

// relabel classes in order of first appearance
inline Labeling canonical(const Labeling& lab) {
  std::unordered_map<std::uint32_t, std::uint32_t> ren;
  Labeling out(lab.size());
  for (std::size_t i = 0; i < lab.size(); ++i) {
    auto [it, fresh] = ren.emplace(lab[i], static_cast<std::uint32_t>(ren.size()));
    out[i] = it->second;
  }
  return out;
}

inline std::uint32_t num_classes(const Labeling& lab) {
  std::uint32_t m = 0;
  for (auto l : lab) m = std::max(m, l + 1);
  return m;
}

inline int labeling_ord(const CellComplex& K, const Labeling& lab) {
  int best = 0;
  std::vector<std::uint32_t> seen;
  for (std::size_t c = 0; c < K.num_cells(); ++c) {
    if (!K.is_top(c)) continue;
    seen.clear();
    for (auto v : K.cell_vertices(c)) seen.push_back(lab[v]);
    std::sort(seen.begin(), seen.end());
    int d = static_cast<int>(std::unique(seen.begin(), seen.end()) - seen.begin());
    best = std::max(best, d);
  }
  return best - 1;
}

inline bool labeling_admissible(const MaskProblem& P, const Labeling& lab) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<std::uint64_t>> acc;
  for (std::size_t v = 0; v < lab.size(); ++v)
    for (auto& e : P.vertex_entries[v]) {
      auto [it, fresh] = acc.try_emplace({lab[v], e.key});
      if (fresh) it->second.assign(P.words.begin() + e.offset, P.words.begin() + e.offset + P.width);
      else
        for (std::size_t w = 0; w < P.width; ++w) it->second[w] &= P.words[e.offset + w];
    }
  for (auto& [k, m] : acc)
    if (std::all_of(m.begin(), m.end(), [](std::uint64_t x) { return x == 0; })) return false;
  return true;
}

// the refinement a labeling stands for
inline Cover labeling_cover(const ComplexPtr& K, const Labeling& lab) {
  std::vector<std::vector<std::size_t>> classes(num_classes(lab));
  for (std::size_t v = 0; v < lab.size(); ++v) classes[lab[v]].push_back(v);
  return Cover::from_vertex_sets(K, classes);
}

// vertex components of the top-cell adjacency graph
inline std::vector<std::vector<std::size_t>> vertex_components(const CellComplex& K) {
  std::vector<std::size_t> parent(K.num_vertices());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t c = 0; c < K.num_cells(); ++c) {
    if (!K.is_top(c)) continue;
    auto vs = K.cell_vertices(c);
    for (std::size_t i = 1; i < vs.size(); ++i) {
      auto a = find(vs[0]), b = find(vs[i]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> comps;
  for (std::size_t v = 0; v < K.num_vertices(); ++v) comps[find(v)].push_back(v);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [r, vs] : comps) out.push_back(std::move(vs));
  return out;
}

// split every class into its connected pieces
inline Labeling split_connected(const CellComplex& K, const Labeling& lab) {
  std::vector<std::size_t> parent(lab.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t c = 0; c < K.num_cells(); ++c) {
    if (!K.is_top(c)) continue;
    auto vs = K.cell_vertices(c);
    for (std::size_t i = 0; i < vs.size(); ++i)
      for (std::size_t j = i + 1; j < vs.size(); ++j)
        if (lab[vs[i]] == lab[vs[j]]) {
          auto a = find(vs[i]), b = find(vs[j]);
          if (a != b) parent[std::max(a, b)] = std::min(a, b);
        }
  }
  Labeling out(lab.size());
  for (std::size_t v = 0; v < lab.size(); ++v) out[v] = static_cast<std::uint32_t>(find(v));
  return canonical(out);
}

// every vertex on its own
inline Labeling singleton_labeling(const CellComplex& K) {
  Labeling lab(K.num_vertices());
  std::iota(lab.begin(), lab.end(), 0u);
  return lab;
}

// group vertices by the lowest admissible bit under every key they meet
inline Labeling mask_derived_labeling(const MaskProblem& P) {
  std::map<std::vector<std::uint64_t>, std::uint32_t> ids;
  Labeling lab(P.vertex_entries.size());
  std::vector<std::uint64_t> sig;
  for (std::size_t v = 0; v < lab.size(); ++v) {
    sig.clear();
    for (auto& e : P.vertex_entries[v]) {
      sig.push_back(e.key);
      std::uint64_t bit = ~std::uint64_t{0};
      for (std::size_t w = 0; w < P.width; ++w)
        if (P.words[e.offset + w]) {
          bit = w * 64 + static_cast<std::uint64_t>(__builtin_ctzll(P.words[e.offset + w]));
          break;
        }
      sig.push_back(bit);
    }
    auto [it, fresh] = ids.try_emplace(sig, static_cast<std::uint32_t>(ids.size()));
    lab[v] = it->second;
  }
  return split_connected(*P.complex, lab);
}

// Staggered band labeling. With n continuous coordinates and n+1 residues
// c_k = offset + k (mod period), a vertex gets the least level k such that none
// of its coordinates is congruent to c_k, and is then labeled by k and its block
// indices floor((x - c_k) / period). Top cells see at most n+1 labels. Circles
// need the period to divide their resolution.
inline std::optional<Labeling> band_labeling(const CellComplex& K, int period, int offset) {
  std::vector<std::size_t> cont;
  for (std::size_t j = 0; j < K.num_factors(); ++j)
    if (K.factor(j).continuous()) cont.push_back(j);
  const int n = static_cast<int>(cont.size());
  if (period < n + 1) return std::nullopt;
  for (auto j : cont)
    if (K.factor(j).kind == FactorKind::circle && K.factor(j).size % period != 0) return std::nullopt;
  auto mod = [](int a, int m) { return ((a % m) + m) % m; };
  auto floordiv = [](int a, int m) { return a >= 0 ? a / m : -((-a + m - 1) / m); };
  std::map<std::vector<int>, std::uint32_t> ids;
  Labeling lab(K.num_vertices());
  std::vector<int> key;
  for (std::size_t v = 0; v < K.num_vertices(); ++v) {
    auto x = K.vertex_coords(v);
    int level = 0;
    for (; level <= n; ++level) {
      int res = mod(offset + level, period);
      bool hit = false;
      for (auto j : cont) hit = hit || mod(x[j], period) == res;
      if (!hit) break;
    }
    key.assign(1, level);
    int res = mod(offset + level, period);
    for (std::size_t j = 0; j < K.num_factors(); ++j) {
      const auto& f = K.factor(j);
      if (!f.continuous()) key.push_back(x[j]);
      else if (f.kind == FactorKind::interval) key.push_back(floordiv(x[j] - res, period));
      else key.push_back(mod(floordiv(x[j] - res, period), f.size / period));
    }
    auto [it, fresh] = ids.try_emplace(key, static_cast<std::uint32_t>(ids.size()));
    lab[v] = it->second;
  }
  return canonical(lab);
}

struct UpperBound {
  Labeling labeling;
  int ord = 0;
  std::string source;
};

// best admissible labeling among the constructive candidates
inline std::optional<UpperBound> constructive_upper_bound(const MaskProblem& P) {
  const auto& K = *P.complex;
  if (!P.infeasible_vertices().empty()) return std::nullopt;
  std::optional<UpperBound> best;
  auto offer = [&](Labeling lab, const char* src) {
    if (!labeling_admissible(P, lab)) return;
    int o = labeling_ord(K, lab);
    if (!best || o < best->ord) best = UpperBound{std::move(lab), o, src};
  };
  offer(singleton_labeling(K), "singletons");
  offer(mask_derived_labeling(P), "mask");
  int maxr = 0;
  for (auto& f : K.factors())
    if (f.continuous()) maxr = std::max(maxr, f.size + 1);
  const int n = K.dimension();
  for (int p = n + 1; p <= maxr && (!best || best->ord > n); ++p)
    for (int off = 0; off < p && (!best || best->ord > n); ++off)
      if (auto lab = band_labeling(K, p, off)) offer(std::move(*lab), "band");
  return best;
}

// ---------------------------------------------------------------------------
// lower bounds

// Every free continuous coordinate j for which two positions a != b exist that
// no member touches together (inside one slice of the fixed coordinates) is a
// direction of a sub-box whose opposite faces no member joins. Lebesgue's
// covering theorem then forces order >= the number of such directions.
inline int subbox_lower_bound(const Cover& U, const std::vector<char>& fixed) {
  const auto& K = U.complex();
  const std::size_t nf = K.num_factors();
  std::vector<std::size_t> freec, fixedc;
  for (std::size_t j = 0; j < nf; ++j) {
    if (fixed[j] || !K.factor(j).continuous()) fixedc.push_back(j);
    else freec.push_back(j);
  }
  if (freec.empty()) return 0;
  // slice id of each cell whose fixed coordinates are vertices
  std::map<std::vector<int>, std::vector<std::size_t>> slices;
  for (std::size_t c = 0; c < K.num_cells(); ++c) {
    std::vector<int> s;
    bool ok = true;
    for (auto j : fixedc) {
      int cj = K.cell_coord(c, j);
      if (!K.factor(j).is_vertex(cj)) {
        ok = false;
        break;
      }
      s.push_back(cj);
    }
    if (ok) slices[s].push_back(c);
  }
  int best = 0;
  for (auto& [sid, cells] : slices) {
    int count = 0;
    for (auto j : freec) {
      const int positions = K.factor(j).vertices();
      // touched[m] = positions touched by member m
      std::vector<std::vector<char>> touched;
      for (auto& m : U.members()) {
        std::vector<char> t(positions, 0);
        bool any = false;
        for (auto c : cells) {
          int cj = K.cell_coord(c, j);
          if (K.factor(j).is_vertex(cj) && m.test(c)) t[cj / 2] = any = 1;
        }
        if (any) touched.push_back(std::move(t));
      }
      bool found = false;
      for (int a = 0; a < positions && !found; ++a)
        for (int b = a + 1; b < positions && !found; ++b) {
          bool joined = false;
          for (auto& t : touched)
            if (t[a] && t[b]) {
              joined = true;
              break;
            }
          found = !joined;
        }
      count += found;
    }
    best = std::max(best, count);
  }
  return best;
}

// classical face criterion on a cube: n if no member meets two opposite faces
inline int lebesgue_face_lower_bound(const Cover& U) {
  const auto& K = U.complex();
  for (auto& f : K.factors())
    if (f.kind != FactorKind::interval) throw std::invalid_argument("face criterion needs a cube complex");
  const int n = static_cast<int>(K.num_factors());
  for (int j = 0; j < n; ++j) {
    const int last = 2 * K.factor(j).size;
    for (auto& m : U.members()) {
      bool lo = false, hi = false;
      for (auto c = m.find_first(); c != CellSet::npos; c = m.find_next(c)) {
        int cj = K.cell_coord(c, j);
        lo = lo || cj == 0;
        hi = hi || cj == last;
      }
      if (lo && hi) return 0;
    }
  }
  return n;
}

// fibers over base vertices are sub-complexes; the restricted cover bounds D
inline int conditional_lower_bound(const Cover& U, const FiberPartition& pi) {
  std::vector<char> fixed(U.complex().num_factors(), 0);
  switch (pi.kind()) {
    case FiberPartition::Kind::identity: return 0;
    case FiberPartition::Kind::custom: return 0;
    case FiberPartition::Kind::point: return subbox_lower_bound(U, fixed);
    case FiberPartition::Kind::projection:
      for (auto j : pi.kept_factors()) fixed[j] = 1;
      return subbox_lower_bound(U, fixed);
  }
  return 0;
}

// diameter version: a free direction whose full span is at least eps apart
inline int diameter_lower_bound(const CellComplex& K, const FiberPartition& pi, const std::vector<Rational>& weight,
                                const Rational& eps) {
  if (pi.kind() == FiberPartition::Kind::identity || pi.kind() == FiberPartition::Kind::custom) return 0;
  std::vector<char> fixed(K.num_factors(), 0);
  for (auto j : pi.kept_factors()) fixed[j] = 1;
  int n = 0;
  for (std::size_t j = 0; j < K.num_factors(); ++j) {
    const auto& f = K.factor(j);
    if (fixed[j] || !f.continuous()) continue;
    Rational span = f.kind == FactorKind::interval ? Rational(1) : Rational(1, 2);
    n += weight[j] * span >= eps;
  }
  return n;
}

// ---------------------------------------------------------------------------
// exact search

struct SearchOptions {
  std::uint64_t node_budget = 4'000'000;
};

struct DResult {
  bool feasible = true;  // false: some vertex star fits nowhere at this resolution
  int lower = 0;
  int upper = 0;
  bool exact = false;
  Labeling witness;
  std::uint64_t nodes = 0;
  int resolution = 0;
  std::string upper_source;
  std::vector<std::size_t> blocking_vertices;

  int value() const { return upper; }
};

namespace detail {

// search inside one connected component
class ComponentSearch {
 public:
  ComponentSearch(const MaskProblem& P, const std::vector<std::size_t>& verts) : P_(P), verts_(verts) {
    const auto& K = *P.complex;
    const std::size_t n = verts.size();
    std::unordered_map<std::size_t, std::uint32_t> local;
    for (std::size_t i = 0; i < n; ++i) local[verts[i]] = static_cast<std::uint32_t>(i);
    prev_.resize(n);
    closing_.resize(n);
    touching_.resize(n);
    std::vector<std::uint32_t> lv;
    for (auto v : verts)
      for (auto c : K.star(v)) {
        if (!K.is_top(c)) continue;
        auto vs = K.cell_vertices(c);
        lv.clear();
        for (auto w : vs) lv.push_back(local.at(w));
        std::sort(lv.begin(), lv.end());
        lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
        if (lv.front() != local.at(v)) continue;  // count each top cell once
        closing_[lv.back()].push_back(lv);
        for (auto a : lv) {
          std::vector<std::uint32_t> pre;
          for (auto b : lv)
            if (b <= a) pre.push_back(b);
          if (pre.size() > 1) touching_[a].push_back(std::move(pre));
        }
        for (auto a : lv)
          for (auto b : lv)
            if (b < a) prev_[a].push_back(b);
      }
    for (auto& p : prev_) {
      std::sort(p.begin(), p.end());
      p.erase(std::unique(p.begin(), p.end()), p.end());
    }
    for (auto& c : closing_) {
      std::sort(c.begin(), c.end());
      c.erase(std::unique(c.begin(), c.end()), c.end());
    }
  }

  // fingerprint for deduplicating identical components
  std::vector<std::uint64_t> signature() const {
    std::vector<std::uint64_t> s;
    std::unordered_map<std::uint32_t, std::uint64_t> keys;
    s.push_back(verts_.size());
    for (std::size_t i = 0; i < verts_.size(); ++i) {
      s.push_back(prev_[i].size());
      s.insert(s.end(), prev_[i].begin(), prev_[i].end());
      s.push_back(closing_[i].size());
      for (auto& t : closing_[i]) {
        s.push_back(t.size());
        s.insert(s.end(), t.begin(), t.end());
      }
      const auto& es = P_.vertex_entries[verts_[i]];
      s.push_back(es.size());
      for (auto& e : es) {
        auto [it, fresh] = keys.try_emplace(e.key, keys.size());
        s.push_back(it->second);
        s.insert(s.end(), P_.words.begin() + e.offset, P_.words.begin() + e.offset + P_.width);
      }
    }
    return s;
  }

  const std::vector<std::size_t>& vertices() const { return verts_; }

  enum class Outcome { found, exhausted, budget };

  // Look for an admissible labeling with at most k+1 labels per top cell.
  //
  // Vertex i either opens a class or merges some of the classes next to it. On
  // the path that rebuilds a fixed target partition, two vertices of one top
  // cell carry the same label as soon as both are placed iff they share a target
  // class. Hence partially placed top cells already show final label counts,
  // and classes left apart next to each other may never merge later.
  Outcome run(int k, std::uint64_t budget, std::uint64_t& nodes, Labeling& out) {
    limit_ = k + 1;
    budget_ = budget;
    nodes_ = 0;
    parent_.clear();
    classes_.clear();
    apart_.clear();
    pool_.clear();
    node_of_.assign(verts_.size(), 0);
    aborted_ = false;
    bool ok = descend(0);
    nodes += nodes_;
    if (ok) {
      out.resize(verts_.size());
      for (std::size_t i = 0; i < verts_.size(); ++i) out[i] = find(node_of_[i]);
      out = canonical(out);
      return Outcome::found;
    }
    return aborted_ ? Outcome::budget : Outcome::exhausted;
  }

 private:
  using Entries = std::vector<MaskEntry>;

  std::uint32_t find(std::uint32_t x) const {
    while (parent_[x] != x) x = parent_[x];
    return x;
  }

  // AND-merge the entry lists; false if some key empties
  bool merge_into(Entries& acc, const Entries& add) {
    Entries out;
    out.reserve(acc.size() + add.size());
    std::size_t i = 0, j = 0;
    const auto W = P_.width;
    while (i < acc.size() || j < add.size()) {
      if (j == add.size() || (i < acc.size() && acc[i].key < add[j].key)) out.push_back(acc[i++]);
      else if (i == acc.size() || add[j].key < acc[i].key) out.push_back(add[j++]);
      else {
        auto off = static_cast<std::uint32_t>(pool_.size());
        bool nz = false;
        for (std::size_t w = 0; w < W; ++w) {
          std::uint64_t x = pool_[acc[i].offset + w] & pool_[add[j].offset + w];
          pool_.push_back(x);
          nz = nz || x;
        }
        if (!nz) return false;
        out.push_back(MaskEntry{acc[i].key, off});
        ++i, ++j;
      }
    }
    acc.swap(out);
    return true;
  }

  bool descend(std::size_t i) {
    if (i == verts_.size()) return true;
    if (++nodes_ > budget_) {
      aborted_ = true;
      return false;
    }
    Entries own;
    const auto W = P_.width;
    const auto pool_mark0 = pool_.size();
    for (auto& e : P_.vertex_entries[verts_[i]]) {
      own.push_back(MaskEntry{e.key, static_cast<std::uint32_t>(pool_.size())});
      pool_.insert(pool_.end(), P_.words.begin() + e.offset, P_.words.begin() + e.offset + W);
    }
    std::vector<std::uint32_t> labels;
    for (auto w : prev_[i]) labels.push_back(find(node_of_[w]));
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    const std::size_t L = labels.size();
    if (L > 20) throw std::length_error("component search: too many neighbouring labels");
    // pairs of neighbouring labels that were kept apart
    std::vector<std::uint32_t> apart_bits(L, 0);
    for (std::size_t a = 0; a < L; ++a)
      for (auto other : apart_[labels[a]]) {
        auto r = find(other);
        for (std::size_t b = 0; b < L; ++b)
          if (labels[b] == r) apart_bits[a] |= 1u << b;
      }
    std::vector<std::uint32_t> subsets;
    subsets.reserve(std::size_t{1} << L);
    for (std::uint32_t S = 0; S < (1u << L); ++S) {
      bool ok = true;
      for (std::size_t a = 0; a < L && ok; ++a)
        if (S >> a & 1) ok = (apart_bits[a] & S) == 0;
      if (ok) subsets.push_back(S);
    }
    // larger merges first
    std::stable_sort(subsets.begin(), subsets.end(),
                     [](std::uint32_t a, std::uint32_t b) { return __builtin_popcount(a) > __builtin_popcount(b); });
    for (auto S : subsets) {
      const auto pool_mark = pool_.size();
      Entries acc = own;
      bool ok = true;
      for (std::size_t b = 0; b < L && ok; ++b)
        if (S >> b & 1) ok = merge_into(acc, classes_[labels[b]]);
      if (ok) {
        auto id = static_cast<std::uint32_t>(parent_.size());
        parent_.push_back(id);
        classes_.push_back(std::move(acc));
        for (std::size_t b = 0; b < L; ++b)
          if (S >> b & 1) parent_[labels[b]] = id;
        node_of_[i] = id;
        // the new class inherits separations and is apart from unmerged neighbours
        std::vector<std::uint32_t> mine;
        for (std::size_t b = 0; b < L; ++b) {
          if (S >> b & 1) mine.insert(mine.end(), apart_[labels[b]].begin(), apart_[labels[b]].end());
          else {
            mine.push_back(labels[b]);
            apart_[labels[b]].push_back(id);
          }
        }
        apart_.push_back(std::move(mine));
        if (counts_ok(i) && descend(i + 1)) return true;
        apart_.pop_back();
        for (std::size_t b = 0; b < L; ++b)
          if (!(S >> b & 1)) apart_[labels[b]].pop_back();
        for (std::size_t b = 0; b < L; ++b)
          if (S >> b & 1) parent_[labels[b]] = labels[b];
        parent_.pop_back();
        classes_.pop_back();
      }
      pool_.resize(pool_mark);
      if (aborted_) break;
    }
    pool_.resize(pool_mark0);
    return false;
  }

  // distinct labels on the placed part of every top cell at vertex i
  bool counts_ok(std::size_t i) const {
    std::uint32_t buf[64];
    for (auto& t : touching_[i]) {
      if (static_cast<int>(t.size()) <= limit_) continue;
      int d = 0;
      for (auto w : t) {
        auto r = find(node_of_[w]);
        bool dup = false;
        for (int q = 0; q < d; ++q) dup = dup || buf[q] == r;
        if (!dup) {
          buf[d++] = r;
          if (d > limit_) return false;
        }
      }
    }
    return true;
  }

  const MaskProblem& P_;
  std::vector<std::size_t> verts_;
  std::vector<std::vector<std::uint32_t>> prev_;
  std::vector<std::vector<std::vector<std::uint32_t>>> closing_, touching_;
  std::vector<std::vector<std::uint32_t>> apart_;  // class node -> class nodes kept apart
  std::vector<std::uint32_t> parent_, node_of_;
  std::vector<Entries> classes_;
  std::vector<std::uint64_t> pool_;
  int limit_ = 1;
  std::uint64_t budget_ = 0, nodes_ = 0;
  bool aborted_ = false;
};

}  // namespace detail

// order of a labeling of one component (local labels indexed like verts)
inline int component_ord(const CellComplex& K, const std::vector<std::size_t>& verts, const Labeling& local) {
  std::unordered_map<std::size_t, std::uint32_t> lab;
  for (std::size_t i = 0; i < verts.size(); ++i) lab[verts[i]] = local[i];
  int best = 0;
  std::vector<std::uint32_t> seen;
  for (auto v : verts)
    for (auto c : K.star(v)) {
      if (!K.is_top(c)) continue;
      seen.clear();
      for (auto w : K.cell_vertices(c)) seen.push_back(lab.at(w));
      std::sort(seen.begin(), seen.end());
      best = std::max(best, static_cast<int>(std::unique(seen.begin(), seen.end()) - seen.begin()));
    }
  return best - 1;
}

// Minimal order of an admissible labeling, bracketed when the budget runs out.
// `lower_hint` is a proven lower bound; the search never goes below it.
inline DResult minimize_order(const MaskProblem& P, int lower_hint = 0, const SearchOptions& opt = {}) {
  const auto& K = *P.complex;
  DResult res;
  res.resolution = K.resolution();
  res.blocking_vertices = P.infeasible_vertices();
  if (!res.blocking_vertices.empty()) {
    res.feasible = false;
    return res;
  }
  res.lower = std::max(0, lower_hint);
  res.witness.assign(K.num_vertices(), 0);

  auto comps = vertex_components(K);
  auto start = constructive_upper_bound(P);
  if (!start) throw std::logic_error("no admissible labeling although every vertex is feasible");
  res.upper_source = start->source;
  std::map<std::vector<std::uint64_t>, std::pair<int, Labeling>> done;  // signature -> (ord, local labels)
  std::uint32_t label_base = 0;
  int upper = 0;

  for (auto& verts : comps) {
    detail::ComponentSearch cs(P, verts);
    auto sig = cs.signature();
    Labeling local;
    int comp_ord = 0;
    if (auto it = done.find(sig); it != done.end()) {
      comp_ord = it->second.first;
      local = it->second.second;
    } else {
      local.resize(verts.size());
      for (std::size_t i = 0; i < verts.size(); ++i) local[i] = start->labeling[verts[i]];
      local = canonical(local);
      comp_ord = component_ord(K, verts, local);
      bool comp_exact = false;
      for (int k = comp_ord - 1; k >= res.lower; --k) {
        Labeling found;
        std::uint64_t left = res.nodes >= opt.node_budget ? 0 : opt.node_budget - res.nodes;
        auto out = cs.run(k, left, res.nodes, found);
        if (out == detail::ComponentSearch::Outcome::found) {
          local = std::move(found);
          comp_ord = component_ord(K, verts, local);
          k = comp_ord;
          res.upper_source = "search";
        } else {
          comp_exact = out == detail::ComponentSearch::Outcome::exhausted;
          break;
        }
      }
      if (comp_exact) res.lower = std::max(res.lower, comp_ord);
      done.emplace(std::move(sig), std::make_pair(comp_ord, local));
    }
    for (std::size_t i = 0; i < verts.size(); ++i) res.witness[verts[i]] = label_base + local[i];
    label_base += num_classes(local);
    upper = std::max(upper, comp_ord);
  }
  res.upper = upper;
  if (res.lower > res.upper) throw std::logic_error("lower bound exceeds an admissible labeling");
  res.exact = res.lower == res.upper;
  res.witness = canonical(res.witness);
  return res;
}


// ---------------------------------------------------------------------------
// D(U|Y) on the model

inline DResult D_conditional(const Cover& U, const FiberPartition& pi, const SearchOptions& opt = {}) {
  auto P = cover_problem(U, pi);
  return minimize_order(P, conditional_lower_bound(U, pi), opt);
}

inline DResult D_unconditional(const Cover& U, const SearchOptions& opt = {}) {
  return D_conditional(U, FiberPartition::to_point(U.complex_ptr()), opt);
}

// the same question after subdividing every continuous factor k times
inline DResult D_conditional_refined(const Cover& U, const FiberPartition& pi, int k, const SearchOptions& opt = {}) {
  if (k < 1) throw std::invalid_argument("subdivision factor must be >= 1");
  auto fine_pi = pi.refined(k);
  auto fine_U = refined(U, k, fine_pi.complex_ptr());
  return D_conditional(fine_U, fine_pi, opt);
}

// Independent check of a claimed refinement: W covers, every fiber trace of
// every member sits in a member of U. Returns ord(W) or nullopt.
inline std::optional<int> check_refinement(const Cover& U, const FiberPartition& pi, const Cover& W) {
  if (!(W.complex() == U.complex()) || !(U.complex() == pi.complex())) return std::nullopt;
  const auto& K = U.complex();
  CellSet uni(K.num_cells());
  for (auto& m : W.members()) {
    if (!is_open(K, m)) return std::nullopt;
    uni |= m;
  }
  if (!uni.all()) return std::nullopt;
  std::map<std::uint32_t, CellSet> traces;
  for (auto& m : W.members()) {
    traces.clear();
    for (auto c = m.find_first(); c != CellSet::npos; c = m.find_next(c)) {
      auto [it, fresh] = traces.try_emplace(pi.fiber_of(c), K.num_cells());
      it->second.set(c);
    }
    for (auto& [f, t] : traces) {
      bool inside = false;
      for (auto& u : U.members())
        if (t.is_subset_of(u)) {
          inside = true;
          break;
        }
      if (!inside) return std::nullopt;
    }
  }
  return ord(W);
}

}  // namespace cmdim
