#pragma once

// Finite-stage values of the invariants along windows: D(U^F|Y), D(U^F),
// fiber and measure versions, Wdim_eps relative to Y, and packing numbers.

#include "cmdim/dimension.hpp"
#include "cmdim/nerve.hpp"
#include "cmdim/systems.hpp"

#include <boost/dynamic_bitset.hpp>

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

namespace cmdim {

// ---------------------------------------------------------------------------
// product covers: U^F on one fiber of a system without group part is the
// product over sites of one-dimensional covers

struct ProductCover {
  Factor site;                                         // the common site factor
  std::vector<std::vector<std::vector<char>>> sites;   // per site, the members as cell flags

  // a site with a full member imposes nothing; the rest are active
  static bool active(const std::vector<std::vector<char>>& ms) {
    for (auto& m : ms)
      if (std::all_of(m.begin(), m.end(), [](char c) { return c != 0; })) return false;
    return true;
  }
  std::size_t dimension() const {
    if (!site.continuous()) return 0;
    return static_cast<std::size_t>(std::count_if(sites.begin(), sites.end(), [](auto& ms) { return active(ms); }));
  }
  std::string signature() const {
    std::string s = site.str() + ":";
    for (auto& ms : sites) {
      s += "|";
      for (auto& m : ms) {
        for (char c : m) s += c ? '1' : '0';
        s += ",";
      }
    }
    return s;
  }
};

inline ProductCover product_cover_on_word(const WindowModel& wm, const Seed& seed, std::size_t w) {
  const auto& sys = *wm.sys;
  if (sys.cocycle) throw std::invalid_argument("product covers need a system without group part");
  if (!sys.site.present()) throw std::invalid_argument("product covers need a site coordinate");
  ProductCover pc;
  pc.site = sys.site.factor();
  pc.sites.resize(wm.E.size());
  for (std::size_t i = 0; i < wm.E.size(); ++i) {
    const auto& u = wm.E[i];
    auto& ms = pc.sites[i];
    if (!wm.F.contains(u)) {
      ms.push_back(std::vector<char>(pc.site.cells(), 1));
      continue;
    }
    for (auto& m : seed) {
      if (!m.symbols.empty() && std::find(m.symbols.begin(), m.symbols.end(), wm.symbol(w, u)) == m.symbols.end()) continue;
      ms.push_back(m.site ? sys.site.cells_in(*m.site) : std::vector<char>(pc.site.cells(), 1));
    }
    std::vector<std::vector<char>> keep;
    for (auto& m : ms)
      if (std::any_of(m.begin(), m.end(), [](char c) { return c != 0; })) keep.push_back(m);
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    ms = std::move(keep);
    std::vector<char> uni(pc.site.cells(), 0);
    for (auto& m : ms)
      for (int c = 0; c < pc.site.cells(); ++c) uni[c] = uni[c] || m[c];
    if (std::find(uni.begin(), uni.end(), 0) != uni.end()) throw invalid_cover("site members do not cover at " + u.str());
  }
  return pc;
}

// the same cover spelled out on the fiber complex (small cases, cross-checks)
inline Cover explicit_cover(const ProductCover& pc, const ComplexPtr& K) {
  std::vector<CellSet> acc{full_set(*K)};
  for (std::size_t i = 0; i < pc.sites.size(); ++i) {
    std::vector<CellSet> next;
    for (auto& a : acc)
      for (auto& m : pc.sites[i]) {
        std::vector<std::vector<char>> per;
        for (std::size_t j = 0; j < pc.sites.size(); ++j) per.emplace_back(pc.site.cells(), 1);
        per[i] = m;
        next.push_back(a & product_cells(*K, per));
      }
    acc = detail::dedupe(std::move(next));
  }
  return Cover(K, std::move(acc));
}

// sites with two positions that no member touches together
inline int product_lower_bound(const ProductCover& pc) {
  if (!pc.site.continuous()) return 0;
  const auto& f = pc.site;
  int n = 0;
  for (auto& ms : pc.sites) {
    bool found = false;
    for (int a = 0; a < f.vertices() && !found; ++a)
      for (int b = a + 1; b < f.vertices() && !found; ++b) {
        bool together = false;
        for (auto& m : ms) {
          // a member touches a vertex position if it contains the vertex or an edge at it
          auto touches = [&](int v) {
            std::vector<int> co;
            f.cofaces(f.vertex_cell(v), co);
            for (int c : co)
              if (m[c]) return true;
            return false;
          };
          together = together || (touches(a) && touches(b));
        }
        found = !together;
      }
    n += found;
  }
  return n;
}

// Largest number of distinct band labels on one top cell, over all residue
// patterns of its lower corner; only the multiset of residues matters.
inline int band_order(int n, int period) {
  static std::map<std::pair<int, int>, int> cache;
  static std::mutex guard;
  {
    std::lock_guard<std::mutex> lock(guard);
    if (auto it = cache.find({n, period}); it != cache.end()) return it->second;
  }
  if (n == 0) return 0;
  auto floordiv = [](int a, int m) { return a >= 0 ? a / m : -((-a + m - 1) / m); };
  int best = 0;
  std::vector<int> res(n, 0);
  std::vector<std::vector<int>> labels;
  while (true) {
    labels.clear();
    for (std::uint32_t e = 0; e < (1u << n); ++e) {
      std::vector<int> x(n);
      for (int j = 0; j < n; ++j) x[j] = res[j] + static_cast<int>(e >> j & 1);
      int level = 0;
      for (; level <= n; ++level) {
        bool hit = false;
        for (int j = 0; j < n; ++j) hit = hit || ((x[j] % period) == level % period);
        if (!hit) break;
      }
      std::vector<int> key{level};
      for (int j = 0; j < n; ++j) key.push_back(floordiv(x[j] - level, period));
      labels.push_back(std::move(key));
    }
    std::sort(labels.begin(), labels.end());
    best = std::max(best, static_cast<int>(std::unique(labels.begin(), labels.end()) - labels.begin()));
    // next non-decreasing residue sequence
    int j = n - 1;
    while (j >= 0 && res[j] == period - 1) --j;
    if (j < 0) break;
    ++res[j];
    for (int k = j + 1; k < n; ++k) res[k] = res[j];
  }
  std::lock_guard<std::mutex> lock(guard);
  return cache[{n, period}] = best - 1;
}

// every band class, projected to one site, lies in one member of that site
inline bool band_admissible(const ProductCover& pc, int period, int offset) {
  const auto& f = pc.site;
  const int n = static_cast<int>(pc.dimension());
  if (!f.continuous()) {
    for (auto& ms : pc.sites)
      for (int x = 0; x < f.cells(); ++x) {
        bool in = false;
        for (auto& m : ms) in = in || m[x];
        if (!in) return false;
      }
    return true;
  }
  if (period < n + 1) return false;
  const int r = f.size;
  const bool circ = f.kind == FactorKind::circle;
  if (circ && r % period != 0) return false;
  auto floordiv = [](int a, int m) { return a >= 0 ? a / m : -((-a + m - 1) / m); };
  for (auto& ms : pc.sites)
    for (int k = 0; k <= n; ++k) {
      int c = static_cast<int>(mod_floor(offset + k, period));
      int b_lo = circ ? 0 : floordiv(0 - c, period), b_hi = circ ? r / period - 1 : floordiv(r - c, period);
      for (int b = b_lo; b <= b_hi; ++b) {
        int lo = c + b * period + 1, hi = c + (b + 1) * period - 1;
        if (!circ) {
          lo = std::max(lo, 0);
          hi = std::min(hi, r);
        }
        if (lo > hi) continue;
        // open star of the vertex range: cells 2lo-1 .. 2hi+1
        std::vector<int> cells;
        for (int x = 2 * lo - 1; x <= 2 * hi + 1; ++x) {
          if (!circ && (x < 0 || x > 2 * r)) continue;
          cells.push_back(circ ? static_cast<int>(mod_floor(x, 2 * r)) : x);
        }
        bool fits = false;
        for (auto& m : ms) {
          bool all = true;
          for (int x : cells) all = all && m[x];
          fits = fits || all;
        }
        if (!fits) return false;
      }
    }
  return true;
}

struct BandWitness {
  int period = 0;
  int offset = 0;
  int ord = 0;
};

inline std::optional<BandWitness> product_band(const ProductCover& pc) {
  const int n = static_cast<int>(pc.dimension());
  if (!pc.site.continuous()) {
    if (band_admissible(pc, 1, 0)) return BandWitness{1, 0, 0};
    return std::nullopt;
  }
  const int maxp = pc.site.size + 1;
  for (int p = n + 1; p <= maxp; ++p)
    for (int off = 0; off < p; ++off)
      if (band_admissible(pc, p, off)) return BandWitness{p, off, band_order(n, p)};
  return std::nullopt;
}

// Exact search for a labeling of order <= target on a product cover when no
// band fits. Classes may be taken to be member tuples (one member per site):
// merging all vertices of one tuple keeps the class inside that product box.
// Each vertex picks a tuple among the members holding its star; every top cell
// may carry at most target+1 tuples. MRV order with forward checking.
inline std::optional<Labeling> product_tuple_labeling(const ProductCover& pc, const CellComplex& K, int target,
                                                      std::uint64_t budget, std::uint64_t* nodes_out = nullptr) {
  const auto& f = pc.site;
  if (!f.continuous() || target < 0) return std::nullopt;
  const bool circ = f.kind == FactorKind::circle;
  const int nv = f.vertices(), r = f.size;
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < pc.sites.size(); ++i)
    if (ProductCover::active(pc.sites[i])) active.push_back(i);
  const std::size_t n = active.size();
  // per active site and position: members holding the open star
  std::vector<std::vector<std::vector<int>>> fits(n, std::vector<std::vector<int>>(nv));
  for (std::size_t a = 0; a < n; ++a) {
    const auto& ms = pc.sites[active[a]];
    for (int x = 0; x < nv; ++x) {
      for (int m = 0; m < static_cast<int>(ms.size()); ++m) {
        bool all = true;
        for (int c = 2 * x - 1; c <= 2 * x + 1 && all; ++c) {
          if (!circ && (c < 0 || c > 2 * r)) continue;
          all = ms[m][circ ? static_cast<int>(mod_floor(c, 2 * r)) : c] != 0;
        }
        if (all) fits[a][x].push_back(m);
      }
      if (fits[a][x].empty()) return std::nullopt;
    }
  }
  std::size_t count = 1;
  for (std::size_t a = 0; a < n; ++a) {
    count *= static_cast<std::size_t>(nv);
    if (count > 50'000) return std::nullopt;
  }
  std::vector<std::size_t> radix(n);
  for (std::size_t a = 0; a < n; ++a) radix[a] = pc.sites[active[a]].size();
  auto position = [&](std::size_t v, std::size_t a) {
    for (std::size_t b = n; b-- > a + 1;) v /= static_cast<std::size_t>(nv);
    return static_cast<int>(v % static_cast<std::size_t>(nv));
  };
  // domains as tuple codes
  std::vector<std::vector<std::uint32_t>> dom(count);
  for (std::size_t v = 0; v < count; ++v) {
    std::vector<std::uint32_t> codes{0};
    for (std::size_t a = 0; a < n; ++a) {
      std::vector<std::uint32_t> next;
      for (auto c : codes)
        for (int m : fits[a][position(v, a)]) next.push_back(static_cast<std::uint32_t>(c * radix[a] + m));
      codes = std::move(next);
    }
    dom[v] = std::move(codes);
  }
  // top cells
  const int bases = circ ? r : r;
  std::vector<std::vector<std::size_t>> cells;
  std::vector<std::vector<std::size_t>> incident(count);
  {
    std::vector<int> base(n, 0);
    while (true) {
      std::vector<std::size_t> cube;
      for (std::uint32_t e = 0; e < (1u << n); ++e) {
        std::size_t v = 0;
        for (std::size_t a = 0; a < n; ++a) {
          int x = base[a] + static_cast<int>(e >> a & 1);
          if (circ) x %= r;
          v = v * static_cast<std::size_t>(nv) + static_cast<std::size_t>(x);
        }
        cube.push_back(v);
      }
      std::sort(cube.begin(), cube.end());
      cube.erase(std::unique(cube.begin(), cube.end()), cube.end());
      for (auto v : cube) incident[v].push_back(cells.size());
      cells.push_back(std::move(cube));
      std::size_t a = n;
      while (a > 0 && base[a - 1] == bases - 1) base[--a] = 0;
      if (a == 0) break;
      ++base[a - 1];
    }
  }
  constexpr std::uint32_t none = ~0u;
  std::vector<std::uint32_t> value(count, none);
  std::vector<std::vector<char>> live(count);
  std::vector<std::size_t> live_count(count);
  for (std::size_t v = 0; v < count; ++v) {
    live[v].assign(dom[v].size(), 1);
    live_count[v] = dom[v].size();
  }
  std::uint64_t nodes = 0;
  const std::size_t cap = static_cast<std::size_t>(target) + 1;
  std::vector<std::uint32_t> used;
  std::function<int(std::size_t)> search = [&](std::size_t assigned) -> int {
    if (++nodes > budget) return -1;
    if (assigned == count) return 1;
    std::size_t v = count;
    for (std::size_t u = 0; u < count; ++u)
      if (value[u] == none && (v == count || live_count[u] < live_count[v])) v = u;
    for (std::size_t k = 0; k < dom[v].size(); ++k) {
      if (!live[v][k]) continue;
      value[v] = dom[v][k];
      std::vector<std::pair<std::size_t, std::size_t>> removed;
      bool bad = false;
      for (auto ci : incident[v]) {
        used.clear();
        for (auto u : cells[ci])
          if (value[u] != none && std::find(used.begin(), used.end(), value[u]) == used.end()) used.push_back(value[u]);
        if (used.size() > cap) {
          bad = true;
          break;
        }
        if (used.size() < cap) continue;
        for (auto u : cells[ci]) {
          if (value[u] != none) continue;
          for (std::size_t j = 0; j < dom[u].size(); ++j)
            if (live[u][j] && std::find(used.begin(), used.end(), dom[u][j]) == used.end()) {
              live[u][j] = 0;
              --live_count[u];
              removed.emplace_back(u, j);
            }
          if (live_count[u] == 0) bad = true;
        }
        if (bad) break;
      }
      int res = bad ? 0 : search(assigned + 1);
      if (res == 1) return 1;
      for (auto& [u, j] : removed) {
        live[u][j] = 1;
        ++live_count[u];
      }
      value[v] = none;
      if (res == -1) return -1;
    }
    return 0;
  };
  int res = search(0);
  if (nodes_out) *nodes_out += nodes;
  if (res != 1) return std::nullopt;
  Labeling lab(K.num_vertices());
  std::map<std::uint32_t, std::size_t> names;
  for (std::size_t v = 0; v < K.num_vertices(); ++v) {
    auto co = K.vertex_coords(v);
    std::size_t idx = 0;
    for (std::size_t a = 0; a < n; ++a) idx = idx * static_cast<std::size_t>(nv) + static_cast<std::size_t>(co[active[a]]);
    auto it = names.emplace(value[idx], names.size()).first;
    lab[v] = it->second;
  }
  return lab;
}

// ---------------------------------------------------------------------------
// stage values of D

enum class DMode { conditional, unconditional };

struct CoverWitness {
  std::string kind;        // "labeling" on a fiber or the whole model, or "band"
  std::size_t word = 0;    // representative base word (labeling/band on one fiber)
  bool whole_model = false;
  Labeling labeling;
  BandWitness band;
  int ord = 0;
  std::vector<std::size_t> words;  // all words sharing this fiber cover
};

struct StageD {
  Window F;
  int lower = 0;
  int upper = 0;
  bool exact = false;
  std::string path;  // "explicit", "fibers", "product"
  std::vector<CoverWitness> witnesses;
  std::uint64_t nodes = 0;

  Rational normalized() const { return Rational(upper, static_cast<std::int64_t>(F.size())); }
};

struct StageOptions {
  SearchOptions search;
  std::size_t explicit_cell_limit = 400'000;  // whole-model path below this
  bool prefer_product = true;
};

namespace detail {

inline void merge_fiber(StageD& st, const DResult& r) {
  st.lower = std::max(st.lower, r.lower);
  st.upper = std::max(st.upper, r.upper);
  st.nodes += r.nodes;
}

// fiber-by-fiber values for one stage; identical fiber covers are solved once
inline StageD stage_by_fibers(const WindowModel& wm, const Seed& seed, const StageOptions& opt,
                              const std::vector<std::size_t>& words) {
  StageD st;
  st.F = wm.F;
  bool all_exact = true;
  const auto& sys = *wm.sys;
  bool product = opt.prefer_product && !sys.cocycle && sys.site.present();
  st.path = product ? "product" : "fibers";
  std::map<std::string, std::size_t> seen;  // signature -> witness index
  for (auto w : words) {
    if (product) {
      auto pc = product_cover_on_word(wm, seed, w);
      auto sig = pc.signature();
      if (auto it = seen.find(sig); it != seen.end()) {
        st.witnesses[it->second].words.push_back(w);
        continue;
      }
      int lb = product_lower_bound(pc);
      auto band = product_band(pc);
      if (band && band->ord == lb) {
        CoverWitness cw;
        cw.kind = "band";
        cw.word = w;
        cw.band = *band;
        cw.ord = band->ord;
        cw.words = {w};
        st.lower = std::max(st.lower, lb);
        st.upper = std::max(st.upper, band->ord);
        seen[sig] = st.witnesses.size();
        st.witnesses.push_back(std::move(cw));
        continue;
      }
      // tuple labelings; an exhausted target is a proof that D exceeds it
      if (wm.enumerated()) {
        int lo = lb, stop = band ? band->ord : static_cast<int>(pc.dimension()) + 1;
        std::optional<Labeling> found;
        bool gave_up = false;
        for (int t = lb; t < stop && !found && !gave_up; ++t) {
          std::uint64_t used = 0;
          found = product_tuple_labeling(pc, *wm.fiber, t, opt.search.node_budget, &used);
          st.nodes += used;
          if (found) {
            lo = t;
          } else if (used > opt.search.node_budget) {
            gave_up = true;
          } else {
            lo = t + 1;
          }
        }
        if (found || (band && !gave_up && lo == band->ord)) {
          CoverWitness cw;
          cw.word = w;
          cw.words = {w};
          if (found) {
            cw.kind = "labeling";
            cw.labeling = *found;
            cw.ord = labeling_ord(*wm.fiber, *found);
          } else {
            cw.kind = "band";
            cw.band = *band;
            cw.ord = band->ord;
          }
          st.lower = std::max(st.lower, lo);
          st.upper = std::max(st.upper, cw.ord);
          seen[sig] = st.witnesses.size();
          st.witnesses.push_back(std::move(cw));
          continue;
        }
        lb = std::max(lb, lo);
      }
      // fall back to the explicit fiber
      if (!wm.enumerated() || wm.fiber->num_cells() > opt.explicit_cell_limit)
        throw std::length_error("fiber too large for the explicit path and no matching band bound");
      auto U = reduced(explicit_cover(pc, wm.fiber));
      auto r = minimize_order(cover_problem(U, FiberPartition::to_point(wm.fiber)), std::max(lb, conditional_lower_bound(U, FiberPartition::to_point(wm.fiber))), opt.search);
      CoverWitness cw;
      cw.kind = "labeling";
      cw.word = w;
      cw.labeling = r.witness;
      cw.ord = r.upper;
      cw.words = {w};
      merge_fiber(st, r);
      all_exact = all_exact && r.exact;
      seen[sig] = st.witnesses.size();
      st.witnesses.push_back(std::move(cw));
      continue;
    }
    auto U = reduced(stage_cover_on_word(wm.require_enumerated(), seed, w));
    std::string sig;
    for (auto& m : U.members()) {
      std::string bits;
      boost::to_string(m, bits);
      sig += bits + ",";
    }
    if (auto it = seen.find(sig); it != seen.end()) {
      st.witnesses[it->second].words.push_back(w);
      continue;
    }
    auto r = D_unconditional(U, opt.search);
    if (!r.feasible) throw std::logic_error("fiber cover not refinable at this resolution");
    CoverWitness cw;
    cw.kind = "labeling";
    cw.word = w;
    cw.labeling = r.witness;
    cw.ord = r.upper;
    cw.words = {w};
    merge_fiber(st, r);
    all_exact = all_exact && r.exact;
    seen[sig] = st.witnesses.size();
    st.witnesses.push_back(std::move(cw));
  }
  st.exact = all_exact && st.lower == st.upper;
  return st;
}

}  // namespace detail

// D(U^F|Y): fibers of the symbolic factor are the base words
inline StageD stage_D_conditional(const SystemModel& sys, const Seed& seed, const Window& F, const StageOptions& opt = {}) {
  auto wm = sys.window(F);
  std::vector<std::size_t> words(wm->num_words());
  for (std::size_t i = 0; i < words.size(); ++i) words[i] = i;
  return detail::stage_by_fibers(*wm, seed, opt, words);
}

// D(U^F). On small models the whole join is searched with a single fiber; on
// large ones the base words are clopen pieces, so D is the maximum over them.
inline StageD stage_D_unconditional(const SystemModel& sys, const Seed& seed, const Window& F, const StageOptions& opt = {}) {
  auto wm = sys.window(F);
  if (wm->enumerated() && wm->complex->num_cells() <= opt.explicit_cell_limit && !(opt.prefer_product && !sys.cocycle && sys.site.present())) {
    auto U = reduced(stage_cover(*wm, seed));
    auto point = FiberPartition::to_point(wm->complex);
    auto r = minimize_order(cover_problem(U, point), conditional_lower_bound(U, point), opt.search);
    StageD st;
    st.F = F;
    st.path = "explicit";
    st.lower = r.lower;
    st.upper = r.upper;
    st.exact = r.exact;
    st.nodes = r.nodes;
    CoverWitness cw;
    cw.kind = "labeling";
    cw.whole_model = true;
    cw.labeling = r.witness;
    cw.ord = r.upper;
    st.witnesses.push_back(std::move(cw));
    return st;
  }
  auto st = stage_D_conditional(sys, seed, F, opt);
  st.path += "+clopen";
  return st;
}

// D(U^F|_{pi^{-1}(y)}) for one base word
inline StageD stage_fiber_D(const SystemModel& sys, const Seed& seed, const Window& F, std::size_t word, const StageOptions& opt = {}) {
  auto wm = sys.window(F);
  return detail::stage_by_fibers(*wm, seed, opt, {word});
}

inline StageD stage_fiber_mdim(const SystemModel& sys, const SymbolicBase::Point& y, const Seed& seed, const Window& F,
                               const StageOptions& opt = {}) {
  auto wm = sys.window(F);
  return detail::stage_by_fibers(*wm, seed, opt, {word_of_point(*wm, y)});
}

// ---------------------------------------------------------------------------
// witness audit: no search, only re-verification

struct AuditResult {
  bool ok = true;
  std::string failure;
};

inline AuditResult audit_stage(const SystemModel& sys, const Seed& seed, const StageD& st) {
  AuditResult a;
  auto fail = [&](const std::string& w) {
    if (a.ok) a.failure = w;
    a.ok = false;
  };
  auto wm = sys.window(st.F);
  int worst = 0;
  std::vector<char> covered(wm->num_words(), 0);
  for (auto& cw : st.witnesses) {
    if (cw.whole_model) {
      wm->require_enumerated();
      auto U = stage_cover(*wm, seed);
      auto W = labeling_cover(wm->complex, cw.labeling);
      auto o = check_refinement(U, FiberPartition::to_point(wm->complex), W);
      if (!o || *o != cw.ord) fail("whole-model witness does not refine U^F with the claimed order");
      worst = std::max(worst, cw.ord);
      std::fill(covered.begin(), covered.end(), 1);
      continue;
    }
    for (auto w : cw.words) {
      if (w >= covered.size()) {
        fail("witness names an unknown word");
        continue;
      }
      covered[w] = 1;
      if (cw.kind == "band") {
        auto pc = product_cover_on_word(*wm, seed, w);
        if (!band_admissible(pc, cw.band.period, cw.band.offset)) fail("band classes leave the members");
        if (band_order(static_cast<int>(pc.dimension()), cw.band.period) != cw.ord) fail("band order mismatch");
        if (product_lower_bound(pc) > cw.ord) fail("band order below the lower bound");
      } else {
        wm->require_enumerated();
        Cover U = (!sys.cocycle && sys.site.present()) ? explicit_cover(product_cover_on_word(*wm, seed, w), wm->fiber)
                                                       : stage_cover_on_word(*wm, seed, w);
        if (cw.labeling.size() != wm->fiber->num_vertices()) {
          fail("labeling has the wrong size");
          continue;
        }
        auto W = labeling_cover(wm->fiber, cw.labeling);
        auto o = check_refinement(U, FiberPartition::to_point(wm->fiber), W);
        if (!o || *o != cw.ord) fail("fiber witness does not refine U^F with the claimed order");
      }
    }
    worst = std::max(worst, cw.ord);
  }
  if (std::find(covered.begin(), covered.end(), 0) != covered.end()) fail("some fiber has no witness");
  if (worst != st.upper) fail("upper value differs from the witnesses");
  return a;
}

// ---------------------------------------------------------------------------
// measures and upper semicontinuity

struct MeasureStage {
  Window F;
  Rational value;                 // sum of nu(y) D(U^F | fiber(y))
  int max_fiber = 0;
  std::vector<int> fiber_values;  // per support point
  bool equivariant = true;        // D(U^{F+s}|y) = D(U^F|sy) on generators
  std::string equivariance_failure;
  bool exact = true;
};

inline MeasureStage stage_D_measure(const SystemModel& sys, const MeasureModel& nu, const Seed& seed, const Window& F,
                                    const StageOptions& opt = {}) {
  MeasureStage ms;
  ms.F = F;
  ms.value = Rational(0);
  for (std::size_t i = 0; i < nu.support.size(); ++i) {
    auto st = stage_fiber_mdim(sys, nu.support[i], seed, F, opt);
    ms.exact = ms.exact && st.exact;
    ms.fiber_values.push_back(st.upper);
    ms.max_fiber = std::max(ms.max_fiber, st.upper);
    ms.value += nu.weights[i] * Rational(st.upper);
    for (auto& g : standard_generators(sys.dim())) {
      auto shifted = stage_fiber_mdim(sys, nu.support[i], seed, translate(F, g), opt);
      auto moved = stage_fiber_mdim(sys, sys.base.shift(nu.support[i], g), seed, F, opt);
      if (shifted.upper != moved.upper) {
        ms.equivariant = false;
        ms.equivariance_failure = "D(U^{F+s}|y) != D(U^F|sy) at s=" + g.str() + " F=" + F.str();
      }
    }
  }
  return ms;
}

struct UscProbe {
  std::vector<int> values;  // D(U^F|fiber(z_k)) for k = 0, 1, ...
  int at_limit = 0;         // D(U^F|fiber(y))
  int stable_from = -1;     // first k after which every value is <= at_limit
  bool holds = false;
};

// z_k agrees with y on the ball of radius k and differs everywhere else
inline UscProbe usc_probe(const SystemModel& sys, const Seed& seed, const SymbolicBase::Point& y, const Window& F, int radius,
                          const StageOptions& opt = {}) {
  if (!sys.base.is_full() && sys.base.alphabet() > 1) {
    // a finite base is discrete: the only points converging to y are y itself
  }
  auto wm = sys.window(F);
  UscProbe p;
  const auto& base = sys.base;
  auto word_for = [&](int k) {
    std::vector<int> w;
    for (auto& t : wm->B) {
      int s = base.symbol(y, t);
      if (t.word_length() > k && base.is_full()) s = (s + 1) % base.alphabet();
      w.push_back(s);
    }
    return w;
  };
  p.at_limit = detail::stage_by_fibers(*wm, seed, opt, {word_of_point(*wm, y)}).upper;
  for (int k = 0; k <= radius; ++k) {
    auto it = wm->word_index.find(word_for(k));
    if (it == wm->word_index.end()) throw std::logic_error("probe word outside the base");
    p.values.push_back(detail::stage_by_fibers(*wm, seed, opt, {it->second}).upper);
  }
  for (int k = radius; k >= 0; --k) {
    if (p.values[k] > p.at_limit) break;
    p.stable_from = k;
  }
  p.holds = p.stable_from >= 0;
  return p;
}

// ---------------------------------------------------------------------------
// Wdim_eps(X|Y, rho_F): D of the eps-diameter cover on the window model

struct WdimStage {
  Window F, E;
  Rational eps;
  int lower = 0;
  int upper = 0;
  bool exact = false;
  Labeling witness;
  int nerve_dimension = -1;
  bool embedding_verified = false;
  std::vector<Rational> weights;

  Rational normalized() const { return Rational(upper, static_cast<std::int64_t>(F.size())); }
};

inline std::vector<Rational> factor_weights(const WindowModel& wm) {
  const auto& sys = *wm.sys;
  std::vector<Rational> w{Rational(0)};
  if (sys.site.present())
    for (auto& u : wm.E) w.push_back(sys.window_weight(u, wm.F));
  if (sys.cocycle)
    for (int j = 0; j < sys.cocycle->group_dim; ++j) w.push_back(Rational(1));
  return w;
}

// every class trace on every fiber has weighted diameter < eps (cell closures)
inline bool labeling_has_small_fibers(const ComplexPtr& K, const FiberPartition& pi, const std::vector<Rational>& weight,
                                      const Rational& eps, const Labeling& lab) {
  auto P = diameter_problem(K, pi, weight, eps);
  return labeling_admissible(P, lab);
}

inline WdimStage stage_Wdim_relative(const SystemModel& sys, const Rational& eps, const Window& F, const SearchOptions& opt = {},
                                     std::optional<Window> E_override = std::nullopt) {
  WdimStage ws;
  ws.F = F;
  ws.eps = eps;
  ws.E = E_override ? *E_override : sys.support_window(F, eps);
  auto wm = sys.window(F, ws.E);
  wm->require_enumerated();
  ws.weights = factor_weights(*wm);
  // a vertex star closure spans two grid steps; at full weight that must stay below eps
  Rational quantum(0);
  for (std::size_t j = 1; j < wm->complex->num_factors(); ++j)
    if (wm->complex->factor(j).continuous()) quantum = std::max(quantum, ws.weights[j] / Rational(wm->complex->factor(j).size));
  if (quantum * Rational(2) >= eps) throw std::invalid_argument("eps at or below two grid steps; refine the resolution");
  auto P = diameter_problem(wm->complex, *wm->pi, ws.weights, eps);
  auto r = minimize_order(P, diameter_lower_bound(*wm->complex, *wm->pi, ws.weights, eps), opt);
  if (!r.feasible) throw std::invalid_argument("no vertex star is eps-small at this resolution");
  ws.lower = r.lower;
  ws.upper = r.upper;
  ws.exact = r.exact;
  ws.witness = r.witness;
  auto W = labeling_cover(wm->complex, r.witness);
  if (auto g = nerve_map(W)) {
    ws.nerve_dimension = g->dimension;
    // the nerve map's point preimages sit in single classes: check their fiber diameters
    ws.embedding_verified = nerve_preimages_inside(W, *g) &&
                            labeling_has_small_fibers(wm->complex, *wm->pi, ws.weights, eps, r.witness) &&
                            g->dimension == ws.upper;
  }
  return ws;
}

// ---------------------------------------------------------------------------
// packing numbers

struct PackingResult {
  std::size_t size = 0;
  bool exact = false;
  std::vector<std::size_t> chosen;
  std::uint64_t nodes = 0;
};

// maximum set of pairwise separated points; sep[i] is the set of points at
// distance >= eps from i. Colour-bounded clique search in the separation graph.
inline PackingResult max_separated(const std::vector<boost::dynamic_bitset<>>& sep, std::uint64_t budget = 1u << 20) {
  const std::size_t n = sep.size();
  PackingResult best;
  // greedy start
  for (std::size_t v = 0; v < n; ++v) {
    bool ok = true;
    for (auto u : best.chosen) ok = ok && sep[v].test(u);
    if (ok) best.chosen.push_back(v);
  }
  best.size = best.chosen.size();
  std::vector<std::size_t> current;
  bool out_of_budget = false;
  std::function<void(boost::dynamic_bitset<>)> expand = [&](boost::dynamic_bitset<> P) {
    if (out_of_budget) return;
    if (++best.nodes > budget) {
      out_of_budget = true;
      return;
    }
    // greedy colouring: colour classes are sets of pairwise non-separated points
    std::vector<std::size_t> order, colour;
    std::vector<boost::dynamic_bitset<>> classes;
    for (auto v = P.find_first(); v != boost::dynamic_bitset<>::npos; v = P.find_next(v)) {
      std::size_t k = 0;
      while (k < classes.size() && (classes[k] & sep[v]).any()) ++k;
      if (k == classes.size()) classes.emplace_back(n);
      classes[k].set(v);
    }
    for (std::size_t k = 0; k < classes.size(); ++k)
      for (auto v = classes[k].find_first(); v != boost::dynamic_bitset<>::npos; v = classes[k].find_next(v)) {
        order.push_back(v);
        colour.push_back(k + 1);
      }
    for (std::size_t i = order.size(); i-- > 0;) {
      if (current.size() + colour[i] <= best.size) return;
      auto v = order[i];
      current.push_back(v);
      auto next = P & sep[v];
      if (next.none()) {
        if (current.size() > best.size) {
          best.size = current.size();
          best.chosen = current;
        }
      } else {
        expand(next);
      }
      current.pop_back();
      P.reset(v);
      if (out_of_budget) return;
    }
  };
  boost::dynamic_bitset<> all(n);
  all.set();
  if (n > 0) expand(all);
  best.exact = !out_of_budget;
  std::sort(best.chosen.begin(), best.chosen.end());
  return best;
}

// greedy cover by sets of diameter < eps (cliques of the closeness graph)
inline std::size_t greedy_mesh_cover(const std::vector<boost::dynamic_bitset<>>& sep) {
  const std::size_t n = sep.size();
  boost::dynamic_bitset<> left(n);
  left.set();
  std::size_t count = 0;
  while (left.any()) {
    auto v = left.find_first();
    boost::dynamic_bitset<> group(n);
    group.set(v);
    boost::dynamic_bitset<> cand = left & ~sep[v];
    cand.reset(v);
    for (auto u = cand.find_first(); u != boost::dynamic_bitset<>::npos; u = cand.find_next(u))
      if ((group & sep[u]).none()) group.set(u);
    left &= ~group;
    ++count;
  }
  return count;
}

struct NEpsStage {
  Window F, E;
  Rational eps;
  std::size_t N = 0;           // max over fibers
  bool exact = true;
  std::size_t fibers = 0;
  std::size_t points_per_fiber = 0;
  std::size_t mesh_cover = 0;  // greedy, max over fibers
  std::vector<std::size_t> per_fiber;
  std::vector<std::vector<std::size_t>> chosen;  // a maximal separated set per fiber (witness)
  Rational truncation_error;

  double log_N() const { return std::log(static_cast<double>(N)); }
  double normalized() const {
    double le = std::fabs(std::log(to_double(eps)));
    return log_N() / (le * static_cast<double>(F.size()));
  }
};

// separation graph on the grid points of one fiber; same values as rho_F on
// pairs inside the fiber, with the weights and cocycle values hoisted
inline std::vector<boost::dynamic_bitset<>> fiber_separation(const WindowModel& wm, std::size_t word, const Rational& eps,
                                                             Rational* error = nullptr) {
  const auto& sys = *wm.sys;
  const auto& K = *wm.fiber;
  const std::size_t nv = K.num_vertices();
  if (error && nv > 1) *error = std::max(*error, rho_F(wm, wm.vertex(word, 0), wm.vertex(word, 1)).error);
  std::vector<Rational> wt;
  if (sys.site.present())
    for (auto& u : wm.E) wt.push_back(sys.window_weight(u, wm.F));
  std::vector<std::pair<Cocycle::Elem, int>> moves;  // (sigma(s, y), sign) per s in F
  if (sys.cocycle)
    for (auto& s : wm.F) moves.emplace_back(wm.sigma(s, word), sys.cocycle->sign(s));
  std::vector<std::vector<int>> coords(nv);
  for (std::size_t v = 0; v < nv; ++v) coords[v] = K.vertex_coords(v);
  std::vector<boost::dynamic_bitset<>> sep(nv, boost::dynamic_bitset<>(nv));
  for (std::size_t a = 0; a < nv; ++a)
    for (std::size_t b = a + 1; b < nv; ++b) {
      const auto &x = coords[a], &y = coords[b];
      bool far = false;
      for (std::size_t i = 0; i < wt.size() && !far; ++i)
        far = x[i] != y[i] && wt[i] * sys.site.distance(x[i], y[i]) >= eps;
      if (sys.cocycle && !far) {
        const auto& c = *sys.cocycle;
        for (auto& [shift, sign] : moves) {
          for (int j = 0; j < c.group_dim && !far; ++j) {
            auto g = static_cast<std::size_t>(wm.g_offset + j);
            int xa = static_cast<int>(mod_floor(shift[j] + sign * x[g], c.resolution));
            int xb = static_cast<int>(mod_floor(shift[j] + sign * y[g], c.resolution));
            int d = std::abs(xa - xb);
            far = Rational(std::min(d, c.resolution - d), c.resolution) >= eps;
          }
          if (far) break;
        }
      }
      if (far) {
        sep[a].set(b);
        sep[b].set(a);
      }
    }
  return sep;
}

inline NEpsStage stage_N_eps_conditional(const SystemModel& sys, const Rational& eps, const Window& F,
                                         std::optional<Window> E_override = std::nullopt, std::uint64_t budget = 1u << 20) {
  NEpsStage ns;
  ns.F = F;
  ns.eps = eps;
  ns.E = E_override ? *E_override : sys.support_window(F, eps);
  auto wm = sys.window(F, ns.E);
  wm->require_enumerated();
  ns.fibers = wm->num_words();
  ns.points_per_fiber = wm->fiber->num_vertices();
  ns.truncation_error = Rational(0);
  std::map<std::string, std::pair<std::size_t, std::size_t>> seen;  // signature -> (N, first fiber)
  for (std::size_t w = 0; w < wm->num_words(); ++w) {
    auto sep = fiber_separation(*wm, w, eps, &ns.truncation_error);
    std::string sig;
    for (auto& s : sep) {
      std::string bits;
      boost::to_string(s, bits);
      sig += bits;
    }
    std::size_t N, C, slot;
    if (auto it = seen.find(sig); it != seen.end()) {
      std::tie(N, slot) = it->second;
      C = ns.mesh_cover;
      ns.chosen.push_back(ns.chosen[slot]);
    } else {
      auto pk = max_separated(sep, budget);
      ns.exact = ns.exact && pk.exact;
      N = pk.size;
      C = greedy_mesh_cover(sep);
      seen[sig] = {N, ns.chosen.size()};
      ns.chosen.push_back(pk.chosen);
    }
    ns.per_fiber.push_back(N);
    ns.N = std::max(ns.N, N);
    ns.mesh_cover = std::max(ns.mesh_cover, C);
  }
  return ns;
}

// the fiber group G alone: G_F = circle^k with rho_{G,F}(g, g') = max over s
// in F of d(s g, s g'); the automorphisms are evaluated, not assumed isometric
inline ComplexPtr group_complex(const Cocycle& c) {
  return make_complex(std::vector<Factor>(c.group_dim, Factor::circle(c.resolution)));
}

inline Rational group_rho(const Cocycle& c, const Window& F, const std::vector<int>& x, const std::vector<int>& y) {
  Rational d(0);
  for (auto& s : F) {
    auto gx = c.act(s, x), gy = c.act(s, y);
    for (int j = 0; j < c.group_dim; ++j) {
      int t = static_cast<int>(mod_floor(gx[j] - gy[j], c.resolution));
      d = std::max(d, Rational(std::min(t, c.resolution - t), c.resolution));
    }
  }
  return d;
}

inline std::vector<boost::dynamic_bitset<>> group_separation(const Cocycle& c, const Rational& eps, const Window& F) {
  auto K = group_complex(c);
  const std::size_t nv = K->num_vertices();
  std::vector<boost::dynamic_bitset<>> sep(nv, boost::dynamic_bitset<>(nv));
  for (std::size_t a = 0; a < nv; ++a)
    for (std::size_t b = a + 1; b < nv; ++b)
      if (group_rho(c, F, K->vertex_coords(a), K->vertex_coords(b)) >= eps) {
        sep[a].set(b);
        sep[b].set(a);
      }
  return sep;
}

inline NEpsStage stage_N_eps_group(const Cocycle& c, const Rational& eps, const Window& F) {
  NEpsStage ns;
  ns.F = F;
  ns.E = F;
  ns.eps = eps;
  ns.fibers = 1;
  auto sep = group_separation(c, eps, F);
  ns.points_per_fiber = sep.size();
  auto pk = max_separated(sep);
  ns.N = pk.size;
  ns.exact = pk.exact;
  ns.mesh_cover = greedy_mesh_cover(sep);
  ns.per_fiber = {ns.N};
  ns.chosen = {pk.chosen};
  ns.truncation_error = Rational(0);
  return ns;
}

// Wdim_eps(G, rho_{G,F}) on the grid of G; the diameter test uses unit
// weights, which is rho_{G,F} when the action is isometric (checked by callers)
inline WdimStage stage_Wdim_group(const Cocycle& c, const Rational& eps, const Window& F, const SearchOptions& opt = {}) {
  WdimStage ws;
  ws.F = F;
  ws.E = F;
  ws.eps = eps;
  auto K = group_complex(c);
  ws.weights.assign(K->num_factors(), Rational(1));
  if (Rational(1, c.resolution) >= eps) throw std::invalid_argument("eps at or below the grid quantum");
  auto pi = FiberPartition::to_point(K);
  auto P = diameter_problem(K, pi, ws.weights, eps);
  auto r = minimize_order(P, diameter_lower_bound(*K, pi, ws.weights, eps), opt);
  ws.lower = r.lower;
  ws.upper = r.upper;
  ws.exact = r.exact;
  ws.witness = r.witness;
  auto W = labeling_cover(K, r.witness);
  if (auto g = nerve_map(W)) {
    ws.nerve_dimension = g->dimension;
    ws.embedding_verified = nerve_preimages_inside(W, *g) && labeling_admissible(P, r.witness) && g->dimension == ws.upper;
  }
  return ws;
}

// ---------------------------------------------------------------------------
// traces and the Ornstein-Weiss summary

struct TraceRow {
  std::size_t window_size = 0;
  std::string raw;
  double normalized = 0;
  std::string normalized_exact;
  std::string witness_id;
  bool exact = false;
};

struct ConvergenceTrace {
  std::string quantity;
  std::vector<TraceRow> rows;
  std::vector<std::string> fekete_violations;  // only on exactly dividing box sizes
  double best_upper = 0;                       // min normalized value (subadditive quantities)
  double running_max = 0;                      // empirical limsup over computed stages

  void finish(bool subadditive) {
    fekete_violations.clear();
    if (rows.empty()) return;
    best_upper = rows[0].normalized;
    running_max = rows[0].normalized;
    for (auto& r : rows) {
      best_upper = std::min(best_upper, r.normalized);
      running_max = std::max(running_max, r.normalized);
    }
    if (!subadditive) return;
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows.size(); ++j) {
        auto n = rows[i].window_size, m = rows[j].window_size;
        if (m > n && m % n == 0 && rows[j].normalized > rows[i].normalized + 1e-12)
          fekete_violations.push_back("size " + std::to_string(m) + " above size " + std::to_string(n));
      }
  }

  std::string csv() const {
    std::ostringstream out;
    out << "window_size,raw,normalized,witness_id,exact\n";
    for (auto& r : rows) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.12g", r.normalized);
      out << r.window_size << "," << r.raw << "," << (r.normalized_exact.empty() ? std::string(buf) : r.normalized_exact) << ","
          << r.witness_id << "," << (r.exact ? "exact" : "bracket") << "\n";
    }
    return out.str();
  }

  std::string svg() const {
    const double W = 480, H = 300, pad = 40;
    double xmax = 1, ymax = 1e-9;
    for (auto& r : rows) {
      xmax = std::max(xmax, static_cast<double>(r.window_size));
      ymax = std::max(ymax, r.normalized);
    }
    ymax *= 1.1;
    auto X = [&](double x) { return pad + (W - 2 * pad) * x / xmax; };
    auto Y = [&](double y) { return H - pad - (H - 2 * pad) * y / ymax; };
    std::ostringstream out;
    char buf[128];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    out << "<text x=\"" << pad << "\" y=\"20\" font-size=\"12\">" << quantity << " (normalized vs |F|)</text>\n";
    std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", pad, H - pad, W - pad, H - pad);
    out << buf;
    std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", pad, pad, pad, H - pad);
    out << buf;
    out << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
    for (auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%.3f,%.3f ", X(static_cast<double>(r.window_size)), Y(r.normalized));
      out << buf;
    }
    out << "\"/>\n";
    for (auto& r : rows) {
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"3\" fill=\"steelblue\"/>\n", X(static_cast<double>(r.window_size)),
                    Y(r.normalized));
      out << buf;
    }
    out << "</svg>\n";
    return out.str();
  }
};

inline ConvergenceTrace trace_D(const std::string& name, const std::vector<StageD>& stages) {
  ConvergenceTrace t;
  t.quantity = name;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    auto& s = stages[i];
    TraceRow r;
    r.window_size = s.F.size();
    r.raw = s.exact ? std::to_string(s.upper) : "[" + std::to_string(s.lower) + "," + std::to_string(s.upper) + "]";
    r.normalized = to_double(s.normalized());
    r.normalized_exact = to_string(s.normalized());
    r.witness_id = name + "#" + std::to_string(i);
    r.exact = s.exact;
    t.rows.push_back(r);
  }
  t.finish(true);
  return t;
}

struct MetricTrace {
  std::vector<Rational> eps;
  std::vector<ConvergenceTrace> per_eps;  // normalized log N along the schedule
  std::vector<double> inner_limsup;       // running max per eps (empirical)
  std::vector<double> outer_liminf;       // running min over eps of inner values
  std::vector<ConvergenceTrace> mesh;     // same with the greedy mesh cover count
};

inline MetricTrace stage_mdimM_conditional(const SystemModel& sys, const std::vector<Rational>& eps_schedule, const FolnerSchedule& folner) {
  MetricTrace mt;
  for (std::size_t i = 0; i + 1 < eps_schedule.size(); ++i)
    if (!(eps_schedule[i + 1] < eps_schedule[i])) throw std::invalid_argument("eps schedule must decrease");
  double run_min = 0;
  for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
    const auto& e = eps_schedule[i];
    ConvergenceTrace t, m;
    t.quantity = "logN_eps=" + to_string(e);
    m.quantity = "logC_eps=" + to_string(e);
    for (std::size_t k = 0; k < folner.size(); ++k) {
      auto ns = stage_N_eps_conditional(sys, e, folner[k]);
      TraceRow r;
      r.window_size = ns.F.size();
      r.raw = std::to_string(ns.N);
      r.normalized = ns.normalized();
      r.witness_id = t.quantity + "#" + std::to_string(k);
      r.exact = ns.exact;
      t.rows.push_back(r);
      TraceRow c = r;
      c.raw = std::to_string(ns.mesh_cover);
      double le = std::fabs(std::log(to_double(e)));
      c.normalized = std::log(static_cast<double>(ns.mesh_cover)) / (le * static_cast<double>(ns.F.size()));
      c.exact = ns.mesh_cover == ns.N;
      m.rows.push_back(c);
    }
    t.finish(false);
    m.finish(false);
    mt.eps.push_back(e);
    mt.inner_limsup.push_back(t.running_max);
    run_min = i == 0 ? t.running_max : std::min(run_min, t.running_max);
    mt.outer_liminf.push_back(run_min);
    mt.per_eps.push_back(std::move(t));
    mt.mesh.push_back(std::move(m));
  }
  return mt;
}

struct OWSummary {
  double best_bound = 0;
  std::vector<double> normalized;
  bool invariant = true;     // (1) phi(F+s) = phi(F)
  bool monotone = true;      // (2) F1 in F2 => phi(F1) <= phi(F2)
  bool subadditive = true;   // (3) phi(F1 u F2) <= phi(F1) + phi(F2)
  std::string flagged;
  bool ow() const { return invariant && monotone && subadditive; }
};

// conditions spot-checked on all pairs of the sampled windows and their
// translates by the generators
inline OWSummary ow_limit(const std::function<Rational(const Window&)>& phi, const FolnerSchedule& schedule,
                          const std::vector<Window>& samples) {
  OWSummary s;
  for (auto& F : schedule.windows) s.normalized.push_back(to_double(phi(F) / Rational(static_cast<std::int64_t>(F.size()))));
  if (!s.normalized.empty()) s.best_bound = *std::min_element(s.normalized.begin(), s.normalized.end());
  auto flag = [&](const std::string& w) {
    if (s.flagged.empty()) s.flagged = w;
  };
  for (auto& A : samples) {
    for (auto& g : standard_generators(A.dim()))
      if (phi(translate(A, g)) != phi(A)) {
        s.invariant = false;
        flag("condition (1) fails at " + A.str());
      }
    for (auto& B : samples) {
      if (B.contains(A) && phi(A) > phi(B)) {
        s.monotone = false;
        flag("condition (2) fails: " + A.str() + " inside " + B.str());
      }
      if (phi(unite(A, B)) > phi(A) + phi(B)) {
        s.subadditive = false;
        flag("condition (3) fails at " + A.str() + " u " + B.str());
      }
    }
  }
  return s;
}

}  // namespace cmdim
