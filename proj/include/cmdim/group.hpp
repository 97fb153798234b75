#pragma once

#include "cmdim/rational.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmdim {

// Element of Z^d.
struct GroupElement {
  std::vector<std::int64_t> coords;

  GroupElement() = default;
  explicit GroupElement(std::vector<std::int64_t> c) : coords(std::move(c)) {}
  GroupElement(std::initializer_list<std::int64_t> c) : coords(c) {}

  std::size_t dim() const { return coords.size(); }
  std::int64_t operator[](std::size_t i) const { return coords[i]; }

  static GroupElement identity(std::size_t d) { return GroupElement(std::vector<std::int64_t>(d, 0)); }
  static GroupElement unit(std::size_t d, std::size_t axis, std::int64_t step = 1) {
    auto e = identity(d);
    e.coords[axis] = step;
    return e;
  }

  bool is_identity() const {
    return std::all_of(coords.begin(), coords.end(), [](auto v) { return v == 0; });
  }
  // word length with respect to the standard generators
  std::int64_t word_length() const {
    std::int64_t n = 0;
    for (auto v : coords) n += std::llabs(v);
    return n;
  }

  friend bool operator==(const GroupElement&, const GroupElement&) = default;
  friend auto operator<=>(const GroupElement& a, const GroupElement& b) { return a.coords <=> b.coords; }

  std::string str() const {
    if (coords.size() == 1) return std::to_string(coords[0]);
    std::string s = "(";
    for (std::size_t i = 0; i < coords.size(); ++i) s += (i ? "," : "") + std::to_string(coords[i]);
    return s + ")";
  }
};

inline void require_same_dim(const GroupElement& s, const GroupElement& t) {
  if (s.dim() != t.dim())
    throw std::invalid_argument("group elements of different dimension: " + s.str() + " vs " + t.str());
}

inline GroupElement multiply(const GroupElement& s, const GroupElement& t) {
  require_same_dim(s, t);
  GroupElement r = s;
  for (std::size_t i = 0; i < r.coords.size(); ++i) r.coords[i] += t.coords[i];
  return r;
}

inline GroupElement inverse(const GroupElement& s) {
  GroupElement r = s;
  for (auto& v : r.coords) v = -v;
  return r;
}

inline GroupElement operator+(const GroupElement& s, const GroupElement& t) { return multiply(s, t); }
inline GroupElement operator-(const GroupElement& s, const GroupElement& t) { return multiply(s, inverse(t)); }

// Finite subset of Z^d, kept sorted and deduplicated. An empty window is a
// legitimate value; operations that need F nonempty check for it.
class Window {
 public:
  Window() = default;
  explicit Window(std::size_t d) : d_(d) {}
  Window(std::size_t d, std::vector<GroupElement> elems) : d_(d), elems_(std::move(elems)) { normalize(); }
  explicit Window(std::vector<GroupElement> elems) : elems_(std::move(elems)) {
    if (elems_.empty()) throw std::invalid_argument("cannot infer dimension of an empty window");
    d_ = elems_.front().dim();
    normalize();
  }

  std::size_t dim() const { return d_; }
  std::size_t size() const { return elems_.size(); }
  bool empty() const { return elems_.empty(); }
  const std::vector<GroupElement>& elements() const { return elems_; }
  auto begin() const { return elems_.begin(); }
  auto end() const { return elems_.end(); }
  const GroupElement& operator[](std::size_t i) const { return elems_[i]; }

  bool contains(const GroupElement& g) const { return std::binary_search(elems_.begin(), elems_.end(), g); }
  bool contains(const Window& other) const {
    return std::includes(elems_.begin(), elems_.end(), other.elems_.begin(), other.elems_.end());
  }
  std::size_t index_of(const GroupElement& g) const {
    auto it = std::lower_bound(elems_.begin(), elems_.end(), g);
    if (it == elems_.end() || *it != g) throw std::out_of_range("element " + g.str() + " not in window");
    return static_cast<std::size_t>(it - elems_.begin());
  }

  friend bool operator==(const Window& a, const Window& b) { return a.d_ == b.d_ && a.elems_ == b.elems_; }

  // per-axis bounding box, inclusive
  std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> bounds() const {
    if (empty()) throw std::invalid_argument("bounds of an empty window");
    std::vector<std::int64_t> lo = elems_.front().coords, hi = lo;
    for (const auto& g : elems_)
      for (std::size_t i = 0; i < d_; ++i) {
        lo[i] = std::min(lo[i], g[i]);
        hi[i] = std::max(hi[i], g[i]);
      }
    return {lo, hi};
  }

  bool is_box() const {
    if (empty()) return false;
    auto [lo, hi] = bounds();
    std::size_t n = 1;
    for (std::size_t i = 0; i < d_; ++i) n *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
    return n == size();
  }

  std::string str() const {
    std::string s = "{";
    for (std::size_t i = 0; i < elems_.size(); ++i) s += (i ? "," : "") + elems_[i].str();
    return s + "}";
  }

 private:
  void normalize() {
    for (const auto& g : elems_)
      if (g.dim() != d_) throw std::invalid_argument("window element " + g.str() + " has wrong dimension");
    std::sort(elems_.begin(), elems_.end());
    elems_.erase(std::unique(elems_.begin(), elems_.end()), elems_.end());
  }

  std::size_t d_ = 1;
  std::vector<GroupElement> elems_;
};

// F s = {f s : f in F}
inline Window translate(const Window& F, const GroupElement& s) {
  if (s.dim() != F.dim()) throw std::invalid_argument("translate: dimension mismatch");
  std::vector<GroupElement> out;
  out.reserve(F.size());
  for (const auto& f : F) out.push_back(f + s);
  return Window(F.dim(), std::move(out));
}

inline Window unite(const Window& a, const Window& b) {
  std::vector<GroupElement> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return Window(a.dim(), std::move(out));
}

inline Window intersect(const Window& a, const Window& b) {
  std::vector<GroupElement> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return Window(a.dim(), std::move(out));
}

inline Window subtract(const Window& a, const Window& b) {
  std::vector<GroupElement> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return Window(a.dim(), std::move(out));
}

// K F = {k f}
inline Window product_set(const Window& K, const Window& F) {
  std::vector<GroupElement> out;
  for (const auto& k : K)
    for (const auto& f : F) out.push_back(k + f);
  return Window(F.dim(), std::move(out));
}

// box prod_i [lo_i, lo_i + side_i)
inline Window box_from(const std::vector<std::int64_t>& lo, const std::vector<std::int64_t>& side) {
  if (lo.size() != side.size() || lo.empty()) throw std::invalid_argument("box: bad corner/side vectors");
  std::vector<GroupElement> out;
  for (auto s : side)
    if (s < 0) throw std::invalid_argument("box: negative side");
  std::vector<std::int64_t> cur(lo.size(), 0);
  if (std::any_of(side.begin(), side.end(), [](auto s) { return s == 0; })) return Window(lo.size());
  while (true) {
    GroupElement g(lo);
    for (std::size_t i = 0; i < lo.size(); ++i) g.coords[i] += cur[i];
    out.push_back(g);
    std::size_t i = lo.size();
    while (i > 0) {
      --i;
      if (++cur[i] < side[i]) break;
      cur[i] = 0;
      if (i == 0) return Window(lo.size(), std::move(out));
    }
  }
}

// [0,n)^d
inline Window box(std::size_t d, std::int64_t n) {
  return box_from(std::vector<std::int64_t>(d, 0), std::vector<std::int64_t>(d, n));
}

// [a,b) in Z
inline Window interval(std::int64_t a, std::int64_t b) { return box_from({a}, {std::max<std::int64_t>(0, b - a)}); }

// word-length ball of radius R around the identity
inline Window ball(std::size_t d, std::int64_t R) {
  auto cube = box_from(std::vector<std::int64_t>(d, -R), std::vector<std::int64_t>(d, 2 * R + 1));
  std::vector<GroupElement> out;
  for (const auto& g : cube)
    if (g.word_length() <= R) out.push_back(g);
  return Window(d, std::move(out));
}

// 1 - |{t in F : K t subset of F}| / |F|
inline Rational invariance_defect(const Window& F, const Window& K) {
  if (F.empty()) throw std::invalid_argument("invariance_defect: F must be nonempty");
  std::int64_t good = 0;
  for (const auto& t : F) {
    bool inside = true;
    for (const auto& k : K)
      if (!F.contains(k + t)) {
        inside = false;
        break;
      }
    if (inside) ++good;
  }
  return Rational(1) - Rational(good, static_cast<std::int64_t>(F.size()));
}

struct InvariancePair {
  Window K;
  Rational delta;

  InvariancePair(Window k, Rational d) : K(std::move(k)), delta(d) {
    if (K.empty()) throw std::invalid_argument("InvariancePair: K must be nonempty");
    if (delta <= 0 || delta > 1) throw std::invalid_argument("InvariancePair: delta must lie in (0,1]");
  }

  bool admits(const Window& F) const { return !F.empty() && invariance_defect(F, K) <= delta; }
};

// (K', delta') >= (K, delta) in the net order
inline bool succeeds(const InvariancePair& later, const InvariancePair& earlier) {
  return later.K.contains(earlier.K) && later.delta <= earlier.delta;
}

// |sF symmetric-difference F| / |F|
inline Rational translation_defect(const Window& F, const GroupElement& s) {
  if (F.empty()) throw std::invalid_argument("translation_defect: empty window");
  auto sF = translate(F, s);
  auto sym = subtract(sF, F).size() + subtract(F, sF).size();
  return Rational(static_cast<std::int64_t>(sym), static_cast<std::int64_t>(F.size()));
}

struct FolnerSchedule {
  std::vector<Window> windows;
  bool tiling_flag = false;
  std::vector<GroupElement> generators;

  std::size_t size() const { return windows.size(); }
  const Window& operator[](std::size_t i) const { return windows[i]; }

  // indices n where some generator's defect fails to be non-increasing
  std::vector<std::size_t> decay_violations() const {
    std::vector<std::size_t> bad;
    for (std::size_t n = 1; n < windows.size(); ++n)
      for (const auto& s : generators)
        if (translation_defect(windows[n], s) > translation_defect(windows[n - 1], s)) {
          bad.push_back(n);
          break;
        }
    return bad;
  }
};

inline std::vector<GroupElement> standard_generators(std::size_t d) {
  std::vector<GroupElement> gens;
  for (std::size_t i = 0; i < d; ++i) gens.push_back(GroupElement::unit(d, i));
  return gens;
}

inline FolnerSchedule box_folner(std::size_t d, const std::vector<std::int64_t>& sizes) {
  if (d == 0) throw std::invalid_argument("box_folner: d must be >= 1");
  if (sizes.empty()) throw std::invalid_argument("box_folner: empty size list");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1) throw std::invalid_argument("box_folner: sizes must be >= 1");
    if (i && sizes[i] <= sizes[i - 1]) throw std::invalid_argument("box_folner: sizes must be strictly increasing");
  }
  FolnerSchedule sch;
  for (auto n : sizes) sch.windows.push_back(box(d, n));
  sch.tiling_flag = true;
  sch.generators = standard_generators(d);
  return sch;
}

enum class Verdict { yes, no, unknown };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::yes: return "true";
    case Verdict::no: return "false";
    default: return "unknown";
  }
}

// A periodic center set C = residues + period * Z^d.
struct TileCheck {
  Verdict verdict = Verdict::unknown;
  std::vector<std::int64_t> period;     // per axis
  std::vector<GroupElement> residues;   // centers modulo the period lattice
  std::int64_t searched_up_to = 0;

  bool is_center(const GroupElement& c) const {
    for (const auto& r : residues) {
      bool hit = true;
      for (std::size_t i = 0; i < c.dim() && hit; ++i) {
        auto diff = c[i] - r[i];
        hit = ((diff % period[i]) + period[i]) % period[i] == 0;
      }
      if (hit) return true;
    }
    return false;
  }
};

namespace detail {

inline std::size_t torus_index(const std::vector<std::int64_t>& x, std::int64_t p) {
  std::size_t idx = 0;
  for (auto v : x) idx = idx * static_cast<std::size_t>(p) + static_cast<std::size_t>(((v % p) + p) % p);
  return idx;
}

// exact cover of (Z/p)^d by translates of T; returns residues of centers
inline std::optional<std::vector<GroupElement>> torus_tiling(const Window& T, std::int64_t p) {
  const std::size_t d = T.dim();
  std::size_t cells = 1;
  for (std::size_t i = 0; i < d; ++i) cells *= static_cast<std::size_t>(p);
  if (cells % T.size() != 0) return std::nullopt;
  {
    std::set<std::size_t> seen;
    for (const auto& t : T)
      if (!seen.insert(torus_index(t.coords, p)).second) return std::nullopt;
  }
  std::vector<char> used(cells, 0);
  std::vector<GroupElement> centers;
  auto decode = [&](std::size_t idx) {
    std::vector<std::int64_t> x(d);
    for (std::size_t i = d; i-- > 0;) {
      x[i] = static_cast<std::int64_t>(idx % static_cast<std::size_t>(p));
      idx /= static_cast<std::size_t>(p);
    }
    return x;
  };
  std::function<bool(std::size_t)> fill = [&](std::size_t from) -> bool {
    while (from < cells && used[from]) ++from;
    if (from == cells) return true;
    auto x = decode(from);
    for (const auto& t : T) {
      std::vector<std::int64_t> c(d);
      for (std::size_t i = 0; i < d; ++i) c[i] = ((x[i] - t[i]) % p + p) % p;
      std::vector<std::size_t> hit;
      bool ok = true;
      for (const auto& u : T) {
        std::vector<std::int64_t> y(d);
        for (std::size_t i = 0; i < d; ++i) y[i] = c[i] + u[i];
        auto k = torus_index(y, p);
        if (used[k]) {
          ok = false;
          break;
        }
        hit.push_back(k);
      }
      if (!ok) continue;
      for (auto k : hit) used[k] = 1;
      centers.emplace_back(c);
      if (fill(from + 1)) return true;
      centers.pop_back();
      for (auto k : hit) used[k] = 0;
    }
    return false;
  };
  if (!fill(0)) return std::nullopt;
  std::sort(centers.begin(), centers.end());
  return centers;
}

}  // namespace detail

// Boxes are decided exactly. Other sets are searched over cubic period
// lattices p Z^d with p <= period_bound. In d = 1 every tiling by a finite set
// is periodic with period at most 2^diam(T), so the search is extended to that
// bound (when it is at most max_newman) and a failed search is a definite "no".
inline TileCheck is_tile(const Window& T, std::int64_t period_bound = 4, std::int64_t max_newman = 1 << 12) {
  if (T.empty()) throw std::invalid_argument("is_tile: T must be nonempty");
  TileCheck out;
  const std::size_t d = T.dim();
  auto [lo, hi] = T.bounds();
  if (T.is_box()) {
    out.verdict = Verdict::yes;
    for (std::size_t i = 0; i < d; ++i) out.period.push_back(hi[i] - lo[i] + 1);
    out.residues.push_back(GroupElement::identity(d));
    return out;
  }
  std::int64_t bound = period_bound;
  bool decisive = false;
  if (d == 1) {
    auto diam = hi[0] - lo[0];
    if (diam < 62 && (std::int64_t{1} << diam) <= max_newman) {
      bound = std::max(bound, std::int64_t{1} << diam);
      decisive = true;
    }
  }
  for (std::int64_t p = 1; p <= bound; ++p) {
    if (auto centers = detail::torus_tiling(T, p)) {
      out.verdict = Verdict::yes;
      out.period.assign(d, p);
      out.residues = *centers;
      out.searched_up_to = p;
      return out;
    }
  }
  out.searched_up_to = bound;
  out.verdict = decisive ? Verdict::no : Verdict::unknown;
  return out;
}

}  // namespace cmdim
