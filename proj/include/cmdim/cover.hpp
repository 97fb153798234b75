#pragma once

#include "cmdim/complex.hpp"
#include "cmdim/rational.hpp"

#include <boost/dynamic_bitset.hpp>

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmdim {

using CellSet = boost::dynamic_bitset<std::uint64_t>;

class invalid_cover : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline CellSet full_set(const CellComplex& K) { return CellSet(K.num_cells()).set(); }

// union of open stars
inline CellSet star_of(const CellComplex& K, const std::vector<std::size_t>& vertices) {
  CellSet s(K.num_cells());
  for (auto v : vertices)
    for (auto c : K.star(v)) s.set(c);
  return s;
}

// open in the face-poset topology: closed under passing to cofaces
inline bool is_open(const CellComplex& K, const CellSet& s) {
  for (auto c = s.find_first(); c != CellSet::npos; c = s.find_next(c))
    for (auto d : K.cofaces(c))
      if (!s.test(d)) return false;
  return true;
}

inline std::vector<std::size_t> vertices_in(const CellComplex& K, const CellSet& s) {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < K.num_vertices(); ++v)
    if (s.test(K.vertex_cell(v))) out.push_back(v);
  return out;
}

// Grid interior of the real interval from lo to hi on one factor (positions
// are v / r; on a circle the interval is read modulo 1).
inline std::vector<char> factor_interval(const Factor& f, const Rational& lo, bool lo_closed, const Rational& hi,
                                         bool hi_closed) {
  if (!f.continuous()) throw std::invalid_argument("factor_interval: factor is discrete");
  const Rational r(f.size);
  auto in_point = [&](const Rational& x) {
    for (int m = -1; m <= (f.kind == FactorKind::circle ? 1 : 0); ++m) {
      if (f.kind == FactorKind::interval && m != 0) continue;
      Rational y = x + Rational(m);
      bool above = y > lo || (lo_closed && y == lo);
      bool below = y < hi || (hi_closed && y == hi);
      if (above && below) return true;
    }
    return false;
  };
  auto in_edge = [&](const Rational& a, const Rational& b) {
    for (int m = -1; m <= (f.kind == FactorKind::circle ? 1 : 0); ++m) {
      if (f.kind == FactorKind::interval && m != 0) continue;
      if (lo <= a + Rational(m) && b + Rational(m) <= hi) return true;
    }
    return false;
  };
  std::vector<char> out(static_cast<std::size_t>(f.cells()), 0);
  for (int c = 0; c < f.cells(); ++c) {
    if (f.is_vertex(c)) out[c] = in_point(Rational(c / 2) / r);
    else out[c] = in_edge(Rational((c - 1) / 2) / r, Rational((c + 1) / 2) / r);
  }
  // keep the interior: drop vertices whose edges are not all inside
  std::vector<int> co;
  for (int c = 0; c < f.cells(); ++c) {
    if (!out[c] || !f.is_vertex(c)) continue;
    f.cofaces(c, co);
    for (int d : co)
      if (!out[d]) out[c] = 0;
  }
  return out;
}

// a real interval with open/closed ends; on circles read modulo 1
struct RealInterval {
  Rational lo{0};
  bool lo_closed = true;
  Rational hi{1};
  bool hi_closed = true;

  RealInterval shifted(const Rational& c) const { return {lo + c, lo_closed, hi + c, hi_closed}; }
  RealInterval negated() const { return {-hi, hi_closed, -lo, lo_closed}; }
  bool contains(const Rational& x) const {
    return (x > lo || (lo_closed && x == lo)) && (x < hi || (hi_closed && x == hi));
  }
  std::string str() const {
    return std::string(lo_closed ? "[" : "(") + to_string(lo) + "," + to_string(hi) + (hi_closed ? "]" : ")");
  }
  friend bool operator==(const RealInterval&, const RealInterval&) = default;
};

inline std::vector<char> factor_interval(const Factor& f, const RealInterval& I) {
  return factor_interval(f, I.lo, I.lo_closed, I.hi, I.hi_closed);
}

// Product set: cell belongs iff each coordinate lies in the given factor set
// (an empty per-factor vector means "everything").
inline CellSet product_cells(const CellComplex& K, const std::vector<std::vector<char>>& per_factor) {
  CellSet s(K.num_cells());
  for (std::size_t c = 0; c < K.num_cells(); ++c) {
    bool in = true;
    for (std::size_t i = 0; i < K.num_factors() && in; ++i)
      if (!per_factor[i].empty()) in = per_factor[i][K.cell_coord(c, i)];
    if (in) s.set(c);
  }
  return s;
}

class Cover {
 public:
  Cover(ComplexPtr K, std::vector<CellSet> members, bool validate = true) : K_(std::move(K)) {
    for (auto& m : members) {
      if (m.size() != K_->num_cells()) throw invalid_cover("cover member has wrong cell count");
      if (m.any()) members_.push_back(std::move(m));
    }
    if (validate) check();
  }

  static Cover from_vertex_sets(ComplexPtr K, const std::vector<std::vector<std::size_t>>& sets) {
    std::vector<CellSet> ms;
    for (auto& s : sets) ms.push_back(star_of(*K, s));
    return Cover(K, std::move(ms));
  }

  const CellComplex& complex() const { return *K_; }
  const ComplexPtr& complex_ptr() const { return K_; }
  std::size_t size() const { return members_.size(); }
  const CellSet& operator[](std::size_t i) const { return members_[i]; }
  const std::vector<CellSet>& members() const { return members_; }

  std::vector<std::vector<std::size_t>> member_vertices() const {
    std::vector<std::vector<std::size_t>> out;
    for (auto& m : members_) out.push_back(vertices_in(*K_, m));
    return out;
  }

  // bitmask over members for each cell
  std::vector<boost::dynamic_bitset<std::uint64_t>> cell_masks() const {
    std::vector<boost::dynamic_bitset<std::uint64_t>> masks(K_->num_cells(), boost::dynamic_bitset<std::uint64_t>(size()));
    for (std::size_t i = 0; i < members_.size(); ++i)
      for (auto c = members_[i].find_first(); c != CellSet::npos; c = members_[i].find_next(c)) masks[c].set(i);
    return masks;
  }

 private:
  void check() const {
    CellSet uni(K_->num_cells());
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (!is_open(*K_, members_[i])) throw invalid_cover("cover member " + std::to_string(i) + " is not open");
      uni |= members_[i];
    }
    if (!uni.all()) throw invalid_cover("members do not cover the complex");
  }

  ComplexPtr K_;
  std::vector<CellSet> members_;
};

inline int ord(const Cover& U) {
  const auto& K = U.complex();
  std::vector<int> count(K.num_cells(), 0);
  for (auto& m : U.members())
    for (auto c = m.find_first(); c != CellSet::npos; c = m.find_next(c)) ++count[c];
  int best = 0;
  for (auto v : count) best = std::max(best, v);
  return best - 1;
}

inline void require_same_complex(const Cover& U, const Cover& V) {
  if (U.complex_ptr() != V.complex_ptr() && !(U.complex() == V.complex()))
    throw std::invalid_argument("covers live on different complexes");
}

// pairwise intersections, empties pruned, duplicates merged
inline Cover join(const Cover& U, const Cover& V) {
  require_same_complex(U, V);
  std::vector<CellSet> ms;
  for (auto& a : U.members())
    for (auto& b : V.members()) {
      auto c = a & b;
      if (c.any()) ms.push_back(std::move(c));
    }
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
  return Cover(U.complex_ptr(), std::move(ms), false);
}

inline Cover join_all(const std::vector<Cover>& covers) {
  if (covers.empty()) throw std::invalid_argument("join_all: nothing to join");
  Cover acc = covers.front();
  for (std::size_t i = 1; i < covers.size(); ++i) acc = join(acc, covers[i]);
  return acc;
}

inline bool refines(const Cover& U, const Cover& V) {
  require_same_complex(U, V);
  for (auto& a : U.members()) {
    bool found = false;
    for (auto& b : V.members())
      if (a.is_subset_of(b)) {
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

inline Cover whole_cover(const ComplexPtr& K) { return Cover(K, {full_set(*K)}); }

// Cell-respecting map onto a base complex. Fibers are the preimages of base
// cells. Coordinate projections remember which factors they keep so that they
// can be rebuilt after subdivision.
class FiberPartition {
 public:
  enum class Kind { projection, point, identity, custom };

  static FiberPartition projection(ComplexPtr K, std::vector<std::size_t> keep) {
    std::vector<Factor> bf;
    for (auto i : keep) {
      if (i >= K->num_factors()) throw std::invalid_argument("projection: factor index out of range");
      bf.push_back(K->factor(i));
    }
    FiberPartition p;
    p.kind_ = Kind::projection;
    p.keep_ = keep;
    p.K_ = K;
    p.B_ = make_complex(bf.empty() ? std::vector<Factor>{Factor::discrete(1)} : bf);
    p.map_.resize(K->num_cells());
    std::vector<int> bc(std::max<std::size_t>(keep.size(), 1), 0);
    for (std::size_t c = 0; c < K->num_cells(); ++c) {
      for (std::size_t j = 0; j < keep.size(); ++j) bc[j] = K->cell_coord(c, keep[j]);
      p.map_[c] = static_cast<std::uint32_t>(p.B_->cell_index(bc));
    }
    return p;
  }

  static FiberPartition to_point(ComplexPtr K) {
    auto p = projection(std::move(K), {});
    p.kind_ = Kind::point;
    return p;
  }

  static FiberPartition identity(ComplexPtr K) {
    FiberPartition p;
    p.kind_ = Kind::identity;
    p.K_ = K;
    p.B_ = K;
    p.map_.resize(K->num_cells());
    for (std::size_t c = 0; c < K->num_cells(); ++c) p.map_[c] = static_cast<std::uint32_t>(c);
    return p;
  }

  static FiberPartition custom(ComplexPtr K, ComplexPtr B, std::vector<std::uint32_t> map) {
    if (map.size() != K->num_cells()) throw std::invalid_argument("fiber map has wrong size");
    FiberPartition p;
    p.kind_ = Kind::custom;
    p.K_ = std::move(K);
    p.B_ = std::move(B);
    p.map_ = std::move(map);
    p.validate();
    return p;
  }

  Kind kind() const { return kind_; }
  const std::vector<std::size_t>& kept_factors() const { return keep_; }
  const CellComplex& complex() const { return *K_; }
  const ComplexPtr& complex_ptr() const { return K_; }
  const CellComplex& base() const { return *B_; }
  const ComplexPtr& base_ptr() const { return B_; }
  std::size_t num_fibers() const { return B_->num_cells(); }
  std::uint32_t fiber_of(std::size_t cell) const { return map_[cell]; }
  const std::vector<std::uint32_t>& map() const { return map_; }

  CellSet fiber_cells(std::size_t b) const {
    CellSet s(K_->num_cells());
    for (std::size_t c = 0; c < map_.size(); ++c)
      if (map_[c] == b) s.set(c);
    return s;
  }

  // surjective and order preserving
  void validate() const {
    std::vector<char> hit(B_->num_cells(), 0);
    for (std::size_t c = 0; c < map_.size(); ++c) {
      if (map_[c] >= B_->num_cells()) throw std::invalid_argument("fiber map leaves the base");
      hit[map_[c]] = 1;
      for (auto d : K_->cofaces(c))
        if (!B_->face_le(map_[c], map_[d]))
          throw std::invalid_argument("fiber map is not cell-respecting at cell " + std::to_string(c));
    }
    for (auto h : hit)
      if (!h) throw std::invalid_argument("fiber map is not surjective");
  }

  // the same partition on K.refined(k)
  FiberPartition refined(int k) const {
    if (k == 1) return *this;
    auto fine = std::make_shared<const CellComplex>(K_->refined(k));
    switch (kind_) {
      case Kind::projection: return projection(fine, keep_);
      case Kind::point: return to_point(fine);
      case Kind::identity: return identity(fine);
      default: {
        std::vector<std::uint32_t> m(fine->num_cells());
        for (std::size_t c = 0; c < m.size(); ++c) m[c] = map_[K_->carrier(*fine, c, k)];
        FiberPartition p;
        p.kind_ = Kind::custom;
        p.K_ = fine;
        p.B_ = B_;
        p.map_ = std::move(m);
        return p;
      }
    }
  }

 private:
  Kind kind_ = Kind::custom;
  std::vector<std::size_t> keep_;
  ComplexPtr K_, B_;
  std::vector<std::uint32_t> map_;
};

inline Cover pullback(const Cover& V, const FiberPartition& pi) {
  if (!(V.complex() == pi.base())) throw std::invalid_argument("pullback: cover is not on the base complex");
  std::vector<CellSet> ms;
  for (auto& m : V.members()) {
    CellSet s(pi.complex().num_cells());
    for (std::size_t c = 0; c < s.size(); ++c)
      if (m.test(pi.fiber_of(c))) s.set(c);
    ms.push_back(std::move(s));
  }
  return Cover(pi.complex_ptr(), std::move(ms), false);
}

// the same cover on the k-fold subdivision
inline Cover refined(const Cover& U, int k, ComplexPtr fine = nullptr) {
  if (k == 1) return U;
  if (!fine) fine = std::make_shared<const CellComplex>(U.complex().refined(k));
  std::vector<std::size_t> carrier(fine->num_cells());
  for (std::size_t c = 0; c < carrier.size(); ++c) carrier[c] = U.complex().carrier(*fine, c, k);
  std::vector<CellSet> ms;
  for (auto& m : U.members()) {
    CellSet s(fine->num_cells());
    for (std::size_t c = 0; c < carrier.size(); ++c)
      if (m.test(carrier[c])) s.set(c);
    ms.push_back(std::move(s));
  }
  return Cover(fine, std::move(ms), false);
}

// Sub-complex over one base cell of a coordinate projection: the product of
// the remaining factors, together with the embedding of its cells.
struct FiberComplex {
  ComplexPtr complex;
  std::vector<std::size_t> embed;  // fiber cell -> ambient cell
};

inline FiberComplex fiber_complex(const FiberPartition& pi, std::size_t base_cell) {
  if (pi.kind() != FiberPartition::Kind::projection && pi.kind() != FiberPartition::Kind::point)
    throw std::invalid_argument("fiber_complex: needs a coordinate projection");
  const auto& K = pi.complex();
  if (base_cell >= pi.num_fibers()) throw std::out_of_range("fiber_complex: no such base cell");
  std::vector<std::size_t> rest;
  std::vector<char> kept(K.num_factors(), 0);
  for (auto i : pi.kept_factors()) kept[i] = 1;
  std::vector<Factor> fs;
  for (std::size_t i = 0; i < K.num_factors(); ++i)
    if (!kept[i]) {
      rest.push_back(i);
      fs.push_back(K.factor(i));
    }
  FiberComplex out;
  out.complex = make_complex(fs.empty() ? std::vector<Factor>{Factor::discrete(1)} : fs);
  auto bc = pi.base().cell_coords(base_cell);
  std::vector<int> full(K.num_factors(), 0);
  for (std::size_t j = 0; j < pi.kept_factors().size(); ++j) full[pi.kept_factors()[j]] = bc[j];
  out.embed.resize(out.complex->num_cells());
  for (std::size_t c = 0; c < out.embed.size(); ++c) {
    auto fc = out.complex->cell_coords(c);
    for (std::size_t j = 0; j < rest.size(); ++j) full[rest[j]] = fc[j];
    out.embed[c] = K.cell_index(full);
  }
  return out;
}

// U|_K as a cover of the fiber complex
inline Cover restrict_to_fiber(const Cover& U, const FiberComplex& fc) {
  std::vector<CellSet> ms;
  for (auto& m : U.members()) {
    CellSet s(fc.complex->num_cells());
    for (std::size_t c = 0; c < fc.embed.size(); ++c)
      if (m.test(fc.embed[c])) s.set(c);
    ms.push_back(std::move(s));
  }
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
  return Cover(fc.complex, std::move(ms), false);
}

}  // namespace cmdim
