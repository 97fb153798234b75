#pragma once

#include "cmdim/rational.hpp"

#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmdim {

enum class FactorKind { interval, circle, discrete };

inline const char* to_string(FactorKind k) {
  switch (k) {
    case FactorKind::interval: return "interval";
    case FactorKind::circle: return "circle";
    default: return "discrete";
  }
}

// One factor of a product cell complex.
//   interval(r): cells 0..2r, even cell 2v is vertex v at position v/r, odd cell is an open edge
//   circle(r):   cells 0..2r-1, the same with indices taken mod 2r
//   discrete(m): m isolated points
struct Factor {
  FactorKind kind = FactorKind::interval;
  int size = 1;  // r for interval/circle, m for discrete

  static Factor interval(int r) { return make(FactorKind::interval, r); }
  static Factor circle(int r) { return make(FactorKind::circle, r); }
  static Factor discrete(int m) { return make(FactorKind::discrete, m); }

  bool continuous() const { return kind != FactorKind::discrete; }
  int cells() const { return kind == FactorKind::interval ? 2 * size + 1 : kind == FactorKind::circle ? 2 * size : size; }
  int vertices() const { return kind == FactorKind::interval ? size + 1 : size; }
  bool is_vertex(int c) const { return kind == FactorKind::discrete || c % 2 == 0; }
  bool is_top(int c) const { return kind == FactorKind::discrete || c % 2 == 1; }
  int vertex_cell(int v) const { return kind == FactorKind::discrete ? v : 2 * v; }
  int cell_vertex(int c) const { return kind == FactorKind::discrete ? c : c / 2; }

  // vertices of a cell (one or two)
  void cell_vertices(int c, std::vector<int>& out) const {
    out.clear();
    if (is_vertex(c)) {
      out.push_back(cell_vertex(c));
      return;
    }
    out.push_back((c - 1) / 2);
    out.push_back(kind == FactorKind::circle ? ((c + 1) / 2) % size : (c + 1) / 2);
  }

  // the cell and every cell having it as a face
  void cofaces(int c, std::vector<int>& out) const {
    out.clear();
    out.push_back(c);
    if (!continuous() || !is_vertex(c)) return;
    if (kind == FactorKind::interval) {
      if (c > 0) out.push_back(c - 1);
      if (c < 2 * size) out.push_back(c + 1);
    } else {
      out.push_back((c + 2 * size - 1) % (2 * size));
      out.push_back((c + 1) % (2 * size));
    }
  }

  bool face_le(int a, int b) const {
    if (a == b) return true;
    if (!continuous() || !is_vertex(a) || is_vertex(b)) return false;
    std::vector<int> vs;
    cell_vertices(b, vs);
    return vs[0] == a / 2 || vs[1] == a / 2;
  }

  // subdivision by k: the coarse cell carrying a fine cell
  int carrier(int fine, int k) const {
    if (!continuous() || k == 1) return fine;
    if (fine % 2 == 0) {
      int j = fine / 2;
      int coarse = j % k == 0 ? 2 * (j / k) : 2 * (j / k) + 1;
      return kind == FactorKind::circle ? coarse % (2 * size) : coarse;
    }
    int j = (fine - 1) / 2;
    return 2 * (j / k) + 1;
  }

  Factor refined(int k) const { return continuous() ? make(kind, size * k) : *this; }

  friend bool operator==(const Factor&, const Factor&) = default;

  std::string str() const { return std::string(to_string(kind)) + "(" + std::to_string(size) + ")"; }

 private:
  static Factor make(FactorKind k, int n) {
    if (n < 1) throw std::invalid_argument("factor size must be >= 1");
    if (k == FactorKind::circle && n < 3) throw std::invalid_argument("circle factor needs at least 3 edges");
    Factor f;
    f.kind = k;
    f.size = n;
    return f;
  }
};

// Product of factors. Cells and vertices are numbered in mixed radix with the
// first factor most significant.
class CellComplex {
 public:
  explicit CellComplex(std::vector<Factor> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) factors_.push_back(Factor::discrete(1));
    std::size_t nc = 1, nv = 1;
    cell_stride_.resize(factors_.size());
    vertex_stride_.resize(factors_.size());
    for (std::size_t i = factors_.size(); i-- > 0;) {
      cell_stride_[i] = nc;
      vertex_stride_[i] = nv;
      nc *= static_cast<std::size_t>(factors_[i].cells());
      nv *= static_cast<std::size_t>(factors_[i].vertices());
      if (nc > (std::size_t{1} << 32)) throw std::length_error("cell complex too large");
    }
    num_cells_ = nc;
    num_vertices_ = nv;
  }

  const std::vector<Factor>& factors() const { return factors_; }
  const Factor& factor(std::size_t i) const { return factors_[i]; }
  std::size_t num_factors() const { return factors_.size(); }
  std::size_t num_cells() const { return num_cells_; }
  std::size_t num_vertices() const { return num_vertices_; }
  int dimension() const {
    int n = 0;
    for (auto& f : factors_) n += f.continuous();
    return n;
  }

  std::vector<int> cell_coords(std::size_t cell) const {
    std::vector<int> c(factors_.size());
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      c[i] = static_cast<int>(cell / cell_stride_[i]);
      cell %= cell_stride_[i];
    }
    return c;
  }
  int cell_coord(std::size_t cell, std::size_t i) const {
    return static_cast<int>((cell / cell_stride_[i]) % static_cast<std::size_t>(factors_[i].cells()));
  }
  std::size_t cell_index(const std::vector<int>& c) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < factors_.size(); ++i) idx += static_cast<std::size_t>(c[i]) * cell_stride_[i];
    return idx;
  }

  std::vector<int> vertex_coords(std::size_t v) const {
    std::vector<int> c(factors_.size());
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      c[i] = static_cast<int>(v / vertex_stride_[i]);
      v %= vertex_stride_[i];
    }
    return c;
  }
  std::size_t vertex_index(const std::vector<int>& c) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < factors_.size(); ++i) idx += static_cast<std::size_t>(c[i]) * vertex_stride_[i];
    return idx;
  }
  std::size_t vertex_cell(std::size_t v) const {
    auto c = vertex_coords(v);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = factors_[i].vertex_cell(c[i]);
    return cell_index(c);
  }
  bool is_vertex_cell(std::size_t cell) const {
    for (std::size_t i = 0; i < factors_.size(); ++i)
      if (!factors_[i].is_vertex(cell_coord(cell, i))) return false;
    return true;
  }
  std::size_t cell_to_vertex(std::size_t cell) const {
    auto c = cell_coords(cell);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = factors_[i].cell_vertex(c[i]);
    return vertex_index(c);
  }
  bool is_top(std::size_t cell) const {
    for (std::size_t i = 0; i < factors_.size(); ++i)
      if (!factors_[i].is_top(cell_coord(cell, i))) return false;
    return true;
  }

  // all cells whose closure contains the cell (including itself)
  std::vector<std::size_t> cofaces(std::size_t cell) const {
    return expand(cell_coords(cell), [](const Factor& f, int c, std::vector<int>& out) { f.cofaces(c, out); });
  }
  // vertices of a cell
  std::vector<std::size_t> cell_vertices(std::size_t cell) const {
    auto cells = expand(cell_coords(cell), [](const Factor& f, int c, std::vector<int>& out) {
      f.cell_vertices(c, out);
      for (auto& v : out) v = f.vertex_cell(v);
    });
    for (auto& c : cells) c = cell_to_vertex(c);
    return cells;
  }
  // open star of a vertex
  std::vector<std::size_t> star(std::size_t v) const { return cofaces(vertex_cell(v)); }

  bool face_le(std::size_t a, std::size_t b) const {
    for (std::size_t i = 0; i < factors_.size(); ++i)
      if (!factors_[i].face_le(cell_coord(a, i), cell_coord(b, i))) return false;
    return true;
  }

  std::vector<std::size_t> top_cells() const {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < num_cells_; ++c)
      if (is_top(c)) out.push_back(c);
    return out;
  }

  CellComplex refined(int k) const {
    std::vector<Factor> fs;
    for (auto& f : factors_) fs.push_back(f.refined(k));
    return CellComplex(fs);
  }
  // coarse cell carrying a cell of refined(k)
  std::size_t carrier(const CellComplex& fine, std::size_t cell, int k) const {
    auto c = fine.cell_coords(cell);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = factors_[i].carrier(c[i], k);
    return cell_index(c);
  }

  // common resolution of the continuous factors, 0 if none or mixed
  int resolution() const {
    int r = 0;
    for (auto& f : factors_)
      if (f.continuous()) {
        if (r && r != f.size) return 0;
        r = f.size;
      }
    return r;
  }

  friend bool operator==(const CellComplex& a, const CellComplex& b) { return a.factors_ == b.factors_; }

  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < factors_.size(); ++i) s += (i ? " x " : "") + factors_[i].str();
    return s;
  }

 private:
  template <class Fn>
  std::vector<std::size_t> expand(const std::vector<int>& coords, Fn per_factor) const {
    std::vector<std::size_t> out{0};
    std::vector<int> opts;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      per_factor(factors_[i], coords[i], opts);
      std::vector<std::size_t> next;
      next.reserve(out.size() * opts.size());
      for (auto base : out)
        for (int o : opts) next.push_back(base + static_cast<std::size_t>(o) * cell_stride_[i]);
      out.swap(next);
    }
    return out;
  }

  std::vector<Factor> factors_;
  std::vector<std::size_t> cell_stride_, vertex_stride_;
  std::size_t num_cells_ = 0, num_vertices_ = 0;
};

using ComplexPtr = std::shared_ptr<const CellComplex>;

inline ComplexPtr make_complex(std::vector<Factor> factors) {
  return std::make_shared<const CellComplex>(std::move(factors));
}

}  // namespace cmdim
