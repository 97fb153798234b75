#pragma once

// Window models of shift-type systems over Z^d: a symbolic base Y, optional
// per-site coordinates Z and an optional circle group G glued in by a cocycle.
// X = Y x Z x G with s(y, z, g) = (sy, sz, sigma(s, y) + alpha^s(g)).

#include "cmdim/cover.hpp"
#include "cmdim/group.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cmdim {

inline Rational rational_pow(const Rational& base, std::int64_t k) {
  Rational out(1);
  for (std::int64_t i = 0; i < k; ++i) out *= base;
  return out;
}

inline std::int64_t mod_floor(std::int64_t a, std::int64_t m) { return ((a % m) + m) % m; }

// ---------------------------------------------------------------------------
// per-site coordinate alphabet

enum class SiteKind { none, interval, circle, net };

struct SiteAlphabet {
  SiteKind kind = SiteKind::none;
  int size = 0;  // grid resolution, or number of net points

  static SiteAlphabet none() { return {}; }
  static SiteAlphabet interval(int q) { return make(SiteKind::interval, q, 1); }
  static SiteAlphabet circle(int q) { return make(SiteKind::circle, q, 3); }
  static SiteAlphabet net(int m) { return make(SiteKind::net, m, 1); }

  bool present() const { return kind != SiteKind::none; }
  Factor factor() const {
    switch (kind) {
      case SiteKind::interval: return Factor::interval(size);
      case SiteKind::circle: return Factor::circle(size);
      case SiteKind::net: return Factor::discrete(size);
      case SiteKind::none: break;
    }
    throw std::logic_error("no site coordinate");
  }
  int points() const { return kind == SiteKind::interval ? size + 1 : size; }
  Rational position(int v) const {
    if (kind == SiteKind::net) return size == 1 ? Rational(0) : Rational(v, size - 1);
    return Rational(v, size);
  }
  Rational distance(int a, int b) const {
    Rational d = position(a) - position(b);
    if (d < Rational(0)) d = -d;
    if (kind == SiteKind::circle && d > Rational(1, 2)) d = Rational(1) - d;
    return d;
  }
  // largest distance between two points
  Rational diameter() const {
    if (kind == SiteKind::circle) return Rational(1, 2);
    if (kind == SiteKind::net && size == 1) return Rational(0);
    return present() ? Rational(1) : Rational(0);
  }
  // cells of the site factor whose points satisfy the condition
  std::vector<char> cells_in(const RealInterval& I) const {
    if (kind == SiteKind::net) {
      std::vector<char> out(size, 0);
      for (int v = 0; v < size; ++v) out[v] = I.contains(position(v));
      return out;
    }
    return factor_interval(factor(), I);
  }
  std::string str() const {
    switch (kind) {
      case SiteKind::interval: return "interval(" + std::to_string(size) + ")";
      case SiteKind::circle: return "circle(" + std::to_string(size) + ")";
      case SiteKind::net: return "net(" + std::to_string(size) + ")";
      case SiteKind::none: break;
    }
    return "none";
  }
  friend bool operator==(const SiteAlphabet&, const SiteAlphabet&) = default;

 private:
  static SiteAlphabet make(SiteKind k, int n, int least) {
    if (n < least) throw std::invalid_argument("site alphabet too small");
    return {k, n};
  }
};

// ---------------------------------------------------------------------------
// symbolic base

struct PeriodicPattern {
  std::vector<std::int64_t> period;  // per axis
  std::vector<int> symbols;          // row-major over the period box, last axis fastest

  int at(const GroupElement& t) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < period.size(); ++i) idx = idx * period[i] + mod_floor(t[i], period[i]);
    return symbols[idx];
  }
  std::size_t cells() const {
    std::size_t n = 1;
    for (auto p : period) n *= static_cast<std::size_t>(p);
    return n;
  }
};

class SymbolicBase {
 public:
  struct Point {
    std::size_t pattern = 0;
    GroupElement offset;  // y_t = pattern[t + offset]
  };

  SymbolicBase() = default;  // one point

  static SymbolicBase full(std::size_t d, int alphabet) {
    if (d < 1 || alphabet < 1) throw std::invalid_argument("full shift needs d >= 1 and a nonempty alphabet");
    SymbolicBase b;
    b.d_ = d;
    b.alphabet_ = alphabet;
    b.full_ = true;
    return b;
  }
  static SymbolicBase periodic(std::size_t d, int alphabet, std::vector<PeriodicPattern> patterns) {
    if (patterns.empty()) throw std::invalid_argument("periodic base needs a pattern");
    for (auto& p : patterns) {
      if (p.period.size() != d) throw std::invalid_argument("pattern period has wrong dimension");
      for (auto q : p.period)
        if (q < 1) throw std::invalid_argument("pattern period must be positive");
      if (p.symbols.size() != p.cells()) throw std::invalid_argument("pattern size does not match its period");
      for (int s : p.symbols)
        if (s < 0 || s >= alphabet) throw std::invalid_argument("pattern symbol outside the alphabet");
    }
    SymbolicBase b;
    b.d_ = d;
    b.alphabet_ = alphabet;
    b.full_ = false;
    b.patterns_ = std::move(patterns);
    return b;
  }

  // periodic points of a full shift that experiments refer to by index
  SymbolicBase with_points(std::vector<PeriodicPattern> extra) const {
    auto b = periodic(d_, alphabet_, std::move(extra));
    b.full_ = full_;
    if (!full_) {
      b.patterns_.insert(b.patterns_.begin(), patterns_.begin(), patterns_.end());
    }
    return b;
  }

  std::size_t dim() const { return d_; }
  int alphabet() const { return alphabet_; }
  bool is_full() const { return full_; }
  bool trivial() const { return full_ && alphabet_ == 1; }
  const std::vector<PeriodicPattern>& patterns() const { return patterns_; }

  // restrictions of configurations to E, in E's element order, sorted
  std::vector<std::vector<int>> words(const Window& E) const {
    std::vector<std::vector<int>> out;
    if (full_) {
      double total = std::pow(static_cast<double>(alphabet_), static_cast<double>(E.size()));
      if (total > static_cast<double>(1 << 22)) throw std::length_error("too many base words on " + E.str());
      std::vector<int> w(E.size(), 0);
      while (true) {
        out.push_back(w);
        std::size_t i = w.size();
        while (i > 0 && w[i - 1] == alphabet_ - 1) w[--i] = 0;
        if (i == 0) break;
        ++w[i - 1];
      }
      return out;
    }
    std::set<std::vector<int>> seen;
    for (auto& p : points()) seen.insert(word_of(p, E));
    return {seen.begin(), seen.end()};
  }

  int symbol(const Point& y, const GroupElement& t) const { return patterns_.at(y.pattern).at(t + y.offset); }

  std::vector<int> word_of(const Point& y, const Window& E) const {
    std::vector<int> w;
    for (auto& t : E) w.push_back(symbol(y, t));
    return w;
  }

  // (s y)_t = y_{t+s}
  Point shift(const Point& y, const GroupElement& s) const {
    const auto& per = patterns_.at(y.pattern).period;
    std::vector<std::int64_t> o(d_);
    for (std::size_t i = 0; i < d_; ++i) o[i] = mod_floor(y.offset[i] + s[i], per[i]);
    return {y.pattern, GroupElement(o)};
  }

  bool same(const Point& a, const Point& b) const {
    const auto& pa = patterns_.at(a.pattern).period;
    const auto& pb = patterns_.at(b.pattern).period;
    std::vector<std::int64_t> side(d_);
    for (std::size_t i = 0; i < d_; ++i) side[i] = pa[i] * pb[i];
    for (auto& t : box_from(std::vector<std::int64_t>(d_, 0), side))
      if (symbol(a, t) != symbol(b, t)) return false;
    return true;
  }

  // distinct periodic points, pattern by pattern, offsets in lexicographic order
  std::vector<Point> points() const {
    if (full_) throw std::logic_error("a full shift has no finite point list");
    std::vector<Point> out;
    for (std::size_t k = 0; k < patterns_.size(); ++k)
      for (auto& o : box_from(std::vector<std::int64_t>(d_, 0), patterns_[k].period)) {
        Point p{k, o};
        bool dup = false;
        for (auto& q : out) dup = dup || same(p, q);
        if (!dup) out.push_back(p);
      }
    return out;
  }

  std::size_t index_of(const Point& y) const {
    auto ps = points();
    for (std::size_t i = 0; i < ps.size(); ++i)
      if (same(ps[i], y)) return i;
    throw std::out_of_range("point not in the base");
  }

 private:
  std::size_t d_ = 1;
  int alphabet_ = 1;
  bool full_ = true;
  std::vector<PeriodicPattern> patterns_;
};

// ---------------------------------------------------------------------------
// cocycle into G = (R/Z)^k on the grid (1/resolution) Z^k

struct Cocycle {
  using Elem = std::vector<int>;

  int group_dim = 1;
  int resolution = 0;
  std::vector<int> action;                    // per generator: +1 trivial, -1 negation
  std::vector<std::vector<Elem>> table;       // [generator][symbol] -> sigma(e_i, y) when y_0 = symbol

  static Cocycle trivial(std::size_t d, int alphabet, int group_dim, int resolution) {
    Cocycle c;
    c.group_dim = group_dim;
    c.resolution = resolution;
    c.action.assign(d, 1);
    c.table.assign(d, std::vector<Elem>(alphabet, Elem(group_dim, 0)));
    c.validate_shape(d, alphabet);
    return c;
  }

  void validate_shape(std::size_t d, int alphabet) const {
    if (group_dim < 1 || resolution < 3) throw std::invalid_argument("cocycle group needs k >= 1 circles at resolution >= 3");
    if (action.size() != d || table.size() != d) throw std::invalid_argument("cocycle data needs one entry per generator");
    for (int a : action)
      if (a != 1 && a != -1) throw std::invalid_argument("group automorphism must be trivial (+1) or negation (-1)");
    for (auto& row : table) {
      if (row.size() != static_cast<std::size_t>(alphabet)) throw std::invalid_argument("cocycle table needs one entry per symbol");
      for (auto& e : row)
        if (e.size() != static_cast<std::size_t>(group_dim)) throw std::invalid_argument("cocycle entry has wrong length");
    }
  }

  Elem zero() const { return Elem(group_dim, 0); }
  Elem add(const Elem& a, const Elem& b) const {
    Elem o(group_dim);
    for (int j = 0; j < group_dim; ++j) o[j] = static_cast<int>(mod_floor(a[j] + b[j], resolution));
    return o;
  }
  Elem neg(const Elem& a) const {
    Elem o(group_dim);
    for (int j = 0; j < group_dim; ++j) o[j] = static_cast<int>(mod_floor(-a[j], resolution));
    return o;
  }
  int sign(const GroupElement& s) const {
    int sg = 1;
    for (std::size_t i = 0; i < action.size(); ++i)
      if (action[i] == -1 && (s[i] % 2 != 0)) sg = -sg;
    return sg;
  }
  Elem act(const GroupElement& s, const Elem& g) const { return sign(s) == 1 ? g : neg(g); }

  // sigma(s, y) along the staircase path 0 -> s (axis 0 first); `read` lists the sites used
  Elem sigma(const GroupElement& s, const std::function<int(const GroupElement&)>& y,
             std::vector<GroupElement>* read = nullptr) const {
    const std::size_t d = action.size();
    Elem acc = zero();
    std::vector<std::int64_t> p(d, 0);
    for (std::size_t i = 0; i < d; ++i) {
      while (p[i] != s[i]) {
        if (s[i] > p[i]) {
          GroupElement at(p);
          if (read) read->push_back(at);
          Elem step = table[i][y(at)];
          acc = add(step, action[i] == 1 ? acc : neg(acc));
          ++p[i];
        } else {
          --p[i];
          GroupElement at(p);
          if (read) read->push_back(at);
          Elem diff = add(acc, neg(table[i][y(at)]));
          acc = action[i] == 1 ? diff : neg(diff);
        }
      }
    }
    return acc;
  }

  Window support(const GroupElement& s) const {
    std::vector<GroupElement> used;
    sigma(s, [](const GroupElement&) { return 0; }, &used);
    return Window(s.dim(), used);
  }

  struct Violation {
    GroupElement s, t;
    std::vector<int> word;
    Window window;
    std::string str() const { return "sigma(s+t,y) != sigma(s,ty)+s.sigma(t,y) at s=" + s.str() + " t=" + t.str() + " on " + window.str(); }
  };

  // exact check of the cocycle identity for s, t in the ball of the given
  // radius and every base word on the sites involved
  std::optional<Violation> check_identity(const SymbolicBase& Y, int radius = 1) const {
    validate_shape(Y.dim(), Y.alphabet());
    const std::size_t d = Y.dim();
    auto B = ball(d, radius);
    for (auto& s : B)
      for (auto& t : B) {
        Window W = unite(unite(support(s + t), translate(support(s), t)), support(t));
        if (W.empty()) continue;
        for (auto& w : Y.words(W)) {
          auto y = [&](const GroupElement& u) { return w[W.index_of(u)]; };
          auto ty = [&](const GroupElement& u) { return w[W.index_of(u + t)]; };
          Elem lhs = sigma(s + t, y);
          Elem rhs = add(sigma(s, ty), act(s, sigma(t, y)));
          if (lhs != rhs) return Violation{s, t, w, W};
        }
      }
    return std::nullopt;
  }
};

// ---------------------------------------------------------------------------
// seeds: covers of the single-site model X_{e}

struct SeedMember {
  std::vector<int> symbols;                         // allowed y_0; empty = all
  std::optional<RealInterval> site;                 // condition on z_0
  std::vector<std::optional<RealInterval>> group;   // per circle of G
};
using Seed = std::vector<SeedMember>;

class SystemModel;

// The model of X on a window: factor 0 enumerates base words on B, then one
// site factor per element of E, then the circles of G.
struct WindowModel {
  std::shared_ptr<const SystemModel> sys;
  Window F, E, B;
  std::vector<std::vector<int>> words;
  std::map<std::vector<int>, std::size_t> word_index;
  ComplexPtr complex;  // X_E
  ComplexPtr fiber;    // Z^E x G
  std::shared_ptr<FiberPartition> pi;
  std::size_t g_offset = 0;  // first G factor inside the fiber complex

  std::size_t num_words() const { return words.size(); }
  bool enumerated() const { return complex != nullptr; }
  const WindowModel& require_enumerated() const {
    if (!complex) throw std::length_error("window " + E.str() + " is too large to enumerate");
    return *this;
  }
  int symbol(std::size_t w, const GroupElement& u) const { return words[w][B.index_of(u)]; }
  std::size_t cell(std::size_t w, std::size_t fiber_cell) const { return w * fiber->num_cells() + fiber_cell; }
  std::size_t vertex(std::size_t w, std::size_t fiber_vertex) const { return w * fiber->num_vertices() + fiber_vertex; }
  std::size_t word_of_vertex(std::size_t v) const { return v / fiber->num_vertices(); }
  std::size_t fiber_vertex(std::size_t v) const { return v % fiber->num_vertices(); }
  std::vector<int> sigma(const GroupElement& s, std::size_t w) const;
  int g_sign(const GroupElement& s) const;
};

struct Distance {
  Rational value;
  Rational error;  // bound on what the unmodelled sites can add
};

class SystemModel : public std::enable_shared_from_this<SystemModel> {
 public:
  std::string name;
  SymbolicBase base;
  SiteAlphabet site;
  std::optional<Cocycle> cocycle;
  Rational lambda{1, 2};  // weights w_t = lambda^|t|

  std::size_t dim() const { return base.dim(); }
  bool has_group() const { return cocycle.has_value(); }

  void validate() const {
    if (lambda <= Rational(0) || lambda >= Rational(1)) throw std::invalid_argument("metric weight ratio must lie in (0,1)");
    if (cocycle) {
      if (auto v = cocycle->check_identity(base)) throw std::invalid_argument("cocycle identity fails: " + v->str());
    }
  }

  Rational weight(const GroupElement& t) const { return rational_pow(lambda, std::min<std::int64_t>(t.word_length(), 62)); }

  // max over s in F of w_{u-s}
  Rational window_weight(const GroupElement& u, const Window& F) const {
    std::int64_t best = -1;
    for (auto& s : F) {
      auto l = (u - s).word_length();
      if (best < 0 || l < best) best = l;
    }
    return rational_pow(lambda, std::min<std::int64_t>(best, 62));
  }

  // sites whose weight for rho_F reaches eps, always containing F
  Window support_window(const Window& F, const Rational& eps) const {
    std::int64_t R = 0;
    while (R < 62 && rational_pow(lambda, R + 1) >= eps) ++R;
    return product_set(ball(dim(), R), F);
  }

  // base window for a stage: E plus the sites the cocycle reads
  Window base_window(const Window& F, const Window& E) const {
    Window B = E;
    if (cocycle)
      for (auto& s : F) B = unite(B, cocycle->support(s));
    return B;
  }

  std::shared_ptr<const WindowModel> window(const Window& F, const Window& E) const;
  std::shared_ptr<const WindowModel> window(const Window& F) const { return window(F, F); }
};

using SystemPtr = std::shared_ptr<const SystemModel>;

inline SystemPtr make_system(SystemModel m) {
  m.validate();
  return std::make_shared<const SystemModel>(std::move(m));
}

// [0,1]^Gamma, (R/Z)^Gamma or a finite net alphabet, with trivial factor
inline SystemPtr full_shift(std::size_t d, SiteAlphabet site, const std::string& name = "full shift") {
  SystemModel m;
  m.name = name;
  m.base = SymbolicBase::full(d, 1);
  m.site = site;
  return make_system(m);
}

// Y x Z with the first projection
inline SystemPtr product_system(const SymbolicBase& Y, SiteAlphabet Z, const std::string& name = "product") {
  SystemModel m;
  m.name = name;
  m.base = Y;
  m.site = Z;
  return make_system(m);
}

// Y x_sigma G with the first projection and the right action by G
inline SystemPtr skew_product(const SymbolicBase& Y, const Cocycle& sigma, const std::string& name = "skew product") {
  SystemModel m;
  m.name = name;
  m.base = Y;
  m.cocycle = sigma;
  return make_system(m);
}

inline std::vector<int> WindowModel::sigma(const GroupElement& s, std::size_t w) const {
  if (!sys->cocycle) return {};
  return sys->cocycle->sigma(s, [&](const GroupElement& u) { return symbol(w, u); });
}

inline int WindowModel::g_sign(const GroupElement& s) const { return sys->cocycle ? sys->cocycle->sign(s) : 1; }

inline std::shared_ptr<const WindowModel> SystemModel::window(const Window& F, const Window& E) const {
  if (F.empty()) throw std::invalid_argument("stage window must be nonempty");
  if (!E.contains(F)) throw std::invalid_argument("modelled window " + E.str() + " must contain the stage " + F.str());
  auto wm = std::make_shared<WindowModel>();
  wm->sys = shared_from_this();
  wm->F = F;
  wm->E = E;
  wm->B = base_window(F, E);
  wm->words = base.words(wm->B);
  for (std::size_t i = 0; i < wm->words.size(); ++i) wm->word_index[wm->words[i]] = i;
  std::vector<Factor> fs;
  if (site.present())
    for (std::size_t i = 0; i < E.size(); ++i) fs.push_back(site.factor());
  wm->g_offset = fs.size();
  if (cocycle)
    for (int j = 0; j < cocycle->group_dim; ++j) fs.push_back(Factor::circle(cocycle->resolution));
  // too large to enumerate: left empty, only the symbolic paths apply
  double cells = static_cast<double>(wm->words.size());
  for (auto& f : fs) cells *= f.cells();
  if (cells > static_cast<double>(std::size_t{1} << 30)) return wm;
  wm->fiber = make_complex(fs.empty() ? std::vector<Factor>{Factor::discrete(1)} : fs);
  std::vector<Factor> all{Factor::discrete(static_cast<int>(wm->words.size()))};
  if (!fs.empty()) all.insert(all.end(), fs.begin(), fs.end());
  wm->complex = make_complex(all);
  wm->pi = std::make_shared<FiberPartition>(FiberPartition::projection(wm->complex, {0}));
  return wm;
}

// ---------------------------------------------------------------------------
// metric

inline std::int64_t tail_radius(const Window& F, const Window& E) {
  // smallest r with F + ball(r) not inside E: every unmodelled site is at least that far
  std::int64_t r = 0;
  while (E.contains(product_set(ball(F.dim(), r), F))) ++r;
  return r;
}

// rho_F between two vertices of the window model
inline Distance rho_F(const WindowModel& wm, std::size_t va, std::size_t vb) {
  wm.require_enumerated();
  const auto& sys = *wm.sys;
  const auto& K = *wm.complex;
  auto a = K.vertex_coords(va), b = K.vertex_coords(vb);
  Distance out{Rational(0), Rational(0)};
  auto bump = [&](const Rational& x) {
    if (x > out.value) out.value = x;
  };
  // base symbols: distance 1 when different
  const auto& wa = wm.words[a[0]];
  const auto& wb = wm.words[b[0]];
  for (std::size_t i = 0; i < wm.B.size(); ++i)
    if (wa[i] != wb[i]) bump(sys.window_weight(wm.B[i], wm.F));
  if (sys.site.present())
    for (std::size_t i = 0; i < wm.E.size(); ++i) {
      int za = a[1 + i], zb = b[1 + i];
      if (za != zb) bump(sys.window_weight(wm.E[i], wm.F) * sys.site.distance(za, zb));
    }
  if (sys.cocycle) {
    const auto& c = *sys.cocycle;
    for (auto& s : wm.F) {
      auto sa = wm.sigma(s, a[0]), sb = wm.sigma(s, b[0]);
      Cocycle::Elem ga(c.group_dim), gb(c.group_dim);
      for (int j = 0; j < c.group_dim; ++j) {
        ga[j] = a[1 + wm.g_offset + j];
        gb[j] = b[1 + wm.g_offset + j];
      }
      auto xa = c.add(sa, c.act(s, ga)), xb = c.add(sb, c.act(s, gb));
      for (int j = 0; j < c.group_dim; ++j) {
        int d = std::abs(xa[j] - xb[j]);
        d = std::min(d, c.resolution - d);
        bump(Rational(d, c.resolution));
      }
    }
  }
  if (sys.site.present() && sys.site.diameter() > Rational(0))
    out.error = std::max(out.error, rational_pow(sys.lambda, std::min<std::int64_t>(tail_radius(wm.F, wm.E), 62)) * sys.site.diameter());
  if (sys.base.alphabet() > 1)
    out.error = std::max(out.error, rational_pow(sys.lambda, std::min<std::int64_t>(tail_radius(wm.F, wm.B), 62)));
  return out;
}

// ---------------------------------------------------------------------------
// stage covers U^F = join over s in F of s^{-1}U

namespace detail {

inline RealInterval wrap01(RealInterval I) {
  auto k = floor_of(I.lo);
  return I.shifted(Rational(-k));
}

}  // namespace detail

// s^{-1}(member) inside the fiber over word w, as cells of the fiber complex
inline CellSet translated_member(const WindowModel& wm, const SeedMember& m, const GroupElement& s, std::size_t w) {
  const auto& sys = *wm.sys;
  const auto& Kf = *wm.fiber;
  CellSet out(Kf.num_cells());
  if (!m.symbols.empty()) {
    int y = wm.symbol(w, s);
    if (std::find(m.symbols.begin(), m.symbols.end(), y) == m.symbols.end()) return out;
  }
  std::vector<std::vector<char>> allowed;
  for (std::size_t j = 0; j < Kf.num_factors(); ++j) allowed.emplace_back(Kf.factor(j).cells(), 1);
  if (m.site && sys.site.present()) allowed[wm.E.index_of(s)] = sys.site.cells_in(*m.site);
  if (sys.cocycle) {
    const auto& c = *sys.cocycle;
    if (!m.group.empty() && m.group.size() != static_cast<std::size_t>(c.group_dim))
      throw std::invalid_argument("seed member needs one group condition per circle");
    auto sg = wm.sigma(s, w);
    for (int j = 0; j < static_cast<int>(m.group.size()); ++j) {
      if (!m.group[j]) continue;
      // sigma + sign * g in I  <=>  g in sign * (I - sigma)
      RealInterval J = m.group[j]->shifted(Rational(-sg[j], c.resolution));
      if (c.sign(s) == -1) J = J.negated();
      allowed[wm.g_offset + j] = factor_interval(Kf.factor(wm.g_offset + j), detail::wrap01(J));
    }
  } else if (!m.group.empty()) {
    throw std::invalid_argument("seed has group conditions but the system has no group");
  }
  return product_cells(Kf, allowed);
}

namespace detail {

inline std::vector<CellSet> dedupe(std::vector<CellSet> ms) {
  std::vector<CellSet> out;
  for (auto& m : ms)
    if (m.any()) out.push_back(std::move(m));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

// U^F restricted to the fiber over word w (a cover of Z^E x G)
inline Cover stage_cover_on_word(const WindowModel& wm, const Seed& seed, std::size_t w) {
  wm.require_enumerated();
  if (seed.empty()) throw std::invalid_argument("empty seed cover");
  std::vector<CellSet> acc{full_set(*wm.fiber)};
  for (auto& s : wm.F) {
    std::vector<CellSet> layer;
    for (auto& m : seed) layer.push_back(translated_member(wm, m, s, w));
    layer = detail::dedupe(std::move(layer));
    std::vector<CellSet> next;
    for (auto& a : acc)
      for (auto& b : layer) next.push_back(a & b);
    acc = detail::dedupe(std::move(next));
  }
  return Cover(wm.fiber, std::move(acc));
}

// U^F on the whole window model X_E. Members are the index tuples
// (one seed member per s in F) with nonempty intersection.
inline Cover stage_cover(const WindowModel& wm, const Seed& seed) {
  wm.require_enumerated();
  if (seed.empty()) throw std::invalid_argument("empty seed cover");
  const auto& K = *wm.complex;
  const std::size_t nfc = wm.fiber->num_cells();
  std::vector<CellSet> acc{full_set(K)};
  for (auto& s : wm.F) {
    std::vector<CellSet> layer;
    for (auto& m : seed) {
      CellSet full(K.num_cells());
      for (std::size_t w = 0; w < wm.num_words(); ++w) {
        auto part = translated_member(wm, m, s, w);
        for (auto c = part.find_first(); c != CellSet::npos; c = part.find_next(c)) full.set(w * nfc + c);
      }
      layer.push_back(std::move(full));
    }
    layer = detail::dedupe(std::move(layer));
    std::vector<CellSet> next;
    for (auto& a : acc)
      for (auto& b : layer) next.push_back(a & b);
    acc = detail::dedupe(std::move(next));
  }
  return Cover(wm.complex, std::move(acc));
}

// the seed itself as a cover of the single-site model (validates it)
inline Cover seed_cover(const SystemModel& sys, const Seed& seed) {
  auto wm = sys.window(Window(sys.dim(), {GroupElement::identity(sys.dim())}));
  return stage_cover(*wm, seed);
}

// members contained in another member add nothing to D
inline Cover reduced(const Cover& U) {
  std::vector<CellSet> keep;
  const auto& ms = U.members();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < ms.size() && !dominated; ++j)
      if (i != j && ms[i].is_subset_of(ms[j]) && (ms[i] != ms[j] || j < i)) dominated = true;
    if (!dominated) keep.push_back(ms[i]);
  }
  return Cover(U.complex_ptr(), std::move(keep), false);
}

// ---------------------------------------------------------------------------
// fibers

inline FiberComplex fiber(const WindowModel& wm, std::size_t w) {
  wm.require_enumerated();
  if (w >= wm.num_words()) throw std::out_of_range("fiber: no such base word");
  return fiber_complex(*wm.pi, w);
}

inline std::size_t word_of_point(const WindowModel& wm, const SymbolicBase::Point& y) {
  auto it = wm.word_index.find(wm.sys->base.word_of(y, wm.B));
  if (it == wm.word_index.end()) throw std::invalid_argument("base point has no word on " + wm.B.str());
  return it->second;
}

// ---------------------------------------------------------------------------
// structural checks

struct ModelCheck {
  bool ok = true;
  std::string failure;
  std::size_t checked = 0;
  void fail(const std::string& why) {
    if (ok) failure = why;
    ok = false;
  }
};

// pi(s x) = s pi(x) for generators s on every vertex of the model of a small
// window: shift the configuration, then compare base words
inline ModelCheck check_equivariance(const SystemModel& sys, const Window& F) {
  ModelCheck rep;
  for (auto& g : standard_generators(sys.dim()))
    for (int sgn : {1, -1}) {
      GroupElement s = sgn == 1 ? g : inverse(g);
      // s x restricted to F - s needs x on F, and sigma(s, .) needs its sites
      Window Fs = sys.cocycle ? unite(F, sys.cocycle->support(s)) : F;
      auto src = sys.window(Fs);
      Window G = translate(F, inverse(s));
      auto dst = sys.window(G);
      for (std::size_t v = 0; v < src->complex->num_vertices(); ++v) {
        auto coords = src->complex->vertex_coords(v);
        const auto& word = src->words[coords[0]];
        // x -> s x: (s y)_t = y_{t+s}; the shifted word on dst.B is read off word where defined
        std::vector<int> shifted;
        bool defined = true;
        for (auto& t : dst->B) {
          GroupElement u = t + s;
          if (!src->B.contains(u)) {
            defined = false;
            break;
          }
          shifted.push_back(word[src->B.index_of(u)]);
        }
        if (!defined) continue;
        // pi(s x) is the word part of s x; s pi(x) is the shifted base point
        auto it = dst->word_index.find(shifted);
        if (it == dst->word_index.end()) {
          rep.fail("shifted base word missing at " + s.str());
          continue;
        }
        std::vector<int> out(dst->complex->num_factors(), 0);
        out[0] = static_cast<int>(it->second);
        if (sys.site.present())
          for (std::size_t i = 0; i < dst->E.size(); ++i) out[1 + i] = coords[1 + src->E.index_of(dst->E[i] + s)];
        if (sys.cocycle) {
          const auto& c = *sys.cocycle;
          auto sg = src->sigma(s, coords[0]);
          Cocycle::Elem gv(c.group_dim);
          for (int j = 0; j < c.group_dim; ++j) gv[j] = coords[1 + src->g_offset + j];
          auto moved = c.add(sg, c.act(s, gv));
          for (int j = 0; j < c.group_dim; ++j) out[1 + dst->g_offset + j] = moved[j];
        }
        auto image = dst->complex->vertex_index(out);
        if (dst->word_of_vertex(image) != it->second) rep.fail("pi(sx) != s pi(x) at generator " + s.str());
        ++rep.checked;
      }
    }
  return rep;
}

// G-extension axioms on the grid: fibers are G-orbits, the action is free,
// and t(xg) = (tx)(tg) for generators t
inline ModelCheck check_g_extension_axioms(const SystemModel& sys, const Window& F) {
  ModelCheck rep;
  if (!sys.cocycle) {
    rep.fail("system has no group part");
    return rep;
  }
  const auto& c = *sys.cocycle;
  auto wm = sys.window(F);
  const auto& K = *wm->complex;
  std::vector<Cocycle::Elem> G;
  {
    Cocycle::Elem e(c.group_dim, 0);
    while (true) {
      G.push_back(e);
      int j = c.group_dim;
      while (j > 0 && e[j - 1] == c.resolution - 1) e[--j] = 0;
      if (j == 0) break;
      ++e[j - 1];
    }
  }
  auto act_right = [&](std::vector<int> coords, const Cocycle::Elem& h) {
    for (int j = 0; j < c.group_dim; ++j)
      coords[1 + wm->g_offset + j] = static_cast<int>(mod_floor(coords[1 + wm->g_offset + j] + h[j], c.resolution));
    return coords;
  };
  for (std::size_t v = 0; v < K.num_vertices(); ++v) {
    auto x = K.vertex_coords(v);
    std::set<std::size_t> orbit;
    for (auto& h : G) orbit.insert(K.vertex_index(act_right(x, h)));
    if (orbit.size() != G.size()) rep.fail("action not free at vertex " + std::to_string(v));
    // orbit = fiber: same word, and as many points as the fiber
    std::size_t fiber_size = 0;
    for (std::size_t u = 0; u < K.num_vertices(); ++u) {
      auto xu = K.vertex_coords(u);
      bool same = xu[0] == x[0];
      for (std::size_t j = 1; j < 1 + wm->g_offset && same; ++j) same = xu[j] == x[j];
      fiber_size += same;
      if (same && !orbit.count(u)) rep.fail("fiber point outside xG at vertex " + std::to_string(v));
    }
    if (fiber_size != orbit.size()) rep.fail("xG leaves the fiber at vertex " + std::to_string(v));
    ++rep.checked;
  }
  // t(xg) = (tx)(tg): the group coordinate of t(x) is sigma(t,y) + alpha^t(g)
  for (auto& t : F)
    for (std::size_t w = 0; w < wm->num_words(); ++w) {
      auto sg = wm->sigma(t, w);
      for (auto& g : G)
        for (auto& h : G) {
          auto lhs = c.add(sg, c.act(t, c.add(g, h)));
          auto rhs = c.add(c.add(sg, c.act(t, g)), c.act(t, h));
          if (lhs != rhs) rep.fail("t(xg) != (tx)(tg) at t=" + t.str());
        }
    }
  return rep;
}

// rho_X(xg, xg') = rho_G(g, g') for every vertex x and pair g, g'
inline ModelCheck check_isometric(const SystemModel& sys, const Window& F) {
  ModelCheck rep;
  if (!sys.cocycle) {
    rep.fail("system has no group part");
    return rep;
  }
  const auto& c = *sys.cocycle;
  auto wm = sys.window(F);
  const auto& K = *wm->complex;
  for (std::size_t v = 0; v < K.num_vertices(); ++v) {
    auto x = K.vertex_coords(v);
    for (std::size_t u = 0; u < K.num_vertices(); ++u) {
      auto xu = K.vertex_coords(u);
      bool same = true;
      for (std::size_t j = 0; j < 1 + wm->g_offset; ++j) same = same && xu[j] == x[j];
      if (!same) continue;
      Rational dg(0);
      for (int j = 0; j < c.group_dim; ++j) {
        int d = std::abs(xu[1 + wm->g_offset + j] - x[1 + wm->g_offset + j]);
        dg = std::max(dg, Rational(std::min(d, c.resolution - d), c.resolution));
      }
      if (rho_F(*wm, v, u).value != dg) rep.fail("rho_F(xg,xg') != rho_G(g,g') at vertices " + std::to_string(v) + "," + std::to_string(u));
      ++rep.checked;
    }
  }
  return rep;
}

// symmetry, identity of indiscernibles and triangle inequality on all triples
inline ModelCheck check_metric(const WindowModel& wm, std::size_t max_vertices = 200) {
  ModelCheck rep;
  const std::size_t n = std::min(wm.complex->num_vertices(), max_vertices);
  std::vector<std::vector<Rational>> d(n, std::vector<Rational>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) d[a][b] = rho_F(wm, a, b).value;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (d[a][b] != d[b][a]) rep.fail("asymmetric");
      if ((d[a][b] == Rational(0)) != (a == b)) rep.fail("indiscernibles");
      for (std::size_t c = 0; c < n; ++c)
        if (d[a][c] > d[a][b] + d[b][c]) rep.fail("triangle");
      ++rep.checked;
    }
  return rep;
}

// ---------------------------------------------------------------------------
// kernel of multiplication by f on (R/Z)^Z, at grid resolution r

struct KernelModel {
  std::map<std::int64_t, std::int64_t> f;  // group-ring coefficients
  int resolution = 0;
  Window E, interior;
  std::vector<std::vector<int>> points;    // grid units mod resolution, on E
  bool closed_under_addition = false;
};

// (x f)_t = sum_k f_k x_{t+k}; kernel points are grid configurations on E with
// (x f)|_interior = 0, interior = {t : t + supp f inside E}
inline KernelModel g_extension_from_kernel(const std::map<std::int64_t, std::int64_t>& f, int resolution, const Window& E) {
  if (E.dim() != 1) throw std::invalid_argument("kernel example ships for d = 1");
  if (f.empty()) throw std::invalid_argument("f must be nonzero");
  KernelModel km;
  km.f = f;
  km.resolution = resolution;
  km.E = E;
  std::vector<GroupElement> inner;
  for (auto& t : E) {
    bool ok = true;
    for (auto& [k, c] : f) ok = ok && E.contains(GroupElement{t[0] + k});
    if (ok) inner.push_back(t);
  }
  km.interior = Window(1, inner);
  double total = std::pow(static_cast<double>(resolution), static_cast<double>(E.size()));
  if (total > static_cast<double>(1 << 22)) throw std::length_error("kernel enumeration too large");
  std::vector<int> x(E.size(), 0);
  while (true) {
    bool in = true;
    for (auto& t : km.interior) {
      std::int64_t s = 0;
      for (auto& [k, c] : f) s += c * x[E.index_of(GroupElement{t[0] + k})];
      in = in && mod_floor(s, resolution) == 0;
    }
    if (in) km.points.push_back(x);
    std::size_t i = x.size();
    while (i > 0 && x[i - 1] == resolution - 1) x[--i] = 0;
    if (i == 0) break;
    ++x[i - 1];
  }
  if (km.points.empty()) throw std::invalid_argument("kernel empty at model scale");
  std::set<std::vector<int>> pts(km.points.begin(), km.points.end());
  km.closed_under_addition = true;
  for (auto& a : km.points)
    for (auto& b : km.points) {
      std::vector<int> s(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) s[i] = static_cast<int>(mod_floor(a[i] + b[i], resolution));
      if (!pts.count(s)) km.closed_under_addition = false;
    }
  return km;
}

// multiplication by the integer n on circles: X_E = circle(r)^E over
// Y_E = circle(r/n)^E, cell c -> c mod (2r/n); fibers are cosets of {j/n}^E
struct ScalarKernelExtension {
  int n = 2;
  int resolution = 0;
  Rational lambda{1, 2};

  ScalarKernelExtension(int n_, int r, Rational lam = Rational(1, 2)) : n(n_), resolution(r), lambda(lam) {
    if (n < 1 || r % n != 0 || r / n < 3) throw std::invalid_argument("need n | r and r/n >= 3");
  }

  struct Stage {
    Window F;
    ComplexPtr complex, base;
    std::shared_ptr<FiberPartition> pi;
  };

  Stage stage(const Window& F) const {
    Stage st;
    st.F = F;
    st.complex = make_complex(std::vector<Factor>(F.size(), Factor::circle(resolution)));
    st.base = make_complex(std::vector<Factor>(F.size(), Factor::circle(resolution / n)));
    std::vector<std::uint32_t> map(st.complex->num_cells());
    const int bc = 2 * resolution / n;
    for (std::size_t c = 0; c < map.size(); ++c) {
      auto co = st.complex->cell_coords(c);
      for (auto& x : co) x %= bc;
      map[c] = static_cast<std::uint32_t>(st.base->cell_index(co));
    }
    st.pi = std::make_shared<FiberPartition>(FiberPartition::custom(st.complex, st.base, std::move(map)));
    return st;
  }

  // rho_F on grid points of X_F (sites outside F are not modelled)
  Rational rho(const Window& F, const std::vector<int>& a, const std::vector<int>& b) const {
    Rational out(0);
    for (std::size_t i = 0; i < F.size(); ++i) {
      int d = std::abs(a[i] - b[i]);
      d = std::min(d, resolution - d);
      out = std::max(out, Rational(d, resolution));
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// invariant measures on periodic base points

struct MeasureModel {
  std::vector<SymbolicBase::Point> support;
  std::vector<Rational> weights;
};

inline MeasureModel invariant_measure(const SymbolicBase& Y, std::vector<SymbolicBase::Point> pts, std::vector<Rational> w) {
  if (pts.size() != w.size() || pts.empty()) throw std::invalid_argument("measure needs one weight per point");
  Rational total(0);
  for (auto& x : w) {
    if (x <= Rational(0)) throw std::invalid_argument("measure weights must be positive");
    total += x;
  }
  if (total != Rational(1)) throw std::invalid_argument("measure weights must sum to 1");
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (Y.same(pts[i], pts[j])) throw std::invalid_argument("measure support lists a point twice");
  for (auto& g : standard_generators(Y.dim()))
    for (std::size_t i = 0; i < pts.size(); ++i) {
      auto moved = Y.shift(pts[i], g);
      bool found = false;
      for (std::size_t j = 0; j < pts.size() && !found; ++j)
        if (Y.same(moved, pts[j])) {
          found = true;
          if (w[j] != w[i]) throw std::invalid_argument("measure is not invariant: weight changes along an orbit");
        }
      if (!found) throw std::invalid_argument("measure is not invariant: support not closed under the shift");
    }
  return {std::move(pts), std::move(w)};
}

}  // namespace cmdim
