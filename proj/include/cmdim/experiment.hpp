#pragma once

// Experiment files: YAML in, canonical YAML out. The canonical echo fixes key
// order, spells rationals as p/q and windows as sorted element lists, so
// echo(parse(echo(x))) == echo(x) byte for byte.

#include "cmdim/systems.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cmdim {

class experiment_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckSpec {
  std::string name;
  std::optional<Window> A;
  std::vector<Window> tiles;
  std::optional<Rational> eps;
  std::vector<Rational> eps_list;
  std::optional<int> kernel_n;           // g_extension: multiplication-by-n example
  std::optional<int> kernel_resolution;
  std::optional<int> radius;             // usc probe
  std::vector<Window> samples;           // ornstein_weiss extra windows
};

struct Experiment {
  std::string name = "experiment";
  std::uint64_t seed = 0;

  // system
  std::string base_kind = "point";  // point | full | periodic
  std::size_t dim = 1;
  int alphabet = 1;
  std::vector<PeriodicPattern> patterns;
  std::string site_kind = "none";    // none | interval | circle | net
  int site_size = 0;
  Rational lambda{1, 2};
  std::optional<Cocycle> cocycle;

  Seed cover;
  std::vector<Window> windows;
  std::vector<Rational> eps;
  std::vector<SymbolicBase::Point> points;
  std::vector<std::pair<std::vector<std::size_t>, std::vector<Rational>>> measures;  // point indices, weights
  std::vector<CheckSpec> checks;

  SymbolicBase base() const {
    if (base_kind == "point") return SymbolicBase();
    if (base_kind == "full") {
      auto b = SymbolicBase::full(dim, alphabet);
      return patterns.empty() ? b : b.with_points(patterns);
    }
    if (base_kind == "periodic") return SymbolicBase::periodic(dim, alphabet, patterns);
    throw experiment_error("unknown base kind '" + base_kind + "'");
  }

  SiteAlphabet site() const {
    if (site_kind == "none") return SiteAlphabet::none();
    if (site_kind == "interval") return SiteAlphabet::interval(site_size);
    if (site_kind == "circle") return SiteAlphabet::circle(site_size);
    if (site_kind == "net") return SiteAlphabet::net(site_size);
    throw experiment_error("unknown site kind '" + site_kind + "'");
  }

  SystemPtr system() const {
    SystemModel m;
    m.name = name;
    m.base = base();
    m.site = site();
    m.cocycle = cocycle;
    m.lambda = lambda;
    if (m.base.dim() != dim) throw experiment_error("base dimension mismatch");
    return make_system(std::move(m));
  }

  MeasureModel measure(std::size_t i) const {
    const auto& [idx, w] = measures.at(i);
    std::vector<SymbolicBase::Point> pts;
    for (auto k : idx) pts.push_back(points.at(k));
    return invariant_measure(base(), pts, w);
  }
};

namespace detail {

inline Rational yaml_rational(const YAML::Node& n, const std::string& what) {
  try {
    return parse_rational(n.as<std::string>());
  } catch (const std::exception& e) {
    throw experiment_error(what + ": " + e.what());
  }
}

inline RealInterval parse_interval(const std::string& text) {
  // "[a,b)", "(a,b]", ...
  auto fail = [&] { throw experiment_error("not an interval: '" + text + "'"); };
  std::string t;
  for (char c : text)
    if (c != ' ') t += c;
  if (t.size() < 5) fail();
  char open = t.front(), close = t.back();
  if ((open != '[' && open != '(') || (close != ']' && close != ')')) fail();
  auto comma = t.find(',');
  if (comma == std::string::npos) fail();
  RealInterval I;
  try {
    I.lo = parse_rational(t.substr(1, comma - 1));
    I.hi = parse_rational(t.substr(comma + 1, t.size() - comma - 2));
  } catch (const std::invalid_argument&) {
    fail();
  }
  I.lo_closed = open == '[';
  I.hi_closed = close == ']';
  return I;
}

inline GroupElement yaml_element(const YAML::Node& n, std::size_t d) {
  if (n.IsScalar() && d == 1) return GroupElement{n.as<std::int64_t>()};
  if (!n.IsSequence() || n.size() != d) throw experiment_error("group element needs " + std::to_string(d) + " coordinates");
  std::vector<std::int64_t> c;
  for (auto x : n) c.push_back(x.as<std::int64_t>());
  return GroupElement(c);
}

// [a, b] is the interval [a,b) of Z; {box: n}, {lo: [..], side: [..]} or
// {elements: [[..], ..]} otherwise
inline Window yaml_window(const YAML::Node& n, std::size_t d) {
  if (n.IsSequence() && n.size() == 2 && n[0].IsScalar() && d == 1) return interval(n[0].as<std::int64_t>(), n[1].as<std::int64_t>());
  if (n.IsMap()) {
    if (n["box"]) return box(d, n["box"].as<std::int64_t>());
    if (n["lo"] && n["side"]) return box_from(n["lo"].as<std::vector<std::int64_t>>(), n["side"].as<std::vector<std::int64_t>>());
    if (n["elements"]) {
      std::vector<GroupElement> es;
      for (auto e : n["elements"]) es.push_back(yaml_element(e, d));
      return Window(d, es);
    }
  }
  throw experiment_error("cannot read a window");
}

inline std::vector<Rational> yaml_rationals(const YAML::Node& n, const std::string& what) {
  std::vector<Rational> out;
  if (!n) return out;
  for (auto x : n) out.push_back(yaml_rational(x, what));
  return out;
}

inline void require_keys(const YAML::Node& n, std::initializer_list<const char*> allowed, const std::string& where) {
  for (auto kv : n) {
    auto k = kv.first.as<std::string>();
    bool ok = false;
    for (auto a : allowed) ok = ok || k == a;
    if (!ok) throw experiment_error("unknown key '" + k + "' in " + where);
  }
}

}  // namespace detail

inline Experiment parse_experiment(const YAML::Node& root) {
  using namespace detail;
  Experiment ex;
  if (!root.IsMap()) throw experiment_error("experiment must be a mapping");
  require_keys(root, {"name", "seed", "system", "cover", "schedule", "points", "measures", "checks"}, "experiment");
  if (root["name"]) ex.name = root["name"].as<std::string>();
  if (root["seed"]) ex.seed = root["seed"].as<std::uint64_t>();
  auto sys = root["system"];
  if (!sys) throw experiment_error("missing system");
  require_keys(sys, {"base", "site", "lambda", "cocycle"}, "system");
  if (auto b = sys["base"]) {
    require_keys(b, {"kind", "dim", "alphabet", "patterns"}, "base");
    ex.base_kind = b["kind"] ? b["kind"].as<std::string>() : "point";
    ex.dim = b["dim"] ? b["dim"].as<std::size_t>() : 1;
    ex.alphabet = b["alphabet"] ? b["alphabet"].as<int>() : 1;
    for (auto p : b["patterns"]) {
      PeriodicPattern pp;
      pp.period = p["period"].as<std::vector<std::int64_t>>();
      pp.symbols = p["symbols"].as<std::vector<int>>();
      ex.patterns.push_back(pp);
    }
  }
  if (auto s = sys["site"]) {
    require_keys(s, {"kind", "size"}, "site");
    ex.site_kind = s["kind"].as<std::string>();
    ex.site_size = s["size"] ? s["size"].as<int>() : 0;
  }
  if (sys["lambda"]) ex.lambda = yaml_rational(sys["lambda"], "lambda");
  if (auto c = sys["cocycle"]) {
    require_keys(c, {"group_dim", "resolution", "action", "table"}, "cocycle");
    Cocycle co = Cocycle::trivial(ex.dim, ex.alphabet, c["group_dim"].as<int>(), c["resolution"].as<int>());
    if (c["action"]) co.action = c["action"].as<std::vector<int>>();
    if (c["table"]) co.table = c["table"].as<std::vector<std::vector<std::vector<int>>>>();
    ex.cocycle = co;
  }
  for (auto m : root["cover"]) {
    require_keys(m, {"symbols", "site", "group"}, "cover member");
    SeedMember sm;
    if (m["symbols"]) sm.symbols = m["symbols"].as<std::vector<int>>();
    if (m["site"]) sm.site = parse_interval(m["site"].as<std::string>());
    for (auto g : m["group"]) {
      auto t = g.as<std::string>();
      sm.group.push_back(t == "all" ? std::nullopt : std::optional<RealInterval>(parse_interval(t)));
    }
    ex.cover.push_back(sm);
  }
  if (auto s = root["schedule"]) {
    require_keys(s, {"windows", "eps"}, "schedule");
    for (auto w : s["windows"]) ex.windows.push_back(yaml_window(w, ex.dim));
    ex.eps = yaml_rationals(s["eps"], "schedule eps");
  }
  for (auto p : root["points"]) {
    require_keys(p, {"pattern", "offset"}, "point");
    SymbolicBase::Point y;
    y.pattern = p["pattern"] ? p["pattern"].as<std::size_t>() : 0;
    y.offset = p["offset"] ? yaml_element(p["offset"], ex.dim) : GroupElement::identity(ex.dim);
    ex.points.push_back(y);
  }
  for (auto m : root["measures"]) {
    require_keys(m, {"points", "weights"}, "measure");
    ex.measures.emplace_back(m["points"].as<std::vector<std::size_t>>(), yaml_rationals(m["weights"], "measure weights"));
  }
  for (auto c : root["checks"]) {
    CheckSpec cs;
    if (c.IsScalar()) {
      cs.name = c.as<std::string>();
    } else {
      require_keys(c, {"name", "A", "tiles", "eps", "eps_list", "kernel_n", "kernel_resolution", "radius", "samples"}, "check");
      cs.name = c["name"].as<std::string>();
      if (c["A"]) cs.A = yaml_window(c["A"], ex.dim);
      for (auto t : c["tiles"]) cs.tiles.push_back(yaml_window(t, ex.dim));
      if (c["eps"]) cs.eps = yaml_rational(c["eps"], "check eps");
      cs.eps_list = yaml_rationals(c["eps_list"], "check eps_list");
      if (c["kernel_n"]) cs.kernel_n = c["kernel_n"].as<int>();
      if (c["kernel_resolution"]) cs.kernel_resolution = c["kernel_resolution"].as<int>();
      if (c["radius"]) cs.radius = c["radius"].as<int>();
      for (auto w : c["samples"]) cs.samples.push_back(yaml_window(w, ex.dim));
    }
    ex.checks.push_back(cs);
  }
  // shape checks happen here so that bad files fail before any computation
  ex.system();
  for (auto& m : ex.cover)
    if (m.site && !ex.site().present()) throw experiment_error("cover member constrains an absent site");
  for (std::size_t i = 0; i < ex.measures.size(); ++i) ex.measure(i);
  return ex;
}

inline Experiment parse_experiment_text(const std::string& text) {
  try {
    return parse_experiment(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw experiment_error(std::string("yaml: ") + e.what());
  }
}

inline Experiment load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw experiment_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_text(ss.str());
}

namespace detail {

inline void emit_window(YAML::Emitter& out, const Window& W) {
  out << YAML::BeginMap << YAML::Key << "elements" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto& g : W) {
    out << YAML::Flow << YAML::BeginSeq;
    for (auto c : g.coords) out << c;
    out << YAML::EndSeq;
  }
  out << YAML::EndSeq << YAML::EndMap;
}

inline void emit_rationals(YAML::Emitter& out, const std::vector<Rational>& qs) {
  out << YAML::Flow << YAML::BeginSeq;
  for (auto& q : qs) out << YAML::DoubleQuoted << to_string(q);
  out << YAML::EndSeq;
}

inline void emit_ints(YAML::Emitter& out, const std::vector<std::int64_t>& xs) {
  out << YAML::Flow << YAML::BeginSeq;
  for (auto x : xs) out << x;
  out << YAML::EndSeq;
}

}  // namespace detail

inline std::string echo(const Experiment& ex) {
  using namespace detail;
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << ex.name;
  out << YAML::Key << "seed" << YAML::Value << ex.seed;
  out << YAML::Key << "system" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "base" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << ex.base_kind;
  out << YAML::Key << "dim" << YAML::Value << ex.dim;
  out << YAML::Key << "alphabet" << YAML::Value << ex.alphabet;
  out << YAML::Key << "patterns" << YAML::Value << YAML::BeginSeq;
  for (auto& p : ex.patterns) {
    out << YAML::BeginMap << YAML::Key << "period" << YAML::Value;
    emit_ints(out, p.period);
    out << YAML::Key << "symbols" << YAML::Value << YAML::Flow << p.symbols << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  out << YAML::Key << "site" << YAML::Value << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << ex.site_kind << YAML::Key
      << "size" << YAML::Value << ex.site_size << YAML::EndMap;
  out << YAML::Key << "lambda" << YAML::Value << YAML::DoubleQuoted << to_string(ex.lambda);
  if (ex.cocycle) {
    const auto& c = *ex.cocycle;
    out << YAML::Key << "cocycle" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "group_dim" << YAML::Value << c.group_dim;
    out << YAML::Key << "resolution" << YAML::Value << c.resolution;
    out << YAML::Key << "action" << YAML::Value << YAML::Flow << c.action;
    out << YAML::Key << "table" << YAML::Value << YAML::Flow << c.table;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  out << YAML::Key << "cover" << YAML::Value << YAML::BeginSeq;
  for (auto& m : ex.cover) {
    out << YAML::BeginMap;
    out << YAML::Key << "symbols" << YAML::Value << YAML::Flow << m.symbols;
    if (m.site) out << YAML::Key << "site" << YAML::Value << YAML::DoubleQuoted << m.site->str();
    out << YAML::Key << "group" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (auto& g : m.group) out << YAML::DoubleQuoted << (g ? g->str() : std::string("all"));
    out << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "schedule" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "windows" << YAML::Value << YAML::BeginSeq;
  for (auto& w : ex.windows) emit_window(out, w);
  out << YAML::EndSeq;
  out << YAML::Key << "eps" << YAML::Value;
  emit_rationals(out, ex.eps);
  out << YAML::EndMap;
  out << YAML::Key << "points" << YAML::Value << YAML::BeginSeq;
  for (auto& p : ex.points) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "pattern" << YAML::Value << p.pattern << YAML::Key << "offset" << YAML::Value;
    emit_ints(out, p.offset.coords);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "measures" << YAML::Value << YAML::BeginSeq;
  for (auto& [idx, w] : ex.measures) {
    out << YAML::BeginMap << YAML::Key << "points" << YAML::Value << YAML::Flow << idx << YAML::Key << "weights" << YAML::Value;
    emit_rationals(out, w);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "checks" << YAML::Value << YAML::BeginSeq;
  for (auto& c : ex.checks) {
    out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << c.name;
    if (c.A) {
      out << YAML::Key << "A" << YAML::Value;
      emit_window(out, *c.A);
    }
    if (!c.tiles.empty()) {
      out << YAML::Key << "tiles" << YAML::Value << YAML::BeginSeq;
      for (auto& t : c.tiles) emit_window(out, t);
      out << YAML::EndSeq;
    }
    if (c.eps) out << YAML::Key << "eps" << YAML::Value << YAML::DoubleQuoted << to_string(*c.eps);
    if (!c.eps_list.empty()) {
      out << YAML::Key << "eps_list" << YAML::Value;
      emit_rationals(out, c.eps_list);
    }
    if (c.kernel_n) out << YAML::Key << "kernel_n" << YAML::Value << *c.kernel_n;
    if (c.kernel_resolution) out << YAML::Key << "kernel_resolution" << YAML::Value << *c.kernel_resolution;
    if (c.radius) out << YAML::Key << "radius" << YAML::Value << *c.radius;
    if (!c.samples.empty()) {
      out << YAML::Key << "samples" << YAML::Value << YAML::BeginSeq;
      for (auto& t : c.samples) emit_window(out, t);
      out << YAML::EndSeq;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace cmdim
