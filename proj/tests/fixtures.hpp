#pragma once

#include "cmdim/systems.hpp"

namespace fixtures {

using namespace cmdim;

inline SymbolicBase period_two() { return SymbolicBase::periodic(1, 2, {{{2}, {0, 1}}}); }

inline Window win(std::int64_t a, std::int64_t b) { return cmdim::interval(a, b); }

// rotation by a quarter turn when y_0 = 1, circle of resolution 12
inline Cocycle rotation(int action = 1) {
  Cocycle c = Cocycle::trivial(1, 2, 1, 12);
  c.action = {action};
  c.table[0][0] = {0};
  c.table[0][1] = {3};
  return c;
}

// {[0,3/4), (1/4,1]} on the site
inline Seed interval_seed() {
  SeedMember a, b;
  a.site = RealInterval{Rational(0), true, Rational(3, 4), false};
  b.site = RealInterval{Rational(1, 4), false, Rational(1), true};
  return {a, b};
}

// three open half-circle arcs on G
inline Seed arc_seed() {
  Seed s;
  for (int k = 0; k < 3; ++k) {
    SeedMember m;
    m.group = {RealInterval{Rational(k, 3), false, Rational(k, 3) + Rational(1, 2), false}};
    s.push_back(m);
  }
  return s;
}

}  // namespace fixtures
