#pragma once

#include <sstream>

#include "maxreg/grid.hpp"

namespace maxreg {

// A grid function is block decreasing when it is symmetric under coordinate
// reflections and nonincreasing along every axis away from the origin.
// Violations are reported as node pairs; comparisons are exact.
struct BdViolation {
  enum class Kind { Symmetry, Monotone } kind;
  Ivec a{};  // reference node
  Ivec b{};  // node whose value breaks the rule relative to a
};

inline std::string describe(const BdViolation& v, int dim) {
  std::ostringstream os;
  os << (v.kind == BdViolation::Kind::Symmetry ? "symmetry" : "monotonicity")
     << " violated between nodes (";
  for (int a = 0; a < dim; ++a) os << (a ? "," : "") << v.a[a];
  os << ") and (";
  for (int a = 0; a < dim; ++a) os << (a ? "," : "") << v.b[a];
  os << ")";
  return os.str();
}

inline std::vector<BdViolation> check_block_decreasing(const GridFunction& f,
                                                       std::size_t max_reports = 10) {
  std::vector<BdViolation> out;
  const Grid& g = f.grid;
  std::int64_t n = g.node_count();
  for (std::int64_t i = 0; i < n && out.size() < max_reports; ++i) {
    Ivec iv = g.unflat(i);
    Ivec folded = g.fold(iv);
    if (folded != iv) {
      if (f[i] != f.at(folded))
        out.push_back({BdViolation::Kind::Symmetry, folded, iv});
      continue;  // monotonicity is checked on the nonnegative cone only
    }
    for (int a = 0; a < g.dim && out.size() < max_reports; ++a) {
      if (iv[a] + 1 >= g.counts[a]) continue;
      Ivec next = iv;
      ++next[a];
      if (f.at(next) > f[i])
        out.push_back({BdViolation::Kind::Monotone, iv, next});
    }
  }
  return out;
}

inline bool is_block_decreasing(const GridFunction& f) {
  return check_block_decreasing(f, 1).empty();
}

} // namespace maxreg
