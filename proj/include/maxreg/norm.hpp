#pragma once

#include <algorithm>
#include <cmath>

#include "maxreg/core.hpp"

namespace maxreg {

// Unconditional norms: mu(x) depends on |x_i| only and is monotone in each
// |x_i|. Two families cover everything here:
//   Lp   mu(x) = (sum |x_i|^p)^(1/p), 1 <= p < inf
//   Box  mu(x) = max_i |x_i| / w_i    (w_i = 1 for all i gives l-infinity)
struct NormSpec {
  enum class Kind { Lp, Box } kind = Kind::Box;
  double p = 0.0; // Lp only
  Dvec w{};       // Box only, positive per axis
  int warity = 0; // number of weights given (0 = isotropic box)

  bool is_box() const { return kind == Kind::Box; }

  std::string name() const {
    if (kind == Kind::Lp) {
      if (p == 1.0) return "l1";
      if (p == 2.0) return "l2";
      return "lp:" + fmt17(p);
    }
    bool unit = true;
    for (int a = 0; a < std::max(warity, 1); ++a) unit = unit && w[a] == 1.0;
    if (unit) return "linf";
    std::string s = "rect:";
    for (int a = 0; a < warity; ++a) s += (a ? "," : "") + fmt17(w[a]);
    return s;
  }

  double weight(int axis) const { return warity == 0 ? 1.0 : w[axis]; }
};

inline NormSpec norm_linf() {
  NormSpec n;
  n.kind = NormSpec::Kind::Box;
  n.w.fill(1.0);
  n.warity = 0;
  return n;
}

inline NormSpec norm_lp(double p) {
  require(std::isfinite(p) && p >= 1.0, "lp norm needs p >= 1");
  NormSpec n;
  n.kind = NormSpec::Kind::Lp;
  n.p = p;
  return n;
}

inline NormSpec norm_l1() { return norm_lp(1.0); }
inline NormSpec norm_l2() { return norm_lp(2.0); }

inline NormSpec norm_rect(std::span<const double> weights) {
  require(!weights.empty() && weights.size() <= max_dim, "rectangle norm needs 1..4 weights");
  NormSpec n;
  n.kind = NormSpec::Kind::Box;
  n.warity = static_cast<int>(weights.size());
  n.w.fill(1.0);
  for (int a = 0; a < n.warity; ++a) {
    require(std::isfinite(weights[a]) && weights[a] > 0.0, "rectangle weights must be positive");
    n.w[a] = weights[a];
  }
  return n;
}

// "linf" | "l1" | "l2" | "lp:<p>" | "rect:<w1,...,wd>"
inline NormSpec parse_norm(const std::string& s) {
  if (s == "linf") return norm_linf();
  if (s == "l1") return norm_l1();
  if (s == "l2") return norm_l2();
  if (s.rfind("lp:", 0) == 0) return norm_lp(parse_double(s.substr(3), "lp exponent"));
  if (s.rfind("rect:", 0) == 0) {
    auto toks = split(s.substr(5), ',');
    std::vector<double> w;
    for (const auto& t : toks) w.push_back(parse_double(trim(t), "rectangle weight"));
    return norm_rect(w);
  }
  fail("unknown norm '" + s + "' (want linf|l1|l2|lp:p|rect:w1,...)");
}

inline double mu(const NormSpec& n, std::span<const double> x) {
  if (n.kind == NormSpec::Kind::Box) {
    double m = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a)
      m = std::max(m, std::abs(x[a]) / n.weight(static_cast<int>(a)));
    return m;
  }
  if (n.p == 1.0) {
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return s;
  }
  if (n.p == 2.0) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
  }
  double s = 0.0;
  for (double v : x) s += std::pow(std::abs(v), n.p);
  return std::pow(s, 1.0 / n.p);
}

inline double mu(const NormSpec& n, const Dvec& x, int dim) {
  return mu(n, std::span<const double>(x.data(), static_cast<std::size_t>(dim)));
}

// Smallest c with mu(x) <= c * |x|_2 for all x.
inline double l2_equivalence_constant(const NormSpec& n, int dim) {
  if (n.kind == NormSpec::Kind::Box) {
    double wmin = n.weight(0);
    for (int a = 1; a < dim; ++a) wmin = std::min(wmin, n.weight(a));
    return 1.0 / wmin;
  }
  if (n.p >= 2.0) return 1.0;
  return std::pow(static_cast<double>(dim), 1.0 / n.p - 0.5);
}

// Lebesgue volume of the unit ball {mu <= 1}.
inline double unit_ball_volume(const NormSpec& n, int dim) {
  if (n.kind == NormSpec::Kind::Box) {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= 2.0 * n.weight(a);
    return v;
  }
  // 2^d Gamma(1+1/p)^d / Gamma(1+d/p)
  double g1 = std::tgamma(1.0 + 1.0 / n.p);
  return std::pow(2.0 * g1, dim) / std::tgamma(1.0 + dim / n.p);
}

namespace detail {

// Tolerant membership in the power domain so that boundary lattice points are
// included deterministically: sum |o_i h|^p <= r^p (1 + slack).
inline constexpr double norm_slack = 3e-9;

} // namespace detail

// Does the lattice offset o (cells) lie in the closed mu-ball of radius r?
inline bool offset_inside(const NormSpec& n, const Ivec& o, int dim, double spacing, double r) {
  if (n.kind == NormSpec::Kind::Box) {
    for (int a = 0; a < dim; ++a)
      if (std::abs(o[a]) * spacing > r * n.weight(a) * (1.0 + detail::norm_slack)) return false;
    return true;
  }
  double rp = std::pow(r, n.p) * (1.0 + detail::norm_slack);
  double s = 0.0;
  if (n.p == 1.0) {
    double c = 0.0;
    for (int a = 0; a < dim; ++a) c += std::abs(o[a]);
    s = c * spacing;
    return s <= r * (1.0 + detail::norm_slack);
  }
  if (n.p == 2.0) {
    double c = 0.0;
    for (int a = 0; a < dim; ++a) c += double(o[a]) * double(o[a]);
    s = c * spacing * spacing;
  } else {
    for (int a = 0; a < dim; ++a) s += std::pow(std::abs(o[a]) * spacing, n.p);
  }
  return s <= rp;
}

// Largest j >= 0 with offset j*e_axis inside the radius-r ball; consistent
// with offset_inside by construction.
inline int axis_halfwidth(const NormSpec& n, int axis, double spacing, double r) {
  double reach = n.kind == NormSpec::Kind::Box ? r * n.weight(axis) : r;
  int j = static_cast<int>(std::floor(reach / spacing * (1.0 + 2 * detail::norm_slack)));
  Ivec o{};
  o[axis] = j + 1;
  while (offset_inside(n, o, axis + 1, spacing, r)) o[axis] = ++j + 1;
  o[axis] = j;
  while (j > 0 && !offset_inside(n, o, axis + 1, spacing, r)) o[axis] = --j;
  return j;
}

} // namespace maxreg
