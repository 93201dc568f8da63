#pragma once

#include <limits>
#include <ostream>

#include "maxreg/grid.hpp"
#include "maxreg/norm.hpp"

namespace maxreg {

// Lattice offsets of the closed mu-ball of one radius, lexicographically
// ordered. Centers and radii both live on the grid: radii are multiples of
// the spacing, centers are nodes.
struct BallStencil {
  NormSpec norm;
  int dim = 0;
  double spacing = 0.0;
  double radius = 0.0;
  Ivec halfwidth{};
  std::vector<Ivec> offsets;

  std::int64_t cell_count() const { return static_cast<std::int64_t>(offsets.size()); }
};

inline double max_feasible_radius(const Grid& grid, const NormSpec& norm) {
  double r = std::numeric_limits<double>::infinity();
  for (int a = 0; a < grid.dim; ++a) {
    double reach = (grid.counts[a] - 1) * grid.spacing;
    r = std::min(r, norm.is_box() ? reach / norm.weight(a) : reach);
  }
  return r;
}

namespace detail {

inline void check_norm_arity(const NormSpec& norm, int dim) {
  require(norm.warity == 0 || norm.warity == dim,
          "norm has " + std::to_string(norm.warity) + " weights but grid dimension is " +
              std::to_string(dim));
}

template <class Fn>
void for_each_box_offset(const Ivec& halfwidth, int dim, Fn&& fn) {
  Ivec o{};
  // lexicographic nested loops, innermost = last axis
  std::function<void(int)> rec = [&](int axis) {
    if (axis == dim) {
      fn(o);
      return;
    }
    for (int j = -halfwidth[axis]; j <= halfwidth[axis]; ++j) {
      o[axis] = j;
      rec(axis + 1);
    }
  };
  rec(0);
}

} // namespace detail

inline BallStencil stencil(const Grid& grid, const NormSpec& norm, double radius) {
  detail::check_norm_arity(norm, grid.dim);
  require(std::isfinite(radius) && radius > 0.0, "stencil radius must be positive");
  require(radius >= grid.spacing * (1.0 - 1e-12),
          "stencil radius " + fmt17(radius) + " is below the spacing " + fmt17(grid.spacing));
  double rmax = max_feasible_radius(grid, norm);
  require(radius <= rmax * (1.0 + 1e-12),
          "stencil radius " + fmt17(radius) + " exceeds the grid diameter; max feasible radius is " +
              fmt17(rmax));

  BallStencil st;
  st.norm = norm;
  st.dim = grid.dim;
  st.spacing = grid.spacing;
  st.radius = radius;
  for (int a = 0; a < grid.dim; ++a)
    st.halfwidth[a] = axis_halfwidth(norm, a, grid.spacing, radius);
  detail::for_each_box_offset(st.halfwidth, grid.dim, [&](const Ivec& o) {
    if (offset_inside(norm, o, grid.dim, grid.spacing, radius)) st.offsets.push_back(o);
  });
  return st;
}

// Radii {h, 2h, ...} up to min(cap, max half-extent, max feasible radius).
inline std::vector<double> radius_ladder(const Grid& grid, const NormSpec& norm,
                                         double cap = std::numeric_limits<double>::infinity()) {
  detail::check_norm_arity(norm, grid.dim);
  require(cap > 0.0, "radius cap must be positive");
  double emax = 0.0;
  for (int a = 0; a < grid.dim; ++a) emax = std::max(emax, grid.half_extent[a]);
  double top = std::min({cap, emax, max_feasible_radius(grid, norm)});
  int steps = static_cast<int>(std::floor(top / grid.spacing * (1.0 + 1e-12)));
  require(steps >= 1, "radius ladder is empty: cap " + fmt17(cap) + " is below the spacing " +
                          fmt17(grid.spacing));
  std::vector<double> radii(static_cast<std::size_t>(steps));
  for (int k = 1; k <= steps; ++k) radii[static_cast<std::size_t>(k - 1)] = k * grid.spacing;
  return radii;
}

// Offsets of ball k not in ball k-1; partition of the largest stencil.
inline std::vector<std::vector<Ivec>> build_rings(const Grid& grid, const NormSpec& norm,
                                                  std::span<const double> radii) {
  std::vector<std::vector<Ivec>> rings(radii.size());
  for (std::size_t k = 0; k < radii.size(); ++k) {
    Ivec hw{};
    for (int a = 0; a < grid.dim; ++a) hw[a] = axis_halfwidth(norm, a, grid.spacing, radii[k]);
    detail::for_each_box_offset(hw, grid.dim, [&](const Ivec& o) {
      if (!offset_inside(norm, o, grid.dim, grid.spacing, radii[k])) return;
      if (k > 0 && offset_inside(norm, o, grid.dim, grid.spacing, radii[k - 1])) return;
      rings[k].push_back(o);
    });
  }
  return rings;
}

// Debug dump: one offset vector per line.
inline void write_stencil_csv(std::ostream& os, const BallStencil& st) {
  os << "# maxreg-stencil v1 norm=" << st.norm.name() << " radius=" << fmt17(st.radius)
     << " spacing=" << fmt17(st.spacing) << " cells=" << st.cell_count() << "\n";
  for (const auto& o : st.offsets) {
    for (int a = 0; a < st.dim; ++a) os << (a ? "," : "") << o[a];
    os << "\n";
  }
}

} // namespace maxreg
