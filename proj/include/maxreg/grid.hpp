#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "maxreg/core.hpp"

namespace maxreg {

// Out-of-domain values: constant continuation of the boundary face vs. zero.
enum class Extension { Clamp, Zero };

inline const char* extension_name(Extension e) {
  return e == Extension::Clamp ? "constant" : "zero";
}

inline Extension extension_from_name(const std::string& s) {
  if (s == "constant") return Extension::Clamp;
  if (s == "zero") return Extension::Zero;
  fail("unknown extension rule '" + s + "' (want constant|zero)");
}

// Origin-symmetric uniform grid with an odd node count per axis.
struct Grid {
  int dim = 0;
  Ivec counts{};        // odd per axis
  double spacing = 0.0; // uniform
  Dvec half_extent{};   // effective: spacing * (counts-1)/2

  std::int64_t node_count() const {
    std::int64_t n = 1;
    for (int a = 0; a < dim; ++a) n *= counts[a];
    return n;
  }

  int center(int axis) const { return counts[axis] / 2; }

  double coord(int axis, int idx) const { return (idx - center(axis)) * spacing; }

  bool in_bounds(const Ivec& iv) const {
    for (int a = 0; a < dim; ++a)
      if (iv[a] < 0 || iv[a] >= counts[a]) return false;
    return true;
  }

  std::int64_t flat(const Ivec& iv) const {
    std::int64_t f = 0;
    for (int a = 0; a < dim; ++a) f = f * counts[a] + iv[a];
    return f;
  }

  Ivec unflat(std::int64_t f) const {
    Ivec iv{};
    for (int a = dim - 1; a >= 0; --a) {
      iv[a] = static_cast<int>(f % counts[a]);
      f /= counts[a];
    }
    return iv;
  }

  Dvec coords(const Ivec& iv) const {
    Dvec x{};
    for (int a = 0; a < dim; ++a) x[a] = coord(a, iv[a]);
    return x;
  }

  // Index with every axis folded to the nonnegative half (>= center).
  Ivec fold(const Ivec& iv) const {
    Ivec r{};
    for (int a = 0; a < dim; ++a) {
      int c = center(a);
      r[a] = c + std::abs(iv[a] - c);
    }
    return r;
  }

  bool operator==(const Grid&) const = default;
};

inline Grid make_grid(int dim, std::span<const double> half_extent, double spacing) {
  require(dim >= 1 && dim <= 3, "grid dimension must be 1, 2 or 3");
  require(static_cast<int>(half_extent.size()) == dim, "half_extent size must match dimension");
  require(spacing > 0.0 && std::isfinite(spacing), "spacing must be positive and finite");
  Grid g;
  g.dim = dim;
  g.spacing = spacing;
  for (int a = 0; a < dim; ++a) {
    double e = half_extent[a];
    require(std::isfinite(e) && e > 0.0, "half_extent must be positive and finite");
    require(spacing <= e, "spacing exceeds half_extent on axis " + std::to_string(a));
    auto half_cells = std::llround(e / spacing);
    require(half_cells >= 1, "grid degenerate on axis " + std::to_string(a));
    require(half_cells < (1 << 24), "grid too large on axis " + std::to_string(a));
    g.counts[a] = static_cast<int>(2 * half_cells + 1);
    g.half_extent[a] = spacing * static_cast<double>(half_cells);
  }
  return g;
}

inline Grid make_grid(int dim, double half_extent, double spacing) {
  Dvec e{};
  for (int a = 0; a < dim; ++a) e[a] = half_extent;
  return make_grid(dim, std::span<const double>(e.data(), dim), spacing);
}

// Nonnegative values on a grid, capped by ceiling, with an extension rule for
// everything outside the box.
struct GridFunction {
  Grid grid;
  std::vector<double> values;
  double ceiling = 0.0;
  Extension extension = Extension::Zero;

  double operator[](std::int64_t f) const { return values[static_cast<std::size_t>(f)]; }
  double at(const Ivec& iv) const { return values[static_cast<std::size_t>(grid.flat(iv))]; }

  // Value at an arbitrary (possibly out-of-range) index vector.
  double extended(Ivec iv) const {
    bool out = false;
    for (int a = 0; a < grid.dim; ++a) {
      if (iv[a] < 0) {
        iv[a] = 0;
        out = true;
      } else if (iv[a] >= grid.counts[a]) {
        iv[a] = grid.counts[a] - 1;
        out = true;
      }
    }
    if (out && extension == Extension::Zero) return 0.0;
    return at(iv);
  }
};

inline void validate(const GridFunction& f) {
  require(f.grid.dim >= 1, "grid function has no grid");
  require(std::isfinite(f.ceiling) && f.ceiling > 0.0, "ceiling must be positive and finite");
  require(static_cast<std::int64_t>(f.values.size()) == f.grid.node_count(),
          "value count does not match grid");
  for (double v : f.values)
    require(std::isfinite(v) && v >= 0.0 && v <= f.ceiling,
            "grid values must lie in [0, ceiling]");
}

template <class Fn>
GridFunction sample(const Grid& grid, Fn&& fn, double ceiling,
                    Extension extension = Extension::Zero) {
  require(std::isfinite(ceiling) && ceiling > 0.0, "ceiling must be positive and finite");
  GridFunction out;
  out.grid = grid;
  out.ceiling = ceiling;
  out.extension = extension;
  out.values.resize(static_cast<std::size_t>(grid.node_count()));
  std::int64_t n = grid.node_count();
  for (std::int64_t i = 0; i < n; ++i) {
    Ivec iv = grid.unflat(i);
    double v = fn(grid.coords(iv));
    require(!std::isnan(v), "sampled NaN at node " + std::to_string(i));
    require(v >= 0.0, "sampled negative value at node " + std::to_string(i));
    out.values[static_cast<std::size_t>(i)] = std::min(v, ceiling);
  }
  return out;
}

} // namespace maxreg
