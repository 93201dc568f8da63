#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>

#include "json.hpp"
#include "maxreg/bd_check.hpp"

namespace maxreg {

// Variation of one grid line: sum of absolute successive differences, plus
// the jumps onto and off the line when the function is extended by zero
// outside the grid (a constant extension continues flat and adds nothing).
inline double variation_1d(std::span<const double> values, Extension extension) {
  require(!values.empty(), "variation of an empty line");
  long double total = 0.0L;
  for (std::size_t j = 1; j < values.size(); ++j) total += std::abs(values[j] - values[j - 1]);
  if (extension == Extension::Zero) total += values.front() + values.back();
  return static_cast<double>(total);
}

// Per-axis term of the directional decomposition: spacing^(d-1) times the sum
// of line variations over all grid lines parallel to the axis.
inline double partial_variation(const GridFunction& f, int axis) {
  const Grid& g = f.grid;
  require(axis >= 0 && axis < g.dim, "axis out of range");
  std::int64_t stride = 1;
  for (int a = axis + 1; a < g.dim; ++a) stride *= g.counts[a];
  int len = g.counts[axis];
  std::int64_t n = g.node_count();
  std::vector<double> line(static_cast<std::size_t>(len));
  long double total = 0.0L;
  for (std::int64_t i = 0; i < n; ++i) {
    if (g.unflat(i)[axis] != 0) continue;  // line starts only
    for (int j = 0; j < len; ++j) line[static_cast<std::size_t>(j)] = f[i + j * stride];
    total += variation_1d(line, f.extension);
  }
  return static_cast<double>(total * std::pow(static_cast<long double>(g.spacing), g.dim - 1));
}

// Closed-form boundary sum for block-decreasing inputs: per axis, the drop
// from the mid hyperplane to the outer face, summed over lines through the
// nonnegative cone and mirrored into the 2^d orthants. Shared hyperplanes are
// counted once per orthant, so this overshoots the directional sum by one
// line thickness. Input must be block decreasing.
inline double variation_bd_boundary(const GridFunction& f) {
  const Grid& g = f.grid;
  auto viol = check_block_decreasing(f, 1);
  if (!viol.empty())
    fail("boundary variation formula needs a block-decreasing input: " +
         describe(viol.front(), g.dim));
  long double total = 0.0L;
  for (int axis = 0; axis < g.dim; ++axis) {
    require(g.counts[axis] >= 3, "axis too short for the boundary formula");
    long double axis_sum = 0.0L;
    Ivec iv{};
    for (int a = 0; a < g.dim; ++a) iv[a] = g.center(a);
    while (true) {
      Ivec head = iv, face = iv;
      face[axis] = g.counts[axis] - 1;
      axis_sum += f.at(head) - f.at(face);
      int a = g.dim - 1;
      for (; a >= 0; --a) {
        if (a == axis) continue;
        if (++iv[a] < g.counts[a]) break;
        iv[a] = g.center(a);
      }
      if (a < 0) break;
    }
    total += axis_sum;
  }
  double orthants = std::ldexp(1.0, g.dim);
  return static_cast<double>(total) * orthants * std::pow(g.spacing, g.dim - 1);
}

struct VariationReport {
  Grid grid;
  Extension extension = Extension::Zero;
  std::vector<double> per_axis;
  double directional_sum = 0.0;
  double v_lower = 0.0;  // directional sum / sqrt(d)
  double v_upper = 0.0;  // directional sum
  std::optional<double> bd_boundary_sum;  // only for block-decreasing inputs
  std::optional<double> boundary_residual;  // relative gap of the boundary sum
  double face_residual = 0.0;  // largest value on the domain boundary (tail risk)
};

inline double boundary_face_max(const GridFunction& f) {
  const Grid& g = f.grid;
  double m = 0.0;
  std::int64_t n = g.node_count();
  for (std::int64_t i = 0; i < n; ++i) {
    Ivec iv = g.unflat(i);
    for (int a = 0; a < g.dim; ++a)
      if (iv[a] == 0 || iv[a] == g.counts[a] - 1) {
        m = std::max(m, f[i]);
        break;
      }
  }
  return m;
}

inline VariationReport variation_directional(const GridFunction& f) {
  validate(f);
  VariationReport rep;
  rep.grid = f.grid;
  rep.extension = f.extension;
  long double sum = 0.0L;
  for (int a = 0; a < f.grid.dim; ++a) {
    rep.per_axis.push_back(partial_variation(f, a));
    sum += rep.per_axis.back();
  }
  rep.directional_sum = static_cast<double>(sum);
  rep.v_lower = rep.directional_sum / std::sqrt(static_cast<double>(f.grid.dim));
  rep.v_upper = rep.directional_sum;
  if (is_block_decreasing(f)) {
    rep.bd_boundary_sum = variation_bd_boundary(f);
    rep.boundary_residual =
        rep.directional_sum > 0.0
            ? (*rep.bd_boundary_sum - rep.directional_sum) / rep.directional_sum
            : 0.0;
  }
  rep.face_residual = boundary_face_max(f);
  return rep;
}

inline nlohmann::json to_json(const VariationReport& rep) {
  nlohmann::json j;
  j["method"] = "axis-decomposition";
  j["grid"]["dim"] = rep.grid.dim;
  j["grid"]["counts"] =
      std::vector<int>(rep.grid.counts.begin(), rep.grid.counts.begin() + rep.grid.dim);
  j["grid"]["spacing"] = rep.grid.spacing;
  j["grid"]["half_extent"] =
      std::vector<double>(rep.grid.half_extent.begin(), rep.grid.half_extent.begin() + rep.grid.dim);
  j["extension"] = extension_name(rep.extension);
  j["per_axis"] = rep.per_axis;
  j["directional_sum"] = rep.directional_sum;
  j["v_lower"] = rep.v_lower;
  j["v_upper"] = rep.v_upper;
  if (rep.bd_boundary_sum) {
    j["bd_boundary_sum"] = *rep.bd_boundary_sum;
    j["boundary_residual"] = *rep.boundary_residual;
  } else {
    j["bd_boundary_sum"] = nullptr;
    j["boundary_residual"] = nullptr;
  }
  j["face_residual"] = rep.face_residual;
  return j;
}

inline void write_variation_json(const std::filesystem::path& path, const VariationReport& rep) {
  std::ofstream os(path);
  require(bool(os), "cannot open " + path.string() + " for writing");
  os << to_json(rep).dump(2) << "\n";
  require(bool(os), "failed writing " + path.string());
}

} // namespace maxreg
