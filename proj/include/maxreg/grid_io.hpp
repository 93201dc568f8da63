#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "maxreg/grid.hpp"

namespace maxreg {

// Grid-function CSV: a single header line
//   # maxreg-grid v1 dim=<d> counts=<c1,...,cd> spacing=<h> half_extent=<e1,...,ed> ceiling=<c>
// followed by the values in row-major order, one last-axis row per line,
// comma separated, 17 significant digits.

inline void write_csv(std::ostream& os, const GridFunction& f) {
  const Grid& g = f.grid;
  os << "# maxreg-grid v1 dim=" << g.dim << " counts=";
  for (int a = 0; a < g.dim; ++a) os << (a ? "," : "") << g.counts[a];
  os << " spacing=" << fmt17(g.spacing) << " half_extent=";
  for (int a = 0; a < g.dim; ++a) os << (a ? "," : "") << fmt17(g.half_extent[a]);
  os << " ceiling=" << fmt17(f.ceiling) << "\n";
  int row = g.counts[g.dim - 1];
  std::int64_t n = g.node_count();
  for (std::int64_t i = 0; i < n; i += row) {
    for (int j = 0; j < row; ++j) {
      if (j) os << ',';
      os << fmt17(f.values[static_cast<std::size_t>(i + j)]);
    }
    os << "\n";
  }
}

inline void write_csv(const std::string& path, const GridFunction& f) {
  std::ofstream os(path);
  require(os.good(), "cannot open '" + path + "' for writing");
  write_csv(os, f);
  require(os.good(), "write failed on '" + path + "'");
}

namespace detail {

inline std::string header_field(const std::string& header, const std::string& key) {
  std::string needle = key + "=";
  std::size_t p = header.find(needle);
  require(p != std::string::npos, "grid csv header missing '" + key + "'");
  std::size_t b = p + needle.size();
  std::size_t e = header.find(' ', b);
  return header.substr(b, e == std::string::npos ? std::string::npos : e - b);
}

} // namespace detail

inline GridFunction read_csv(std::istream& is, Extension extension = Extension::Zero) {
  std::string header;
  require(static_cast<bool>(std::getline(is, header)), "empty grid csv");
  require(header.rfind("# maxreg-grid v1 ", 0) == 0, "not a maxreg-grid v1 csv");

  int dim = static_cast<int>(parse_long(detail::header_field(header, "dim"), "dim"));
  require(dim >= 1 && dim <= 3, "grid csv dimension must be 1, 2 or 3");
  auto count_strs = split(detail::header_field(header, "counts"), ',');
  auto extent_strs = split(detail::header_field(header, "half_extent"), ',');
  require(static_cast<int>(count_strs.size()) == dim, "grid csv counts arity mismatch");
  require(static_cast<int>(extent_strs.size()) == dim, "grid csv half_extent arity mismatch");

  Grid g;
  g.dim = dim;
  g.spacing = parse_double(detail::header_field(header, "spacing"), "spacing");
  require(g.spacing > 0.0 && std::isfinite(g.spacing), "grid csv spacing must be positive");
  for (int a = 0; a < dim; ++a) {
    long c = parse_long(count_strs[static_cast<std::size_t>(a)], "counts");
    require(c >= 3 && c % 2 == 1 && c < (1L << 25), "grid csv counts must be odd and >= 3");
    g.counts[a] = static_cast<int>(c);
    double e = parse_double(extent_strs[static_cast<std::size_t>(a)], "half_extent");
    double eff = g.spacing * ((c - 1) / 2);
    require(std::abs(e - eff) <= 1e-9 * std::max(1.0, eff),
            "grid csv half_extent inconsistent with counts and spacing");
    g.half_extent[a] = eff;
  }

  GridFunction f;
  f.grid = g;
  f.ceiling = parse_double(detail::header_field(header, "ceiling"), "ceiling");
  f.extension = extension;
  std::int64_t n = g.node_count();
  f.values.reserve(static_cast<std::size_t>(n));
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    for (const auto& tok : split(line, ',')) {
      require(static_cast<std::int64_t>(f.values.size()) < n, "grid csv has excess values");
      f.values.push_back(parse_double(trim(tok), "grid value"));
    }
  }
  require(static_cast<std::int64_t>(f.values.size()) == n,
          "grid csv value count mismatch: got " + std::to_string(f.values.size()) +
              ", want " + std::to_string(n));
  validate(f);
  return f;
}

inline GridFunction read_csv(const std::string& path, Extension extension = Extension::Zero) {
  std::ifstream is(path);
  require(is.good(), "cannot open '" + path + "'");
  return read_csv(is, extension);
}

inline std::string to_csv_string(const GridFunction& f) {
  std::ostringstream os;
  write_csv(os, f);
  return os.str();
}

inline GridFunction from_csv_string(const std::string& s, Extension extension = Extension::Zero) {
  std::istringstream is(s);
  return read_csv(is, extension);
}

} // namespace maxreg
