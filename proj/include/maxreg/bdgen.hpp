#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "maxreg/bd_check.hpp"
#include "maxreg/stencil.hpp"

namespace maxreg {

// ---------------------------------------------------------------------------
// counterexample profile: g(u) = g0(lambda*u) on [0,4], zero beyond, where
// g0(v) = min(1, 1/(v*log^2(e+v))) and lambda is tuned so the mass on [0,4]
// is one. Heavy tail, unit peak, monotone.

namespace detail {

inline double g_base(double v) {
  if (v <= 0.0) return 1.0;
  double lg = std::log(std::exp(1.0) + v);
  return std::min(1.0, 1.0 / (v * lg * lg));
}

inline double g_base_mass(double lambda) {
  // composite Simpson for the integral of g_base(lambda*u) over [0,4]
  const int n = 1 << 14;
  const double h = 4.0 / n;
  long double s = g_base(0.0) + g_base(lambda * 4.0);
  for (int j = 1; j < n; ++j) s += (j % 2 ? 4.0L : 2.0L) * g_base(lambda * (j * h));
  return static_cast<double>(s * h / 3.0L);
}

} // namespace detail

inline double counterexample_lambda() {
  static const double lam = [] {
    double lo = 1.0, hi = 2.0;  // mass is decreasing in lambda and brackets 1
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (lo + hi);
      (detail::g_base_mass(mid) > 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }();
  return lam;
}

inline double counterexample_g(double u) {
  u = std::abs(u);
  if (u > 4.0) return 0.0;
  return detail::g_base(counterexample_lambda() * u);
}

inline double profile_g(const std::string& tag, double u) {
  if (tag == "log2") return counterexample_g(u);
  if (tag == "constant") return std::abs(u) <= 4.0 ? 1.0 : 0.0;
  fail("unknown separable profile '" + tag + "' (want log2|constant)");
}

// trapezoid mass of the 1-d profile over [0,4]; uses a fixed fine spacing by
// default so the verdict does not depend on the grid it is sampled to
inline double g_discrete_mass(const std::string& tag, double spacing = 1.0 / 1024) {
  require(spacing > 0.0 && spacing <= 1.0, "profile mass needs a spacing in (0,1]");
  auto steps = static_cast<std::int64_t>(std::llround(4.0 / spacing));
  long double s = 0.5L * (profile_g(tag, 0.0) + profile_g(tag, 4.0));
  for (std::int64_t j = 1; j < steps; ++j) s += profile_g(tag, static_cast<double>(j) * spacing);
  return static_cast<double>(s * spacing);
}

// ---------------------------------------------------------------------------
// profile catalogue

struct ProfileSpec {
  enum class Family { Square, QuasiBall, Radial, Separable };
  enum class Shape { Exp, Gauss, Ramp };

  Family family = Family::Square;
  int dim = 2;
  double box = 1.0;  // recommended half extent

  double side = 1.0;                // square
  double p = 1.0, radius = 1.0;     // quasiball
  NormSpec norm = norm_linf();      // radial metric
  Shape shape = Shape::Exp;         // radial profile
  double rate = 4.0;                // exp/gauss decay
  int m = 1;                        // separable frequency
  std::string g_tag = "log2";       // separable profile

  double ceiling() const {
    return family == Family::Separable ? static_cast<double>(m) : 1.0;
  }

  double value(const Dvec& x) const {
    switch (family) {
      case Family::Square: {
        double r = 0.0;
        for (int a = 0; a < dim; ++a) r = std::max(r, std::abs(x[a]));
        return r <= side / 2 ? 1.0 : 0.0;
      }
      case Family::QuasiBall: {
        double s = 0.0;
        for (int a = 0; a < dim; ++a) s += std::pow(std::abs(x[a]), p);
        return s <= std::pow(radius, p) ? 1.0 : 0.0;
      }
      case Family::Radial: {
        double r = mu(norm, x, dim);
        switch (shape) {
          case Shape::Exp: return std::exp(-rate * r);
          case Shape::Gauss: return std::exp(-rate * r * r);
          case Shape::Ramp: return std::max(0.0, 1.0 - r);
        }
        return 0.0;
      }
      case Family::Separable:
        return m * profile_g(g_tag, m * std::abs(x[0])) * profile_g(g_tag, std::abs(x[1]));
    }
    return 0.0;
  }

  std::string id() const {
    auto num = [](double v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", v);
      return std::string(buf);
    };
    switch (family) {
      case Family::Square: return "square-" + num(side);
      case Family::QuasiBall:
        return "qball-p" + num(p) + (radius == 1.0 ? "" : "-r" + num(radius));
      case Family::Radial: {
        std::string tag = norm.name();
        for (char& c : tag) {
          if (c == ':') c = '-';
          if (c == ',') c = 'x';
        }
        std::string sh = shape == Shape::Exp    ? "exp" + num(rate)
                         : shape == Shape::Gauss ? "gauss" + num(rate)
                                                 : "ramp";
        return "radial-" + tag + "-" + sh;
      }
      case Family::Separable: return "sep-m" + std::to_string(m);
    }
    return "?";
  }
};

inline void validate_profile(const ProfileSpec& spec) {
  require(spec.dim >= 1 && spec.dim <= max_dim, "profile dimension out of range");
  require(spec.box > 0.0, "profile box must be positive");
  switch (spec.family) {
    case ProfileSpec::Family::Square:
      require(spec.side > 0.0, "square side must be positive");
      break;
    case ProfileSpec::Family::QuasiBall:
      require(spec.p > 0.0 && spec.p <= 1.0, "quasiball exponent must lie in (0,1]");
      require(spec.radius > 0.0, "quasiball radius must be positive");
      break;
    case ProfileSpec::Family::Radial:
      require(spec.rate > 0.0, "radial decay rate must be positive");
      require(spec.norm.warity == 0 || spec.norm.warity == spec.dim,
              "radial metric weights must match the dimension");
      break;
    case ProfileSpec::Family::Separable:
      require(spec.dim == 2, "separable profiles are two-dimensional");
      require(spec.m >= 1, "separable frequency must be at least 1");
      profile_g(spec.g_tag, 0.0);  // tag must resolve
      break;
  }
}

// "<family> key=value ...", e.g. "radial norm=l2 shape=exp rate=4 box=1.5".
// Families: square(side), qball(p,radius), radial(norm,shape,rate),
// separable(m,g); all take box and dim.
inline ProfileSpec parse_profile(const std::string& text) {
  std::istringstream is(text);
  std::string tok;
  require(bool(is >> tok), "empty profile description");
  ProfileSpec spec;
  if (tok == "square") {
    spec.family = ProfileSpec::Family::Square;
    spec.box = 1.0;
  } else if (tok == "qball") {
    spec.family = ProfileSpec::Family::QuasiBall;
    spec.box = 1.25;
  } else if (tok == "radial") {
    spec.family = ProfileSpec::Family::Radial;
    spec.box = 1.5;
  } else if (tok == "separable") {
    spec.family = ProfileSpec::Family::Separable;
    spec.box = 4.5;
  } else {
    fail("unknown profile family '" + tok + "' (want square|qball|radial|separable)");
  }
  using F = ProfileSpec::Family;
  while (is >> tok) {
    auto eq = tok.find('=');
    require(eq != std::string::npos, "profile token '" + tok + "' is not key=value");
    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "box") {
      spec.box = parse_double(val, "profile box");
    } else if (key == "dim") {
      spec.dim = static_cast<int>(parse_double(val, "profile dim"));
    } else if (key == "side" && spec.family == F::Square) {
      spec.side = parse_double(val, "square side");
    } else if (key == "p" && spec.family == F::QuasiBall) {
      spec.p = parse_double(val, "quasiball exponent");
    } else if (key == "radius" && spec.family == F::QuasiBall) {
      spec.radius = parse_double(val, "quasiball radius");
    } else if (key == "norm" && spec.family == F::Radial) {
      spec.norm = parse_norm(val);
    } else if (key == "shape" && spec.family == F::Radial) {
      if (val == "exp") spec.shape = ProfileSpec::Shape::Exp;
      else if (val == "gauss") spec.shape = ProfileSpec::Shape::Gauss;
      else if (val == "ramp") spec.shape = ProfileSpec::Shape::Ramp;
      else fail("unknown radial shape '" + val + "' (want exp|gauss|ramp)");
    } else if (key == "rate" && spec.family == F::Radial) {
      spec.rate = parse_double(val, "radial rate");
    } else if (key == "m" && spec.family == F::Separable) {
      spec.m = static_cast<int>(parse_double(val, "separable frequency"));
    } else if (key == "g" && spec.family == F::Separable) {
      spec.g_tag = val;
    } else {
      fail("profile key '" + key + "' does not apply here");
    }
  }
  validate_profile(spec);
  return spec;
}

// Samples are snapped to the dyadic lattice 2^-40.  Sums of up to ~2^18 such
// cells (values <= 64) are then exact in a 64-bit accumulator, so every ball
// average is correctly rounded no matter how it is assembled: prefix-sum
// boxes, incremental rings, and mirrored evaluation all agree to the bit, and
// candidate pruning cannot be inverted by rounding noise.
inline double snap_sample(double v) { return std::ldexp(std::nearbyint(std::ldexp(v, 40)), -40); }

inline GridFunction generate(const ProfileSpec& spec, const Grid& grid,
                             Extension extension = Extension::Zero) {
  validate_profile(spec);
  require(grid.dim == spec.dim, "profile dimension does not match the grid");
  if (spec.family == ProfileSpec::Family::Separable) {
    double mass = g_discrete_mass(spec.g_tag);
    if (std::abs(mass - 1.0) > 0.005)
      fail("separable profile '" + spec.g_tag + "' fails the unit-mass normalization: mass=" +
           fmt17(mass));
  }
  return sample(grid, [&](const Dvec& x) { return snap_sample(spec.value(x)); }, spec.ceiling(),
                extension);
}

inline GridFunction generate(const ProfileSpec& spec, double spacing,
                             Extension extension = Extension::Zero) {
  return generate(spec, make_grid(spec.dim, spec.box, spacing), extension);
}

// fixed catalogue used by the verification sweeps; ids are stable
inline std::vector<ProfileSpec> corpus(int dim) {
  require(dim == 2 || dim == 3, "corpus covers d=2 and d=3");
  std::vector<std::string> texts = {
      "square side=1",
      "square side=1.5 box=1.5",
      "qball p=1",
      "qball p=0.5",
      "radial norm=linf shape=exp rate=4",
      "radial norm=l1 shape=exp rate=4",
      "radial norm=l2 shape=exp rate=4",
      "radial norm=l2 shape=gauss rate=4",
      "radial norm=linf shape=ramp box=1.25",
      "radial norm=l2 shape=ramp box=1.25",
  };
  texts.push_back(dim == 2 ? "radial norm=rect:2,1 shape=exp rate=4 box=2.5"
                           : "radial norm=rect:2,1,1 shape=exp rate=4 box=2.5");
  if (dim == 2) {
    texts.push_back("separable m=1");
    texts.push_back("separable m=4");
  }
  std::vector<ProfileSpec> out;
  for (const std::string& t : texts) {
    ProfileSpec spec = parse_profile(t + (dim == 3 ? " dim=3" : ""));
    out.push_back(spec);
  }
  return out;
}

inline const ProfileSpec& find_profile(const std::vector<ProfileSpec>& specs,
                                       const std::string& id) {
  for (const ProfileSpec& s : specs)
    if (s.id() == id) return s;
  fail("no corpus profile with id '" + id + "'");
}

// ---------------------------------------------------------------------------
// node-wise representative: best radius-h average over the 3^d neighbouring
// centers; flattens sampling artifacts while preserving block decrease

inline GridFunction precise_rep(const GridFunction& f, const NormSpec& norm = norm_linf()) {
  validate(f);
  const Grid& g = f.grid;
  auto offs = stencil(g, norm, g.spacing).offsets;
  auto cells = static_cast<long double>(offs.size());
  GridFunction out;
  out.grid = g;
  out.ceiling = f.ceiling;
  out.extension = f.extension;
  out.values.resize(static_cast<std::size_t>(g.node_count()));
  std::int64_t nshift = 1;
  for (int a = 0; a < g.dim; ++a) nshift *= 3;
  std::int64_t n = g.node_count();
  for (std::int64_t i = 0; i < n; ++i) {
    Ivec iv = g.unflat(i);
    double best = 0.0;
    bool any = false;
    for (std::int64_t t = 0; t < nshift; ++t) {
      Ivec c = iv;
      std::int64_t rem = t;
      for (int a = 0; a < g.dim; ++a) {
        c[a] += static_cast<int>(rem % 3) - 1;
        rem /= 3;
      }
      if (!g.in_bounds(c)) continue;
      long double s = 0.0L;
      for (const Ivec& o : offs) {
        Ivec jv = c;
        for (int a = 0; a < g.dim; ++a) jv[a] += o[a];
        s += f.extended(jv);
      }
      double avg = static_cast<double>(s / cells);
      if (!any || avg > best) best = avg;
      any = true;
    }
    out.values[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

// ---------------------------------------------------------------------------
// jump detection: adjacent node pairs whose difference clears the threshold,
// reported as a face set with a surface measure

struct JumpFace {
  int axis = 0;
  std::int64_t node = 0;  // face between node and its +axis neighbour
  double jump = 0.0;      // signed difference, next minus current
};

struct JumpEstimate {
  Grid grid;
  double threshold = 0.0;
  std::vector<JumpFace> faces;
  double total_length = 0.0;  // face count * spacing^(d-1)
};

inline JumpEstimate jump_estimate(const GridFunction& f, double threshold) {
  validate(f);
  require(std::isfinite(threshold) && threshold > 0.0, "jump threshold must be positive");
  const Grid& g = f.grid;
  JumpEstimate est;
  est.grid = g;
  est.threshold = threshold;
  std::int64_t n = g.node_count();
  for (int axis = 0; axis < g.dim; ++axis) {
    std::int64_t stride = 1;
    for (int a = axis + 1; a < g.dim; ++a) stride *= g.counts[a];
    for (std::int64_t i = 0; i < n; ++i) {
      if (g.unflat(i)[axis] + 1 >= g.counts[axis]) continue;
      double d = f[i + stride] - f[i];
      if (std::abs(d) >= threshold) est.faces.push_back({axis, i, d});
    }
  }
  est.total_length =
      static_cast<double>(est.faces.size()) * std::pow(g.spacing, g.dim - 1);
  return est;
}

inline void write_jump_csv(std::ostream& os, const JumpEstimate& est) {
  os << "# maxreg-jump v1 faces=" << est.faces.size() << " threshold=" << fmt17(est.threshold)
     << " total_length=" << fmt17(est.total_length) << "\n";
  os << "face_axis,node_index,jump\n";
  for (const JumpFace& face : est.faces)
    os << face.axis << "," << face.node << "," << fmt17(face.jump) << "\n";
}

inline void write_jump_csv(const std::filesystem::path& path, const JumpEstimate& est) {
  std::ofstream os(path);
  require(bool(os), "cannot open " + path.string() + " for writing");
  write_jump_csv(os, est);
  require(bool(os), "failed writing " + path.string());
}

} // namespace maxreg
