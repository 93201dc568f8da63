#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "maxreg/bd_check.hpp"
#include "maxreg/box_sum.hpp"
#include "maxreg/stencil.hpp"

namespace maxreg {

struct MaxOptions {
  double radius_cap = std::numeric_limits<double>::infinity();
  int threads = 0;  // 0 = hardware default
  bool record_witnesses = true;
};

struct MaxRecord {
  double value;
  Ivec center;
  double radius;
};

// Pointwise supremum of ball averages over the radius ladder of a grid,
// optionally with a per-node witness: the attaining (center, radius) pair.
// The reference engine reports the smallest attaining radius and, within it,
// the lexicographically smallest center; pruning engines return identical
// values but may attain them at a different witness.
struct MaxField {
  Grid grid;
  NormSpec norm;
  Extension extension = Extension::Zero;
  double ceiling = 0.0;
  double radius_cap = 0.0;  // as requested; may be infinite
  double max_radius = 0.0;  // top rung of the ladder actually used
  std::string method;
  std::vector<double> values;
  std::vector<Ivec> witness_center;
  std::vector<double> witness_radius;

  bool has_witnesses() const { return !witness_center.empty(); }

  MaxRecord record(std::int64_t i) const {
    require(has_witnesses(), "max field has no recorded witnesses");
    require(i >= 0 && i < grid.node_count(), "node index out of range");
    auto u = static_cast<std::size_t>(i);
    return {values[u], witness_center[u], witness_radius[u]};
  }

  GridFunction as_grid_function() const { return GridFunction{grid, values, ceiling, extension}; }
};

// Straightforward compensated average over one ball; the independent check
// the engines are tested against.
inline double ball_average(const GridFunction& f, const Ivec& center, const BallStencil& st) {
  require(f.grid.in_bounds(center), "ball center lies outside the grid");
  Kahan acc;
  Ivec iv{};
  for (const Ivec& o : st.offsets) {
    for (int a = 0; a < f.grid.dim; ++a) iv[a] = center[a] + o[a];
    acc.add(f.extended(iv));
  }
  return acc.get() / static_cast<double>(st.cell_count());
}

namespace detail {

inline Ivec shifted(const Ivec& iv, const Ivec& o, int dim, int sign) {
  Ivec r{};
  for (int a = 0; a < dim; ++a) r[a] = iv[a] + sign * o[a];
  return r;
}

inline bool lex_less(const Ivec& a, const Ivec& b, int dim) {
  for (int i = 0; i < dim; ++i)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

struct Ladder {
  std::vector<double> radii;
  std::vector<Ivec> hw;            // per-rung axis halfwidths
  std::vector<std::int64_t> cc;    // per-rung ball cell counts
  std::vector<std::vector<Ivec>> rings;  // only for non-box norms
};

inline Ladder box_ladder(const Grid& g, const NormSpec& norm, double cap) {
  Ladder L;
  L.radii = radius_ladder(g, norm, cap);
  for (double r : L.radii) {
    Ivec h{};
    std::int64_t c = 1;
    for (int a = 0; a < g.dim; ++a) {
      h[a] = axis_halfwidth(norm, a, g.spacing, r);
      c *= 2 * h[a] + 1;
    }
    L.hw.push_back(h);
    L.cc.push_back(c);
  }
  return L;
}

inline Ladder ring_ladder(const Grid& g, const NormSpec& norm, double cap) {
  Ladder L;
  L.radii = radius_ladder(g, norm, cap);
  L.rings = build_rings(g, norm, L.radii);
  std::int64_t run = 0;
  for (std::size_t k = 0; k < L.radii.size(); ++k) {
    run += static_cast<std::int64_t>(L.rings[k].size());
    L.cc.push_back(run);
    Ivec h{};
    for (int a = 0; a < g.dim; ++a) h[a] = axis_halfwidth(norm, a, g.spacing, L.radii[k]);
    L.hw.push_back(h);
  }
  return L;
}

inline MaxField init_field(const GridFunction& f, const NormSpec& norm, const MaxOptions& opt,
                           double top_radius, const char* method) {
  MaxField mf;
  mf.grid = f.grid;
  mf.norm = norm;
  mf.extension = f.extension;
  mf.ceiling = f.ceiling;
  mf.radius_cap = opt.radius_cap;
  mf.max_radius = top_radius;
  mf.method = method;
  mf.values.assign(static_cast<std::size_t>(f.grid.node_count()), -1.0);
  if (opt.record_witnesses) {
    mf.witness_center.assign(mf.values.size(), Ivec{});
    mf.witness_radius.assign(mf.values.size(), 0.0);
  }
  return mf;
}

// Cone = nodes with every coordinate at or beyond the center index. The
// pruned engines compute there and mirror outward.
struct Cone {
  Ivec dims{};
  std::int64_t count = 1;

  explicit Cone(const Grid& g) {
    for (int a = 0; a < g.dim; ++a) {
      dims[a] = g.counts[a] - g.center(a);
      count *= dims[a];
    }
  }

  Ivec node(const Grid& g, std::int64_t t) const {
    Ivec iv{};
    for (int a = g.dim - 1; a >= 0; --a) {
      iv[a] = g.center(a) + static_cast<int>(t % dims[a]);
      t /= dims[a];
    }
    return iv;
  }
};

inline void reflect_from_cone(MaxField& mf, int threads) {
  const Grid& g = mf.grid;
  bool record = mf.has_witnesses();
  parallel_for(g.node_count(), threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t x = lo; x < hi; ++x) {
      Ivec iv = g.unflat(x);
      Ivec fo = g.fold(iv);
      if (fo == iv) continue;
      auto src = static_cast<std::size_t>(g.flat(fo));
      auto dst = static_cast<std::size_t>(x);
      mf.values[dst] = mf.values[src];
      if (record) {
        Ivec c = mf.witness_center[src];
        for (int a = 0; a < g.dim; ++a)
          if (iv[a] < g.center(a)) c[a] = 2 * g.center(a) - c[a];
        mf.witness_center[dst] = c;
        mf.witness_radius[dst] = mf.witness_radius[src];
      }
    }
  });
}

inline void run_box_brute(const GridFunction& f, const Ladder& L, int threads, MaxField& mf) {
  const Grid& g = f.grid;
  BoxSummer sums(f);
  std::int64_t n = g.node_count();
  std::vector<double> avg(static_cast<std::size_t>(n));
  bool record = mf.has_witnesses();
  for (std::size_t k = 0; k < L.radii.size(); ++k) {
    const Ivec hw = L.hw[k];
    const auto cc = static_cast<long double>(L.cc[k]);
    parallel_for(n, threads, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t c = lo; c < hi; ++c) {
        Ivec iv = g.unflat(c);
        avg[static_cast<std::size_t>(c)] = static_cast<double>(
            sums.box_sum(shifted(iv, hw, g.dim, -1), shifted(iv, hw, g.dim, +1)) / cc);
      }
    });
    double radius = L.radii[k];
    parallel_for(n, threads, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t x = lo; x < hi; ++x) {
        Ivec iv = g.unflat(x);
        Ivec blo{}, bhi{};
        for (int a = 0; a < g.dim; ++a) {
          blo[a] = std::max(0, iv[a] - hw[a]);
          bhi[a] = std::min(g.counts[a] - 1, iv[a] + hw[a]);
        }
        auto u = static_cast<std::size_t>(x);
        double best = mf.values[u];
        std::int64_t arg = -1;
        auto scan = [&](std::int64_t base) {
          const double* row = avg.data() + base;
          double m = best;
          for (int j = blo[g.dim - 1]; j <= bhi[g.dim - 1]; ++j) m = std::max(m, row[j]);
          if (m > best) {
            best = m;
            for (int j = blo[g.dim - 1]; j <= bhi[g.dim - 1]; ++j)
              if (row[j] == m) {
                arg = base + j;
                break;
              }
          }
        };
        if (g.dim == 1) {
          scan(0);
        } else if (g.dim == 2) {
          for (int c0 = blo[0]; c0 <= bhi[0]; ++c0)
            scan(static_cast<std::int64_t>(c0) * g.counts[1]);
        } else {
          for (int c0 = blo[0]; c0 <= bhi[0]; ++c0)
            for (int c1 = blo[1]; c1 <= bhi[1]; ++c1)
              scan((static_cast<std::int64_t>(c0) * g.counts[1] + c1) * g.counts[2]);
        }
        if (arg >= 0) {
          mf.values[u] = best;
          if (record) {
            mf.witness_center[u] = g.unflat(arg);
            mf.witness_radius[u] = radius;
          }
        }
      }
    });
  }
}

inline void run_box_pruned(const GridFunction& f, const Ladder& L, int threads, MaxField& mf) {
  const Grid& g = f.grid;
  BoxSummer sums(f);
  Cone cone(g);
  bool record = mf.has_witnesses();
  parallel_for(cone.count, threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t t = lo; t < hi; ++t) {
      Ivec iv = cone.node(g, t);
      auto u = static_cast<std::size_t>(g.flat(iv));
      double best = -1.0, bestr = 0.0;
      Ivec bestc{};
      for (std::size_t k = 0; k < L.radii.size(); ++k) {
        const Ivec& hw = L.hw[k];
        // The farthest candidate toward the origin dominates every other
        // center whose ball contains the node, because ball averages of a
        // block-decreasing function are themselves block decreasing.
        Ivec c{};
        for (int a = 0; a < g.dim; ++a) c[a] = std::max(g.center(a), iv[a] - hw[a]);
        double v = static_cast<double>(
            sums.box_sum(shifted(c, hw, g.dim, -1), shifted(c, hw, g.dim, +1)) /
            static_cast<long double>(L.cc[k]));
        if (v > best) {
          best = v;
          bestr = L.radii[k];
          bestc = c;
        }
      }
      mf.values[u] = best;
      if (record) {
        mf.witness_center[u] = bestc;
        mf.witness_radius[u] = bestr;
      }
    }
  });
  reflect_from_cone(mf, threads);
}

inline void run_box_centered(const GridFunction& f, const Ladder& L, int threads, MaxField& mf) {
  const Grid& g = f.grid;
  BoxSummer sums(f);
  bool record = mf.has_witnesses();
  parallel_for(g.node_count(), threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t x = lo; x < hi; ++x) {
      Ivec iv = g.unflat(x);
      auto u = static_cast<std::size_t>(x);
      double best = -1.0, bestr = 0.0;
      for (std::size_t k = 0; k < L.radii.size(); ++k) {
        const Ivec& hw = L.hw[k];
        double v = static_cast<double>(
            sums.box_sum(shifted(iv, hw, g.dim, -1), shifted(iv, hw, g.dim, +1)) /
            static_cast<long double>(L.cc[k]));
        if (v > best) {
          best = v;
          bestr = L.radii[k];
        }
      }
      mf.values[u] = best;
      if (record) {
        mf.witness_center[u] = iv;
        mf.witness_radius[u] = bestr;
      }
    }
  });
}

inline void run_ring_brute(const GridFunction& f, const Ladder& L, int threads, MaxField& mf) {
  const Grid& g = f.grid;
  std::int64_t n = g.node_count();
  std::vector<long double> sum(static_cast<std::size_t>(n), 0.0L);
  std::vector<double> avg(static_cast<std::size_t>(n));
  std::vector<Ivec> ball;
  bool record = mf.has_witnesses();
  for (std::size_t k = 0; k < L.radii.size(); ++k) {
    const auto& ring = L.rings[k];
    const auto cc = static_cast<long double>(L.cc[k]);
    parallel_for(n, threads, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t c = lo; c < hi; ++c) {
        Ivec iv = g.unflat(c);
        auto u = static_cast<std::size_t>(c);
        long double s = sum[u];
        for (const Ivec& o : ring) s += f.extended(shifted(iv, o, g.dim, +1));
        sum[u] = s;
        avg[u] = static_cast<double>(s / cc);
      }
    });
    std::vector<Ivec> merged;
    merged.reserve(ball.size() + ring.size());
    std::merge(ball.begin(), ball.end(), ring.begin(), ring.end(), std::back_inserter(merged),
               [&](const Ivec& a, const Ivec& b) { return lex_less(a, b, g.dim); });
    ball = std::move(merged);
    double radius = L.radii[k];
    parallel_for(n, threads, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t x = lo; x < hi; ++x) {
        Ivec iv = g.unflat(x);
        auto u = static_cast<std::size_t>(x);
        double best = mf.values[u];
        std::int64_t arg = -1;
        for (const Ivec& o : ball) {
          Ivec c = shifted(iv, o, g.dim, +1);
          if (!g.in_bounds(c)) continue;
          std::int64_t cf = g.flat(c);
          double v = avg[static_cast<std::size_t>(cf)];
          if (v > best) {
            best = v;
            arg = cf;
          }
        }
        if (arg >= 0) {
          mf.values[u] = best;
          if (record) {
            mf.witness_center[u] = g.unflat(arg);
            mf.witness_radius[u] = radius;
          }
        }
      }
    });
  }
}

inline void run_ring_pruned(const GridFunction& f, const Ladder& L, int threads, MaxField& mf) {
  const Grid& g = f.grid;
  Cone cone(g);
  std::int64_t n = g.node_count();
  std::vector<long double> sum(static_cast<std::size_t>(n), 0.0L);
  std::vector<double> avg(static_cast<std::size_t>(n));
  bool record = mf.has_witnesses();

  // For each leading offset the largest trailing offset still inside the
  // ball, grown rung by rung. The candidate centers below enumerate the
  // Pareto frontier of the feasible center box; by block-decreasingness of
  // the averaged field the maximum lives there.
  int hw0max = L.hw.back()[0];
  std::vector<int> omax1, omax2;
  int w1 = 0;
  if (g.dim >= 2) omax1.assign(static_cast<std::size_t>(hw0max) + 1, -1);
  if (g.dim == 3) {
    w1 = L.hw.back()[1] + 1;
    omax2.assign(static_cast<std::size_t>(hw0max + 1) * w1, -1);
  }

  for (std::size_t k = 0; k < L.radii.size(); ++k) {
    const auto& ring = L.rings[k];
    const auto cc = static_cast<long double>(L.cc[k]);
    parallel_for(cone.count, threads, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t t = lo; t < hi; ++t) {
        Ivec iv = cone.node(g, t);
        auto u = static_cast<std::size_t>(g.flat(iv));
        long double s = sum[u];
        for (const Ivec& o : ring) s += f.extended(shifted(iv, o, g.dim, +1));
        sum[u] = s;
        avg[u] = static_cast<double>(s / cc);
      }
    });
    double radius = L.radii[k];
    if (g.dim >= 2) {
      for (int o0 = 0; o0 <= L.hw[k][0]; ++o0) {
        int j = omax1[static_cast<std::size_t>(o0)];
        Ivec probe{};
        probe[0] = o0;
        while (j + 1 <= L.hw[k][1]) {
          probe[1] = j + 1;
          if (!offset_inside(mf.norm, probe, g.dim, g.spacing, radius)) break;
          ++j;
        }
        omax1[static_cast<std::size_t>(o0)] = j;
      }
    }
    if (g.dim == 3) {
      for (int o0 = 0; o0 <= L.hw[k][0]; ++o0)
        for (int o1 = 0; o1 <= omax1[static_cast<std::size_t>(o0)]; ++o1) {
          auto cell = static_cast<std::size_t>(o0 * w1 + o1);
          int j = omax2[cell];
          Ivec probe{};
          probe[0] = o0;
          probe[1] = o1;
          while (j + 1 <= L.hw[k][2]) {
            probe[2] = j + 1;
            if (!offset_inside(mf.norm, probe, g.dim, g.spacing, radius)) break;
            ++j;
          }
          omax2[cell] = j;
        }
    }
    parallel_for(cone.count, threads, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t t = lo; t < hi; ++t) {
        Ivec iv = cone.node(g, t);
        auto u = static_cast<std::size_t>(g.flat(iv));
        Ivec dx{};
        for (int a = 0; a < g.dim; ++a) dx[a] = iv[a] - g.center(a);
        double best = mf.values[u];
        Ivec bestc{};
        bool improved = false;
        auto consider = [&](const Ivec& c) {
          double v = avg[static_cast<std::size_t>(g.flat(c))];
          if (v > best) {
            best = v;
            bestc = c;
            improved = true;
          }
        };
        if (g.dim == 1) {
          Ivec c{};
          c[0] = iv[0] - std::min(L.hw[k][0], dx[0]);
          consider(c);
        } else if (g.dim == 2) {
          for (int o0 = 0; o0 <= std::min(L.hw[k][0], dx[0]); ++o0) {
            Ivec c{};
            c[0] = iv[0] - o0;
            c[1] = iv[1] - std::min(omax1[static_cast<std::size_t>(o0)], dx[1]);
            consider(c);
          }
        } else {
          for (int o0 = 0; o0 <= std::min(L.hw[k][0], dx[0]); ++o0)
            for (int o1 = 0; o1 <= std::min(omax1[static_cast<std::size_t>(o0)], dx[1]); ++o1) {
              Ivec c{};
              c[0] = iv[0] - o0;
              c[1] = iv[1] - o1;
              c[2] = iv[2] - std::min(omax2[static_cast<std::size_t>(o0 * w1 + o1)], dx[2]);
              consider(c);
            }
        }
        if (improved) {
          mf.values[u] = best;
          if (record) {
            mf.witness_center[u] = bestc;
            mf.witness_radius[u] = radius;
          }
        }
      }
    });
  }
  reflect_from_cone(mf, threads);
}

inline void run_ring_centered(const GridFunction& f, const Ladder& L, int threads, MaxField& mf) {
  const Grid& g = f.grid;
  bool record = mf.has_witnesses();
  parallel_for(g.node_count(), threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t x = lo; x < hi; ++x) {
      Ivec iv = g.unflat(x);
      auto u = static_cast<std::size_t>(x);
      long double s = 0.0L;
      double best = -1.0, bestr = 0.0;
      for (std::size_t k = 0; k < L.radii.size(); ++k) {
        for (const Ivec& o : L.rings[k]) s += f.extended(shifted(iv, o, g.dim, +1));
        double v = static_cast<double>(s / static_cast<long double>(L.cc[k]));
        if (v > best) {
          best = v;
          bestr = L.radii[k];
        }
      }
      mf.values[u] = best;
      if (record) {
        mf.witness_center[u] = iv;
        mf.witness_radius[u] = bestr;
      }
    }
  });
}

} // namespace detail

inline MaxField maximal_brute(const GridFunction& f, const NormSpec& norm, const MaxOptions& opt = {}) {
  validate(f);
  int threads = opt.threads > 0 ? opt.threads : default_threads();
  if (norm.is_box()) {
    auto L = detail::box_ladder(f.grid, norm, opt.radius_cap);
    MaxField mf = detail::init_field(f, norm, opt, L.radii.back(), "brute");
    detail::run_box_brute(f, L, threads, mf);
    return mf;
  }
  auto L = detail::ring_ladder(f.grid, norm, opt.radius_cap);
  MaxField mf = detail::init_field(f, norm, opt, L.radii.back(), "brute");
  detail::run_ring_brute(f, L, threads, mf);
  return mf;
}

inline MaxField maximal_bd_pruned(const GridFunction& f, const NormSpec& norm,
                                  const MaxOptions& opt = {}) {
  validate(f);
  auto viol = check_block_decreasing(f, 1);
  if (!viol.empty())
    fail("pruned engine requires a block-decreasing input: " + describe(viol.front(), f.grid.dim));
  int threads = opt.threads > 0 ? opt.threads : default_threads();
  if (norm.is_box()) {
    auto L = detail::box_ladder(f.grid, norm, opt.radius_cap);
    MaxField mf = detail::init_field(f, norm, opt, L.radii.back(), "pruned");
    detail::run_box_pruned(f, L, threads, mf);
    return mf;
  }
  auto L = detail::ring_ladder(f.grid, norm, opt.radius_cap);
  MaxField mf = detail::init_field(f, norm, opt, L.radii.back(), "pruned");
  detail::run_ring_pruned(f, L, threads, mf);
  return mf;
}

inline MaxField maximal_centered(const GridFunction& f, const NormSpec& norm,
                                 const MaxOptions& opt = {}) {
  validate(f);
  int threads = opt.threads > 0 ? opt.threads : default_threads();
  if (norm.is_box()) {
    auto L = detail::box_ladder(f.grid, norm, opt.radius_cap);
    MaxField mf = detail::init_field(f, norm, opt, L.radii.back(), "centered");
    detail::run_box_centered(f, L, threads, mf);
    return mf;
  }
  auto L = detail::ring_ladder(f.grid, norm, opt.radius_cap);
  MaxField mf = detail::init_field(f, norm, opt, L.radii.back(), "centered");
  detail::run_ring_centered(f, L, threads, mf);
  return mf;
}

// Nodes whose maximal value is at most `level` and is witnessed by a ball of
// radius at least 1/n.
inline std::vector<std::uint8_t> enk_classify(const MaxField& mf, double n, double level) {
  require(mf.has_witnesses(), "classification needs a max field with witnesses");
  require(n > 0.0, "scale parameter must be positive");
  std::vector<std::uint8_t> mask(mf.values.size(), 0);
  double rmin = 1.0 / n;
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = mf.witness_radius[i] >= rmin && mf.values[i] <= level;
  return mask;
}

// Nodes of a radius-capped field whose witness radius is at least 1/n (the
// cap bounds it from above by construction).
inline std::vector<std::uint8_t> ern_classify(const MaxField& mf, double n) {
  require(mf.has_witnesses(), "classification needs a max field with witnesses");
  require(std::isfinite(mf.radius_cap), "classification needs a radius-capped field");
  require(n > 0.0, "scale parameter must be positive");
  std::vector<std::uint8_t> mask(mf.values.size(), 0);
  double rmin = 1.0 / n;
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = mf.witness_radius[i] >= rmin;
  return mask;
}

struct FieldMismatch {
  std::int64_t count = 0;
  std::int64_t first = -1;
  double a = 0.0;
  double b = 0.0;
};

inline FieldMismatch compare_values(const MaxField& x, const MaxField& y) {
  require(x.grid == y.grid, "fields live on different grids");
  FieldMismatch m;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    if (x.values[i] != y.values[i]) {
      if (m.count == 0) {
        m.first = static_cast<std::int64_t>(i);
        m.a = x.values[i];
        m.b = y.values[i];
      }
      ++m.count;
    }
  }
  return m;
}

inline void write_witness_csv(std::ostream& os, const MaxField& mf) {
  require(mf.has_witnesses(), "max field has no recorded witnesses");
  os << "# maxreg-witness v1 nodes=" << mf.grid.node_count() << " norm=" << mf.norm.name()
     << " method=" << mf.method << "\n";
  os << "node_index,center_index,radius,value\n";
  for (std::size_t i = 0; i < mf.values.size(); ++i)
    os << i << "," << mf.grid.flat(mf.witness_center[i]) << "," << fmt17(mf.witness_radius[i])
       << "," << fmt17(mf.values[i]) << "\n";
}

inline void write_witness_csv(const std::filesystem::path& path, const MaxField& mf) {
  std::ofstream os(path);
  require(bool(os), "cannot open " + path.string() + " for writing");
  write_witness_csv(os, mf);
  require(bool(os), "failed writing " + path.string());
}

} // namespace maxreg
