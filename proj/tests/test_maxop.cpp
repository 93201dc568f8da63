#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "maxreg/box_sum.hpp"
#include "maxreg/maxop.hpp"

using namespace maxreg;
using Catch::Matchers::ContainsSubstring;

namespace {

GridFunction sample1d_unit_step(double spacing) {
  // characteristic function of [0, 1] on [-2, 2]; not block decreasing
  Grid g = make_grid(1, 2.0, spacing);
  return sample(
      g, [](const Dvec& x) { return x[0] >= 0.0 && x[0] <= 1.0 ? 1.0 : 0.0; }, 1.0);
}

long double direct_box_sum(const GridFunction& f, const Ivec& lo, const Ivec& hi) {
  long double s = 0.0L;
  Ivec iv = lo;
  int d = f.grid.dim;
  while (true) {
    bool ok = true;
    for (int a = 0; a < d; ++a) ok = ok && iv[a] <= hi[a];
    s += f.extended(iv);
    int a = d - 1;
    while (a >= 0) {
      if (++iv[a] <= hi[a]) break;
      iv[a] = lo[a];
      --a;
    }
    if (a < 0) break;
  }
  return s;
}

} // namespace

TEST_CASE("box summer matches direct sums") {
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> uval(0.0, 1.0);
  for (int dim = 1; dim <= 3; ++dim) {
    for (Extension ext : {Extension::Zero, Extension::Clamp}) {
      Grid g = make_grid(dim, 1.0, dim == 3 ? 0.25 : 0.125);
      GridFunction f;
      f.grid = g;
      f.ceiling = 1.0;
      f.extension = ext;
      f.values.resize(static_cast<std::size_t>(g.node_count()));
      for (double& v : f.values) v = uval(rng);
      BoxSummer sums(f);
      std::uniform_int_distribution<int> ulo(-8, 12);
      std::uniform_int_distribution<int> ulen(0, 14);
      for (int trial = 0; trial < 60; ++trial) {
        Ivec lo{}, hi{};
        for (int a = 0; a < dim; ++a) {
          lo[a] = ulo(rng);
          hi[a] = lo[a] + ulen(rng);
        }
        long double want = direct_box_sum(f, lo, hi);
        long double got = sums.box_sum(lo, hi);
        CHECK(std::abs(static_cast<double>(got - want)) < 1e-12);
      }
    }
  }
}

TEST_CASE("box summer is exact on indicator values") {
  Grid g = make_grid(2, 1.0, 0.25);
  std::mt19937 rng(99);
  std::bernoulli_distribution coin(0.4);
  for (Extension ext : {Extension::Zero, Extension::Clamp}) {
    GridFunction f;
    f.grid = g;
    f.ceiling = 1.0;
    f.extension = ext;
    f.values.resize(static_cast<std::size_t>(g.node_count()));
    for (double& v : f.values) v = coin(rng) ? 1.0 : 0.0;
    BoxSummer sums(f);
    for (int l0 = -3; l0 <= 9; l0 += 2)
      for (int l1 = -4; l1 <= 8; l1 += 3) {
        Ivec lo{l0, l1}, hi{l0 + 5, l1 + 4};
        CHECK(sums.box_sum(lo, hi) == direct_box_sum(f, lo, hi));
      }
  }
}

TEST_CASE("ball average of the unit square") {
  // characteristic function of the square of side 1, box ball of radius 1 at
  // the origin on a grid of spacing 1/4: 25 hits over 81 cells
  Grid g = make_grid(2, 2.0, 0.25);
  GridFunction f = sample(
      g, [](const Dvec& x) { return std::max(std::abs(x[0]), std::abs(x[1])) <= 0.5 ? 1.0 : 0.0; },
      1.0);
  BallStencil st = stencil(g, norm_linf(), 1.0);
  CHECK(st.cell_count() == 81);
  Ivec origin{g.center(0), g.center(1)};
  CHECK(ball_average(f, origin, st) == 25.0 / 81.0);
  CHECK_THROWS_AS(ball_average(f, Ivec{-1, 0}, st), Error);
}

TEST_CASE("1d interval step, reference engine") {
  GridFunction f = sample1d_unit_step(0.125);
  MaxField mf = maximal_brute(f, norm_linf());
  CHECK(mf.max_radius == 2.0);
  CHECK(mf.method == "brute");

  // node at x=-1: every admissible ball reaches left of -1, so the best one
  // spans exactly [-1,1]: 9 hits over 17 cells
  CHECK(mf.values[8] == 9.0 / 17.0);
  MaxRecord rec = mf.record(8);
  CHECK(rec.radius == 1.0);
  CHECK(rec.center[0] == 16);

  // node at x=0: the ball [0, 2h] about center h is all ones already
  CHECK(mf.values[16] == 1.0);
  rec = mf.record(16);
  CHECK(rec.radius == 0.125);
  CHECK(rec.center[0] == 17);
}

TEST_CASE("1d interval step, centered engine") {
  GridFunction f = sample1d_unit_step(0.125);
  MaxField mf = maximal_centered(f, norm_linf());
  // at the origin the best centered ball is [-h, h]: 2 of 3 cells hit
  CHECK(mf.values[16] == 2.0 / 3.0);
  MaxRecord rec = mf.record(16);
  CHECK(rec.radius == 0.125);
  CHECK(rec.center[0] == 16);
  // centered values never beat the uncentered supremum
  MaxField ref = maximal_brute(f, norm_linf());
  for (std::size_t i = 0; i < mf.values.size(); ++i) CHECK(mf.values[i] <= ref.values[i]);
}

TEST_CASE("reference engine equals a ladder scan of ball averages") {
  Grid g = make_grid(1, 2.0, 0.25);
  GridFunction f = sample(
      g, [](const Dvec& x) { return std::exp(-std::abs(x[0])); }, 1.0);
  MaxField mf = maximal_brute(f, norm_linf());
  auto radii = radius_ladder(g, norm_linf());
  for (int x = 0; x < g.counts[0]; ++x) {
    double want = -1.0;
    for (double r : radii) {
      BallStencil st = stencil(g, norm_linf(), r);
      int m = st.halfwidth[0];
      for (int c = std::max(0, x - m); c <= std::min(g.counts[0] - 1, x + m); ++c)
        want = std::max(want, ball_average(f, Ivec{c}, st));
    }
    CHECK(mf.values[static_cast<std::size_t>(x)] ==
          Catch::Approx(want).epsilon(1e-12).margin(1e-12));
  }
}

TEST_CASE("2d spot nodes against exhaustive ball scans") {
  Grid g = make_grid(2, 1.0, 0.125);
  GridFunction f = sample(
      g, [](const Dvec& x) { return std::max(std::abs(x[0]), std::abs(x[1])) <= 0.55 ? 1.0 : 0.0; },
      1.0);
  MaxField mf = maximal_brute(f, norm_linf());
  auto radii = radius_ladder(g, norm_linf());
  for (Ivec node : {Ivec{8, 8}, Ivec{14, 8}, Ivec{16, 16}, Ivec{11, 13}}) {
    double want = -1.0;
    for (double r : radii) {
      BallStencil st = stencil(g, norm_linf(), r);
      for (int c0 = std::max(0, node[0] - st.halfwidth[0]);
           c0 <= std::min(g.counts[0] - 1, node[0] + st.halfwidth[0]); ++c0)
        for (int c1 = std::max(0, node[1] - st.halfwidth[1]);
             c1 <= std::min(g.counts[1] - 1, node[1] + st.halfwidth[1]); ++c1)
          want = std::max(want, ball_average(f, Ivec{c0, c1}, st));
    }
    CHECK(mf.values[static_cast<std::size_t>(g.flat(node))] ==
          Catch::Approx(want).epsilon(1e-12).margin(1e-12));
  }
}

TEST_CASE("witness records are attaining pairs") {
  Grid g = make_grid(2, 1.0, 0.125);
  GridFunction f = sample(
      g, [](const Dvec& x) { return std::exp(-2.0 * (x[0] * x[0] + x[1] * x[1])); }, 1.0,
      Extension::Clamp);
  for (const MaxField& mf :
       {maximal_brute(f, norm_l2()), maximal_bd_pruned(f, norm_l2()), maximal_centered(f, norm_l2())}) {
    std::int64_t n = g.node_count();
    for (std::int64_t i = 0; i < n; ++i) {
      MaxRecord rec = mf.record(i);
      Ivec iv = g.unflat(i);
      Ivec o{};
      for (int a = 0; a < g.dim; ++a) o[a] = iv[a] - rec.center[a];
      CHECK(offset_inside(mf.norm, o, g.dim, g.spacing, rec.radius));
      CHECK(g.in_bounds(rec.center));
      double again = ball_average(f, rec.center, stencil(g, mf.norm, rec.radius));
      CHECK(rec.value == Catch::Approx(again).epsilon(1e-12).margin(1e-12));
      CHECK(rec.value <= f.ceiling);
    }
  }
}

TEST_CASE("pruned engine reproduces the reference bit for bit") {
  auto square = [](const Dvec& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m <= 0.55 ? 1.0 : 0.0;
  };
  auto gauss = [](const Dvec& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::exp(-2.0 * s);
  };
  auto tent = [](const Dvec& x) {
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return std::exp(-s);
  };

  SECTION("dimension 1") {
    Grid g = make_grid(1, 2.0, 0.125);
    for (auto fn : {+square, +gauss, +tent}) {
      GridFunction f = sample(g, [&](const Dvec& x) { return fn(x); }, 1.0);
      for (const char* nm : {"linf", "l2"}) {
        NormSpec norm = parse_norm(nm);
        auto diff = compare_values(maximal_brute(f, norm), maximal_bd_pruned(f, norm));
        INFO(nm);
        CHECK(diff.count == 0);
      }
    }
  }

  SECTION("dimension 2") {
    Grid g = make_grid(2, 1.0, 0.125);
    for (auto fn : {+square, +gauss, +tent}) {
      for (Extension ext : {Extension::Zero, Extension::Clamp}) {
        GridFunction f = sample(g, [&](const Dvec& x) { return fn(x); }, 1.0, ext);
        for (const char* nm : {"linf", "l1", "l2", "lp:3", "rect:1.5,1"}) {
          NormSpec norm = parse_norm(nm);
          auto diff = compare_values(maximal_brute(f, norm), maximal_bd_pruned(f, norm));
          INFO(nm << " ext=" << extension_name(ext));
          CHECK(diff.count == 0);
        }
      }
    }
  }

  SECTION("dimension 3") {
    Grid g = make_grid(3, 1.0, 0.25);
    for (auto fn : {+square, +gauss}) {
      GridFunction f = sample(g, [&](const Dvec& x) { return fn(x); }, 1.0);
      for (const char* nm : {"linf", "l2"}) {
        NormSpec norm = parse_norm(nm);
        auto diff = compare_values(maximal_brute(f, norm), maximal_bd_pruned(f, norm));
        INFO(nm);
        CHECK(diff.count == 0);
      }
    }
  }
}

TEST_CASE("a biased candidate rule is caught by the comparison") {
  // same pruning skeleton, but the near candidate is shifted one cell away
  // from the origin; on a strictly decreasing profile this must lose
  Grid g = make_grid(2, 1.0, 0.125);
  GridFunction f = sample(
      g, [](const Dvec& x) { return std::exp(-2.0 * (x[0] * x[0] + x[1] * x[1])); }, 1.0);
  auto L = detail::box_ladder(g, norm_linf(), std::numeric_limits<double>::infinity());
  BoxSummer sums(f);
  MaxField ref = maximal_brute(f, norm_linf());
  std::int64_t mismatches = 0;
  std::int64_t n = g.node_count();
  for (std::int64_t i = 0; i < n; ++i) {
    Ivec iv = g.unflat(i);
    if (g.fold(iv) != iv) continue;
    double best = -1.0;
    for (std::size_t k = 0; k < L.radii.size(); ++k) {
      Ivec c{};
      for (int a = 0; a < g.dim; ++a) c[a] = std::max(g.center(a), iv[a] - L.hw[k][a] + 1);
      best = std::max(best, static_cast<double>(
                                sums.box_sum(detail::shifted(c, L.hw[k], g.dim, -1),
                                             detail::shifted(c, L.hw[k], g.dim, +1)) /
                                static_cast<long double>(L.cc[k])));
    }
    if (best != ref.values[static_cast<std::size_t>(i)]) ++mismatches;
  }
  CHECK(mismatches > 0);

  // the centered variant is genuinely smaller somewhere as well
  CHECK(compare_values(ref, maximal_centered(f, norm_linf())).count > 0);
}

TEST_CASE("pruned engine rejects inputs that are not block decreasing") {
  GridFunction step = sample1d_unit_step(0.125);
  CHECK_THROWS_WITH(maximal_bd_pruned(step, norm_linf()),
                    ContainsSubstring("block-decreasing") &&
                        ContainsSubstring("symmetry violated between nodes (24) and (8)"));

  Grid g = make_grid(1, 1.0, 0.5);
  GridFunction vee = sample(
      g, [](const Dvec& x) { return std::abs(x[0]); }, 1.0);
  CHECK_THROWS_WITH(maximal_bd_pruned(vee, norm_linf()),
                    ContainsSubstring("monotonicity violated between nodes (2) and (3)"));
}

TEST_CASE("witness masks by level and witness radius") {
  GridFunction f = sample1d_unit_step(0.125);
  MaxField mf = maximal_brute(f, norm_linf());
  auto mask = enk_classify(mf, 1.0, 0.6);
  CHECK(mask.size() == 33);
  CHECK(mask[8] == 1);   // value 9/17 <= 0.6, witness radius 1 >= 1
  CHECK(mask[16] == 0);  // value 1 > 0.6

  MaxOptions capped;
  capped.radius_cap = 0.5;
  MaxField mfc = maximal_brute(f, norm_linf(), capped);
  CHECK(mfc.max_radius == 0.5);
  CHECK(mfc.values[8] == 1.0 / 9.0);
  auto rmask = ern_classify(mfc, 4.0);
  CHECK(rmask[8] == 1);   // witnessed at the cap, 0.5 >= 1/4
  CHECK(rmask[16] == 0);  // all-ones ball of radius h suffices at the origin

  CHECK_THROWS_AS(ern_classify(mf, 4.0), Error);  // not capped

  MaxOptions bare;
  bare.record_witnesses = false;
  MaxField plain = maximal_brute(f, norm_linf(), bare);
  CHECK_FALSE(plain.has_witnesses());
  CHECK(plain.values == mf.values);
  CHECK_THROWS_AS(plain.record(0), Error);
  CHECK_THROWS_AS(enk_classify(plain, 1.0, 0.6), Error);
}

TEST_CASE("witness dump format") {
  Grid g = make_grid(1, 1.0, 0.5);
  GridFunction f = sample(
      g, [](const Dvec&) { return 1.0; }, 1.0, Extension::Clamp);
  MaxField mf = maximal_brute(f, norm_linf());
  std::ostringstream os;
  write_witness_csv(os, mf);
  CHECK(os.str() ==
        "# maxreg-witness v1 nodes=5 norm=linf method=brute\n"
        "node_index,center_index,radius,value\n"
        "0,0,0.5,1\n"
        "1,0,0.5,1\n"
        "2,1,0.5,1\n"
        "3,2,0.5,1\n"
        "4,3,0.5,1\n");
}

TEST_CASE("field containers are consistent") {
  Grid g = make_grid(2, 1.0, 0.25);
  GridFunction f = sample(
      g, [](const Dvec& x) { return 1.0 / (1.0 + x[0] * x[0] + x[1] * x[1]); }, 1.0);
  MaxField mf = maximal_brute(f, norm_l2());
  GridFunction back = mf.as_grid_function();
  validate(back);
  CHECK(back.grid == g);
  CHECK(back.extension == f.extension);

  MaxField other = maximal_brute(sample(make_grid(2, 1.0, 0.5),
                                        [](const Dvec&) { return 0.5; }, 1.0),
                                 norm_l2());
  CHECK_THROWS_AS(compare_values(mf, other), Error);
}
