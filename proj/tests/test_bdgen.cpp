#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

#include "maxreg/bdgen.hpp"
#include "maxreg/maxop.hpp"

using namespace maxreg;

TEST_CASE("corpus members generate block-decreasing samples") {
  for (int dim : {2, 3}) {
    auto specs = corpus(dim);
    CHECK(specs.size() == (dim == 2 ? 13u : 11u));
    std::set<std::string> ids;
    for (const ProfileSpec& spec : specs) {
      ids.insert(spec.id());
      double h = dim == 2 ? 1.0 / 16 : 1.0 / 8;
      GridFunction f = generate(spec, h);
      INFO(spec.id());
      CHECK(check_block_decreasing(f).empty());
      CHECK(f.ceiling == spec.ceiling());
      for (double v : f.values) {
        CHECK(v >= 0.0);
        CHECK(v <= f.ceiling);
      }
    }
    CHECK(ids.size() == specs.size());  // ids are unique
  }
}

TEST_CASE("indicator supports are sampled as closed sets") {
  double h = 1.0 / 16;
  ProfileSpec sq = parse_profile("square side=1");
  GridFunction f = generate(sq, h);
  const Grid& g = f.grid;
  auto value_at = [&](double x0, double x1) {
    Ivec iv{};
    iv[0] = g.center(0) + static_cast<int>(std::llround(x0 / h));
    iv[1] = g.center(1) + static_cast<int>(std::llround(x1 / h));
    return f.at(iv);
  };
  CHECK(value_at(0.5, 0.0) == 1.0);
  CHECK(value_at(0.5, 0.5) == 1.0);
  CHECK(value_at(0.5 + h, 0.0) == 0.0);

  ProfileSpec qb = parse_profile("qball p=0.5");
  GridFunction q = generate(qb, h);
  const Grid& gq = q.grid;
  auto qvalue = [&](double x0, double x1) {
    Ivec iv{};
    iv[0] = gq.center(0) + static_cast<int>(std::llround(x0 / h));
    iv[1] = gq.center(1) + static_cast<int>(std::llround(x1 / h));
    return q.at(iv);
  };
  CHECK(qvalue(1.0, 0.0) == 1.0);   // cusp tip is in
  CHECK(qvalue(1.0, h) == 0.0);
  CHECK(qvalue(0.25, 0.25) == 1.0); // sqrt(1/4) + sqrt(1/4) = 1
}

TEST_CASE("counterexample profile g is calibrated") {
  CHECK(counterexample_g(0.0) == 1.0);
  CHECK(counterexample_g(4.0 + 1e-12) == 0.0);
  CHECK(counterexample_g(5.0) == 0.0);
  double lam = counterexample_lambda();
  CHECK(lam > 1.5);
  CHECK(lam < 1.75);
  // nonincreasing on the support
  double prev = counterexample_g(0.0);
  for (int j = 1; j <= 400; ++j) {
    double cur = counterexample_g(4.0 * j / 400);
    CHECK(cur <= prev + 1e-15);
    prev = cur;
  }
  // unit mass within the advertised half percent
  double mass = g_discrete_mass("log2");
  CHECK(std::abs(mass - 1.0) < 0.005);
  CHECK(g_discrete_mass("constant") == Catch::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("separable members scale the peak and keep unit slice mass") {
  ProfileSpec spec = parse_profile("separable m=4");
  GridFunction f = generate(spec, 1.0 / 64);
  CHECK(f.at(Ivec{f.grid.center(0), f.grid.center(1)}) == 4.0);
  CHECK(f.ceiling == 4.0);
  CHECK(check_block_decreasing(f).empty());

  // substituting a profile that breaks the unit-mass normalization is refused
  ProfileSpec bad = parse_profile("separable m=4 g=constant");
  CHECK_THROWS_WITH(generate(bad, 1.0 / 64), Catch::Matchers::ContainsSubstring("normalization"));
}

TEST_CASE("profile parsing rejects invalid parameters") {
  CHECK_THROWS_AS(parse_profile("qball p=1.2"), Error);
  CHECK_THROWS_AS(parse_profile("qball p=0"), Error);
  CHECK_THROWS_AS(parse_profile("square side=0"), Error);
  CHECK_THROWS_AS(parse_profile("square side=-1"), Error);
  CHECK_THROWS_AS(parse_profile("separable m=0"), Error);
  CHECK_THROWS_AS(parse_profile("separable dim=3"), Error);
  CHECK_THROWS_AS(parse_profile("radial shape=cubic"), Error);
  CHECK_THROWS_AS(parse_profile("blob"), Error);
  CHECK_THROWS_AS(parse_profile("square side"), Error);
  CHECK_THROWS_AS(parse_profile("square radius=1"), Error);
  CHECK_THROWS_AS(parse_profile(""), Error);

  ProfileSpec spec = parse_profile("radial norm=l2 shape=gauss rate=4 box=1.5 dim=3");
  CHECK(spec.dim == 3);
  CHECK(spec.id() == "radial-l2-gauss4");
  CHECK(parse_profile("radial norm=rect:2,1 shape=exp rate=4").id() == "radial-rect-2x1-exp4");
  CHECK(parse_profile("square side=1.5").id() == "square-1.5");
  CHECK(parse_profile("separable m=16").id() == "sep-m16");
}

TEST_CASE("precise representative reproduces hand values on the square") {
  ProfileSpec sq = parse_profile("square side=1 box=1.25");
  double h = 1.0 / 8;
  GridFunction f = generate(sq, h);
  GridFunction pr = precise_rep(f);
  const Grid& g = f.grid;
  auto node = [&](double x0, double x1) {
    Ivec iv{};
    iv[0] = g.center(0) + static_cast<int>(std::llround(x0 / h));
    iv[1] = g.center(1) + static_cast<int>(std::llround(x1 / h));
    return g.flat(iv);
  };
  // deep interior: every neighborhood average is 1
  CHECK(pr[node(0.0, 0.0)] == 1.0);
  // boundary node: the best 3x3 window still sits inside the support
  CHECK(pr[node(0.5, 0.0)] == 1.0);
  // one step out: best window keeps two of three columns inside
  CHECK(pr[node(0.5 + h, 0.0)] == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
  // all values nonnegative, bounded by the ceiling, and still block decreasing
  CHECK(check_block_decreasing(pr).empty());
  for (double v : pr.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  GridFunction flat = sample(make_grid(2, 1.0, 0.25), [](const Dvec&) { return 0.75; }, 1.0,
                             Extension::Clamp);
  GridFunction pf = precise_rep(flat);
  for (double v : pf.values) CHECK(v == 0.75);
}

TEST_CASE("precise representative keeps corpus members block decreasing") {
  for (const char* text : {"radial norm=l2 shape=exp rate=4", "qball p=0.5", "separable m=2"}) {
    ProfileSpec spec = parse_profile(text);
    GridFunction f = generate(spec, 1.0 / 16);
    INFO(spec.id());
    CHECK(check_block_decreasing(precise_rep(f)).empty());
    CHECK(check_block_decreasing(precise_rep(f, norm_l1())).empty());
  }
}

TEST_CASE("jump estimate counts the square discontinuity exactly") {
  ProfileSpec sq = parse_profile("square side=1 box=1");
  GridFunction f = generate(sq, 1.0 / 64);
  JumpEstimate est = jump_estimate(f, 0.5);
  // 65 lines cross the support per axis, two unit jumps each
  CHECK(est.faces.size() == 260);
  CHECK(est.total_length == 4.0625);
  for (const JumpFace& face : est.faces) CHECK(std::abs(face.jump) == 1.0);
  CHECK(jump_estimate(f, 1.5).faces.empty());
  CHECK(jump_estimate(f, 1.5).total_length == 0.0);
  CHECK_THROWS_AS(jump_estimate(f, 0.0), Error);
}

TEST_CASE("jump csv freezes its format") {
  Grid g = make_grid(1, 1.0, 1.0);
  GridFunction f;
  f.grid = g;
  f.ceiling = 1.0;
  f.values = {0.0, 1.0, 0.0};
  JumpEstimate est = jump_estimate(f, 0.5);
  std::ostringstream os;
  write_jump_csv(os, est);
  CHECK(os.str() ==
        "# maxreg-jump v1 faces=2 threshold=0.5 total_length=2\n"
        "face_axis,node_index,jump\n"
        "0,0,1\n"
        "0,1,-1\n");
}

TEST_CASE("maximal image of the square has no jumps left") {
  ProfileSpec sq = parse_profile("square side=1 box=1");
  GridFunction f = generate(sq, 1.0 / 16);
  MaxField mf = maximal_bd_pruned(f, norm_linf());
  CHECK(jump_estimate(mf.as_grid_function(), 0.25).total_length == 0.0);
}

TEST_CASE("centered square field keeps a perimeter of jumps") {
  Grid g = make_grid(2, 2.0, 1.0 / 64);
  GridFunction f = sample(
      g, [](const Dvec& x) { return std::max(std::abs(x[0]), std::abs(x[1])) <= 0.5 ? 1.0 : 0.0; },
      1.0);
  MaxField mf = maximal_centered(f, norm_linf());
  JumpEstimate est = jump_estimate(mf.as_grid_function(), 0.25);
  // 63 interior lines per side keep their 1 -> 2/3 drop (252 faces) and each
  // corner adds four 2/3 -> 1/3 crossings where both edges cut the balls
  CHECK(est.faces.size() == 268);
  CHECK(est.total_length == 4.1875);
  CHECK(std::abs(est.total_length - 4.0) <= 0.05 * 4.0);
}

TEST_CASE("quasiball cusp keeps a visible jump at moderate resolution") {
  // approach the cusp along its axis: the drop off the value-1 plateau stays
  // a fixed 2/9 because the same two stencil corners exit the support first
  ProfileSpec qb = parse_profile("qball p=0.5");
  GridFunction f = generate(qb, 1.0 / 32);
  MaxField mf = maximal_bd_pruned(f, norm_linf());
  GridFunction m = mf.as_grid_function();
  const Grid& g = f.grid;
  double peak = 0.0;
  for (int j = 0; j * g.spacing <= 1.1; ++j) {
    if (j * g.spacing < 0.4) continue;
    Ivec iv{};
    iv[0] = g.center(0) + j;
    iv[1] = g.center(1);
    Ivec jv = iv;
    ++jv[0];
    if (!g.in_bounds(jv)) continue;
    peak = std::max(peak, std::abs(m.at(jv) - m.at(iv)));
  }
  CHECK(peak == Catch::Approx(2.0 / 9.0).margin(1e-12));
}

TEST_CASE("sliding window averages of corpus lines are monotone") {
  // one-dimensional surrogate: windowed sums along any axis line through the
  // center must not increase away from the origin
  for (const char* text : {"radial norm=l2 shape=exp rate=4", "square side=1", "qball p=1"}) {
    ProfileSpec spec = parse_profile(text);
    GridFunction f = generate(spec, 1.0 / 16);
    const Grid& g = f.grid;
    int len = g.counts[0];
    const int w = 3;
    auto window_sum = [&](int c) {
      std::vector<double> vals;
      for (int t = c - w; t <= c + w; ++t) {
        Ivec iv{};
        iv[0] = t;
        iv[1] = g.center(1);
        vals.push_back(f.extended(iv));
      }
      return exact_sum(vals);
    };
    INFO(spec.id());
    for (int c = g.center(0); c + 1 < len; ++c) CHECK(window_sum(c + 1) <= window_sum(c));
  }
}

TEST_CASE("fixed-radius ball averages stay block decreasing") {
  for (const char* text : {"radial norm=l2 shape=exp rate=4", "square side=1"}) {
    ProfileSpec spec = parse_profile(text);
    GridFunction f = generate(spec, 1.0 / 8);
    const Grid& g = f.grid;
    auto offsets = stencil(g, norm_l2(), 2.0 * g.spacing).offsets;
    GridFunction avg;
    avg.grid = g;
    avg.ceiling = f.ceiling;
    avg.extension = f.extension;
    avg.values.resize(static_cast<std::size_t>(g.node_count()));
    std::vector<double> vals;
    std::int64_t n = g.node_count();
    for (std::int64_t i = 0; i < n; ++i) {
      Ivec iv = g.unflat(i);
      vals.clear();
      for (const Ivec& o : offsets) {
        Ivec jv = iv;
        for (int a = 0; a < g.dim; ++a) jv[a] += o[a];
        vals.push_back(f.extended(jv));
      }
      avg.values[static_cast<std::size_t>(i)] =
          static_cast<double>(exact_sum(vals) / static_cast<double>(offsets.size()));
    }
    INFO(spec.id());
    CHECK(check_block_decreasing(avg).empty());
  }
}
