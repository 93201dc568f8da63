#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "maxreg/variation.hpp"

using namespace maxreg;

namespace {

GridFunction square_indicator(double spacing) {
  Grid g = make_grid(2, 1.0, spacing);
  return sample(
      g, [](const Dvec& x) { return std::max(std::abs(x[0]), std::abs(x[1])) <= 0.5 ? 1.0 : 0.0; },
      1.0);
}

} // namespace

TEST_CASE("single line variation") {
  std::vector<double> updown{0.0, 1.0, 1.0, 0.0};
  CHECK(variation_1d(updown, Extension::Zero) == 2.0);
  CHECK(variation_1d(updown, Extension::Clamp) == 2.0);

  std::vector<double> stair{3.0, 2.0, 1.0, 0.0};
  CHECK(variation_1d(stair, Extension::Clamp) == 3.0);
  CHECK(variation_1d(stair, Extension::Zero) == 6.0);  // jump on at 3, off at 0

  std::vector<double> flat{5.0, 5.0, 5.0};
  CHECK(variation_1d(flat, Extension::Clamp) == 0.0);
  CHECK(variation_1d(flat, Extension::Zero) == 10.0);

  CHECK_THROWS_AS(variation_1d(std::vector<double>{}, Extension::Zero), Error);
}

TEST_CASE("square indicator variation is exact") {
  GridFunction f = square_indicator(1.0 / 64);
  // 65 lines crossing the square per axis, each with one up and one down jump
  CHECK(partial_variation(f, 0) == 2.03125);
  CHECK(partial_variation(f, 1) == 2.03125);

  VariationReport rep = variation_directional(f);
  CHECK(rep.directional_sum == 4.0625);
  CHECK(rep.v_upper == 4.0625);
  CHECK(rep.v_lower == Catch::Approx(4.0625 / std::sqrt(2.0)).epsilon(1e-15));
  // mid-to-face drops: 33 unit drops per cone line block, 2^2 orthants
  REQUIRE(rep.bd_boundary_sum.has_value());
  CHECK(*rep.bd_boundary_sum == 4.125);
  CHECK(*rep.boundary_residual == Catch::Approx(1.0 / 65).epsilon(1e-12));
  CHECK(rep.face_residual == 0.0);
}

TEST_CASE("1d exponential profile telescopes") {
  Grid g = make_grid(1, 2.0, 0.125);
  auto fn = [](const Dvec& x) { return std::exp(-std::abs(x[0])); };
  GridFunction clamped = sample(g, fn, 1.0, Extension::Clamp);
  GridFunction zeroed = sample(g, fn, 1.0, Extension::Zero);
  // symmetric unimodal line: the interior differences telescope to twice the
  // peak-to-face drop; zero extension adds the two face values back
  CHECK(partial_variation(clamped, 0) ==
        Catch::Approx(2.0 * (1.0 - std::exp(-2.0))).epsilon(1e-13));
  CHECK(partial_variation(zeroed, 0) == Catch::Approx(2.0).epsilon(1e-13));

  CHECK(variation_bd_boundary(clamped) ==
        Catch::Approx(2.0 * (1.0 - std::exp(-2.0))).epsilon(1e-13));
  CHECK(variation_directional(clamped).face_residual ==
        Catch::Approx(std::exp(-2.0)).epsilon(1e-15));

  CHECK_THROWS_AS(partial_variation(clamped, 1), Error);
  CHECK_THROWS_AS(partial_variation(clamped, -1), Error);
}

TEST_CASE("cone ramp converges to its continuum variation") {
  auto ramp = [](const Dvec& x) {
    return std::max(0.0, 1.0 - std::sqrt(x[0] * x[0] + x[1] * x[1]));
  };
  Grid coarse = make_grid(2, 1.0, 1.0 / 64);
  Grid fine = make_grid(2, 1.0, 1.0 / 128);
  double vc = variation_directional(sample(coarse, ramp, 1.0)).directional_sum;
  double vf = variation_directional(sample(fine, ramp, 1.0)).directional_sum;
  // each axis contributes 2 in the limit
  CHECK(std::abs(vc - 4.0) < 0.05);
  CHECK(std::abs(vc - vf) / vf < 0.01);
}

TEST_CASE("boundary sum stays inside the banded sandwich") {
  Grid g = make_grid(2, 1.0, 1.0 / 64);
  auto gauss = [](const Dvec& x) { return std::exp(-8.0 * (x[0] * x[0] + x[1] * x[1])); };
  auto tent = [](const Dvec& x) { return std::exp(-6.0 * (std::abs(x[0]) + std::abs(x[1]))); };
  auto square = [](const Dvec& x) {
    return std::max(std::abs(x[0]), std::abs(x[1])) <= 0.5 ? 1.0 : 0.0;
  };
  for (Extension ext : {Extension::Zero, Extension::Clamp}) {
    for (auto fn : {+gauss, +tent, +square}) {
      VariationReport rep =
          variation_directional(sample(g, [&](const Dvec& x) { return fn(x); }, 1.0, ext));
      INFO(extension_name(ext));
      REQUIRE(rep.bd_boundary_sum.has_value());
      CHECK(rep.v_lower <= rep.directional_sum);
      CHECK(rep.directional_sum <= rep.v_upper);
      CHECK(*rep.bd_boundary_sum >= 0.95 * rep.v_lower);
      CHECK(*rep.bd_boundary_sum <= 1.05 * rep.v_upper);
    }
  }
}

TEST_CASE("line accumulation agrees with an exact summation") {
  Grid g = make_grid(2, 1.0, 0.125);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uval(0.0, 1.0);
  for (Extension ext : {Extension::Zero, Extension::Clamp}) {
    GridFunction f;
    f.grid = g;
    f.ceiling = 1.0;
    f.extension = ext;
    f.values.resize(static_cast<std::size_t>(g.node_count()));
    for (double& v : f.values) v = uval(rng);
    for (int axis = 0; axis < 2; ++axis) {
      std::vector<double> terms;
      std::int64_t stride = axis == 0 ? g.counts[1] : 1;
      std::int64_t n = g.node_count();
      for (std::int64_t i = 0; i < n; ++i) {
        if (g.unflat(i)[axis] != 0) continue;
        for (int j = 1; j < g.counts[axis]; ++j)
          terms.push_back(std::abs(f[i + j * stride] - f[i + (j - 1) * stride]));
        if (ext == Extension::Zero) {
          terms.push_back(f[i]);
          terms.push_back(f[i + (g.counts[axis] - 1) * stride]);
        }
      }
      double want = exact_sum(terms) * g.spacing;
      CHECK(partial_variation(f, axis) == Catch::Approx(want).epsilon(1e-13));
    }
    // random noise is not block decreasing, so the closed-form boundary sum
    // refuses it and the report omits it
    CHECK_THROWS_AS(variation_bd_boundary(f), Error);
    CHECK_FALSE(variation_directional(f).bd_boundary_sum.has_value());
  }
}

TEST_CASE("variation report serializes") {
  GridFunction f = square_indicator(1.0 / 64);
  VariationReport rep = variation_directional(f);
  nlohmann::json j = to_json(rep);
  CHECK(j["method"] == "axis-decomposition");
  CHECK(j["extension"] == "zero");
  CHECK(j["grid"]["dim"] == 2);
  CHECK(j["grid"]["counts"] == std::vector<int>{129, 129});
  CHECK(j["grid"]["spacing"] == 1.0 / 64);
  CHECK(j["per_axis"].size() == 2);
  CHECK(j["directional_sum"] == 4.0625);
  CHECK(j["bd_boundary_sum"] == 4.125);
  CHECK(j["face_residual"] == 0.0);
  // serialization round-trips through text
  nlohmann::json back = nlohmann::json::parse(j.dump(2));
  CHECK(back == j);
}
