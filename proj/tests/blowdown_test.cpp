#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nlmg/blowdown.hpp"
#include "nlmg/errors.hpp"
#include "nlmg/profiles.hpp"

using namespace nlmg;

namespace {

const FracParams P1 = make_params(1, 0.5);
const FracParams P2 = make_params(2, 0.5);

VoxelSet disk(double L, int res, double radius) {
  return voxelize(P1, make_box({-L, -L}, {L, L}), {res, res, 1},
                  [&](const Vec& y) { return y[0] * y[0] + y[1] * y[1] < radius * radius; }, EmptyExterior{});
}

}  // namespace

TEST_CASE("rescale_graph fixes affine and homogeneous graphs") {
  const GraphField a = GraphField::from_function(P1, make_box({-2}, {2}), 1.0 / 16,
                                                 [](const Vec& x) { return 0.7 * x[0]; }, AffineExterior{{0.7, 0, 0}, 0});
  const GraphField c = GraphField::from_function(P1, make_box({-2}, {2}), 1.0 / 16,
                                                 [](const Vec& x) { return std::abs(x[0]); }, Homogeneous1Exterior{});
  for (double r : {0.5, 2.0, 8.0}) {
    const GraphField ar = rescale_graph(a, r), cr = rescale_graph(c, r);
    for (double x = -3; x <= 3; x += 0.37) {
      CHECK(ar.sample({x}) == doctest::Approx(0.7 * x).epsilon(1e-12));
      CHECK(cr.sample({x}) == doctest::Approx(std::abs(x)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(rescale_graph(a, 0.0), ParameterError);
  CHECK_THROWS_AS(rescale_graph(a, -1.0), ParameterError);
}

TEST_CASE("rescaled affine plus bump approaches the plane") {
  const GraphField u = affine_plus_bump(P1, Vec{1, 0, 0}, 0.0, 4, 1.0 / 32);
  const GraphField u8 = rescale_graph(u, 8.0);
  double dist = 0.0;
  for (double x = -1; x <= 1; x += 1.0 / 256) dist = std::max(dist, std::abs(u8.sample({x}) - x));
  CHECK(dist <= 1.0 / 8 + 1e-12);
  CHECK(dist > 0.1);

  const GraphField twice = rescale_graph(rescale_graph(u, 2.0), 4.0);
  double gap = 0.0;
  for (double x = -1; x <= 1; x += 1.0 / 128) gap = std::max(gap, std::abs(twice.sample({x}) - u8.sample({x})));
  CHECK(gap <= 1e-12);
}

TEST_CASE("translate_graph moves the exterior with the data") {
  const GraphField u = affine_plus_bump(P2, Vec{0.3, -0.4, 0}, 0.5, 2, 1.0 / 8);
  const Vec c{0.5, -0.25, 0};
  const GraphField t = translate_graph(u, c, 2.0);
  for (const Vec& z : {Vec{0.1, 0.2, 0}, Vec{3.0, -4.0, 0}, Vec{-5.0, 1.0, 0}}) {
    CHECK(t.sample(z) == doctest::Approx(u.sample({z[0] + c[0], z[1] + c[1], 0}) - 2.0).epsilon(1e-12));
  }
}

TEST_CASE("rescale_set keeps half-spaces and cones through x, shrinks balls") {
  const Vec x{0.25, -0.5, 0};
  const Vec nrm{0.6, 0.8, 0};
  const double off = nrm[0] * x[0] + nrm[1] * x[1];
  const VoxelSet hs = voxelize(P1, make_box({-2, -2}, {2, 2}), {64, 64, 1},
                               [&](const Vec& y) { return nrm[0] * y[0] + nrm[1] * y[1] < off; },
                               HalfSpaceExterior{nrm, off});
  const VoxelSet hr = rescale_set(hs, x, 2.0);
  for (double a = -3; a <= 3; a += 0.29) {
    for (double b = -3; b <= 3; b += 0.31) {
      const double s = nrm[0] * a + nrm[1] * b;
      if (std::abs(s) < 2 * hr.voxel_size()) continue;
      CHECK(hr.contains({a, b, 0}) == (s < 0));
    }
  }

  const VoxelSet b1 = disk(2, 64, 1.0);
  const VoxelSet bh = rescale_set(b1, Vec{}, 2.0);
  for (std::size_t k = 0; k < bh.occupancy().size(); ++k) {
    const Vec z = bh.voxel_center(bh.unflat(k));
    const double r = std::hypot(z[0], z[1]);
    if (std::abs(r - 0.5) <= bh.voxel_size()) continue;
    CHECK((bh.occupancy()[k] != 0) == (r < 0.5));
  }
  CHECK_THROWS_AS(rescale_set(b1, Vec{}, 0.0), ParameterError);
}

TEST_CASE("center gaps vanish for equal centers and halve on half-spaces") {
  const double th = 0.4;
  const Vec nrm{std::sin(th), std::cos(th), 0};
  const VoxelSet hs = voxelize(P1, make_box({-20, -20}, {20, 20}), {1600, 1600, 1},
                               [&](const Vec& y) { return nrm[0] * y[0] + nrm[1] * y[1] < 0; },
                               HalfSpaceExterior{nrm, 0});
  CHECK(center_gap(hs, Vec{}, Vec{}, 4.0, 1.0) == 0.0);
  const Vec y = nrm;
  double prev = center_gap(hs, Vec{}, y, 2.0, 1.0);
  CHECK(prev == doctest::Approx(2.0 / 2.0).epsilon(0.05));
  for (double r : {4.0, 8.0, 16.0}) {
    const double g = center_gap(hs, Vec{}, y, r, 1.0);
    CHECK(g / prev >= 0.4);
    CHECK(g / prev <= 0.6);
    prev = g;
  }
  CHECK_THROWS_AS(center_gap(hs, Vec{}, y, 32.0, 1.0), DomainError);
}

TEST_CASE("cone defect: cones and half-spaces vanish, the unit disk does not") {
  const VoxelSet hs = voxelize(P1, make_box({-2.5, -2.5}, {2.5, 2.5}), {160, 160, 1},
                               [](const Vec& y) { return y[1] < 0.3 * y[0]; }, HalfSpaceExterior{{-0.3, 1, 0}, 0});
  const VoxelSet cone = voxelize(P1, make_box({-2.5, -2.5}, {2.5, 2.5}), {160, 160, 1},
                                 [](const Vec& y) { return y[1] < std::abs(y[0]); }, ConeExterior{});
  const double layer = hs.voxel_size() * 2.0 / std::numbers::pi;
  CHECK(cone_defect(hs, 1.0) <= layer);
  CHECK(cone_defect(cone, 1.0) <= layer);
  const VoxelSet b = disk(2.5, 160, 1.0);
  CHECK(cone_defect(b, 1.0) == doctest::Approx(0.75).epsilon(0.03));
  CHECK_THROWS_AS(cone_defect(b, 1.5), DomainError);
}

TEST_CASE("cylinder defects: vertical monotonicity, cylinders, lens volume") {
  const GraphField u = gaussian_field(P1, 0.125);
  const VoxelSet e = subgraph_of(u, make_box({-2.5, -2.5}, {2.5, 2.5}), {100, 100, 1});
  CHECK(cylinder_defect(e, Vec{0, -1, 0}, 1.0).one_sided == 0.0);
  CHECK(cylinder_defect(e, Vec{0, -1, 0}, 1.0).two_sided > 0.0);

  const VoxelSet slab = voxelize(P2, make_box({-2.5, -2.5, -2.5}, {2.5, 2.5, 2.5}), {50, 50, 50},
                                 [](const Vec& y) { return y[2] < std::abs(y[1]); },
                                 SubgraphExterior{std::make_shared<const GraphField>(GraphField::from_function(
                                     P2, make_box({-2.5, -2.5}, {2.5, 2.5}), 0.1,
                                     [](const Vec& x) { return std::abs(x[1]); }, Homogeneous1Exterior{}))});
  CHECK(cylinder_defect(slab, Vec{1, 0, 0}, 1.0).two_sided == 0.0);

  const VoxelSet b = disk(2.5, 400, 1.0);
  const double lens = 2.0 * std::acos(0.5) - 0.5 * std::sqrt(3.0);
  const double expected = 2.0 * (std::numbers::pi - lens) / (4.0 * std::numbers::pi);
  CHECK(cylinder_defect(b, Vec{1, 0, 0}, 2.0).two_sided == doctest::Approx(expected).epsilon(0.02));
  CHECK_THROWS_AS(cylinder_defect(b, Vec{1, 1, 0}, 1.0), ParameterError);
}

TEST_CASE("blow-down verdicts") {
  const std::vector<double> scales{2, 4, 8, 16, 32};
  const std::vector<Vec> d1{Vec{1, 0, 0}, Vec{0, 1, 0}};

  const BlowdownReport plane = blowdown_analyze(affine_plus_bump(P1, Vec{0.5, 0, 0}, 0.2, 3, 0.05), scales, d1);
  CHECK(plane.verdict == Verdict::half_space);
  CHECK(plane.halfspace_defects.back() < plane.tolerance);
  for (std::size_t i = 1; i < scales.size(); ++i) {
    CHECK(plane.center_gaps[i] * scales[i] <= 1.1 * plane.center_gaps[0] * scales[0]);
  }
  auto longer = scales;
  longer.push_back(64);
  CHECK(blowdown_analyze(affine_plus_bump(P1, Vec{0.5, 0, 0}, 0.2, 3, 0.05), longer, d1).verdict ==
        Verdict::half_space);

  const GraphField corner = GraphField::from_function(P1, make_box({-2}, {2}), 0.05,
                                                      [](const Vec& x) { return std::abs(x[0]); }, Homogeneous1Exterior{});
  const BlowdownReport cone = blowdown_analyze(corner, scales, d1);
  CHECK(cone.verdict == Verdict::cone_detected);
  CHECK(verdict_name(cone.verdict) == "ConeDetected");

  const GraphField ridge = GraphField::from_function(P2, make_box({-2, -2}, {2, 2}), 0.05,
                                                     [](const Vec& x) { return std::abs(x[1]); }, Homogeneous1Exterior{});
  const BlowdownReport split =
      blowdown_analyze(ridge, {2, 4, 8}, {Vec{1, 0, 0}, Vec{0, 1, 0}}, BlowdownOptions{1.0, 24, 3.0});
  CHECK(split.verdict == Verdict::cylinder_split);
  REQUIRE(split.split_directions.size() == 1);
  CHECK(split.split_directions[0][0] == 1.0);
  for (double v : split.cylinder_defects[0]) CHECK(v < split.tolerance);

  CHECK_THROWS_AS(blowdown_analyze(corner, {4, 2}, d1), DomainError);
  CHECK_THROWS_AS(blowdown_analyze(corner, {}, d1), DomainError);
}
