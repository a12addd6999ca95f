#include <cmath>
#include <cstdlib>
#include <random>

#include "doctest.h"
#include "nlmg/errors.hpp"
#include "nlmg/field.hpp"
#include "nlmg/io.hpp"

using namespace nlmg;

namespace {

const FracParams P1 = make_params(1, 0.5);
const FracParams P2 = make_params(2, 0.5);

GraphField affine1(double a, double b) {
  return GraphField::from_function(P1, make_box({-1}, {1}), 0.125, [&](const Vec& x) { return a * x[0] + b; },
                                   AffineExterior{{a, 0, 0}, b});
}

}  // namespace

TEST_CASE("sample: nodes exact, midpoints averaged, affine exterior far away") {
  const GraphField u = affine1(0.7, -0.2);
  CHECK(u.count(0) == 17);
  for (std::size_t k = 0; k < u.node_count(); ++k) {
    CHECK(u.sample(u.node(u.unflat(k))) == u.values()[k]);
  }
  Vec far{25.0, 0, 0};
  CHECK(u.sample(far) == doctest::Approx(0.7 * 25.0 - 0.2).epsilon(1e-15));

  std::vector<double> v(17);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-3, 3);
  for (auto& x : v) x = d(rng);
  const GraphField w(P1, make_box({-1}, {1}), 0.125, v, ConstantBeyondExterior{});
  for (int i = 0; i + 1 < 17; ++i) {
    Vec mid{-1 + (i + 0.5) * 0.125, 0, 0};
    CHECK(w.sample(mid) == doctest::Approx(0.5 * (v[i] + v[i + 1])).epsilon(1e-14));
  }
  CHECK(w.sample(Vec{-40, 0, 0}) == v.front());
  CHECK(w.sample(Vec{3, 0, 0}) == v.back());
}

TEST_CASE("sample in 2D is bilinear and continuous across the seam") {
  const Box win = make_box({-1, -1}, {1, 1});
  auto f = [](const Vec& x) { return std::sin(2 * x[0]) * std::cos(x[1]); };
  const GraphField u = GraphField::from_function(P2, win, 0.25, f, ConstantBeyondExterior{});
  CHECK(u.count(0) == 9);
  CHECK(u.count(1) == 9);
  CHECK(u.sample(Vec{-0.75, 0.5, 0}) == u.values()[u.flat({1, 6})]);
  const double a = u.values()[u.flat({2, 3})], b = u.values()[u.flat({3, 3})];
  CHECK(u.sample(Vec{-0.375, -0.25, 0}) == doctest::Approx(0.5 * (a + b)).epsilon(1e-14));
  // Probe densely across x = 1.
  double jump = 0.0;
  for (int k = 0; k <= 200; ++k) {
    const double y = -1 + 0.01 * k;
    jump = std::max(jump, std::abs(u.sample(Vec{1 - 1e-9, y, 0}) - u.sample(Vec{1 + 1e-9, y, 0})));
  }
  CHECK(jump < u.seam_tolerance());
}

TEST_CASE("homogeneous1 exterior extends |x| and affine maps exactly") {
  const GraphField v = GraphField::from_function(P1, make_box({-2}, {2}), 0.25,
                                                 [](const Vec& x) { return std::abs(x[0]); },
                                                 Homogeneous1Exterior{});
  for (double x : {-100.0, -3.0, 2.5, 7.0}) CHECK(v.sample(Vec{x, 0, 0}) == doctest::Approx(std::abs(x)));
  const Box win = make_box({-1, -1}, {1, 1});
  const GraphField c = GraphField::from_function(P2, win, 0.125, [](const Vec& x) { return std::abs(x[1]); },
                                                 Homogeneous1Exterior{});
  CHECK(c.sample(Vec{5, -3, 0}) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(c.sample(Vec{-9, 4, 0}) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("seam mismatch and malformed grids are rejected") {
  CHECK_THROWS_AS(GraphField(P1, make_box({-1}, {1}), 0.5, {0, 0, 0, 0, 0}, AffineExterior{{1, 0, 0}, 0}),
                  DomainError);
  CHECK_THROWS_AS(GraphField(P1, make_box({-1}, {1}), 0.3, {0, 0, 0}, ConstantBeyondExterior{}), DomainError);
  CHECK_THROWS_AS(GraphField(P1, make_box({-1}, {1}), 0.5, {0, 0, 0}, ConstantBeyondExterior{}), DomainError);
  CHECK_THROWS_AS(GraphField(P1, make_box({-1}, {1}), 0.5, {0, 0, NAN, 0, 0}, ConstantBeyondExterior{}),
                  DomainError);
  CHECK_THROWS_AS(GraphField::from_function(P1, make_box({1}, {2}), 0.25, [](const Vec&) { return 0.0; },
                                            Homogeneous1Exterior{}),
                  DomainError);
}

TEST_CASE("subgraph_of: flat, affine, and vertically monotone") {
  const Box box = make_box({-1, -1}, {1, 1});
  const GraphField zero = affine1(0.0, 0.0);
  const VoxelSet e0 = subgraph_of(zero, box, {16, 16, 1});
  for (std::size_t k = 0; k < e0.occupancy().size(); ++k) {
    const auto v = e0.unflat(k);
    CHECK(e0.occupancy()[k] == (v[1] < 8 ? 1 : 0));
  }
  const GraphField aff = affine1(0.6, 0.1);
  const VoxelSet ea = subgraph_of(aff, box, {32, 32, 1});
  for (std::size_t k = 0; k < ea.occupancy().size(); ++k) {
    const Vec c = ea.voxel_center(ea.unflat(k));
    if (std::abs(c[1] - 0.6 * c[0] - 0.1) < 1e-12) continue;
    CHECK((ea.occupancy()[k] == 1) == (c[1] - 0.6 * c[0] - 0.1 < 0));
  }
  std::vector<double> v(17);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-0.8, 0.8);
  for (auto& x : v) x = d(rng);
  const GraphField w(P1, make_box({-1}, {1}), 0.125, v, ConstantBeyondExterior{});
  const VoxelSet ew = subgraph_of(w, box, {40, 40, 1});
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j + 1 < 40; ++j) CHECK(ew.occupied({i, j + 1, 0}) <= ew.occupied({i, j, 0}));
  }
  CHECK_THROWS_AS(subgraph_of(w, box, {0, 40, 1}), ParameterError);
}

TEST_CASE("member and complement") {
  const Box box = make_box({-1, -1}, {1, 1});
  const HalfSpaceExterior hs{{0.3, 1.0, 0}, 0.05};
  auto inside = [&](const Vec& x) { return 0.3 * x[0] + x[1] < 0.05; };
  const VoxelSet e = voxelize(P1, box, {20, 20, 1}, inside, hs);
  CHECK(e.member(Vec{0, -50, 0}) == Membership::inside);
  CHECK(e.member(Vec{10, 40, 0}) == Membership::outside);
  const auto v = e.voxel_of(Vec{0.1, -0.5, 0});
  CHECK(e.occupied(v));
  CHECK(member(e, e.voxel_center(v)) == Membership::inside);
  const VoxelSet c = e.complement();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-5, 5);
  for (int k = 0; k < 500; ++k) {
    const Vec x{d(rng), d(rng), 0};
    CHECK(c.contains(x) != e.contains(x));
  }
  const VoxelSet cc = c.complement();
  CHECK(cc.occupancy() == e.occupancy());
  CHECK(cc.complemented() == e.complemented());
}

TEST_CASE("cone exterior follows rays from the apex") {
  const Box box = make_box({-1, -1}, {1, 1});
  auto inside = [](const Vec& x) { return x[1] < -std::abs(x[0]); };
  const VoxelSet e = voxelize(P1, box, {64, 64, 1}, inside, ConeExterior{{0, 0, 0}});
  CHECK(e.contains(Vec{0, -30, 0}));
  CHECK_FALSE(e.contains(Vec{0, 30, 0}));
  CHECK_FALSE(e.contains(Vec{30, -10, 0}));
  CHECK(e.contains(Vec{10, -30, 0}));
}

TEST_CASE("voxel sets require cubic voxels and matching dimension") {
  const Box box = make_box({-1, -1}, {1, 2});
  CHECK_THROWS_AS(voxelize(P1, box, {10, 10, 1}, [](const Vec&) { return false; }, EmptyExterior{}), DomainError);
  CHECK_THROWS_AS(voxelize(P2, make_box({-1, -1}, {1, 1}), {4, 4, 1}, [](const Vec&) { return false; },
                           EmptyExterior{}),
                  DomainError);
}

TEST_CASE("JSON round trips are bit exact") {
  std::vector<double> v(9 * 9);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(0, 1);
  for (auto& x : v) x = d(rng) * 1e-3 + 1.0 / 3.0;
  const GraphField u(P2, make_box({-1, -1}, {1, 1}), 0.25, v, ConstantBeyondExterior{});
  const json j = to_json(u);
  const GraphField back = graph_from_json(json::parse(j.dump()));
  CHECK(back.values() == u.values());
  CHECK(back.spacing() == u.spacing());
  CHECK(back.window().lo == u.window().lo);

  const GraphField a = affine1(1.0 / 7.0, -2.0 / 3.0);
  const GraphField ab = graph_from_json(json::parse(to_json(a).dump()));
  CHECK(ab.values() == a.values());
  CHECK(std::get<AffineExterior>(ab.exterior()).gradient == std::get<AffineExterior>(a.exterior()).gradient);

  const VoxelSet e = subgraph_of(a, make_box({-1, -1}, {1, 1}), {24, 24, 1});
  const VoxelSet eb = voxels_from_json(json::parse(to_json(e).dump()));
  CHECK(eb.occupancy() == e.occupancy());
  CHECK(eb.box().hi == e.box().hi);
  CHECK(std::get<SubgraphExterior>(eb.exterior()).graph->values() == a.values());
  CHECK(to_json(eb).dump() == to_json(e).dump());

  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 5e-324}) CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
}

TEST_CASE("malformed documents name the offending key") {
  json j = to_json(affine1(0.5, 0.0));
  j.erase("spacing");
  try {
    graph_from_json(j);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.key() == "spacing");
  }
  j = to_json(affine1(0.5, 0.0));
  j["values"] = "0,1,x";
  try {
    graph_from_json(j);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.key() == "values");
  }
  j = to_json(affine1(0.5, 0.0));
  j["exterior"]["type"] = "spline";
  try {
    graph_from_json(j);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.key() == "exterior.type");
  }
  j = to_json(affine1(0.5, 0.0));
  j["alpha"] = 1.5;
  CHECK_THROWS_AS(graph_from_json(j), ParseError);
}
