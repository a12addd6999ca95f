#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nlmg/curvature.hpp"
#include "nlmg/errors.hpp"
#include "nlmg/profiles.hpp"

using namespace nlmg;

namespace {

const FracParams P1 = make_params(1, 0.5);
const FracParams P2 = make_params(2, 0.5);

// Unit disk in the plane, alpha = 0.5, from a polar quadrature run at high precision.
constexpr double kDiskH = 14.8325974184109753;

GraphField gaussian_shifted(const FracParams& p, double h, double shift) {
  return GraphField::from_function(p, make_box({-4 + shift}, {4 + shift}), h,
                                   [&](const Vec& x) { return std::exp(-(x[0] - shift) * (x[0] - shift)); },
                                   AffineExterior{});
}

}  // namespace

TEST_CASE("lattice constants match zeta / beta values") {
  struct Row {
    double alpha, k1, k2;
  };
  const Row rows[] = {{0.3, 1.80911851450796793645, 3.26416885171889237786},
                      {0.5, 2.92070901761917362578, 5.03877973939657605068},
                      {0.7, 5.55677689110739112536, 9.20776437036681288572}};
  for (const Row& r : rows) {
    CHECK(lattice_constant(1, r.alpha) == doctest::Approx(r.k1).epsilon(1e-13));
    CHECK(lattice_constant(2, r.alpha) == doctest::Approx(r.k2).epsilon(1e-13));
  }
  CHECK(dirichlet_beta(1.0) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-13));
}

TEST_CASE("affine graphs have zero curvature") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-2, 2);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = d(rng), b = d(rng);
    const GraphField u = GraphField::from_function(P1, make_box({-1}, {1}), 1.0 / 64,
                                                   [&](const Vec& x) { return a * x[0] + b; },
                                                   AffineExterior{{a, 0, 0}, b});
    const CurvatureField c = curvature_field(u);
    for (std::size_t k = 0; k < c.values.size(); ++k) {
      CHECK(std::abs(c.values[k]) <= c.error_bounds[k]);
    }
  }
  const double a0 = 0.4, a1 = -1.3;
  const GraphField u2 =
      GraphField::from_function(P2, make_box({-1, -1}, {1, 1}), 0.125,
                                [&](const Vec& x) { return a0 * x[0] + a1 * x[1] + 0.2; },
                                AffineExterior{{a0, a1, 0}, 0.2});
  const CurvatureField c2 = curvature_field(u2);
  CHECK(c2.values.size() == 13 * 13);
  for (std::size_t k = 0; k < c2.values.size(); ++k) CHECK(std::abs(c2.values[k]) <= c2.error_bounds[k]);
}

TEST_CASE("curvature is odd in u and invariant under vertical shifts") {
  const GraphField u = gaussian_field(P1, 0.05);
  const GraphField neg = GraphField::from_function(P1, u.window(), 0.05,
                                                   [](const Vec& x) { return -gaussian_bump(x, 1); },
                                                   AffineExterior{});
  const GraphField up = GraphField::from_function(P1, u.window(), 0.05,
                                                  [](const Vec& x) { return gaussian_bump(x, 1) + 3.0; },
                                                  AffineExterior{{}, 3.0});
  for (double x : {0.0, 0.35, -1.2}) {
    const Estimate a = curvature_at(u, Vec{x, 0, 0});
    const Estimate b = curvature_at(neg, Vec{x, 0, 0});
    const Estimate c = curvature_at(up, Vec{x, 0, 0});
    CHECK(a.value == doctest::Approx(-b.value).epsilon(1e-12));
    CHECK(std::abs(a.value - c.value) <= 1e-9 * std::abs(a.value) + 1e-12);
  }
}

TEST_CASE("translation and reflection equivariance") {
  const GraphField u = gaussian_shifted(P1, 0.05, 0.0);
  const GraphField v = gaussian_shifted(P1, 0.05, 0.75);
  for (double x : {0.0, 0.5, 1.0}) {
    const Estimate a = curvature_at(u, Vec{x, 0, 0});
    const Estimate b = curvature_at(v, Vec{x + 0.75, 0, 0});
    const Estimate r = curvature_at(u, Vec{-x, 0, 0});
    CHECK(std::abs(a.value - b.value) <= 1e-9 * std::abs(a.value) + a.err + b.err);
    CHECK(a.value == doctest::Approx(r.value).epsilon(1e-12));
  }
}

TEST_CASE("scaling law u_r(x) = u(rx)/r gives r^alpha times the curvature") {
  const double h = 0.05;
  const GraphField u = gaussian_field(P1, h);
  for (double r : {0.5, 2.0, 4.0}) {
    const GraphField ur = GraphField::from_function(P1, make_box({-4 / r}, {4 / r}), h / r,
                                                    [&](const Vec& x) { return std::exp(-r * r * x[0] * x[0]) / r; },
                                                    AffineExterior{});
    for (double x : {0.0, 0.25, 0.5}) {
      const Estimate a = curvature_at(ur, Vec{x / r, 0, 0});
      const Estimate b = curvature_at(u, Vec{x, 0, 0});
      const double s = std::pow(r, 0.5);
      CHECK(std::abs(a.value - s * b.value) <= 2.0 * (a.err + s * b.err));
    }
  }
}

TEST_CASE("a strict maximum gives positive curvature") {
  const GraphField u = affine_plus_bump(P1, Vec{}, 0.0, 3.0, 0.05);
  const Estimate c = curvature_at(u, Vec{0, 0, 0});
  CHECK(c.value - c.err > 0.0);
}

TEST_CASE("1D gaussian against the independent oracle") {
  struct Row {
    double alpha, x, value;
  };
  const Row rows[] = {{0.5, 0.0, 9.1790455951249783},   {0.5, 0.5, 3.4097644685038186},
                      {0.5, 1.0, -1.3012703914985088},  {0.3, 0.0, 7.3908664764018065},
                      {0.3, 0.5, 3.2476584953863838},   {0.3, 1.0, -0.76017356236531756}};
  for (const Row& r : rows) {
    const GraphField u = gaussian_field(make_params(1, r.alpha), 0.025);
    const Estimate c = curvature_at(u, Vec{r.x, 0, 0});
    CHECK(std::abs(c.value - r.value) <= c.err);
    CHECK(c.err < 2e-2);
  }
}

TEST_CASE("2D gaussian against the independent oracle") {
  const GraphField u = gaussian_field(P2, 0.0625);
  const Estimate c = curvature_at(u, Vec{0.5, 0.25, 0});
  CHECK(std::abs(c.value - 13.5574459) <= c.err + 1e-3);
  CHECK(c.err < 0.5);
}

TEST_CASE("points near the window edge are rejected") {
  const GraphField u = gaussian_field(P1, 0.05);
  CHECK_THROWS_AS(curvature_at(u, Vec{3.96, 0, 0}), DomainError);
  CHECK_THROWS_AS(curvature_at(u, Vec{std::nan(""), 0, 0}), DomainError);
}

TEST_CASE("half-spaces have zero set curvature, complements flip the sign") {
  const Box b = make_box({-1, -1}, {1, 1});
  const VoxelSet flat = voxelize(P1, b, {64, 64, 1}, [](const Vec& y) { return y[1] < 0; },
                                 HalfSpaceExterior{{0, 1, 0}, 0});
  for (int k = 0; k < 8; ++k) {
    const Estimate a = set_curvature_at(flat, Vec{-0.7 + 0.2 * k, 0, 0});
    CHECK(std::abs(a.value) <= a.err);
  }
  for (double th : {0.02, 0.2, 0.4, 1.0, 1.5115, 1.55}) {
    const Vec nrm{std::sin(th), std::cos(th), 0};
    const VoxelSet oblique = voxelize(P1, b, {64, 64, 1},
                                      [&](const Vec& y) { return nrm[0] * y[0] + nrm[1] * y[1] < 0; },
                                      HalfSpaceExterior{nrm, 0});
    for (int k = 0; k < 8; ++k) {
      const double t = -0.7 + 0.2 * k;
      const Vec x{t * nrm[1], -t * nrm[0], 0};
      const Estimate o = set_curvature_at(oblique, x);
      const Estimate oc = set_curvature_at(oblique.complement(), x);
      CHECK(std::abs(o.value) <= o.err);
      CHECK(o.value == -oc.value);
      CHECK(o.err == oc.err);
    }
  }
}

TEST_CASE("unit disk: constant positive set curvature matching the polar oracle") {
  const VoxelSet disk = voxelize(P1, make_box({-2, -2}, {2, 2}), {256, 256, 1},
                                 [](const Vec& y) { return y[0] * y[0] + y[1] * y[1] < 1; }, EmptyExterior{});
  std::vector<Estimate> vals;
  for (int k = 0; k < 8; ++k) {
    const double th = k * std::numbers::pi / 4 + 0.1;
    vals.push_back(set_curvature_at(disk, Vec{std::cos(th), std::sin(th), 0}));
  }
  for (const Estimate& a : vals) {
    CHECK(a.value > 0.0);
    CHECK(std::abs(a.value - kDiskH) <= 2.0 * a.err);
    for (const Estimate& b : vals) CHECK(std::abs(a.value - b.value) <= 2.0 * std::max(a.err, b.err));
  }
}

TEST_CASE("set curvature needs a boundary point") {
  const VoxelSet disk = voxelize(P1, make_box({-2, -2}, {2, 2}), {64, 64, 1},
                                 [](const Vec& y) { return y[0] * y[0] + y[1] * y[1] < 1; }, EmptyExterior{});
  CHECK_THROWS_AS(set_curvature_at(disk, Vec{0, 0, 0}), DomainError);
}

TEST_CASE("subgraph curvature agrees with the graph operator") {
  const GraphField u = gaussian_field(P1, 0.05);
  const ConsistencyReport r = graph_set_consistency(u, Vec{0, 0, 0});
  CHECK(r.defect <= r.err);
  const ConsistencyReport side = graph_set_consistency(u, Vec{0.5, 0, 0});
  CHECK(side.defect <= side.err);
}

TEST_CASE("weak pairing equals the weighted grid sum of pointwise values") {
  const GraphField u = gaussian_field(P1, 0.05);
  const auto bump = [](const Vec& x) { return compact_bump(Vec{x[0] / 2, 0, 0}, 1); };
  const GraphField v = GraphField::from_function(P1, u.window(), 0.05, bump, AffineExterior{});
  const Estimate w = weak_pairing(u, v);
  const CurvatureField c = curvature_field(u);
  double sum = 0.0, err = 0.0;
  for (std::size_t k = 0; k < c.nodes.size(); ++k) {
    const double vk = bump(u.node(c.nodes[k]));
    sum += 0.05 * vk * c.values[k];
    err += 0.05 * std::abs(vk) * c.error_bounds[k];
  }
  CHECK(std::abs(w.value - sum) <= w.err + err);

  std::vector<double> edge(u.node_count(), 0.0);
  edge[1] = 1.0;
  CHECK_THROWS_AS(weak_pairing(GraphOperator(u, {}), GraphOperator(u, {}).extend(), edge), DomainError);
}

TEST_CASE("pairing against a ball indicator obeys the C R^{n-alpha} bound") {
  const double alpha = 0.5;
  const GraphField u = GraphField::from_function(P1, make_box({-10}, {10}), 0.1,
                                                 [](const Vec& x) { return std::sin(2 * x[0]) + 0.5 * std::cos(5 * x[0]); },
                                                 ConstantBeyondExterior{});
  const GraphOperator op(u, {});
  const auto ext = op.extend();
  for (double R : {2.0, 4.0, 8.0}) {
    std::vector<double> v(u.node_count());
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double x = u.node(u.unflat(k))[0];
      v[k] = std::clamp((R - std::abs(x)) / 0.5, 0.0, 1.0);
    }
    const Estimate p = weak_pairing(op, ext, v);
    const double bound = 2.0 * P1.lambda * 2.0 * std::pow(2.0 * R, 1.0 - alpha) / (alpha * (1.0 - alpha));
    CHECK(std::abs(p.value) <= bound + p.err);
  }
}
