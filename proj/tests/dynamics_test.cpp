#include <cmath>
#include <random>

#include "doctest.h"
#include "nlmg/dynamics.hpp"
#include "nlmg/errors.hpp"
#include "nlmg/profiles.hpp"

using namespace nlmg;

namespace {

const FracParams P1 = make_params(1, 0.5);

}  // namespace

TEST_CASE("constant graphs have zero energy") {
  const GraphField u = GraphField::from_function(P1, make_box({-2}, {2}), 1.0 / 16, [](const Vec&) { return 0.7; },
                                                 ConstantBeyondExterior{});
  CHECK(graph_energy(u) == 0.0);
}

TEST_CASE("energy is convex along random segments") {
  const GraphField base = gaussian_field(P1, 0.125);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N(0.0, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> a = base.values(), b = base.values(), m(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (base.margin(base.unflat(k)) < 1) continue;
      a[k] += N(rng);
      b[k] += N(rng);
    }
    for (std::size_t k = 0; k < a.size(); ++k) m[k] = 0.5 * (a[k] + b[k]);
    const double ea = graph_energy(base.with_values(a)), eb = graph_energy(base.with_values(b));
    const double em = graph_energy(base.with_values(m));
    CHECK(em <= 0.5 * (ea + eb) + 1e-10 * (std::abs(ea) + std::abs(eb)));
  }
}

TEST_CASE("energy gradient is h^n times the curvature operator") {
  const GraphField u = affine_plus_bump(P1, Vec{0.5, 0, 0}, 0.0, 4, 1.0 / 16);
  const GraphOperator op(u, {});
  const auto ext = op.extend();
  std::mt19937_64 rng(9);
  std::vector<std::size_t> interior;
  for (std::size_t k = 0; k < u.node_count(); ++k) {
    if (u.margin(u.unflat(k)) >= 2) interior.push_back(k);
  }
  std::shuffle(interior.begin(), interior.end(), rng);
  for (int i = 0; i < 20; ++i) {
    const std::size_t k = interior[i];
    std::vector<double> v = u.values();
    const double eps = 1e-5;
    v[k] += eps;
    const double ep = op.energy(op.extend(v));
    v[k] -= 2 * eps;
    const double em = op.energy(op.extend(v));
    const double fd = (ep - em) / (2 * eps);
    const double an = u.spacing() * op.curvature_value(ext, u.unflat(k));
    CHECK(std::abs(fd - an) <= 1e-3 * std::abs(an));
  }
}

TEST_CASE("incremental energy change matches the energy difference") {
  const GraphField u = affine_plus_bump(P1, Vec{0.5, 0, 0}, 0.0, 4, 1.0 / 16);
  const GraphOperator op(u, {});
  std::mt19937_64 rng(4);
  std::normal_distribution<double> N(0.0, 1.0);
  for (double scale : {1e-1, 1e-3, 1e-6}) {
    std::vector<double> v = u.values();
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (u.margin(u.unflat(k)) >= 2) v[k] += scale * N(rng);
    }
    const auto a = op.extend(), b = op.extend(v);
    const double direct = op.energy(b) - op.energy(a);
    const double inc = op.energy_change(a, b);
    CHECK(std::abs(inc - direct) <= 1e-9 * std::abs(direct) + 1e-13 * std::abs(op.energy(a)));
  }
}

TEST_CASE("affine start converges at iteration zero") {
  const GraphField u = GraphField::from_function(P1, make_box({-2}, {2}), 1.0 / 16,
                                                 [](const Vec& x) { return 0.3 * x[0] - 1; },
                                                 AffineExterior{{0.3, 0, 0}, -1});
  SolveOptions o;
  o.tolerance = 1e-6;
  const SolveReport r = solve(u, 0.0, o);
  CHECK(r.converged);
  CHECK(r.iterations == 0);
  REQUIRE(r.final.has_value());
  CHECK(r.final->values() == u.values());
}

TEST_CASE("bump relaxes to the affine data with a monotone energy trace") {
  const GraphField u = affine_plus_bump(P1, Vec{0.0, 0, 0}, 0.0, 4, 1.0 / 8);
  SolveOptions o;
  o.tolerance = 1e-6;
  const SolveReport r = solve(u, 0.0, o);
  CHECK(r.converged);
  double dist = 0.0;
  for (double v : r.final->values()) dist = std::max(dist, std::abs(v));
  CHECK(dist <= 10 * o.tolerance);
  for (std::size_t i = 1; i < r.energy_trace.size(); ++i) CHECK(r.energy_trace[i] <= r.energy_trace[i - 1]);
  CHECK(r.residual_trace.size() == static_cast<std::size_t>(r.iterations) + 1);
}

TEST_CASE("solver argument checks") {
  const GraphField u = gaussian_field(P1, 0.25);
  SolveOptions o;
  o.tolerance = 0.0;
  CHECK_THROWS_AS(solve(u, 0.0, o), ParameterError);
  o.tolerance = 1e-6;
  o.max_iterations = 3;
  const SolveReport r = solve(u, 0.0, o);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 3);
}

TEST_CASE("cmc audit: affine pairing vanishes, bounded graphs decay like R^-alpha") {
  const GraphField flat = GraphField::from_function(P1, make_box({-20}, {20}), 0.125,
                                                    [](const Vec& x) { return 0.4 * x[0]; }, AffineExterior{{0.4, 0, 0}, 0});
  const CmcAudit a = cmc_exponent_audit(flat, {2, 4, 8, 16});
  for (std::size_t i = 0; i < a.p.size(); ++i) CHECK(std::abs(a.p[i]) <= a.p_err[i] + 1e-9);

  const GraphField tent = GraphField::from_function(
      P1, make_box({-20}, {20}), 0.125, [](const Vec& x) { return 200 * std::max(0.0, 1 - std::abs(x[0]) / 20); },
      ConstantBeyondExterior{});
  const CmcAudit t = cmc_exponent_audit(tent, {2, 4, 8, 16});
  CHECK(std::abs(t.fitted_exponent + 0.5) <= 0.2);
  CHECK(std::abs(t.fitted_h) <= 2 * t.envelope_constant * std::pow(16.0, -0.5));

  CHECK_THROWS_AS(cmc_exponent_audit(tent, {2, 4}), DomainError);
  CHECK_THROWS_AS(cmc_exponent_audit(tent, {2, 4, 30}), DomainError);
}

TEST_CASE("cmc audit pairing stays bounded under vertical scaling") {
  const auto f = [](const Vec& x) { return std::max(0.0, 1 - std::abs(x[0]) / 6); };
  const GraphField u = GraphField::from_function(P1, make_box({-12}, {12}), 0.125, f, ConstantBeyondExterior{});
  const GraphField v = GraphField::from_function(
      P1, make_box({-12}, {12}), 0.125, [&](const Vec& x) { return 3 * f(x); }, ConstantBeyondExterior{});
  const CmcAudit a = cmc_exponent_audit(u, {2, 4, 8});
  const CmcAudit b = cmc_exponent_audit(v, {2, 4, 8});
  for (std::size_t i = 0; i < a.p.size(); ++i) {
    // |G| <= Lambda caps the pairing by a constant independent of u.
    const double R = a.radii[i];
    const double cap = 2.0 * P1.lambda * 2.0 * std::pow(2.0 * R, 0.5) / (0.5 * 0.5) / (2.0 * R);
    CHECK(std::abs(a.p[i]) <= cap);
    CHECK(std::abs(b.p[i]) <= cap);
  }
}
