#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "nlmg/blowdown.hpp"
#include "nlmg/curvature.hpp"
#include "nlmg/dynamics.hpp"
#include "nlmg/graph_operator.hpp"
#include "nlmg/perimeter.hpp"
#include "nlmg/profiles.hpp"

using namespace nlmg;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

double beta_lambda(const FracParams& p) {
  const double e = p.n + 1 + p.alpha;
  return 0.5 * std::sqrt(std::numbers::pi) * std::tgamma(0.5 * (e - 1.0)) / std::tgamma(0.5 * e);
}

Outcome kernel_correctness() {
  Outcome o;
  const FracParams p = make_params(1, 0.5);
  const double beta = beta_lambda(p);
  const double d1 = std::abs(lambda_const(p) - beta) / beta;
  const double d2 = std::abs(kernel_for(p).lambda_quadrature() - beta) / beta;
  o.require(d1 <= 1e-10, fmt("Lambda vs Beta form rel %.2e", d1));
  o.require(d2 <= 1e-10, fmt("raw quadrature rel %.2e", d2));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-6.0, 6.0);
  std::vector<double> t(1000);
  for (double& x : t) x = std::sinh(U(rng));
  std::sort(t.begin(), t.end());
  double odd = 0.0, drop = 0.0, over = -p.lambda;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double g = eval_G(t[i], p);
    odd = std::max(odd, std::abs(g + eval_G(-t[i], p)));
    over = std::max(over, std::abs(g) - p.lambda);
    if (i > 0) drop = std::max(drop, eval_G(t[i - 1], p) - g);
  }
  o.require(odd == 0.0, fmt("max |G(t)+G(-t)| %.1e", odd));
  o.require(drop <= 0.0, fmt("max decrease %.1e", drop));
  o.require(over <= 0.0, fmt("max |G|-Lambda %.3e", over));
  return o;
}

double affine_ratio(const GraphField& u) {
  const CurvatureField f = curvature_field(u);
  double worst = 0.0;
  for (std::size_t k = 0; k < f.values.size(); ++k) worst = std::max(worst, std::abs(f.values[k]) / f.error_bounds[k]);
  return worst;
}

Outcome affine_nullity() {
  Outcome o;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> A(-2.0, 2.0), B(-1.0, 1.0);
  const FracParams p1 = make_params(1, 0.5), p2 = make_params(2, 0.5);
  double w1 = 0.0, w2 = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double a = A(rng), b = B(rng);
    w1 = std::max(w1, affine_ratio(GraphField::from_function(p1, make_box({-2}, {2}), 4.0 / 128,
                                                             [&](const Vec& x) { return a * x[0] + b; },
                                                             AffineExterior{{a, 0, 0}, b})));
  }
  for (int k = 0; k < 20; ++k) {
    const double a0 = B(rng), a1 = B(rng), b = B(rng);
    w2 = std::max(w2, affine_ratio(GraphField::from_function(p2, make_box({-1, -1}, {1, 1}), 2.0 / 64,
                                                             [&](const Vec& x) { return a0 * x[0] + a1 * x[1] + b; },
                                                             AffineExterior{{a0, a1, 0}, b})));
  }
  o.require(w1 <= 1.0, fmt("100 fields x 129 nodes: max |value|/err %.2e", w1));
  o.require(w2 <= 1.0, fmt("20 fields x 65x65 nodes: max |value|/err %.2e", w2));
  return o;
}

Outcome scaling_law() {
  Outcome o;
  double worst = 0.0;
  int cases = 0;
  for (double alpha : {0.3, 0.5, 0.7}) {
    const FracParams p = make_params(1, alpha);
    const GraphField u = gaussian_field(p, 0.05);
    for (double r : {0.5, 2.0, 4.0}) {
      // u_r(y) = u(r y) / r on the matching shrunken grid.
      const GraphField ur = GraphField::from_function(
          p, make_box({-4 / r}, {4 / r}), 0.05 / r, [&](const Vec& y) { return std::exp(-r * r * y[0] * y[0]) / r; },
          AffineExterior{});
      for (double x : {0.0, 0.25, -0.5}) {
        const Estimate a = curvature_at(ur, Vec{x / r, 0, 0});
        const Estimate b = curvature_at(u, Vec{x, 0, 0});
        const double s = std::pow(r, alpha);
        worst = std::max(worst, std::abs(a.value - s * b.value) / (2.0 * (a.err + s * b.err)));
        ++cases;
      }
    }
  }
  o.require(worst <= 1.0, fmt("%g cases: max |U u_r - r^a U u| / (2(err1 + r^a err2)) %.2e", cases, worst));
  return o;
}

Outcome graph_set_consistency_step() {
  Outcome o;
  const FracParams p = make_params(1, 0.5);
  const ConsistencyReport coarse = graph_set_consistency(gaussian_field(p, 0.05), Vec{});
  const ConsistencyReport fine = graph_set_consistency(gaussian_field(p, 0.025), Vec{});
  const double factor = coarse.defect / fine.defect;
  o.require(factor >= 1.5 && factor <= 3.0,
            fmt("defect %.4g (h=0.05) -> %.4g (h=0.025), factor %.3f", coarse.defect, fine.defect, factor));
  return o;
}

Outcome halfspace_nullity() {
  Outcome o;
  const FracParams p = make_params(1, 0.5);
  double worst = 0.0, anti = 0.0;
  for (double th : {0.02, 0.4, 1.0, 1.5115}) {
    const Vec nrm{std::sin(th), std::cos(th), 0};
    const VoxelSet e = voxelize(p, make_box({-1, -1}, {1, 1}), {64, 64, 1},
                                [&](const Vec& y) { return nrm[0] * y[0] + nrm[1] * y[1] < 0; },
                                HalfSpaceExterior{nrm, 0});
    const VoxelSet ec = e.complement();
    for (int k = 0; k < 8; ++k) {
      const double t = -0.7 + 0.2 * k;
      const Vec x{t * nrm[1], -t * nrm[0], 0};
      const Estimate a = set_curvature_at(e, x);
      const Estimate b = set_curvature_at(ec, x);
      worst = std::max(worst, std::abs(a.value) / a.err);
      anti = std::max(anti, std::abs(a.value + b.value) / std::max(1.0, std::abs(a.value)));
    }
  }
  o.require(worst <= 1.0, fmt("4 angles x 8 points: max |value|/err %.3f", worst));
  o.require(anti <= 1e-14, fmt("max |H[E] + H[E^c]| %.1e", anti));
  return o;
}

// Per(half-plane {y_2 < 0}, B_1), n+1 = 2, alpha = 0.5, from tools/oracles/halfplane_perimeter.py.
constexpr double kHalfPlaneOracle = 25.6000859505;

Outcome perimeter_growth_and_oracle() {
  Outcome o;
  const FracParams p = make_params(1, 0.5);
  const VoxelSet e = voxelize(p, make_box({-5, -5}, {5, 5}), {80, 80, 1}, [](const Vec& y) { return y[1] < 0; },
                              HalfSpaceExterior{{0, 1, 0}, 0});
  const double slope = loglog_slope(perimeter_growth(e, {1.0, 2.0, 4.0}));
  o.require(std::abs(slope - 1.5) <= 0.1, fmt("slope over R={1,2,4} %.4f (target 1.5)", slope));
  const VoxelSet fine = voxelize(p, make_box({-1.5, -1.5}, {1.5, 1.5}), {192, 192, 1},
                                 [](const Vec& y) { return y[1] < 0; }, HalfSpaceExterior{{0, 1, 0}, 0});
  const PerimeterResult r = frac_perimeter(fine, Ball{Vec{}, 1.0});
  const double rel = std::abs(r.value - kHalfPlaneOracle) / kHalfPlaneOracle;
  o.require(rel <= 0.02, fmt("Per(E, B_1) %.4f vs oracle %.4f, rel %.4f", r.value, kHalfPlaneOracle, rel));
  return o;
}

Outcome cmc_audit() {
  Outcome o;
  for (double alpha : {0.3, 0.5, 0.7}) {
    const FracParams p = make_params(1, alpha);
    const GraphField tent = GraphField::from_function(
        p, make_box({-20}, {20}), 0.125, [](const Vec& x) { return 200 * std::max(0.0, 1 - std::abs(x[0]) / 20); },
        ConstantBeyondExterior{});
    const CmcAudit a = cmc_exponent_audit(tent, {2, 4, 8, 16});
    const double env = 2.0 * a.envelope_constant * std::pow(16.0, -alpha);
    o.require(std::abs(a.fitted_exponent + alpha) <= 0.2, fmt("alpha=%.1f exponent %.3f", alpha, a.fitted_exponent));
    o.require(std::abs(a.fitted_h) <= env, fmt("|h| %.3g vs %.3g", std::abs(a.fitted_h), env));
  }
  return o;
}

Outcome solver_flatness() {
  Outcome o;
  const FracParams p = make_params(1, 0.5);
  const double slope = 0.5;
  const GraphField u = affine_plus_bump(p, Vec{slope, 0, 0}, 0.0, 4, 8.0 / 128);
  const SolveOptions opts;
  const SolveReport r = solve(u, 0.0, opts);
  double dist = 0.0;
  for (std::size_t k = 0; k < u.node_count(); ++k) {
    dist = std::max(dist, std::abs(r.final->values()[k] - slope * u.node(u.unflat(k))[0]));
  }
  double rise = -INFINITY;
  for (std::size_t i = 1; i < r.energy_trace.size(); ++i) rise = std::max(rise, r.energy_trace[i] - r.energy_trace[i - 1]);
  o.require(r.converged, fmt("%g nodes, %g iterations", double(u.node_count()), r.iterations));
  o.require(dist <= 10.0 * opts.tolerance, fmt("sup distance %.3g (bound %.1g)", dist, 10.0 * opts.tolerance));
  o.require(rise <= 0.0, fmt("largest energy step %.3g", rise));
  return o;
}

Outcome gradient_consistency() {
  Outcome o;
  const FracParams p = make_params(1, 0.5);
  const GraphField u = affine_plus_bump(p, Vec{0.5, 0, 0}, 0.0, 4, 1.0 / 16);
  const GraphOperator op(u, {});
  const auto ext = op.extend();
  std::vector<std::size_t> interior;
  for (std::size_t k = 0; k < u.node_count(); ++k) {
    if (u.margin(u.unflat(k)) >= 2) interior.push_back(k);
  }
  std::mt19937_64 rng(19);
  std::shuffle(interior.begin(), interior.end(), rng);
  double worst = 0.0;
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
    worst = std::max(worst, std::abs(fd - an) / std::abs(an));
  }
  o.require(worst <= 1e-3, fmt("20 nodes: max relative gap %.2e", worst));
  return o;
}

Outcome blowdown_rigidity() {
  Outcome o;
  const FracParams p1 = make_params(1, 0.5), p2 = make_params(2, 0.5);
  const double th = 0.4;
  const Vec nrm{std::sin(th), std::cos(th), 0};
  const VoxelSet hs = voxelize(p1, make_box({-20, -20}, {20, 20}), {1600, 1600, 1},
                               [&](const Vec& y) { return nrm[0] * y[0] + nrm[1] * y[1] < 0; }, HalfSpaceExterior{nrm, 0});
  double prev = center_gap(hs, Vec{}, nrm, 2.0, 1.0);
  double lo = INFINITY, hi = -INFINITY;
  for (double r : {4.0, 8.0, 16.0}) {
    const double g = center_gap(hs, Vec{}, nrm, r, 1.0);
    lo = std::min(lo, g / prev);
    hi = std::max(hi, g / prev);
    prev = g;
  }
  o.require(lo >= 0.4 && hi <= 0.6, fmt("gap ratios in [%.3f, %.3f]", lo, hi));

  const std::vector<double> scales{2, 4, 8, 16, 32};
  const std::vector<Vec> d1{Vec{1, 0, 0}, Vec{0, 1, 0}};
  const Verdict plane = blowdown_analyze(affine_plus_bump(p1, Vec{0.5, 0, 0}, 0.0, 3, 0.05), scales, d1).verdict;
  o.require(plane == Verdict::half_space, "affine+bump: " + verdict_name(plane));
  const GraphField corner = GraphField::from_function(p1, make_box({-2}, {2}), 0.05,
                                                      [](const Vec& x) { return std::abs(x[0]); }, Homogeneous1Exterior{});
  const Verdict cone = blowdown_analyze(corner, scales, d1).verdict;
  o.require(cone == Verdict::cone_detected, "|x|: " + verdict_name(cone));
  const GraphField ridge = GraphField::from_function(p2, make_box({-2, -2}, {2, 2}), 0.05,
                                                     [](const Vec& x) { return std::abs(x[1]); }, Homogeneous1Exterior{});
  const BlowdownReport split = blowdown_analyze(ridge, {2, 4, 8}, {Vec{1, 0, 0}, Vec{0, 1, 0}});
  const bool e1 = split.verdict == Verdict::cylinder_split && split.split_directions.size() == 1 &&
                  split.split_directions[0][0] == 1.0;
  o.require(e1, "|x_2|: " + verdict_name(split.verdict) + (e1 ? " along e_1" : ""));
  return o;
}

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "kernel correctness", 1, kernel_correctness},
      {2, "affine nullity", 60, affine_nullity},
      {3, "scaling law", 60, scaling_law},
      {4, "graph/set consistency", 300, graph_set_consistency_step},
      {5, "half-space nullity and complement antisymmetry", 60, halfspace_nullity},
      {6, "perimeter growth and oracle", 300, perimeter_growth_and_oracle},
      {7, "CMC audit", 300, cmc_audit},
      {8, "solver flatness", 600, solver_flatness},
      {9, "gradient consistency", 120, gradient_consistency},
      {10, "blow-down rigidity", 600, blowdown_rigidity},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = s < c.budget_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("Criterion %2d %s: %s (%.2fs, budget %gs%s) %s\n", c.id, c.title, pass ? "PASS" : "FAIL", s,
                c.budget_seconds, in_time ? "" : ", over budget", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
