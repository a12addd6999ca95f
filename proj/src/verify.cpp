#include "nlmg/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "nlmg/blowdown.hpp"
#include "nlmg/curvature.hpp"
#include "nlmg/dynamics.hpp"
#include "nlmg/errors.hpp"
#include "nlmg/perimeter.hpp"
#include "nlmg/profiles.hpp"

namespace nlmg {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

struct Cases {
  std::vector<VerifyCase> list;
  void add(std::string name, double measured, double bound) {
    const bool pass = std::isfinite(measured) && measured <= bound;
    list.push_back({std::move(name), pass, measured, bound});
  }
};

double beta_lambda(const FracParams& p) {
  const double e = p.n + 1 + p.alpha;
  return 0.5 * std::sqrt(std::numbers::pi) * std::tgamma(0.5 * (e - 1.0)) / std::tgamma(0.5 * e);
}

void kernel_suite(Cases& c, Rng& rng) {
  const FracParams p = make_params(1, 0.5);
  const double beta = beta_lambda(p);
  c.add("lambda n=1 alpha=0.5 vs beta form", std::abs(lambda_const(p) - beta) / beta, 1e-10);
  c.add("lambda n=1 alpha=0.5 vs raw quadrature", std::abs(kernel_for(p).lambda_quadrature() - beta) / beta, 1e-10);
  for (int k = 0; k < 4; ++k) {
    const FracParams q = make_params(1 + k % 2, uniform(rng, 0.05, 0.95));
    c.add("lambda n=" + std::to_string(q.n) + fmt(" alpha=%.4f", q.alpha),
          std::abs(lambda_const(q) - beta_lambda(q)) / beta_lambda(q), 1e-10);
  }
  std::vector<double> t(1000);
  for (double& x : t) x = std::sinh(uniform(rng, -6.0, 6.0));
  std::sort(t.begin(), t.end());
  double odd = 0.0, mono = -1.0, bound = -1.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double g = eval_G(t[i], p);
    odd = std::max(odd, std::abs(g + eval_G(-t[i], p)));
    bound = std::max(bound, std::abs(g) - p.lambda);
    if (i > 0) mono = std::max(mono, eval_G(t[i - 1], p) - g);
  }
  c.add("G odd on 1000 samples", odd, 0.0);
  c.add("G nondecreasing on 1000 samples", mono, 0.0);
  c.add("|G| <= Lambda on 1000 samples", bound, 0.0);
}

// max |value| / err over the interior nodes of an affine field.
double affine_ratio(const GraphField& u) {
  const CurvatureField f = curvature_field(u);
  double worst = 0.0;
  for (std::size_t k = 0; k < f.values.size(); ++k) worst = std::max(worst, std::abs(f.values[k]) / f.error_bounds[k]);
  return worst;
}

void affine_suite(Cases& c, Rng& rng) {
  const FracParams p1 = make_params(1, 0.5), p2 = make_params(2, 0.5);
  for (int k = 0; k < 8; ++k) {
    const double a = uniform(rng, -2, 2), b = uniform(rng, -1, 1);
    const GraphField u = GraphField::from_function(p1, make_box({-2}, {2}), 4.0 / 128,
                                                   [&](const Vec& x) { return a * x[0] + b; }, AffineExterior{{a, 0, 0}, b});
    c.add(fmt("1D 129 nodes slope %.4f: max |value|/err", a), affine_ratio(u), 1.0);
  }
  for (int k = 0; k < 2; ++k) {
    const double a0 = uniform(rng, -1, 1), a1 = uniform(rng, -1, 1), b = uniform(rng, -1, 1);
    const GraphField u = GraphField::from_function(p2, make_box({-1, -1}, {1, 1}), 2.0 / 32,
                                                   [&](const Vec& x) { return a0 * x[0] + a1 * x[1] + b; },
                                                   AffineExterior{{a0, a1, 0}, b});
    c.add(fmt("2D 33x33 nodes gradient (%.4f, ", a0) + fmt("%.4f): max |value|/err", a1), affine_ratio(u), 1.0);
  }
}

void scaling_suite(Cases& c, Rng& rng) {
  const double h = 0.05;
  for (double alpha : {0.3, 0.5, 0.7}) {
    const FracParams p = make_params(1, alpha);
    const GraphField u = gaussian_field(p, h);
    const double x = uniform(rng, -0.5, 0.5);
    for (double r : {0.5, 2.0, 4.0}) {
      const GraphField ur = GraphField::from_function(
          p, make_box({-4 / r}, {4 / r}), h / r, [&](const Vec& y) { return std::exp(-r * r * y[0] * y[0]) / r; },
          AffineExterior{});
      const Estimate a = curvature_at(ur, Vec{x / r, 0, 0});
      const Estimate b = curvature_at(u, Vec{x, 0, 0});
      const double s = std::pow(r, alpha);
      c.add(fmt("alpha=%.1f", alpha) + fmt(" r=%g", r) + fmt(" x=%.4f", x), std::abs(a.value - s * b.value),
            2.0 * (a.err + s * b.err));
    }
  }
}

void halfspace_suite(Cases& c, Rng& rng) {
  const FracParams p = make_params(1, 0.5);
  const double th = uniform(rng, 0.0, 0.5 * std::numbers::pi);
  const Vec nrm{std::sin(th), std::cos(th), 0};
  const VoxelSet e = voxelize(p, make_box({-1, -1}, {1, 1}), {64, 64, 1},
                              [&](const Vec& y) { return nrm[0] * y[0] + nrm[1] * y[1] < 0; }, HalfSpaceExterior{nrm, 0});
  const VoxelSet ec = e.complement();
  for (int k = 0; k < 8; ++k) {
    const double t = -0.7 + 0.2 * k;
    const Vec x{t * nrm[1], -t * nrm[0], 0};
    const Estimate a = set_curvature_at(e, x);
    const Estimate b = set_curvature_at(ec, x);
    const std::string tag = fmt("theta=%.4f", th) + fmt(" t=%.1f", t);
    c.add(tag + ": |value| <= err", std::abs(a.value), a.err);
    c.add(tag + ": |H[E] + H[E^c]|", std::abs(a.value + b.value), 0.0);
  }
}

void consistency_suite(Cases& c, Rng&) {
  const FracParams p = make_params(1, 0.5);
  const ConsistencyReport coarse = graph_set_consistency(gaussian_field(p, 0.05), Vec{});
  const ConsistencyReport fine = graph_set_consistency(gaussian_field(p, 0.025), Vec{});
  c.add("h=0.05 defect <= err", coarse.defect, coarse.err);
  c.add("h=0.025 defect <= err", fine.defect, fine.err);
  const double ratio = coarse.defect / fine.defect;
  c.add(fmt("refinement factor %.4f: distance from [1.5, 3]", ratio), std::max(1.5 - ratio, ratio - 3.0), 0.0);
}

void growth_suite(Cases& c, Rng& rng) {
  const FracParams p = make_params(1, 0.5);
  const double th = uniform(rng, 0.0, 0.5 * std::numbers::pi);
  const Vec nrm{std::sin(th), std::cos(th), 0};
  const VoxelSet e = voxelize(p, make_box({-5, -5}, {5, 5}), {80, 80, 1},
                              [&](const Vec& y) { return nrm[0] * y[0] + nrm[1] * y[1] < 0; }, HalfSpaceExterior{nrm, 0});
  const auto g = perimeter_growth(e, {1.0, 2.0, 4.0});
  c.add(fmt("theta=%.4f: |slope - (n+1-alpha)|", th), std::abs(loglog_slope(g) - 1.5), 0.1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const PerimeterResult m = ball_majorant(e, g[i].first);
    c.add(fmt("R=%g: Per(E, B_R) - majorant", g[i].first), g[i].second.value - m.value, g[i].second.err + m.err);
    if (i > 0) c.add(fmt("R=%g: decrease from previous radius", g[i].first), g[i - 1].second.value - g[i].second.value, 0.0);
  }
}

void cmc_suite(Cases& c, Rng&) {
  for (double alpha : {0.3, 0.5, 0.7}) {
    const FracParams p = make_params(1, alpha);
    const GraphField tent = GraphField::from_function(
        p, make_box({-20}, {20}), 0.125, [](const Vec& x) { return 200 * std::max(0.0, 1 - std::abs(x[0]) / 20); },
        ConstantBeyondExterior{});
    const CmcAudit a = cmc_exponent_audit(tent, {2, 4, 8, 16});
    c.add(fmt("alpha=%.1f: |exponent + alpha|", alpha), std::abs(a.fitted_exponent + alpha), 0.2);
    c.add(fmt("alpha=%.1f: |fitted h|", alpha), std::abs(a.fitted_h), 2.0 * a.envelope_constant * std::pow(16.0, -alpha));
  }
}

void solver_suite(Cases& c, Rng& rng) {
  const FracParams p = make_params(1, 0.5);
  const double slope = uniform(rng, -0.5, 0.5);
  const GraphField u = affine_plus_bump(p, Vec{slope, 0, 0}, 0.0, 4, 8.0 / 128);
  SolveOptions o;
  const SolveReport r = solve(u, 0.0, o);
  double dist = 0.0;
  for (std::size_t k = 0; k < u.node_count(); ++k) {
    dist = std::max(dist, std::abs(r.final->values()[k] - slope * u.node(u.unflat(k))[0]));
  }
  double rise = -1.0;
  for (std::size_t i = 1; i < r.energy_trace.size(); ++i) rise = std::max(rise, r.energy_trace[i] - r.energy_trace[i - 1]);
  const std::string tag = fmt("slope %.4f", slope);
  c.add(tag + ": final residual", r.residual_trace.back(), o.tolerance);
  c.add(tag + ": sup distance to the affine data", dist, 10.0 * o.tolerance);
  c.add(tag + ": largest energy increase", rise, 0.0);
}

void blowdown_suite(Cases& c, Rng& rng) {
  const FracParams p1 = make_params(1, 0.5), p2 = make_params(2, 0.5);
  const double th = uniform(rng, 0.1, 1.2);
  const Vec nrm{std::sin(th), std::cos(th), 0};
  const VoxelSet hs = voxelize(p1, make_box({-20, -20}, {20, 20}), {1600, 1600, 1},
                               [&](const Vec& y) { return nrm[0] * y[0] + nrm[1] * y[1] < 0; }, HalfSpaceExterior{nrm, 0});
  double prev = center_gap(hs, Vec{}, nrm, 2.0, 1.0);
  for (double r : {4.0, 8.0, 16.0}) {
    const double g = center_gap(hs, Vec{}, nrm, r, 1.0);
    const double ratio = g / prev;
    c.add(fmt("theta=%.4f", th) + fmt(" r=%g: gap ratio distance from [0.4, 0.6]", r),
          std::max(0.4 - ratio, ratio - 0.6), 0.0);
    prev = g;
  }
  const std::vector<double> scales{2, 4, 8, 16, 32};
  const std::vector<Vec> d1{Vec{1, 0, 0}, Vec{0, 1, 0}};
  const double a = uniform(rng, -1, 1);
  const BlowdownReport plane = blowdown_analyze(affine_plus_bump(p1, Vec{a, 0, 0}, 0.0, 3, 0.05), scales, d1);
  c.add(fmt("affine slope %.4f + bump: not HalfSpace", a), plane.verdict == Verdict::half_space ? 0.0 : 1.0, 0.0);
  const GraphField corner = GraphField::from_function(p1, make_box({-2}, {2}), 0.05,
                                                      [](const Vec& x) { return std::abs(x[0]); }, Homogeneous1Exterior{});
  const BlowdownReport cone = blowdown_analyze(corner, scales, d1);
  c.add("|x|: not ConeDetected", cone.verdict == Verdict::cone_detected ? 0.0 : 1.0, 0.0);
  const GraphField ridge = GraphField::from_function(p2, make_box({-2, -2}, {2, 2}), 0.05,
                                                     [](const Vec& x) { return std::abs(x[1]); }, Homogeneous1Exterior{});
  const BlowdownReport split =
      blowdown_analyze(ridge, {2, 4, 8}, {Vec{1, 0, 0}, Vec{0, 1, 0}}, BlowdownOptions{1.0, 24, 3.0});
  const bool e1 = split.verdict == Verdict::cylinder_split && split.split_directions.size() == 1 &&
                  split.split_directions[0][0] == 1.0;
  c.add("|x_2|: split direction e_1 not detected", e1 ? 0.0 : 1.0, 0.0);
  c.add("|x_2|: largest e_1 cylinder defect", *std::max_element(split.cylinder_defects[0].begin(),
                                                                split.cylinder_defects[0].end()),
        split.tolerance);
}

using SuiteFn = void (*)(Cases&, Rng&);

const std::map<std::string, SuiteFn>& suite_table() {
  static const std::map<std::string, SuiteFn> table{
      {"kernel", kernel_suite},          {"affine-nullity", affine_suite},   {"scaling-law", scaling_suite},
      {"halfspace-nullity", halfspace_suite}, {"consistency", consistency_suite}, {"perimeter-growth", growth_suite},
      {"cmc-audit", cmc_suite},          {"solver-flatness", solver_suite}, {"blowdown-rigidity", blowdown_suite}};
  return table;
}

}  // namespace

bool SuiteResult::passed() const {
  return !cases.empty() && std::all_of(cases.begin(), cases.end(), [](const VerifyCase& c) { return c.pass; });
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"kernel",           "affine-nullity",  "scaling-law",
                                              "halfspace-nullity", "consistency",     "perimeter-growth",
                                              "cmc-audit",        "solver-flatness", "blowdown-rigidity"};
  return names;
}

SuiteResult run_suite(const std::string& name, std::uint64_t seed) {
  const auto it = suite_table().find(name);
  if (it == suite_table().end()) throw ParameterError("unknown suite '" + name + "'");
  // Each suite gets its own stream so suites can run in any order.
  std::uint64_t tag = 1469598103934665603ULL;
  for (unsigned char ch : name) tag = (tag ^ ch) * 1099511628211ULL;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  Rng rng(seq);
  const auto t0 = std::chrono::steady_clock::now();
  Cases c;
  try {
    it->second(c, rng);
  } catch (const std::exception& e) {
    c.add(std::string("exception: ") + e.what(), std::numeric_limits<double>::infinity(), 0.0);
  }
  SuiteResult r{name, std::move(c.list), 0.0};
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

json verify_json(const std::vector<SuiteResult>& results, std::uint64_t seed) {
  json suites = json::array();
  bool all = true;
  for (const SuiteResult& s : results) {
    json cases = json::array();
    for (const VerifyCase& c : s.cases) {
      json m = std::isfinite(c.measured) ? json(c.measured) : json(nullptr);
      cases.push_back({{"name", c.name}, {"status", c.pass ? "pass" : "fail"}, {"measured", m}, {"bound", c.bound}});
    }
    all = all && s.passed();
    suites.push_back({{"name", s.name}, {"passed", s.passed()}, {"cases", cases}});
  }
  return {{"seed", seed}, {"passed", all}, {"suites", suites}};
}

}  // namespace nlmg
