#include "nlmg/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nlmg/errors.hpp"
#include "nlmg/parallel.hpp"
#include "nlmg/quadrature.hpp"

namespace nlmg {

namespace {

constexpr double kArmijo = 1e-4;

double ball_volume(int n) { return n == 1 ? 2.0 : std::numbers::pi; }

std::vector<double> residual(const GraphOperator& op, const std::vector<double>& ext,
                             const std::vector<std::size_t>& free, double h) {
  std::vector<double> r(free.size());
  const GraphField& u = op.field();
  parallel_for(free.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) r[i] = op.curvature_value(ext, u.unflat(free[i])) - h;
  });
  return r;
}

double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double graph_energy(const GraphField& u, const QuadratureSpec& q) {
  const GraphOperator op(u, q);
  return op.energy(op.extend());
}

SolveReport solve(const GraphField& u0, double h, const SolveOptions& opts) {
  if (!(opts.tolerance > 0.0)) throw ParameterError("solve: tolerance must be positive");
  if (opts.max_iterations < 0 || opts.max_backtracks < 1) throw ParameterError("solve: bad iteration limits");
  if (!std::isfinite(h)) throw ParameterError("solve: h must be finite");
  const GraphOperator op(u0, opts.quadrature);
  const double hn = std::pow(u0.spacing(), u0.dim());

  std::vector<std::size_t> free;
  for (std::size_t k = 0; k < u0.node_count(); ++k) {
    if (u0.margin(u0.unflat(k)) >= 2) free.push_back(k);
  }
  if (free.empty()) throw DomainError("solve: the window has no interior nodes");

  std::vector<double> u = u0.values();
  const double limit = opts.divergence_factor * (sup_norm(u) + 1.0);
  auto objective = [&](const std::vector<double>& v, const std::vector<double>& ext) {
    CompensatedSum lin;
    for (std::size_t k : free) lin.add(v[k]);
    return op.energy(ext) - h * hn * lin.value();
  };
  auto objective_change = [&](const std::vector<double>& from, const std::vector<double>& from_ext,
                              const std::vector<double>& to, const std::vector<double>& to_ext) {
    CompensatedSum lin;
    for (std::size_t k : free) lin.add(to[k] - from[k]);
    return op.energy_change(from_ext, to_ext) - h * hn * lin.value();
  };

  SolveReport rep;
  rep.tolerance = opts.tolerance;
  std::vector<double> ext = op.extend(u);
  double J = objective(u, ext);
  std::vector<double> r = residual(op, ext, free, h);
  rep.energy_trace.push_back(J);
  rep.residual_trace.push_back(sup_norm(r));

  // Initial step from the diagonal of the linearized operator at zero slope.
  double tau = std::pow(u0.spacing(), u0.params().alpha) / (4.0 * (op.kappa() + 2.0 * u0.dim()));
  std::vector<double> prev_u, prev_r;
  while (rep.residual_trace.back() > opts.tolerance && rep.iterations < opts.max_iterations) {
    if (!prev_u.empty()) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < free.size(); ++i) {
        const double s = u[free[i]] - prev_u[i], y = r[i] - prev_r[i];
        ss += s * s;
        sy += s * y;
      }
      if (sy > 0.0 && std::isfinite(ss / sy)) tau = ss / sy;
    }
    double g2 = 0.0;
    for (double x : r) g2 += x * x;

    std::vector<double> trial = u;
    std::vector<double> trial_ext;
    double change = 0.0;
    bool accepted = false;
    for (int b = 0; b < opts.max_backtracks && tau >= opts.step_floor; ++b) {
      for (std::size_t i = 0; i < free.size(); ++i) trial[free[i]] = u[free[i]] - tau * r[i];
      trial_ext = op.extend(trial);
      change = objective_change(u, ext, trial, trial_ext);
      accepted = change <= -kArmijo * tau * hn * g2;
      if (accepted) break;
      tau *= 0.5;
    }
    if (!accepted) throw StepFailure("solve: no admissible step above the floor");
    if (sup_norm(trial) > limit) throw DomainError("solve: iterates diverge");
    prev_u.resize(free.size());
    prev_r = r;
    for (std::size_t i = 0; i < free.size(); ++i) prev_u[i] = u[free[i]];
    u.swap(trial);
    ext.swap(trial_ext);
    J += change;
    r = residual(op, ext, free, h);
    ++rep.iterations;
    rep.energy_trace.push_back(J);
    rep.residual_trace.push_back(sup_norm(r));
  }

  rep.final.emplace(u0.params(), u0.window(), u0.spacing(), u, u0.exterior(), u0.seam_tolerance());
  const CurvatureField c = curvature_field(*rep.final, opts.quadrature);
  rep.quadrature_err = c.max_error();
  rep.converged = rep.residual_trace.back() <= opts.tolerance;
  return rep;
}

CmcAudit cmc_exponent_audit(const GraphField& u, const std::vector<double>& radii, const QuadratureSpec& q,
                            double width) {
  if (radii.size() < 3) throw DomainError("cmc_exponent_audit: need at least three radii");
  if (!(width > 0.0)) throw ParameterError("cmc_exponent_audit: width must be positive");
  const int n = u.dim();
  const double alpha = u.params().alpha;
  const Vec c = u.window().center();
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1]))) {
      throw DomainError("cmc_exponent_audit: radii must be positive and increasing");
    }
    for (int a = 0; a < n; ++a) {
      if (c[a] + radii[i] + 2.0 * u.spacing() >= u.window().hi[a]) {
        throw DomainError("cmc_exponent_audit: ball does not fit inside the window");
      }
    }
  }
  const GraphOperator op(u, q);
  const auto ext = op.extend();
  CmcAudit out;
  out.radii = radii;
  for (double R : radii) {
    std::vector<double> v(u.node_count());
    for (std::size_t k = 0; k < v.size(); ++k) {
      const Vec x = u.node(u.unflat(k));
      double r2 = 0.0;
      for (int a = 0; a < n; ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
      v[k] = std::clamp((R - std::sqrt(r2)) / width, 0.0, 1.0);
    }
    const Estimate pr = weak_pairing(op, ext, v);
    const double norm = ball_volume(n) * std::pow(R, n);
    out.p.push_back(pr.value / norm);
    out.p_err.push_back(pr.err / norm);
  }

  // p(R) = h + c R^{-alpha} by least squares.
  double s1 = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double x = std::pow(radii[i], -alpha);
    s1 += 1;
    sx += x;
    sxx += x * x;
    sy += out.p[i];
    sxy += x * out.p[i];
  }
  const double det = s1 * sxx - sx * sx;
  out.fitted_h = (sxx * sy - sx * sxy) / det;

  double lx = 0, ly = 0, lxx = 0, lxy = 0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double x = std::log(radii[i]);
    const double y = std::log(std::max(std::abs(out.p[i]), std::numeric_limits<double>::min()));
    lx += x;
    ly += y;
    lxx += x * x;
    lxy += x * y;
    out.envelope_constant = std::max(out.envelope_constant, std::abs(out.p[i]) * std::pow(radii[i], alpha));
  }
  out.fitted_exponent = (s1 * lxy - lx * ly) / (s1 * lxx - lx * lx);
  return out;
}

}  // namespace nlmg
