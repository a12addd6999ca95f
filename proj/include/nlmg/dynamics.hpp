#pragma once

#include <optional>
#include <vector>

#include "nlmg/curvature.hpp"

namespace nlmg {

/// Discrete energy sum over pairs not both outside the window of
/// calG((u(x)-u(y))/|x-y|) |x-y|^{1-n-alpha} h^{2n}, with calG' = G, plus the matching
/// excluded-cell and far-field terms. Convex in the window values; its gradient at a node
/// with margin >= 2 is h^n times the curvature operator there.
double graph_energy(const GraphField& u, const QuadratureSpec& q = {});

struct SolveOptions {
  double tolerance = 1e-6;
  int max_iterations = 20000;
  int max_backtracks = 60;
  double step_floor = 1e-8;
  /// Abort when any node exceeds this multiple of the initial sup norm (plus one).
  double divergence_factor = 1e6;
  QuadratureSpec quadrature{};
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_trace;
  std::vector<double> energy_trace;
  std::optional<GraphField> final;
  bool converged = false;
  double tolerance = 0.0;
  /// Largest operator error estimate at the final state.
  double quadrature_err = 0.0;
};

/// Gradient flow for U u = h on the nodes with margin >= 2; nodes closer to the window
/// edge and the exterior model stay fixed. Steps u <- u - tau (U u - h) start from a
/// Barzilai-Borwein length and are halved until the energy minus h h^n sum u decreases
/// (Armijo). Throws StepFailure when no admissible step above the floor exists and
/// DomainError on divergence.
SolveReport solve(const GraphField& u0, double h, const SolveOptions& opts = {});

struct CmcAudit {
  std::vector<double> radii;
  std::vector<double> p;      // pairing / (|B_1| R^n)
  std::vector<double> p_err;
  double fitted_h = 0.0;
  double fitted_exponent = 0.0;
  /// max_R |p(R)| R^alpha, the constant of the C R^{-alpha} envelope.
  double envelope_constant = 0.0;
};

/// Pairs u with v_R = clamp((R - |x|) / width, 0, 1) centered at the window center for each
/// radius. fitted_h is the constant in a least-squares fit p(R) = h + c R^{-alpha};
/// fitted_exponent is the log-log slope of |p(R)|. Needs at least three increasing radii
/// with R + 2h inside the window.
CmcAudit cmc_exponent_audit(const GraphField& u, const std::vector<double>& radii, const QuadratureSpec& q = {},
                            double width = 0.5);

}  // namespace nlmg
