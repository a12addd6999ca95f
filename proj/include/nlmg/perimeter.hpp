#pragma once

#include <utility>
#include <variant>
#include <vector>

#include "nlmg/field.hpp"

namespace nlmg {

struct Ball {
  Vec center{};
  double radius = 1.0;
};

/// Window for Per_alpha(E, Omega); voxels belong to it by their centers.
using Region = std::variant<Box, Ball>;

bool region_contains(const Region& r, const Vec& x, int dim);

struct PerimeterResult {
  double value = 0.0;
  double err = 0.0;
  /// (int_{Omega cap E} int_{E^c}, int_{Omega \ E} int_{E \ Omega}) of |x-y|^{-N-alpha}.
  std::pair<double, double> split{0.0, 0.0};
};

/// Per_alpha(E, Omega) as a voxel double sum. Pairs of voxels up to two cells apart use
/// exact cell-pair integrals, farther pairs a second-order corrected midpoint rule, and
/// points beyond the box the exterior model along rays. The error estimate counts the
/// contribution of touching cross-boundary pairs in full, since the voxel staircase makes
/// it uncertain at order res^{-(1-alpha)}.
/// Throws DomainError unless Omega lies strictly inside the box and holds voxel centers.
PerimeterResult frac_perimeter(const VoxelSet& e, const Region& omega, const QuadratureSpec& q = {});

/// Per_alpha(E, B_R(center)) for each radius; the center defaults to the box center.
std::vector<std::pair<double, PerimeterResult>> perimeter_growth(const VoxelSet& e, const std::vector<double>& radii,
                                                                 const Vec* center = nullptr,
                                                                 const QuadratureSpec& q = {});

/// int_{B_R} int_{B_R^c} |x-y|^{-N-alpha}, computed by frac_perimeter on the ball itself with
/// the voxel grid of `like`.
PerimeterResult ball_majorant(const VoxelSet& like, double R, const Vec* center = nullptr,
                              const QuadratureSpec& q = {});

/// Least-squares slope of log value against log R.
double loglog_slope(const std::vector<std::pair<double, PerimeterResult>>& growth);

}  // namespace nlmg
