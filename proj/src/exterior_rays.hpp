#pragma once

#include "nlmg/field.hpp"
#include "nlmg/quadrature.hpp"

namespace nlmg::detail {

/// int_{r0}^{inf} sigma(x + rho w) rho^{-1-alpha} d rho, sigma = +1 outside E and -1 inside,
/// along a ray that has left the voxel box. Sets `truncated` when the sign beyond R was
/// extrapolated.
double ray_integral(const VoxelSet& e, const Vec& x, const Vec& w, double r0, double R, double alpha,
                    bool& truncated);

/// int_{y outside box} sigma(y) |x-y|^{-N-alpha} dy with the solid angle parameterized by
/// the box faces and `g` on each graded face panel. `total` receives the same rule applied
/// to sigma = 1.
double exterior_part(const VoxelSet& e, const Vec& x, double R, const GaussRule& g, bool& truncated,
                     double* total = nullptr);

/// Same integral with every graded face panel bisected until its rule and the rule on its
/// children agree to `rel_tol` times the panel's sigma = 1 integral. `err` receives the
/// summed disagreements of the accepted panels.
double exterior_part_adaptive(const VoxelSet& e, const Vec& x, double R, double rel_tol, bool& truncated,
                              double& err);

}  // namespace nlmg::detail
