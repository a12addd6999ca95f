#pragma once

#include <string>
#include <vector>

#include "nlmg/field.hpp"
#include "nlmg/graph_operator.hpp"

namespace nlmg {

/// Operator values at the interior nodes (margin >= 2) of a graph field.
struct CurvatureField {
  const GraphField* base = nullptr;
  std::vector<Index> nodes;
  std::vector<double> values;
  std::vector<double> error_bounds;

  double max_abs_value() const;
  double max_error() const;
  /// Columns x1[,x2],value,err.
  std::string to_csv() const;
};

/// 2 PV int G((u(x)-u(y))/|x-y|) |x-y|^{-n-alpha} dy with an error estimate that includes
/// the lattice discretization, far-field quadrature, truncation tail and roundoff.
/// Throws DomainError within 2h of the window boundary and BudgetError when the tail
/// budget needs an unrepresentable far radius.
Estimate curvature_at(const GraphField& u, const Vec& x, const QuadratureSpec& q = {});

CurvatureField curvature_field(const GraphField& u, const QuadratureSpec& q = {});

/// PV int (chi_{E^c} - chi_E)(y) |x-y|^{-(n+1)-alpha} dy. The point is moved to the nearest
/// voxel face separating an inside voxel from an outside one. Near that face the boundary
/// is rebuilt as a least-squares polynomial graph over growing blocks of voxel columns, the
/// lowest degree whose residual is at the rounding level; where no block fits, voxels are
/// paired through the face center. The error estimate adds the spread between blocks and
/// a bound for the half-voxel misplacement of the boundary beyond the fitted block.
/// Throws DomainError when no such face lies within a voxel of x.
Estimate set_curvature_at(const VoxelSet& e, const Vec& x, const QuadratureSpec& q = {});

/// Face center used by set_curvature_at for the point x.
Vec snap_to_boundary(const VoxelSet& e, const Vec& x);

struct ConsistencyReport {
  double defect = 0.0;
  double err = 0.0;
  Estimate graph;
  Estimate set;
  double voxel_size = 0.0;
};

/// |set_curvature_at(subgraph_of(u), (x, u(x))) - curvature_at(u, x)|. The voxel box is
/// aligned so that grid nodes are column centers and u(x) is a voxel face;
/// `voxels_per_cell` voxels span one grid step.
ConsistencyReport graph_set_consistency(const GraphField& u, const Vec& x, const QuadratureSpec& q = {},
                                        int voxels_per_cell = 1);

/// int int G((u(x)-u(y))/|x-y|) (v(x)-v(y)) |x-y|^{-n-alpha} dx dy for v on the grid of u,
/// vanishing on nodes within 2h of the window boundary and outside the window.
Estimate weak_pairing(const GraphField& u, const GraphField& v, const QuadratureSpec& q = {});
Estimate weak_pairing(const GraphOperator& op, const std::vector<double>& ext, const std::vector<double>& v);

}  // namespace nlmg
