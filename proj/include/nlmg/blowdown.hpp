#pragma once

#include <string>
#include <vector>

#include "nlmg/field.hpp"

namespace nlmg {

/// Nodes x/r carrying u(x)/r: window and spacing shrink by r, values scale by 1/r, and
/// the exterior model is rescaled with them. Throws ParameterError for r <= 0.
GraphField rescale_graph(const GraphField& u, double r);

/// u(c + x') - shift on the window moved by -c.
GraphField translate_graph(const GraphField& u, const Vec& c, double shift);

/// (E - x) / r with the same occupancy array on the moved and shrunken box.
VoxelSet rescale_set(const VoxelSet& e, const Vec& x, double r);

/// Volume of (E_{x,r} symmetric-difference E_{y,r}) inside B_R, counted on the voxel grid of
/// E scaled by 1/r. Throws DomainError unless x + r B_R and y + r B_R lie inside the box.
double center_gap(const VoxelSet& e, const Vec& x, const Vec& y, double r, double R);

/// |(E symmetric-difference E/2) cap B_R| / |B_R| for B_R centered at the origin, i.e. the
/// fraction of z in B_R with [z in E] != [2z in E]. Needs B_2R inside the box.
double cone_defect(const VoxelSet& e, double R);

struct CylinderDefect {
  double two_sided = 0.0;  // |((E + v) sym-diff E) cap B_R| / |B_R|
  double one_sided = 0.0;  // |((E + v) \ E) cap B_R| / |B_R|
};
CylinderDefect cylinder_defect(const VoxelSet& e, const Vec& v, double R);

enum class Verdict { cone_detected, cylinder_split, half_space, inconclusive };
std::string verdict_name(Verdict v);

struct BlowdownOptions {
  double R = 1.0;
  /// Voxels per unit length after rescaling.
  int voxels_per_unit = 32;
  /// Defect tolerance in voxel-layer volumes (delta |B^n_R| / |B^{n+1}_R|).
  double tolerance_layers = 3.0;
};

struct BlowdownReport {
  std::vector<double> scales;
  std::vector<double> cone_defects;
  std::vector<std::vector<double>> cylinder_defects;  // per direction, aligned with scales
  std::vector<Vec> directions;
  std::vector<double> center_gaps;
  std::vector<double> halfspace_defects;
  double tolerance = 0.0;
  Verdict verdict = Verdict::inconclusive;
  std::vector<Vec> split_directions;
};

/// Blow-downs of the subgraph of u at (c, u(c)), c the window center: per scale r the set
/// {z_{n+1} < (u(c + r z') - u(c)) / r} is voxelized on [-(R+1.25), R+1.25]^{n+1}. Records
/// cone defects, two-sided cylinder defects along `directions` (unit vectors in R^{n+1}),
/// center gaps between the base point and the point over c + e_1, and the defect from the
/// least-squares half-space. A sequence tends to zero when its last value is below the
/// tolerance and it does not increase (beyond one voxel layer) over the last three scales.
BlowdownReport blowdown_analyze(const GraphField& u, const std::vector<double>& scales,
                                const std::vector<Vec>& directions, const BlowdownOptions& opts = {});

}  // namespace nlmg
