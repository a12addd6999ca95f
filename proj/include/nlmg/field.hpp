#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "nlmg/kernel.hpp"

namespace nlmg {

constexpr int kMaxDim = 3;
using Vec = std::array<double, kMaxDim>;
using Index = std::array<int, 2>;

/// Axis-aligned box in R^dim (dim <= 3); unused trailing coordinates stay 0.
struct Box {
  int dim = 1;
  Vec lo{};
  Vec hi{};

  double extent(int axis) const { return hi[axis] - lo[axis]; }
  double diameter() const;
  Vec center() const;
  bool contains(const Vec& x, double slack = 0.0) const;
};

Box make_box(std::initializer_list<double> lo, std::initializer_list<double> hi);

// Exterior models for graphs: how u continues outside the sampled window.
struct AffineExterior {
  Vec gradient{};
  double offset = 0.0;
};

/// u(x) = value at the nearest window point.
struct ConstantBeyondExterior {};

/// Degree-one extension along rays from `center`:
///   u(c + t (b - c)) = apex + t (u(b) - apex), b on the window boundary, t >= 1.
/// A NaN apex is filled in from the interpolated value at the center.
struct Homogeneous1Exterior {
  Vec center{};
  double apex = std::numeric_limits<double>::quiet_NaN();
};

using ExteriorModel = std::variant<AffineExterior, ConstantBeyondExterior, Homogeneous1Exterior>;

std::string exterior_name(const ExteriorModel& m);

/// Grid-sampled u on a window, plus an exterior model. Immutable.
/// Node values are stored row-major (axis 0 slowest).
class GraphField {
 public:
  GraphField(const FracParams& params, const Box& window, double spacing, std::vector<double> values,
             ExteriorModel exterior, double seam_tolerance = -1.0);

  static GraphField from_function(const FracParams& params, const Box& window, double spacing,
                                  const std::function<double(const Vec&)>& f, ExteriorModel exterior,
                                  double seam_tolerance = -1.0);

  const FracParams& params() const { return params_; }
  int dim() const { return params_.n; }
  const Box& window() const { return window_; }
  double spacing() const { return h_; }
  const std::vector<double>& values() const { return values_; }
  const ExteriorModel& exterior() const { return exterior_; }
  double seam_tolerance() const { return seam_tol_; }

  int count(int axis) const { return counts_[axis]; }
  std::size_t node_count() const { return values_.size(); }
  std::size_t flat(const Index& i) const {
    return dim() == 1 ? std::size_t(i[0]) : std::size_t(i[0]) * counts_[1] + i[1];
  }
  Index unflat(std::size_t k) const;
  bool in_window(const Index& i) const;
  Vec node(const Index& i) const;
  /// Distance, in grid steps, from node i to the nearest window face.
  int margin(const Index& i) const;

  /// Value at any lattice index; indices past the window use the exterior model.
  double lattice_value(const Index& i) const;
  /// Multilinear inside the window, exterior model outside.
  double sample(const Vec& x) const;
  double exterior_value(const Vec& x) const;
  double max_abs() const;

  /// Same grid and exterior, new node values (seam re-checked).
  GraphField with_values(std::vector<double> values) const;

 private:
  double interpolate(const Vec& x) const;
  double boundary_value_along_ray(const Vec& c, const Vec& x, double& t) const;
  void check_seam() const;

  FracParams params_;
  Box window_;
  double h_;
  std::array<int, 2> counts_{1, 1};
  std::vector<double> values_;
  ExteriorModel exterior_;
  double seam_tol_;
};

// Exterior models for voxel sets.
/// Inside iff normal . x < offset.
struct HalfSpaceExterior {
  Vec normal{};
  double offset = 0.0;
};

/// Inside iff x_{n+1} < u(x'), u evaluated through the graph's sample().
struct SubgraphExterior {
  std::shared_ptr<const GraphField> graph;
};

/// Cone with the given apex: a point outside the box is inside iff the voxel where
/// its ray from the apex leaves the box is occupied.
struct ConeExterior {
  Vec apex{};
};

struct EmptyExterior {};

using SetExterior = std::variant<HalfSpaceExterior, SubgraphExterior, ConeExterior, EmptyExterior>;

enum class Membership { inside, outside };

/// Binary voxel occupancy of E in a box of R^{n+1}, with cubic voxels, plus an exterior
/// model. `complement` flips the exterior model (the stored occupancy is already final).
class VoxelSet {
 public:
  VoxelSet(const FracParams& params, const Box& box, std::array<int, kMaxDim> resolution,
           std::vector<std::uint8_t> occupancy, SetExterior exterior, bool complement = false,
           double seam_tolerance = 0.05);

  const FracParams& params() const { return params_; }
  int dim() const { return box_.dim; }
  const Box& box() const { return box_; }
  const std::array<int, kMaxDim>& resolution() const { return res_; }
  const std::vector<std::uint8_t>& occupancy() const { return occ_; }
  const SetExterior& exterior() const { return exterior_; }
  bool complemented() const { return complement_; }
  double voxel_size() const { return dx_; }
  double voxel_volume() const;

  std::size_t flat(const std::array<int, kMaxDim>& v) const {
    std::size_t k = 0;
    for (int a = 0; a < dim(); ++a) k = k * res_[a] + v[a];
    return k;
  }
  std::array<int, kMaxDim> unflat(std::size_t k) const;
  bool valid(const std::array<int, kMaxDim>& v) const;
  bool occupied(const std::array<int, kMaxDim>& v) const { return occ_[flat(v)] != 0; }
  Vec voxel_center(const std::array<int, kMaxDim>& v) const;
  /// Voxel containing x (clamped to the box).
  std::array<int, kMaxDim> voxel_of(const Vec& x) const;

  Membership member(const Vec& x) const;
  bool contains(const Vec& x) const { return member(x) == Membership::inside; }
  bool exterior_contains(const Vec& x) const;

  VoxelSet complement() const;
  std::size_t occupied_count() const;

 private:
  void check_seam(double tol) const;

  FracParams params_;
  Box box_;
  std::array<int, kMaxDim> res_{1, 1, 1};
  double dx_;
  std::vector<std::uint8_t> occ_;
  SetExterior exterior_;
  bool complement_;
};

/// Occupancy from a membership predicate evaluated at voxel centers.
VoxelSet voxelize(const FracParams& params, const Box& box, std::array<int, kMaxDim> resolution,
                  const std::function<bool(const Vec&)>& inside, SetExterior exterior,
                  bool complement = false);

/// Subgraph {x_{n+1} < u(x')} on the given box; exterior is SubgraphOf(u).
VoxelSet subgraph_of(const GraphField& u, const Box& box, std::array<int, kMaxDim> resolution);

double sample(const GraphField& u, const Vec& x);
Membership member(const VoxelSet& e, const Vec& x);

/// Quadrature controls shared by curvature, energy and perimeter.
struct QuadratureSpec {
  enum class SingularRule { symmetrized_pair };
  /// Radius at which the far-field integral is truncated; raised automatically to
  /// meet tail_budget (0 means "choose from the budget").
  double far_radius = 0.0;
  double tail_budget = 1e-3;
  SingularRule singular_rule = SingularRule::symmetrized_pair;
  double inner_tolerance = 1e-10;
};

void validate(const QuadratureSpec& q);

}  // namespace nlmg
