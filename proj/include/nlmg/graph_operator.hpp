#pragma once

#include <memory>
#include <mutex>
#include <vector>

#include "nlmg/field.hpp"
#include "nlmg/kernel.hpp"

namespace nlmg {

/// A computed number together with its error estimate.
struct Estimate {
  double value = 0.0;
  double err = 0.0;
};

/// Dirichlet beta function sum_k (-1)^k (2k+1)^{-s}, s > 0.
double dirichlet_beta(double s);

/// Constant multiplying the lattice correction h^{-alpha} sum_d [G(D-_d u) - G(D+_d u)]:
/// -2 zeta(alpha) for n = 1 and -2 zeta((1+alpha)/2) beta((1+alpha)/2) for n = 2.
double lattice_constant(int n, double alpha);

/// Far-field nodes for the integral 2 int_{|y-x| > box} G((u(x)-u(y))/|x-y|) |x-y|^{-n-alpha} dy,
/// truncated at far_radius. `weight` already carries the factor 2 and the Jacobians.
struct FarNode {
  double inv_rho;
  double weight;
  double value;
};
struct FarRule {
  std::vector<FarNode> primary;
  std::vector<FarNode> coarse;
};

FarRule graph_far_rule(const GraphField& u, const Vec& x, const Box& inner, double far_radius);

/// Far radius meeting the tail budget: max(q.far_radius, 2 diam, (2 Lambda |S^{n-1}| / (alpha budget))^{1/alpha}).
/// Throws BudgetError when that radius is not representable.
double choose_far_radius(const FracParams& p, const QuadratureSpec& q, double window_diameter);
/// Bound on |2 int_{|y-x|>R} G(.) |x-y|^{-n-alpha} dy|, i.e. 2 Lambda |S^{n-1}| R^{-alpha} / alpha.
double graph_tail_bound(const FracParams& p, double far_radius);

/// Discrete graph operator on the grid of a GraphField with frozen exterior data.
///
/// At a node x the operator is the lattice sum 2 h^n sum_{z != 0} G(.) |hz|^{-n-alpha} over a
/// box centered at x that covers the window plus pad() layers, with exterior-model values
/// off the window, plus a correction for the excluded cell, plus the exterior far field
/// beyond the box. Centering the box at x makes affine data cancel pair by pair.
/// energy() is a convex function of the window values whose gradient at every node
/// is h^n times this operator.
class GraphOperator {
 public:
  static constexpr int kPad = 4;

  GraphOperator(const GraphField& u, const QuadratureSpec& q);

  const GraphField& field() const { return u_; }
  int dim() const { return n_; }
  int pad() const { return kPad; }
  double far_radius() const { return far_radius_; }
  double tail_bound() const { return tail_; }
  double kappa() const { return kappa_; }

  /// Values on the union of the node boxes (plus one extra exterior layer) for new window values.
  std::vector<double> extend(const std::vector<double>& window_values) const;
  std::vector<double> extend() const { return extend(u_.values()); }

  /// Operator at window node k with full error estimate. Requires margin(k) >= 2.
  Estimate curvature(const std::vector<double>& ext, const Index& k) const;
  /// Operator value only (no error estimate), same discretization.
  double curvature_value(const std::vector<double>& ext, const Index& k) const;

  /// Discrete energy; finite for any window values.
  double energy(const std::vector<double>& ext) const;
  /// energy(to) - energy(from), summed term by term from the increments so that rounding
  /// scales with the change rather than with the energy.
  double energy_change(const std::vector<double>& from, const std::vector<double>& to) const;

 private:
  const FarRule& far_rule(const Index& k, FarRule& scratch) const;
  void node_range(const Index& k, std::array<int, 2>& A, std::array<int, 2>& B) const;
  Box node_box(const Index& k) const;
  double energy_terms(const std::vector<double>& ext, const std::vector<double>* delta) const;

  GraphField u_;
  int n_;
  double h_;
  const Kernel* kernel_;
  double kappa_;
  double far_radius_;
  double tail_;
  std::array<int, 2> A_{0, 0}, B_{0, 0};
  std::array<int, 2> dims_{1, 1};
  std::vector<double> weight_;   // 2 (h|z|)^{-n-alpha}
  std::vector<double> invd_;     // 1 / (h|z|)
  int zmax_ = 0;
  std::vector<FarRule> far_cache_;
};

/// Operator at an arbitrary point x at distance >= 2h from the window boundary. Nodes go
/// through GraphOperator; other points use a lattice anchored at x with sampled values.
Estimate graph_curvature_at(const GraphField& u, const Vec& x, const QuadratureSpec& q);

}  // namespace nlmg
