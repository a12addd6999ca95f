#pragma once

#include <array>
#include <memory>
#include <vector>

namespace nlmg {

/// Graph dimension n and fractional order alpha, plus the derived kernel power
/// n + 1 + alpha and the saturation constant Lambda = G(+inf).
struct FracParams {
  int n = 1;
  double alpha = 0.5;
  double exponent = 2.5;
  double lambda = 0.0;

  int ambient_dim() const { return n + 1; }
};

/// Validates (n in {1,2}, 0 < alpha < 1) and fills the derived fields.
/// Throws ParameterError.
FracParams make_params(int n, double alpha);

/// Lambda from the Beta-function identity
///   Lambda = (sqrt(pi)/2) Gamma((n+alpha)/2) / Gamma((n+1+alpha)/2).
double lambda_const(const FracParams& p);

/// Area of the unit sphere S^{d-1} in R^d (2 for d = 1).
double sphere_area(int d);

/// G(t) = int_0^t (1+tau^2)^{-(n+1+alpha)/2} dtau and its antiderivative,
/// tabulated once per (n, alpha): the binomial series on |t| <= 1/4, then Chebyshev
/// series on quarters of the dyadic panels [1/4, 1/2], [1/2, 1], ... up to the
/// saturation point. Immutable after construction.
class Kernel {
 public:
  explicit Kernel(const FracParams& p);

  const FracParams& params() const { return params_; }
  double lambda() const { return params_.lambda; }

  /// Exactly odd in t; accepts +-infinity.
  double G(double t) const;
  /// Antiderivative int_0^t G; exactly even in t. Its derivative is G.
  double antiderivative(double t) const;
  /// dG/dt = (1+t^2)^{-(n+1+alpha)/2}.
  double density(double t) const;

  /// End of the tabulated range; beyond it G = Lambda - t^{1-p}/(p-1).
  double saturation_point() const { return t_sat_; }
  /// Lambda computed by raw adaptive quadrature at construction.
  double lambda_quadrature() const { return lambda_quad_; }

  static constexpr int kDegree = 12;
  static constexpr int kSeriesTerms = 16;

 private:
  struct Panel {
    double a, b;
    std::array<double, kDegree + 1> g;      // Chebyshev coefficients of G
    std::array<double, kDegree + 2> gint;   // of the antiderivative, zero at a
    double g_start, gint_start;
  };

  double tail(double t) const;
  double tail_antiderivative(double t) const;
  int panel_index(double t) const;
  double series_value(double a) const;
  double series_antiderivative(double a) const;

  static constexpr double kSeriesEnd = 0.25;

  FracParams params_;
  double p_;
  double t_sat_;
  double gint_sat_;
  double lambda_quad_;
  std::vector<Panel> panels_;
  std::array<double, kSeriesTerms> series_g_{};     // G = t sum c_k t^{2k}
  std::array<double, kSeriesTerms> series_gint_{};  // antiderivative = t^2 sum d_k t^{2k}
};

/// Shared immutable kernel for (n, alpha); thread-safe.
const Kernel& kernel_for(const FracParams& p);

double eval_G(double t, const FracParams& p);
double eval_G_antideriv(double t, const FracParams& p);

}  // namespace nlmg
