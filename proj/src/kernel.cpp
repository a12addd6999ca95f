#include "nlmg/kernel.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "nlmg/errors.hpp"
#include "nlmg/quadrature.hpp"

namespace nlmg {
namespace {

constexpr double kTailTarget = 1e-12;

// Chebyshev coefficients c_j of f on [-1,1] from values at the first-kind nodes,
// using the convention f = c_0/2 + sum_{j>=1} c_j T_j.
template <std::size_t M>
std::array<double, M> chebyshev_fit(const std::array<double, M>& values) {
  std::array<double, M> c{};
  const double m = static_cast<double>(M);
  for (std::size_t j = 0; j < M; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < M; ++k) {
      s += values[k] * std::cos(std::numbers::pi * static_cast<double>(j) *
                                (static_cast<double>(k) + 0.5) / m);
    }
    c[j] = 2.0 * s / m;
  }
  return c;
}

template <std::size_t M>
double clenshaw(const std::array<double, M>& c, double x) {
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t j = M - 1; j >= 1; --j) {
    const double b0 = 2.0 * x * b1 - b2 + c[j];
    b2 = b1;
    b1 = b0;
  }
  return x * b1 - b2 + 0.5 * c[0];
}

}  // namespace

double sphere_area(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: throw ParameterError("sphere_area: dimension must be 1, 2 or 3");
  }
}

FracParams make_params(int n, double alpha) {
  if (n != 1 && n != 2) throw ParameterError("n must be 1 or 2, got " + std::to_string(n));
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ParameterError("alpha must lie in (0,1), got " + std::to_string(alpha));
  }
  FracParams p;
  p.n = n;
  p.alpha = alpha;
  p.exponent = n + 1 + alpha;
  p.lambda = lambda_const(p);
  return p;
}

double lambda_const(const FracParams& p) {
  if ((p.n != 1 && p.n != 2) || !(p.alpha > 0.0 && p.alpha < 1.0)) {
    throw ParameterError("invalid FracParams");
  }
  const double a = 0.5 * (p.n + p.alpha);
  return 0.5 * std::sqrt(std::numbers::pi) * std::exp(std::lgamma(a) - std::lgamma(a + 0.5));
}

Kernel::Kernel(const FracParams& p) : params_(make_params(p.n, p.alpha)) {
  p_ = params_.exponent;
  const double lam = params_.lambda;

  // Raw-quadrature self-check of Lambda: tau = tan(theta) turns the integral into
  // int_0^{pi/2} cos^{p-2}(theta) d theta.
  boost::math::quadrature::tanh_sinh<double> ts;
  const double m = p_ - 2.0;
  lambda_quad_ = ts.integrate([m](double th) { return std::pow(std::cos(th), m); }, 0.0,
                              0.5 * std::numbers::pi);
  if (std::abs(lambda_quad_ - lam) > 1e-10 * lam) {
    throw std::logic_error("Kernel: Lambda self-check failed");
  }

  // Saturation point: first dyadic endpoint with t^{1-p}/(p-1) < target.
  int panels = 2;  // [1/4, 1/2] and [1/2, 1]
  double t_end = 1.0;
  while (tail(t_end) >= kTailTarget) {
    t_end *= 2.0;
    ++panels;
  }
  t_sat_ = t_end;

  // Binomial series near zero: (1+tau^2)^{-p/2} = sum_k binom(-p/2, k) tau^{2k}.
  double binom = 1.0;
  for (int k = 0; k < kSeriesTerms; ++k) {
    series_g_[k] = binom / (2 * k + 1);
    series_gint_[k] = binom / ((2 * k + 1) * (2 * k + 2));
    binom *= (-0.5 * p_ - k) / (k + 1);
  }

  // Panels are short compared with the distance to the poles at +-i, so a fixed
  // 20-point Gauss rule integrates the density to rounding.
  const GaussRule& gl = gauss_legendre(20);
  const auto integral = [this, &gl](double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double t = mid + half * gl.nodes[i];
      s += gl.weights[i] * std::pow(1.0 + t * t, -0.5 * p_);
    }
    return half * s;
  };

  double g_start = series_value(kSeriesEnd), gint_start = series_antiderivative(kSeriesEnd);
  const int dyadic = panels;  // [1/4, 1/2], [1/2, 1], ..., [t_sat/2, t_sat]
  panels_.reserve(4 * dyadic);
  for (int k = 0; k < dyadic; ++k) {
    const double lo = std::ldexp(kSeriesEnd, k), width = 0.25 * lo;
    for (int q = 0; q < 4; ++q) {
      Panel pn;
      pn.a = lo + q * width;
      pn.b = pn.a + width;
      pn.g_start = g_start;
      std::array<double, kDegree + 1> vals{};
      const double half = 0.5 * width, mid = pn.a + half;
      for (int i = 0; i <= kDegree; ++i) {
        const double t = mid + half * std::cos(std::numbers::pi * (i + 0.5) / (kDegree + 1));
        vals[i] = g_start + integral(pn.a, t);
      }
      pn.g = chebyshev_fit(vals);
      // Integrate the series term by term: C_j = (c_{j-1} - c_{j+1}) / (2j), scaled by half.
      pn.gint.fill(0.0);
      for (int j = 1; j <= kDegree + 1; ++j) {
        const double cm = pn.g[j - 1];
        const double cp = (j + 1 <= kDegree) ? pn.g[j + 1] : 0.0;
        pn.gint[j] = half * (cm - cp) / (2.0 * j);
      }
      pn.gint_start = gint_start - clenshaw(pn.gint, -1.0);
      g_start += integral(pn.a, pn.b);
      gint_start = pn.gint_start + clenshaw(pn.gint, 1.0);
      panels_.push_back(pn);
    }
  }
  gint_sat_ = gint_start;
}

double Kernel::tail(double t) const { return std::pow(t, 1.0 - p_) / (p_ - 1.0); }

double Kernel::tail_antiderivative(double t) const {
  // int_{T}^{t} (Lambda - s^{1-p}/(p-1)) ds
  const double T = t_sat_;
  return params_.lambda * (t - T) -
         (std::pow(T, 2.0 - p_) - std::pow(t, 2.0 - p_)) / ((p_ - 1.0) * (p_ - 2.0));
}

int Kernel::panel_index(double t) const {
  // t in [2^e, 2^{e+1}) with e >= -2
  // The quarter is given by the two leading mantissa bits.
  const auto bits = std::bit_cast<std::uint64_t>(t);
  const int e = static_cast<int>((bits >> 52) & 0x7ff) - 1023;
  const int q = static_cast<int>((bits >> 50) & 3);
  return 4 * (e + 2) + q;
}

double Kernel::series_value(double a) const {
  const double a2 = a * a;
  double s = series_g_[kSeriesTerms - 1];
  for (int k = kSeriesTerms - 2; k >= 0; --k) s = s * a2 + series_g_[k];
  return a * s;
}

double Kernel::series_antiderivative(double a) const {
  const double a2 = a * a;
  double s = series_gint_[kSeriesTerms - 1];
  for (int k = kSeriesTerms - 2; k >= 0; --k) s = s * a2 + series_gint_[k];
  return a2 * s;
}

double Kernel::G(double t) const {
  if (std::isnan(t)) throw DomainError("G: NaN argument");
  const double a = std::abs(t);
  double v;
  if (std::isinf(a)) {
    v = params_.lambda;
  } else if (a >= t_sat_) {
    v = params_.lambda - tail(a);
  } else if (a <= kSeriesEnd) {
    v = series_value(a);
  } else {
    const Panel& pn = panels_[panel_index(a)];
    const double x = (2.0 * a - pn.a - pn.b) / (pn.b - pn.a);
    v = clenshaw(pn.g, x);
  }
  return std::signbit(t) ? -v : v;
}

double Kernel::antiderivative(double t) const {
  if (!std::isfinite(t)) throw DomainError("antiderivative: argument must be finite");
  const double a = std::abs(t);
  if (a >= t_sat_) return gint_sat_ + tail_antiderivative(a);
  if (a <= kSeriesEnd) return series_antiderivative(a);
  const Panel& pn = panels_[panel_index(a)];
  const double x = (2.0 * a - pn.a - pn.b) / (pn.b - pn.a);
  return pn.gint_start + clenshaw(pn.gint, x);
}

double Kernel::density(double t) const { return std::pow(1.0 + t * t, -0.5 * p_); }

const Kernel& kernel_for(const FracParams& p) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, std::unique_ptr<Kernel>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{p.n, p.alpha}];
  if (!slot) slot = std::make_unique<Kernel>(p);
  return *slot;
}

double eval_G(double t, const FracParams& p) { return kernel_for(p).G(t); }

double eval_G_antideriv(double t, const FracParams& p) {
  return kernel_for(p).antiderivative(t);
}

}  // namespace nlmg
