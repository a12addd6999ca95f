#include "nlmg/profiles.hpp"

#include <cmath>

namespace nlmg {

namespace {

double radius2(const Vec& x, int n) {
  double r2 = 0.0;
  for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
  return r2;
}

Box cube(int n, double L) { return n == 1 ? make_box({-L}, {L}) : make_box({-L, -L}, {L, L}); }

}  // namespace

double gaussian_bump(const Vec& x, int n) { return std::exp(-radius2(x, n)); }

double compact_bump(const Vec& x, int n) {
  const double r2 = radius2(x, n);
  return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
}

GraphField gaussian_field(const FracParams& p, double spacing) {
  return GraphField::from_function(p, cube(p.n, 4.0), spacing, [&](const Vec& x) { return gaussian_bump(x, p.n); },
                                   AffineExterior{});
}

GraphField affine_plus_bump(const FracParams& p, const Vec& a, double b, double L, double spacing) {
  auto f = [&](const Vec& x) {
    double v = b + compact_bump(x, p.n);
    for (int k = 0; k < p.n; ++k) v += a[k] * x[k];
    return v;
  };
  return GraphField::from_function(p, cube(p.n, L), spacing, f, AffineExterior{a, b});
}

}  // namespace nlmg
