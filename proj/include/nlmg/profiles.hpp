#pragma once

#include "nlmg/field.hpp"

namespace nlmg {

/// exp(-|x|^2) in the first `n` coordinates.
double gaussian_bump(const Vec& x, int n);

/// exp(1 - 1/(1 - |x|^2)) inside the unit ball, 0 outside: height 1, width 1, smooth.
double compact_bump(const Vec& x, int n);

/// Gaussian bump sampled on [-4, 4]^n with a zero affine exterior.
GraphField gaussian_field(const FracParams& p, double spacing);

/// a.x + b + compact_bump(x) on [-L, L]^n with the matching affine exterior.
GraphField affine_plus_bump(const FracParams& p, const Vec& a, double b, double L, double spacing);

}  // namespace nlmg
