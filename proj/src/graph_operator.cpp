#include "nlmg/graph_operator.hpp"

#include <algorithm>
#include <boost/math/special_functions/zeta.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "nlmg/errors.hpp"
#include "nlmg/quadrature.hpp"

namespace nlmg {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kCircleNodes = 64;
constexpr int kRadialPoints = 8;
constexpr int kFacePoints = 6;

// Gauss-Legendre panels in s = rho^{-alpha} between rho0 < rho1, geometric in s.
template <class Emit>
void radial_panels(double rho0, double rho1, double alpha, double ratio, const GaussRule& gl, double scale,
                   Emit&& emit) {
  if (!(rho1 > rho0)) return;
  const double s0 = std::pow(rho0, -alpha), s1 = std::pow(rho1, -alpha);
  const int k = std::max(1, static_cast<int>(std::ceil(std::log(s0 / s1) / std::log(ratio) - 1e-9)));
  const double q = std::pow(s1 / s0, 1.0 / k);
  double hi = s0;
  for (int p = 0; p < k; ++p) {
    const double lo = (p == k - 1) ? s1 : hi * q;
    const double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double s = mid + half * gl.nodes[i];
      emit(std::pow(s, -1.0 / alpha), scale * half * gl.weights[i] / alpha);
    }
    hi = lo;
  }
}

// Breakpoints on [t0, t1] refined geometrically toward the foot point tf at distance d.
std::vector<double> graded_breaks(double t0, double t1, double tf, double d) {
  std::vector<double> b{t0, t1};
  if (tf > t0 && tf < t1) b.push_back(tf);
  for (double g = d; tf - g > t0; g *= 2) b.push_back(tf - g);
  for (double g = d; tf + g < t1; g *= 2) b.push_back(tf + g);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

struct Cell1D {
  double len;
  int j0;
  double w0;
  int j1;
  double w1;
};

// Cells of `step` nodes along one axis for center c, tiling [A - 1/2, B + 1/2]; partial
// cells at the ends are evaluated at their centroid by linear interpolation between nodes.
std::vector<Cell1D> coarse_cells(int c, int A, int B, int step) {
  std::vector<Cell1D> cells;
  const double half = 0.5 * step;
  int m = c - step * ((c - A) / step + 1);
  for (; m - half <= B + 0.5; m += step) {
    const double lo = std::max(m - half, A - 0.5), hi = std::min(m + half, B + 0.5);
    if (hi <= lo) continue;
    const double centroid = 0.5 * (lo + hi);
    const int f = static_cast<int>(std::floor(centroid));
    const double frac = centroid - f;
    if (frac == 0.0) {
      cells.push_back({hi - lo, f, 1.0, f, 0.0});
    } else {
      cells.push_back({hi - lo, f, 1.0 - frac, f + 1, frac});
    }
  }
  return cells;
}

}  // namespace

double dirichlet_beta(double s) {
  if (!(s > 0.0)) throw ParameterError("dirichlet_beta: s must be positive");
  // Cohen-Rodriguez Villegas-Zagier acceleration of the alternating series.
  constexpr int n = 60;
  double d = std::pow(3.0 + std::sqrt(8.0), n);
  d = 0.5 * (d + 1.0 / d);
  double b = -1.0, c = -d, sum = 0.0;
  for (int k = 0; k < n; ++k) {
    c = b - c;
    sum += c * std::pow(2.0 * k + 1.0, -s);
    b = (k + n) * (k - n) * b / ((k + 0.5) * (k + 1.0));
  }
  return sum / d;
}

double lattice_constant(int n, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("lattice_constant: alpha must lie in (0,1)");
  if (n == 1) return -2.0 * boost::math::zeta(alpha);
  if (n == 2) {
    const double s = 0.5 * (1.0 + alpha);
    return -2.0 * boost::math::zeta(s) * dirichlet_beta(s);
  }
  throw ParameterError("lattice_constant: n must be 1 or 2");
}

double choose_far_radius(const FracParams& p, const QuadratureSpec& q, double window_diameter) {
  validate(q);
  const double need = std::pow(2.0 * p.lambda * sphere_area(p.n) / (p.alpha * q.tail_budget), 1.0 / p.alpha);
  if (!std::isfinite(need) || need > 1e150) {
    throw BudgetError("tail budget unattainable: required far radius is not representable", need);
  }
  return std::max({q.far_radius, 4.0 * window_diameter, need});
}

double graph_tail_bound(const FracParams& p, double far_radius) {
  return 2.0 * p.lambda * sphere_area(p.n) * std::pow(far_radius, -p.alpha) / p.alpha;
}

FarRule graph_far_rule(const GraphField& u, const Vec& x, const Box& inner, double far_radius) {
  const int n = u.dim();
  const double alpha = u.params().alpha;
  FarRule rule;
  auto emit_to = [&](std::vector<FarNode>& out, const Vec& dir) {
    return [&out, &u, &x, &dir, n](double rho, double w) {
      Vec y{};
      for (int a = 0; a < n; ++a) y[a] = x[a] + rho * dir[a];
      out.push_back({1.0 / rho, w, u.exterior_value(y)});
    };
  };
  const GaussRule& rp = gauss_legendre(kRadialPoints);
  const GaussRule& rc = gauss_legendre(kRadialPoints / 2);

  if (n == 1) {
    const double rm = x[0] - inner.lo[0], rpl = inner.hi[0] - x[0];
    const double rhoc = std::max(rm, rpl);
    const Vec left{-1, 0, 0}, right{1, 0, 0};
    const Vec& near = rm < rpl ? left : right;
    const double rnear = std::min(rm, rpl);
    radial_panels(rnear, rhoc, alpha, 2.0, rp, 2.0, emit_to(rule.primary, near));
    radial_panels(rnear, rhoc, alpha, 2.0, rc, 2.0, emit_to(rule.coarse, near));
    for (const Vec* d : {&left, &right}) {
      radial_panels(rhoc, far_radius, alpha, 4.0, rp, 2.0, emit_to(rule.primary, *d));
      radial_panels(rhoc, far_radius, alpha, 4.0, rc, 2.0, emit_to(rule.coarse, *d));
    }
    return rule;
  }

  // n == 2: faces of the inner box out to the circumscribed circle, then full circles.
  double rhoc = 0.0;
  for (double cx : {inner.lo[0], inner.hi[0]}) {
    for (double cy : {inner.lo[1], inner.hi[1]}) rhoc = std::max(rhoc, std::hypot(cx - x[0], cy - x[1]));
  }
  const GaussRule& fp = gauss_legendre(kFacePoints);
  const GaussRule& fc = gauss_legendre(kFacePoints / 2);
  for (int axis = 0; axis < 2; ++axis) {
    const int other = 1 - axis;
    for (double face : {inner.lo[axis], inner.hi[axis]}) {
      const double d = std::abs(face - x[axis]);
      const auto breaks = graded_breaks(inner.lo[other], inner.hi[other], x[other], d);
      for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double mid = 0.5 * (breaks[p] + breaks[p + 1]), half = 0.5 * (breaks[p + 1] - breaks[p]);
        for (int pass = 0; pass < 2; ++pass) {
          const GaussRule& g = pass == 0 ? fp : fc;
          auto& out = pass == 0 ? rule.primary : rule.coarse;
          const GaussRule& rad = pass == 0 ? rp : rc;
          for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            Vec b{};
            b[axis] = face;
            b[other] = mid + half * g.nodes[i];
            const double vx = b[0] - x[0], vy = b[1] - x[1];
            const double rb = std::hypot(vx, vy);
            const Vec dir{vx / rb, vy / rb, 0};
            const double ang = d / (rb * rb) * half * g.weights[i];
            radial_panels(rb, rhoc, alpha, 2.0, rad, 2.0 * ang, emit_to(out, dir));
          }
        }
      }
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    const int m = pass == 0 ? kCircleNodes : kCircleNodes / 2;
    auto& out = pass == 0 ? rule.primary : rule.coarse;
    std::vector<std::pair<double, double>> radial;
    radial_panels(rhoc, far_radius, alpha, 4.0, pass == 0 ? rp : rc, 1.0,
                  [&radial](double rho, double w) { radial.emplace_back(rho, w); });
    const double dphi = 2.0 * std::numbers::pi / m;
    for (int j = 0; j < m; ++j) {
      const double phi = (j + 0.5) * dphi;
      const double c = std::cos(phi), s = std::sin(phi);
      for (const auto& [rho, w] : radial) {
        const Vec y{x[0] + rho * c, x[1] + rho * s, 0};
        out.push_back({1.0 / rho, 2.0 * dphi * w, u.exterior_value(y)});
      }
    }
  }
  return rule;
}

// ------------------------------------------------------------------------------------

struct LatticeFrame {
  int n;
  double h;
  Vec origin;
  std::array<int, 2> A, B;   // summation range
  std::array<int, 2> lo, hi; // stored range (one extra layer on active axes)
  const double* vals;
  const double* weight;
  const double* invd;
  std::array<int, 2> zmax;

  std::size_t idx(int j0, int j1) const {
    return std::size_t(j0 - lo[0]) * std::size_t(hi[1] - lo[1] + 1) + std::size_t(j1 - lo[1]);
  }
  std::size_t zidx(int z0, int z1) const {
    return std::size_t(z0 + zmax[0]) * std::size_t(2 * zmax[1] + 1) + std::size_t(z1 + zmax[1]);
  }
  Box bfar() const {
    Box b;
    b.dim = n;
    for (int a = 0; a < n; ++a) {
      b.lo[a] = origin[a] + (A[a] - 0.5) * h;
      b.hi[a] = origin[a] + (B[a] + 0.5) * h;
    }
    return b;
  }
};

namespace {

struct TableSet {
  std::vector<double> weight, invd;
  std::array<int, 2> zmax{0, 0};
};

TableSet make_tables(int n, double h, double alpha, std::array<int, 2> zmax) {
  TableSet t;
  t.zmax = zmax;
  const int w1 = 2 * zmax[1] + 1;
  const std::size_t size = std::size_t(2 * zmax[0] + 1) * w1;
  t.weight.assign(size, 0.0);
  t.invd.assign(size, 0.0);
  for (int z0 = -zmax[0]; z0 <= zmax[0]; ++z0) {
    for (int z1 = -zmax[1]; z1 <= zmax[1]; ++z1) {
      if (z0 == 0 && z1 == 0) continue;
      const double r = h * std::sqrt(double(z0) * z0 + double(z1) * z1);
      const std::size_t k = std::size_t(z0 + zmax[0]) * w1 + std::size_t(z1 + zmax[1]);
      t.weight[k] = 2.0 * std::pow(r, -(n + alpha));
      t.invd[k] = 1.0 / r;
    }
  }
  return t;
}

double far_sum(const Kernel& K, const std::vector<FarNode>& nodes, double uc, double* abs_sum) {
  CompensatedSum s;
  double a = 0.0;
  for (const auto& f : nodes) {
    const double v = f.weight * K.G((uc - f.value) * f.inv_rho);
    s.add(v);
    if (abs_sum) a += std::abs(v);
  }
  if (abs_sum) *abs_sum = a;
  return s.value();
}

// Lattice sum, correction and far field at center c of frame F.
Estimate lattice_curvature(const LatticeFrame& F, const Index& c, const Kernel& K, double kappa,
                           const FarRule& far, double tail, bool full, std::vector<double>& f) {
  const int n = F.n;
  const double h = F.h;
  const double alpha = K.params().alpha;
  const double uc = F.vals[F.idx(c[0], c[1])];
  std::array<int, 2> lo = F.A, hi = F.B;
  if (full) {
    for (int a = 0; a < n; ++a) {
      --lo[a];
      ++hi[a];
    }
  }
  f.assign(std::size_t(F.hi[0] - F.lo[0] + 1) * std::size_t(F.hi[1] - F.lo[1] + 1), 0.0);

  CompensatedSum sh;
  double abs_sum = 0.0, round = 0.0;
  for (int j0 = lo[0]; j0 <= hi[0]; ++j0) {
    for (int j1 = lo[1]; j1 <= hi[1]; ++j1) {
      const int z0 = j0 - c[0], z1 = j1 - c[1];
      if (z0 == 0 && z1 == 0) continue;
      const std::size_t zk = F.zidx(z0, z1);
      const double uj = F.vals[F.idx(j0, j1)];
      const double t = (uc - uj) * F.invd[zk];
      const double v = F.weight[zk] * K.G(t);
      f[F.idx(j0, j1)] = v;
      const bool inside = j0 >= F.A[0] && j0 <= F.B[0] && j1 >= F.A[1] && j1 <= F.B[1];
      if (!inside) continue;
      sh.add(v);
      if (full) {
        abs_sum += std::abs(v);
        round += F.weight[zk] * (std::abs(t) + (std::abs(uc) + std::abs(uj)) * F.invd[zk]);
      }
    }
  }
  const double hn = std::pow(h, n);
  const double s_h = hn * sh.value();

  auto correction = [&](int step) {
    double s = 0.0;
    for (int d = 0; d < n; ++d) {
      const int m0 = d == 0 ? step : 0, m1 = d == 1 ? step : 0;
      const double um = F.vals[F.idx(c[0] - m0, c[1] - m1)];
      const double up = F.vals[F.idx(c[0] + m0, c[1] + m1)];
      s += K.G((uc - um) / (step * h)) - K.G((up - uc) / (step * h));
    }
    return kappa * std::pow(step * h, -alpha) * s;
  };
  const double corr_h = correction(1);
  double far_abs = 0.0;
  const double far_p = far_sum(K, far.primary, uc, full ? &far_abs : nullptr);
  Estimate out;
  out.value = s_h + corr_h + far_p;
  if (!full) return out;

  // Same sum on the 2h and 4h sublattices through c.
  auto coarse_sum = [&](int step) {
    std::array<std::vector<Cell1D>, 2> cells;
    for (int a = 0; a < 2; ++a) {
      if (a < n) {
        cells[a] = coarse_cells(c[a], F.A[a], F.B[a], step);
      } else {
        cells[a] = {{1.0, 0, 1.0, 0, 0.0}};
      }
    }
    CompensatedSum s2;
    for (const auto& c0 : cells[0]) {
      for (const auto& c1 : cells[1]) {
        double v = c0.w0 * (c1.w0 * f[F.idx(c0.j0, c1.j0)] + c1.w1 * f[F.idx(c0.j0, c1.j1)]);
        if (c0.w1 != 0.0) v += c0.w1 * (c1.w0 * f[F.idx(c0.j1, c1.j0)] + c1.w1 * f[F.idx(c0.j1, c1.j1)]);
        s2.add(c0.len * c1.len * v);
      }
    }
    return hn * s2.value() + correction(step);
  };
  const double s_2h = coarse_sum(2);
  const double s_4h = coarse_sum(4);

  const double far_c = far_sum(K, far.coarse, uc, nullptr);

  // Leading orders: h^{3-alpha} in 1D, h^{1-alpha} in 2D (the cell correction is exact
  // only for the flat part of the singularity there).
  const double rate = std::pow(2.0, n == 1 ? 3.0 - alpha : 1.0 - alpha);
  const double factor = n == 1 ? 1.0 : 2.0 / (rate - 1.0);
  const double disc = factor * std::max(std::abs(s_h + corr_h - s_2h), std::abs(s_2h - s_4h) / rate);
  const double rnd = 4.0 * kEps * hn * round + 3.0 * kEps * (hn * abs_sum + far_abs);
  out.err = disc + std::abs(far_p - far_c) + tail + rnd;
  return out;
}

}  // namespace

GraphOperator::GraphOperator(const GraphField& u, const QuadratureSpec& q)
    : u_(u), n_(u.dim()), h_(u.spacing()), kernel_(&kernel_for(u.params())) {
  validate(q);
  kappa_ = lattice_constant(n_, u.params().alpha);
  for (int a = 0; a < n_; ++a) {
    A_[a] = -(u_.count(a) - 1 + kPad);
    B_[a] = 2 * (u_.count(a) - 1) + kPad;
  }
  std::array<int, 2> lo{A_[0] - 1, 0}, hi{B_[0] + 1, 0};
  if (n_ == 2) {
    lo[1] = A_[1] - 1;
    hi[1] = B_[1] + 1;
  }
  dims_ = {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1};
  zmax_ = std::max(dims_[0], dims_[1]);
  far_radius_ = choose_far_radius(u.params(), q, node_box({0, 0}).diameter());
  tail_ = graph_tail_bound(u.params(), far_radius_);
  TableSet t = make_tables(n_, h_, u.params().alpha, {zmax_, n_ == 2 ? zmax_ : 0});
  weight_ = std::move(t.weight);
  invd_ = std::move(t.invd);
  if (n_ == 1) {
    far_cache_.reserve(u_.node_count());
    for (std::size_t k = 0; k < u_.node_count(); ++k) {
      const Index i = u_.unflat(k);
      far_cache_.push_back(graph_far_rule(u_, u_.node(i), node_box(i), far_radius_));
    }
  }
}

std::vector<double> GraphOperator::extend(const std::vector<double>& window_values) const {
  if (window_values.size() != u_.node_count()) throw DomainError("GraphOperator: wrong number of node values");
  std::vector<double> ext(std::size_t(dims_[0]) * dims_[1]);
  const int lo0 = A_[0] - 1, lo1 = n_ == 2 ? A_[1] - 1 : 0;
  for (int i = 0; i < dims_[0]; ++i) {
    for (int j = 0; j < dims_[1]; ++j) {
      const Index idx{lo0 + i, lo1 + j};
      ext[std::size_t(i) * dims_[1] + j] =
          u_.in_window(idx) ? window_values[u_.flat(idx)] : u_.lattice_value(idx);
    }
  }
  return ext;
}

void GraphOperator::node_range(const Index& k, std::array<int, 2>& A, std::array<int, 2>& B) const {
  A = {0, 0};
  B = {0, 0};
  for (int a = 0; a < n_; ++a) {
    const int m = std::max(k[a], u_.count(a) - 1 - k[a]) + kPad;
    A[a] = k[a] - m;
    B[a] = k[a] + m;
  }
}

Box GraphOperator::node_box(const Index& k) const {
  std::array<int, 2> A, B;
  node_range(k, A, B);
  Box b;
  b.dim = n_;
  for (int a = 0; a < n_; ++a) {
    b.lo[a] = u_.window().lo[a] + (A[a] - 0.5) * h_;
    b.hi[a] = u_.window().lo[a] + (B[a] + 0.5) * h_;
  }
  return b;
}

const FarRule& GraphOperator::far_rule(const Index& k, FarRule& scratch) const {
  if (!far_cache_.empty()) return far_cache_[u_.flat(k)];
  scratch = graph_far_rule(u_, u_.node(k), node_box(k), far_radius_);
  return scratch;
}

namespace {
void check_margin(const GraphField& u, const Index& k) {
  if (!u.in_window(k) || u.margin(k) < 2) {
    throw DomainError("curvature: node lies within 2h of the window boundary");
  }
}
}  // namespace

Estimate GraphOperator::curvature(const std::vector<double>& ext, const Index& k) const {
  check_margin(u_, k);
  std::array<int, 2> A, B;
  node_range(k, A, B);
  LatticeFrame F{n_, h_, u_.window().lo, A, B, {A_[0] - 1, n_ == 2 ? A_[1] - 1 : 0},
          {B_[0] + 1, n_ == 2 ? B_[1] + 1 : 0}, ext.data(), weight_.data(), invd_.data(),
          {zmax_, n_ == 2 ? zmax_ : 0}};
  thread_local std::vector<double> scratch;
  FarRule fr;
  return lattice_curvature(F, k, *kernel_, kappa_, far_rule(k, fr), tail_, true, scratch);
}

double GraphOperator::curvature_value(const std::vector<double>& ext, const Index& k) const {
  check_margin(u_, k);
  std::array<int, 2> A, B;
  node_range(k, A, B);
  LatticeFrame F{n_, h_, u_.window().lo, A, B, {A_[0] - 1, n_ == 2 ? A_[1] - 1 : 0},
          {B_[0] + 1, n_ == 2 ? B_[1] + 1 : 0}, ext.data(), weight_.data(), invd_.data(),
          {zmax_, n_ == 2 ? zmax_ : 0}};
  thread_local std::vector<double> scratch;
  FarRule fr;
  return lattice_curvature(F, k, *kernel_, kappa_, far_rule(k, fr), tail_, false, scratch).value;
}

namespace {

// Change of the kernel antiderivative from a to a + d; Simpson's rule on G for small d keeps
// the rounding proportional to the change.
double antiderivative_change(const Kernel& K, double a, double d) {
  if (d == 0.0) return 0.0;
  if (std::abs(d) > 1e-2) return K.antiderivative(a + d) - K.antiderivative(a);
  return d / 6.0 * (K.G(a) + 4.0 * K.G(a + 0.5 * d) + K.G(a + d));
}

}  // namespace

double GraphOperator::energy(const std::vector<double>& ext) const { return energy_terms(ext, nullptr); }

double GraphOperator::energy_change(const std::vector<double>& from, const std::vector<double>& to) const {
  if (from.size() != to.size()) throw DomainError("GraphOperator: energy_change needs matching lattices");
  std::vector<double> delta(from.size());
  for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = to[k] - from[k];
  return energy_terms(from, &delta);
}

double GraphOperator::energy_terms(const std::vector<double>& ext, const std::vector<double>* delta) const {
  const Kernel& K = *kernel_;
  const double hn = std::pow(h_, n_);
  const int lo0 = A_[0] - 1, lo1 = n_ == 2 ? A_[1] - 1 : 0;
  const int w1 = 2 * (n_ == 2 ? zmax_ : 0) + 1;
  const int zm1 = n_ == 2 ? zmax_ : 0;
  auto at = [&](const std::vector<double>& v, int j0, int j1) {
    return v[std::size_t(j0 - lo0) * dims_[1] + std::size_t(j1 - lo1)];
  };
  auto val = [&](int j0, int j1) { return at(ext, j0, j1); };
  auto dval = [&](int j0, int j1) { return delta ? at(*delta, j0, j1) : 0.0; };
  // Antiderivative at a, or its change when a moves by d.
  auto term = [&](double a, double d) { return delta ? antiderivative_change(K, a, d) : K.antiderivative(a); };
  const int b1lo = n_ == 2 ? A_[1] : 0, b1hi = n_ == 2 ? B_[1] : 0;

  long double pairs = 0.0L;
  for (std::size_t k = 0; k < u_.node_count(); ++k) {
    const Index i = u_.unflat(k);
    const double ui = val(i[0], i[1]), di = dval(i[0], i[1]);
    std::array<int, 2> A, B;
    node_range(i, A, B);
    long double row = 0.0L;
    for (int j0 = A[0]; j0 <= B[0]; ++j0) {
      for (int j1 = A[1]; j1 <= B[1]; ++j1) {
        const int z0 = j0 - i[0], z1 = j1 - i[1];
        if (z0 == 0 && z1 == 0) continue;
        const std::size_t zk = std::size_t(z0 + zmax_) * w1 + std::size_t(z1 + zm1);
        const double d = 1.0 / invd_[zk];
        const double e = 0.5 * weight_[zk] * d *
                         term((ui - val(j0, j1)) * invd_[zk], (di - dval(j0, j1)) * invd_[zk]);
        row += u_.in_window({j0, j1}) ? e : 2.0 * e;
      }
    }
    pairs += row;
  }
  pairs *= static_cast<long double>(hn) * hn;

  long double edges = 0.0L;
  for (int j0 = A_[0]; j0 <= B_[0]; ++j0) {
    for (int j1 = b1lo; j1 <= b1hi; ++j1) {
      for (int d = 0; d < n_; ++d) {
        const int k0 = j0 + (d == 0), k1 = j1 + (d == 1);
        if (k0 > B_[0] || k1 > b1hi) continue;
        if (!u_.in_window({j0, j1}) && !u_.in_window({k0, k1})) continue;
        edges += term((val(j0, j1) - val(k0, k1)) / h_, (dval(j0, j1) - dval(k0, k1)) / h_);
      }
    }
  }
  edges *= static_cast<long double>(kappa_ * std::pow(h_, n_ + 1 - u_.params().alpha));

  double anchor = 0.0, danchor = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < u_.node_count(); ++k) {
    const Index i = u_.unflat(k);
    if (u_.margin(i) == 0) {
      anchor += val(i[0], i[1]);
      danchor += dval(i[0], i[1]);
      ++count;
    }
  }
  anchor /= count;
  danchor /= count;
  long double far = 0.0L;
  FarRule scratch;
  for (std::size_t k = 0; k < u_.node_count(); ++k) {
    const Index i = u_.unflat(k);
    const double ui = val(i[0], i[1]), di = dval(i[0], i[1]);
    if (delta && di == 0.0 && danchor == 0.0) continue;
    const FarRule& fr = far_rule(i, scratch);
    long double s = 0.0L;
    for (const auto& f : fr.primary) {
      s += f.weight / f.inv_rho *
           (static_cast<long double>(term((ui - f.value) * f.inv_rho, di * f.inv_rho)) -
            term((anchor - f.value) * f.inv_rho, danchor * f.inv_rho));
    }
    far += s;
  }
  far *= hn;
  return static_cast<double>(pairs + edges + far);
}

Estimate graph_curvature_at(const GraphField& u, const Vec& x, const QuadratureSpec& q) {
  const int n = u.dim();
  const double h = u.spacing();
  for (int a = 0; a < n; ++a) {
    if (x[a] - u.window().lo[a] < 2 * h * (1 - 1e-9) || u.window().hi[a] - x[a] < 2 * h * (1 - 1e-9)) {
      throw DomainError("curvature_at: point lies within 2h of the window boundary");
    }
  }
  Index node{0, 0};
  bool aligned = true;
  for (int a = 0; a < n; ++a) {
    const double f = (x[a] - u.window().lo[a]) / h;
    node[a] = static_cast<int>(std::lround(f));
    aligned = aligned && std::abs(f - node[a]) < 1e-9;
  }
  if (aligned) {
    const GraphOperator op(u, q);
    return op.curvature(op.extend(), node);
  }

  // Lattice anchored at x.
  std::array<int, 2> A{0, 0}, B{0, 0};
  for (int a = 0; a < n; ++a) {
    const int m = std::max(static_cast<int>(std::ceil((x[a] - u.window().lo[a]) / h - 1e-9)),
                           static_cast<int>(std::ceil((u.window().hi[a] - x[a]) / h - 1e-9))) +
                  GraphOperator::kPad;
    A[a] = -m;
    B[a] = m;
  }
  std::array<int, 2> lo{A[0] - 1, n == 2 ? A[1] - 1 : 0}, hi{B[0] + 1, n == 2 ? B[1] + 1 : 0};
  std::vector<double> vals(std::size_t(hi[0] - lo[0] + 1) * std::size_t(hi[1] - lo[1] + 1));
  for (int j0 = lo[0]; j0 <= hi[0]; ++j0) {
    for (int j1 = lo[1]; j1 <= hi[1]; ++j1) {
      Vec y = x;
      y[0] += j0 * h;
      if (n == 2) y[1] += j1 * h;
      vals[std::size_t(j0 - lo[0]) * std::size_t(hi[1] - lo[1] + 1) + std::size_t(j1 - lo[1])] = u.sample(y);
    }
  }
  const std::array<int, 2> zmax{std::max(-lo[0], hi[0]), n == 2 ? std::max(-lo[1], hi[1]) : 0};
  TableSet t = make_tables(n, h, u.params().alpha, zmax);
  LatticeFrame F{n, h, x, A, B, lo, hi, vals.data(), t.weight.data(), t.invd.data(), zmax};
  const Box bfar = F.bfar();
  const double R = choose_far_radius(u.params(), q, bfar.diameter());
  const FarRule fr = graph_far_rule(u, x, bfar, R);
  std::vector<double> scratch;
  return lattice_curvature(F, {0, 0}, kernel_for(u.params()), lattice_constant(n, u.params().alpha), fr,
                           graph_tail_bound(u.params(), R), true, scratch);
}

}  // namespace nlmg
