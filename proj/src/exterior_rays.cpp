#include "exterior_rays.hpp"

#include <algorithm>
#include <cmath>

namespace nlmg::detail {

namespace {
constexpr double kSampleRatio = 1.25;
}  // namespace

double ray_integral(const VoxelSet& e, const Vec& x, const Vec& w, double r0, double R, double alpha,
                    bool& truncated) {
  const int N = e.dim();
  auto point = [&](double rho) {
    Vec y{};
    for (int a = 0; a < N; ++a) y[a] = x[a] + rho * w[a];
    return y;
  };
  auto sigma = [&](double rho) { return e.exterior_contains(point(rho)) ? -1.0 : 1.0; };
  auto piece = [alpha](double a, double b) {
    return (std::pow(a, -alpha) - (std::isinf(b) ? 0.0 : std::pow(b, -alpha))) / alpha;
  };

  if (const auto* hs = std::get_if<HalfSpaceExterior>(&e.exterior())) {
    double nx = 0.0, nw = 0.0;
    for (int a = 0; a < N; ++a) {
      nx += hs->normal[a] * x[a];
      nw += hs->normal[a] * w[a];
    }
    const double cross = nw != 0.0 ? (hs->offset - nx) / nw : -1.0;
    if (cross > r0) {
      const double s0 = sigma(0.5 * (r0 + cross)), s1 = -s0;
      return s0 * piece(r0, cross) + s1 * piece(cross, INFINITY);
    }
    return sigma(2.0 * r0) * piece(r0, INFINITY);
  }
  if (std::holds_alternative<EmptyExterior>(e.exterior())) return sigma(2.0 * r0) * piece(r0, INFINITY);

  truncated = true;
  double total = 0.0, start = r0, rho = r0;
  double s = sigma(r0);
  while (rho < R) {
    const double next = std::min(R, rho * kSampleRatio);
    const double sn = sigma(next);
    if (sn != s) {
      double a = rho, b = next;
      while (b - a > 1e-12 * b) {
        const double m = 0.5 * (a + b);
        if (sigma(m) == s) {
          a = m;
        } else {
          b = m;
        }
      }
      const double c = 0.5 * (a + b);
      total += s * piece(start, c);
      start = c;
      s = sn;
    }
    rho = next;
  }
  return total + s * piece(start, INFINITY);
}

namespace {

std::vector<double> graded(double t0, double t1, double tf, double d) {
  std::vector<double> b{t0, t1};
  if (tf > t0 && tf < t1) b.push_back(tf);
  for (double g = d; tf - g > t0; g *= 2) b.push_back(tf - g);
  for (double g = d; tf + g < t1; g *= 2) b.push_back(tf + g);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

}  // namespace

double exterior_part(const VoxelSet& e, const Vec& x, double R, const GaussRule& g, bool& truncated,
                     double* total) {
  const int N = e.dim();
  const Box& box = e.box();
  const double alpha = e.params().alpha;
  CompensatedSum sum, all;
  for (int axis = 0; axis < N; ++axis) {
    for (double face : {box.lo[axis], box.hi[axis]}) {
      const double d = std::abs(face - x[axis]);
      std::array<int, 2> others{};
      int m = 0;
      for (int a = 0; a < N; ++a) {
        if (a != axis) others[m++] = a;
      }
      std::array<std::vector<double>, 2> breaks;
      for (int k = 0; k < m; ++k) {
        breaks[k] = graded(box.lo[others[k]], box.hi[others[k]], x[others[k]], d);
      }
      if (m == 1) breaks[1] = {0.0, 1.0};
      for (std::size_t p0 = 0; p0 + 1 < breaks[0].size(); ++p0) {
        for (std::size_t p1 = 0; p1 + 1 < breaks[1].size(); ++p1) {
          const double m0 = 0.5 * (breaks[0][p0] + breaks[0][p0 + 1]);
          const double h0 = 0.5 * (breaks[0][p0 + 1] - breaks[0][p0]);
          const double m1 = 0.5 * (breaks[1][p1] + breaks[1][p1 + 1]);
          const double h1 = 0.5 * (breaks[1][p1 + 1] - breaks[1][p1]);
          const std::size_t n1 = m == 2 ? g.nodes.size() : 1;
          for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            for (std::size_t j = 0; j < n1; ++j) {
              Vec b{};
              b[axis] = face;
              b[others[0]] = m0 + h0 * g.nodes[i];
              double wt = h0 * g.weights[i];
              if (m == 2) {
                b[others[1]] = m1 + h1 * g.nodes[j];
                wt *= h1 * g.weights[j];
              }
              double r2 = 0.0;
              for (int a = 0; a < N; ++a) r2 += (b[a] - x[a]) * (b[a] - x[a]);
              const double rb = std::sqrt(r2);
              Vec w{};
              for (int a = 0; a < N; ++a) w[a] = (b[a] - x[a]) / rb;
              const double solid = wt * d / std::pow(rb, N);
              sum.add(solid * ray_integral(e, x, w, rb, R, alpha, truncated));
              all.add(solid * std::pow(rb, -alpha) / alpha);
            }
          }
        }
      }
    }
  }
  if (total) *total = all.value();
  return sum.value();
}

namespace {

struct PanelSum {
  double value = 0.0;
  double all = 0.0;
};

class FacePanels {
 public:
  FacePanels(const VoxelSet& e, const Vec& x, double R, int axis, double face, bool& truncated)
      : e_(e), x_(x), R_(R), axis_(axis), face_(face), truncated_(truncated) {
    const int N = e.dim();
    for (int a = 0; a < N; ++a) {
      if (a != axis) others_[m_++] = a;
    }
    d_ = std::abs(face - x[axis]);
  }

  int lateral() const { return m_; }
  int other(int k) const { return others_[k]; }
  double distance() const { return d_; }

  PanelSum rule(const std::array<double, 2>& lo, const std::array<double, 2>& hi, const GaussRule& g) const {
    const int N = e_.dim();
    const double alpha = e_.params().alpha;
    PanelSum out;
    const std::size_t n1 = m_ == 2 ? g.nodes.size() : 1;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      for (std::size_t j = 0; j < n1; ++j) {
        Vec b{};
        b[axis_] = face_;
        double wt = 1.0;
        for (int k = 0; k < m_; ++k) {
          const std::size_t q = k == 0 ? i : j;
          const double mid = 0.5 * (lo[k] + hi[k]), half = 0.5 * (hi[k] - lo[k]);
          b[others_[k]] = mid + half * g.nodes[q];
          wt *= half * g.weights[q];
        }
        double r2 = 0.0;
        for (int a = 0; a < N; ++a) r2 += (b[a] - x_[a]) * (b[a] - x_[a]);
        const double rb = std::sqrt(r2);
        Vec w{};
        for (int a = 0; a < N; ++a) w[a] = (b[a] - x_[a]) / rb;
        const double solid = wt * d_ / std::pow(rb, N);
        out.value += solid * ray_integral(e_, x_, w, rb, R_, alpha, truncated_);
        out.all += solid * std::pow(rb, -alpha) / alpha;
      }
    }
    return out;
  }

 private:
  const VoxelSet& e_;
  const Vec& x_;
  double R_;
  int axis_;
  double face_;
  bool& truncated_;
  std::array<int, 2> others_{};
  int m_ = 0;
  double d_ = 0.0;
};

constexpr int kMaxDepth1 = 24;
constexpr int kMaxDepth2 = 8;

void refine(const FacePanels& f, const std::array<double, 2>& lo, const std::array<double, 2>& hi,
            const PanelSum& whole, const GaussRule& g, double rel_tol, int depth, CompensatedSum& sum, double& err) {
  const int m = f.lateral();
  const int kids = m == 2 ? 4 : 2;
  PanelSum parts;
  std::array<std::array<double, 2>, 4> clo{}, chi{};
  std::array<PanelSum, 4> child{};
  for (int c = 0; c < kids; ++c) {
    for (int k = 0; k < m; ++k) {
      const double mid = 0.5 * (lo[k] + hi[k]);
      const bool upper = (c >> k) & 1;
      clo[c][k] = upper ? mid : lo[k];
      chi[c][k] = upper ? hi[k] : mid;
    }
    if (m == 1) clo[c][1] = lo[1], chi[c][1] = hi[1];
    child[c] = f.rule(clo[c], chi[c], g);
    parts.value += child[c].value;
    parts.all += child[c].all;
  }
  const double diff = std::abs(parts.value - whole.value);
  if (diff <= rel_tol * whole.all || depth >= (m == 2 ? kMaxDepth2 : kMaxDepth1)) {
    sum.add(parts.value);
    err += diff;
    return;
  }
  for (int c = 0; c < kids; ++c) refine(f, clo[c], chi[c], child[c], g, rel_tol, depth + 1, sum, err);
}

}  // namespace

double exterior_part_adaptive(const VoxelSet& e, const Vec& x, double R, double rel_tol, bool& truncated,
                              double& err) {
  const int N = e.dim();
  const Box& box = e.box();
  const GaussRule& g = gauss_legendre(N == 2 ? 6 : 4);
  CompensatedSum sum;
  err = 0.0;
  for (int axis = 0; axis < N; ++axis) {
    for (double face : {box.lo[axis], box.hi[axis]}) {
      const FacePanels f(e, x, R, axis, face, truncated);
      std::array<std::vector<double>, 2> breaks;
      for (int k = 0; k < f.lateral(); ++k) {
        const int a = f.other(k);
        breaks[k] = graded(box.lo[a], box.hi[a], x[a], f.distance());
      }
      if (f.lateral() == 1) breaks[1] = {0.0, 1.0};
      for (std::size_t p0 = 0; p0 + 1 < breaks[0].size(); ++p0) {
        for (std::size_t p1 = 0; p1 + 1 < breaks[1].size(); ++p1) {
          const std::array<double, 2> lo{breaks[0][p0], breaks[1][p1]}, hi{breaks[0][p0 + 1], breaks[1][p1 + 1]};
          refine(f, lo, hi, f.rule(lo, hi, g), g, rel_tol, 0, sum, err);
        }
      }
    }
  }
  return sum.value();
}

}  // namespace nlmg::detail
