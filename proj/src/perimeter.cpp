#include "nlmg/perimeter.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "exterior_rays.hpp"
#include "nlmg/errors.hpp"
#include "nlmg/parallel.hpp"
#include "nlmg/quadrature.hpp"

namespace nlmg {

namespace {

using Voxel = std::array<int, kMaxDim>;

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kExactReach = 2;
constexpr int kCornerLevels = 100;
constexpr std::size_t kMaxTable = std::size_t(1) << 24;

// int over the box [lo, hi] of phi_d(z) |z|^{-s}, phi_d(z) = prod (1 - |z_a - d_a|), by a
// tensor Gauss rule.
double box_rule(int N, const Vec& lo, const Vec& hi, const Voxel& d, double s, const GaussRule& g) {
  const std::size_t m = g.nodes.size();
  const std::size_t total = N == 2 ? m * m : m * m * m;
  double acc = 0.0;
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t r = k;
    double w = 1.0, r2 = 0.0, phi = 1.0;
    for (int a = 0; a < N; ++a) {
      const std::size_t i = r % m;
      r /= m;
      const double half = 0.5 * (hi[a] - lo[a]);
      const double z = 0.5 * (hi[a] + lo[a]) + half * g.nodes[i];
      w *= half * g.weights[i];
      r2 += z * z;
      phi *= 1.0 - std::abs(z - d[a]);
    }
    acc += w * phi * std::pow(r2, -0.5 * s);
  }
  return acc;
}

// int_{Q_0} int_{Q_d} |x-y|^{-s} dx dy for unit cells, d != 0, |d|_inf <= kExactReach. The
// difference z = y - x has density phi_d on d + [-1, 1]^N; unit boxes with a corner at the
// origin are refined geometrically toward it.
double cell_pair(int N, const Voxel& d, double s) {
  const GaussRule& g = gauss_legendre(N == 2 ? 10 : 6);
  const int boxes = 1 << N;
  double total = 0.0;
  for (int b = 0; b < boxes; ++b) {
    Vec lo{}, hi{};
    bool corner = true;
    for (int a = 0; a < N; ++a) {
      lo[a] = d[a] - 1 + ((b >> a) & 1);
      hi[a] = lo[a] + 1;
      corner = corner && (lo[a] == 0.0 || hi[a] == 0.0);
    }
    if (!corner) {
      total += box_rule(N, lo, hi, d, s, g);
      continue;
    }
    Vec sign{};
    for (int a = 0; a < N; ++a) sign[a] = lo[a] == 0.0 ? 1.0 : -1.0;
    double scale = 1.0;
    for (int level = 0; level < kCornerLevels; ++level, scale *= 0.5) {
      for (int mask = 1; mask < boxes; ++mask) {
        Vec slo{}, shi{};
        for (int a = 0; a < N; ++a) {
          const double t0 = (mask >> a) & 1 ? 0.5 * scale : 0.0;
          const double t1 = (mask >> a) & 1 ? scale : 0.5 * scale;
          slo[a] = std::min(sign[a] * t0, sign[a] * t1);
          shi[a] = std::max(sign[a] * t0, sign[a] * t1);
        }
        total += box_rule(N, slo, shi, d, s, g);
      }
    }
  }
  return total;
}

// Canonical key: sorted |d_a|, base kExactReach + 1.
int cell_key(int N, const Voxel& d) {
  std::array<int, kMaxDim> a{};
  for (int k = 0; k < N; ++k) a[k] = std::abs(d[k]);
  std::sort(a.begin(), a.begin() + N);
  int key = 0;
  for (int k = 0; k < N; ++k) key = key * (kExactReach + 1) + a[k];
  return key;
}

const std::vector<double>& cell_table(int N, double alpha) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, std::vector<double>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find({N, alpha});
  if (it != cache.end()) return it->second;
  int size = 1;
  for (int k = 0; k < N; ++k) size *= kExactReach + 1;
  std::vector<double> t(size, 0.0);
  Voxel d{};
  for (int key = 1; key < size; ++key) {
    int r = key;
    for (int k = N - 1; k >= 0; --k) {
      d[k] = r % (kExactReach + 1);
      r /= kExactReach + 1;
    }
    if (cell_key(N, d) == key) t[key] = cell_pair(N, d, N + alpha);
  }
  return cache.emplace(std::pair{N, alpha}, std::move(t)).first->second;
}

struct PairTables {
  std::array<int, kMaxDim> span{1, 1, 1};  // 2 res - 1 per axis
  std::vector<double> weight;              // pair value per offset
  std::vector<double> err;                 // its error estimate
};

PairTables pair_tables(const VoxelSet& e) {
  const int N = e.dim();
  const double alpha = e.params().alpha;
  const double s = N + alpha;
  const double dx = e.voxel_size();
  const double scale = std::pow(dx, N - alpha);
  const double corr = s * (2.0 + alpha) / 12.0;
  const auto& exact = cell_table(N, alpha);
  PairTables t;
  std::size_t size = 1;
  for (int a = 0; a < N; ++a) {
    t.span[a] = 2 * e.resolution()[a] - 1;
    size *= t.span[a];
  }
  if (size > kMaxTable) throw DomainError("frac_perimeter: resolution too fine for the pair table");
  t.weight.assign(size, 0.0);
  t.err.assign(size, 0.0);
  for (std::size_t k = 0; k < size; ++k) {
    std::size_t r = k;
    Voxel d{};
    int reach = 0;
    double d2 = 0.0;
    for (int a = N - 1; a >= 0; --a) {
      d[a] = static_cast<int>(r % t.span[a]) - (e.resolution()[a] - 1);
      r /= t.span[a];
      reach = std::max(reach, std::abs(d[a]));
      d2 += double(d[a]) * d[a];
    }
    if (reach == 0) continue;
    if (reach <= kExactReach) {
      t.weight[k] = scale * exact[cell_key(N, d)];
      if (reach == 1) t.err[k] = t.weight[k];
    } else {
      const double c = corr / d2;
      t.weight[k] = scale * std::pow(d2, -0.5 * s) * (1.0 + c);
      t.err[k] = t.weight[k] * c * c;
    }
  }
  return t;
}

void check_region(const VoxelSet& e, const Region& omega) {
  const int N = e.dim();
  const Box& box = e.box();
  bool inside = true;
  if (const auto* b = std::get_if<Box>(&omega)) {
    for (int a = 0; a < N; ++a) inside = inside && b->lo[a] > box.lo[a] && b->hi[a] < box.hi[a] && b->lo[a] < b->hi[a];
  } else {
    const Ball& ball = std::get<Ball>(omega);
    inside = ball.radius > 0.0;
    for (int a = 0; a < N; ++a) {
      inside = inside && ball.center[a] - ball.radius > box.lo[a] && ball.center[a] + ball.radius < box.hi[a];
    }
  }
  if (!inside) throw DomainError("frac_perimeter: the window must lie strictly inside the voxel box");
}

double distance_to_box_boundary(const Box& box, const Vec& x, int N) {
  double d = std::numeric_limits<double>::infinity();
  for (int a = 0; a < N; ++a) d = std::min({d, x[a] - box.lo[a], box.hi[a] - x[a]});
  return d;
}

}  // namespace

bool region_contains(const Region& r, const Vec& x, int dim) {
  if (const auto* b = std::get_if<Box>(&r)) {
    for (int a = 0; a < dim; ++a) {
      if (x[a] < b->lo[a] || x[a] > b->hi[a]) return false;
    }
    return true;
  }
  const Ball& ball = std::get<Ball>(r);
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) r2 += (x[a] - ball.center[a]) * (x[a] - ball.center[a]);
  return r2 <= ball.radius * ball.radius;
}

PerimeterResult frac_perimeter(const VoxelSet& e, const Region& omega, const QuadratureSpec& q) {
  validate(q);
  check_region(e, omega);
  const int N = e.dim();
  const double alpha = e.params().alpha;
  const double dx = e.voxel_size();
  const double vol = e.voxel_volume();
  const auto& res = e.resolution();
  const std::size_t count = e.occupancy().size();

  // Masks over the box: E^c, and E outside the window.
  std::vector<double> outside(count), inside_rest(count);
  std::vector<std::size_t> window;
  for (std::size_t k = 0; k < count; ++k) {
    const bool occ = e.occupancy()[k] != 0;
    const bool in_window = region_contains(omega, e.voxel_center(e.unflat(k)), N);
    outside[k] = occ ? 0.0 : 1.0;
    inside_rest[k] = occ && !in_window ? 1.0 : 0.0;
    if (in_window) window.push_back(k);
  }
  if (window.empty()) throw DomainError("frac_perimeter: the window contains no voxel centers");

  const PairTables tab = pair_tables(e);
  const double area = sphere_area(N);
  const double R = std::max(4.0 * e.box().diameter(),
                            std::pow(window.size() * vol * area / (alpha * q.tail_budget), 1.0 / alpha));
  if (!std::isfinite(R) || R > 1e150) throw BudgetError("frac_perimeter: tail budget unattainable", R);
  const double s = N + alpha;
  const double midpoint = s * (s + 1.0) / 24.0;

  struct Part {
    double value = 0.0;
    double err = 0.0;
    double abs = 0.0;
    bool first = true;
    bool truncated = false;
  };
  std::vector<Part> parts(window.size());
  parallel_for(window.size(), [&](std::size_t b, std::size_t end) {
    for (std::size_t i = b; i < end; ++i) {
      const Voxel v = e.unflat(window[i]);
      const bool occ = e.occupied(v);
      const std::vector<double>& mask = occ ? outside : inside_rest;
      // Offsets y - v index the pair table at (y - v + res - 1).
      std::size_t base = 0;
      for (int a = 0; a < N; ++a) base = base * tab.span[a] + (res[a] - 1 - v[a]);
      double sum = 0.0, err = 0.0;
      if (N == 2) {
        for (int y0 = 0; y0 < res[0]; ++y0) {
          const double* m = mask.data() + std::size_t(y0) * res[1];
          const std::size_t row = base + std::size_t(y0) * tab.span[1];
          const double* w = tab.weight.data() + row;
          const double* r = tab.err.data() + row;
          for (int y1 = 0; y1 < res[1]; ++y1) {
            sum += m[y1] * w[y1];
            err += m[y1] * r[y1];
          }
        }
      } else {
        for (int y0 = 0; y0 < res[0]; ++y0) {
          for (int y1 = 0; y1 < res[1]; ++y1) {
            const double* m = mask.data() + (std::size_t(y0) * res[1] + y1) * res[2];
            const std::size_t row = base + (std::size_t(y0) * tab.span[1] + y1) * tab.span[2];
            const double* w = tab.weight.data() + row;
            const double* r = tab.err.data() + row;
            for (int y2 = 0; y2 < res[2]; ++y2) {
              sum += m[y2] * w[y2];
              err += m[y2] * r[y2];
            }
          }
        }
      }
      const Vec x = e.voxel_center(v);
      bool truncated = false;
      double tot_p = 0.0, tot_c = 0.0;
      const double sig_p = detail::exterior_part(e, x, R, gauss_legendre(N == 2 ? 4 : 3), truncated, &tot_p);
      const double sig_c = detail::exterior_part(e, x, R, gauss_legendre(N == 2 ? 2 : 2), truncated, &tot_c);
      // chi_{E^c} = (1 + sigma) / 2 and chi_E = (1 - sigma) / 2 beyond the box.
      const double sg = occ ? 1.0 : -1.0;
      const double ext_p = 0.5 * vol * (tot_p + sg * sig_p);
      const double ext_c = 0.5 * vol * (tot_c + sg * sig_c);
      const double dist = distance_to_box_boundary(e.box(), x, N);
      Part& p = parts[i];
      p.value = sum + ext_p;
      p.err = err + std::abs(ext_p - ext_c) + midpoint * (dx / dist) * (dx / dist) * ext_p;
      p.abs = p.value;
      p.first = occ;
      p.truncated = truncated;
    }
  });

  CompensatedSum first, cross;
  double err = 0.0, abs_sum = 0.0;
  bool truncated = false;
  for (const Part& p : parts) {
    (p.first ? first : cross).add(p.value);
    err += p.err;
    abs_sum += p.abs;
    truncated = truncated || p.truncated;
  }
  PerimeterResult out;
  out.split = {first.value(), cross.value()};
  out.value = out.split.first + out.split.second;
  const double tail = truncated ? window.size() * vol * area * std::pow(R, -alpha) / alpha : 0.0;
  out.err = err + tail + 4.0 * kEps * abs_sum * std::sqrt(double(count));
  return out;
}

std::vector<std::pair<double, PerimeterResult>> perimeter_growth(const VoxelSet& e, const std::vector<double>& radii,
                                                                 const Vec* center, const QuadratureSpec& q) {
  if (radii.empty()) throw DomainError("perimeter_growth: no radii");
  const Vec c = center ? *center : e.box().center();
  std::vector<std::pair<double, PerimeterResult>> out;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (i > 0 && !(radii[i] > radii[i - 1])) throw DomainError("perimeter_growth: radii must increase");
    out.emplace_back(radii[i], frac_perimeter(e, Ball{c, radii[i]}, q));
  }
  return out;
}

PerimeterResult ball_majorant(const VoxelSet& like, double R, const Vec* center, const QuadratureSpec& q) {
  const Vec c = center ? *center : like.box().center();
  const int N = like.dim();
  const VoxelSet ball = voxelize(
      like.params(), like.box(), like.resolution(),
      [&](const Vec& y) {
        double r2 = 0.0;
        for (int a = 0; a < N; ++a) r2 += (y[a] - c[a]) * (y[a] - c[a]);
        return r2 <= R * R;
      },
      EmptyExterior{});
  return frac_perimeter(ball, Ball{c, R}, q);
}

double loglog_slope(const std::vector<std::pair<double, PerimeterResult>>& growth) {
  if (growth.size() < 2) throw DomainError("loglog_slope: need at least two radii");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = growth.size();
  for (const auto& [R, p] : growth) {
    if (!(p.value > 0.0)) throw DomainError("loglog_slope: nonpositive perimeter");
    const double x = std::log(R), y = std::log(p.value);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace nlmg
