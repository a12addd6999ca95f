#include "nlmg/blowdown.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "nlmg/errors.hpp"

namespace nlmg {

namespace {

using Voxel = std::array<int, kMaxDim>;

double ball_measure(int dim, double R) {
  switch (dim) {
    case 1:
      return 2.0 * R;
    case 2:
      return std::numbers::pi * R * R;
    default:
      return 4.0 / 3.0 * std::numbers::pi * R * R * R;
  }
}

// Calls visit(z) for the points of a grid with spacing close to `step` inside B_R.
template <class Visit>
std::size_t for_each_ball_point(int N, double R, double step, Visit&& visit) {
  const int count = std::max(1, static_cast<int>(std::ceil(2.0 * R / step)));
  const double s = 2.0 * R / count;
  std::size_t inside = 0;
  Voxel i{};
  for (;;) {
    Vec z{};
    double r2 = 0.0;
    for (int a = 0; a < N; ++a) {
      z[a] = -R + (i[a] + 0.5) * s;
      r2 += z[a] * z[a];
    }
    if (r2 <= R * R) {
      ++inside;
      visit(z);
    }
    int a = N - 1;
    while (a >= 0 && ++i[a] == count) {
      i[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return inside;
}

void require_ball_inside(const Box& box, const Vec& x, double radius, const char* what) {
  for (int a = 0; a < box.dim; ++a) {
    if (x[a] - radius < box.lo[a] || x[a] + radius > box.hi[a]) throw DomainError(what);
  }
}

ExteriorModel scale_exterior(const ExteriorModel& m, double r) {
  return std::visit(
      [&](const auto& e) -> ExteriorModel {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, AffineExterior>) {
          return AffineExterior{e.gradient, e.offset / r};
        } else if constexpr (std::is_same_v<T, Homogeneous1Exterior>) {
          Vec c{};
          for (int a = 0; a < kMaxDim; ++a) c[a] = e.center[a] / r;
          return Homogeneous1Exterior{c, e.apex / r};
        } else {
          return e;
        }
      },
      m);
}

// Fraction of B_R where the two voxel sets (same box and grid) disagree, voxel-measured.
double disagreement(const VoxelSet& a, const VoxelSet& b, double R) {
  std::size_t diff = 0, total = 0;
  for (std::size_t k = 0; k < a.occupancy().size(); ++k) {
    const Vec z = a.voxel_center(a.unflat(k));
    double r2 = 0.0;
    for (int d = 0; d < a.dim(); ++d) r2 += z[d] * z[d];
    if (r2 > R * R) continue;
    ++total;
    if ((a.occupancy()[k] != 0) != (b.occupancy()[k] != 0)) ++diff;
  }
  return total ? static_cast<double>(diff) / total : 0.0;
}

bool tends_to_zero(const std::vector<double>& v, double tol, double layer) {
  if (v.empty() || !(v.back() < tol)) return false;
  const std::size_t from = v.size() >= 3 ? v.size() - 3 : 0;
  for (std::size_t k = from; k + 1 < v.size(); ++k) {
    if (v[k + 1] > v[k] + layer) return false;
  }
  return true;
}

}  // namespace

GraphField rescale_graph(const GraphField& u, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw ParameterError("rescale_graph: r must be positive");
  Box w = u.window();
  for (int a = 0; a < u.dim(); ++a) {
    w.lo[a] /= r;
    w.hi[a] /= r;
  }
  std::vector<double> v = u.values();
  for (double& x : v) x /= r;
  return GraphField(u.params(), w, u.spacing() / r, std::move(v), scale_exterior(u.exterior(), r),
                    u.seam_tolerance() / r);
}

GraphField translate_graph(const GraphField& u, const Vec& c, double shift) {
  Box w = u.window();
  for (int a = 0; a < u.dim(); ++a) {
    w.lo[a] -= c[a];
    w.hi[a] -= c[a];
  }
  std::vector<double> v = u.values();
  for (double& x : v) x -= shift;
  ExteriorModel ext = std::visit(
      [&](const auto& e) -> ExteriorModel {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, AffineExterior>) {
          double b = e.offset - shift;
          for (int a = 0; a < u.dim(); ++a) b += e.gradient[a] * c[a];
          return AffineExterior{e.gradient, b};
        } else if constexpr (std::is_same_v<T, Homogeneous1Exterior>) {
          Vec m{};
          for (int a = 0; a < u.dim(); ++a) m[a] = e.center[a] - c[a];
          return Homogeneous1Exterior{m, e.apex - shift};
        } else {
          return e;
        }
      },
      u.exterior());
  return GraphField(u.params(), w, u.spacing(), std::move(v), std::move(ext), u.seam_tolerance());
}

VoxelSet rescale_set(const VoxelSet& e, const Vec& x, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw ParameterError("rescale_set: r must be positive");
  const int N = e.dim();
  const int n = N - 1;
  Box b = e.box();
  for (int a = 0; a < N; ++a) {
    b.lo[a] = (b.lo[a] - x[a]) / r;
    b.hi[a] = (b.hi[a] - x[a]) / r;
  }
  SetExterior ext = std::visit(
      [&](const auto& m) -> SetExterior {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, HalfSpaceExterior>) {
          double nx = 0.0;
          for (int a = 0; a < N; ++a) nx += m.normal[a] * x[a];
          return HalfSpaceExterior{m.normal, (m.offset - nx) / r};
        } else if constexpr (std::is_same_v<T, ConeExterior>) {
          Vec apex{};
          for (int a = 0; a < N; ++a) apex[a] = (m.apex[a] - x[a]) / r;
          return ConeExterior{apex};
        } else if constexpr (std::is_same_v<T, SubgraphExterior>) {
          Vec c{};
          for (int a = 0; a < n; ++a) c[a] = x[a];
          auto g = std::make_shared<const GraphField>(rescale_graph(translate_graph(*m.graph, c, x[n]), r));
          return SubgraphExterior{std::move(g)};
        } else {
          return m;
        }
      },
      e.exterior());
  return VoxelSet(e.params(), b, e.resolution(), e.occupancy(), std::move(ext), e.complemented(), 1.0);
}

double center_gap(const VoxelSet& e, const Vec& x, const Vec& y, double r, double R) {
  if (!(r > 0.0) || !(R > 0.0)) throw ParameterError("center_gap: r and R must be positive");
  require_ball_inside(e.box(), x, r * R, "center_gap: x + r B_R leaves the box");
  require_ball_inside(e.box(), y, r * R, "center_gap: y + r B_R leaves the box");
  const int N = e.dim();
  const double step = e.voxel_size() / r;
  std::size_t diff = 0;
  for_each_ball_point(N, R, step, [&](const Vec& z) {
    Vec px{}, py{};
    for (int a = 0; a < N; ++a) {
      px[a] = x[a] + r * z[a];
      py[a] = y[a] + r * z[a];
    }
    if (e.contains(px) != e.contains(py)) ++diff;
  });
  const double s = 2.0 * R / std::max(1, static_cast<int>(std::ceil(2.0 * R / step)));
  return diff * std::pow(s, N);
}

double cone_defect(const VoxelSet& e, double R) {
  if (!(R > 0.0)) throw ParameterError("cone_defect: R must be positive");
  require_ball_inside(e.box(), Vec{}, 2.0 * R, "cone_defect: B_2R leaves the box");
  const int N = e.dim();
  std::size_t diff = 0;
  const std::size_t total = for_each_ball_point(N, R, e.voxel_size(), [&](const Vec& z) {
    Vec twice{};
    for (int a = 0; a < N; ++a) twice[a] = 2.0 * z[a];
    if (e.contains(z) != e.contains(twice)) ++diff;
  });
  return static_cast<double>(diff) / total;
}

CylinderDefect cylinder_defect(const VoxelSet& e, const Vec& v, double R) {
  if (!(R > 0.0)) throw ParameterError("cylinder_defect: R must be positive");
  const int N = e.dim();
  double norm = 0.0;
  for (int a = 0; a < N; ++a) norm += v[a] * v[a];
  if (std::abs(std::sqrt(norm) - 1.0) > 1e-12) throw ParameterError("cylinder_defect: v must be a unit vector");
  require_ball_inside(e.box(), Vec{}, R, "cylinder_defect: B_R leaves the box");
  std::size_t two = 0, one = 0;
  const std::size_t total = for_each_ball_point(N, R, e.voxel_size(), [&](const Vec& z) {
    Vec w{};
    for (int a = 0; a < N; ++a) w[a] = z[a] - v[a];
    const bool in = e.contains(z), shifted = e.contains(w);
    if (in != shifted) ++two;
    if (shifted && !in) ++one;
  });
  return {static_cast<double>(two) / total, static_cast<double>(one) / total};
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::cone_detected:
      return "ConeDetected";
    case Verdict::cylinder_split:
      return "CylinderSplit";
    case Verdict::half_space:
      return "HalfSpace";
    default:
      return "Inconclusive";
  }
}

BlowdownReport blowdown_analyze(const GraphField& u, const std::vector<double>& scales,
                                const std::vector<Vec>& directions, const BlowdownOptions& opts) {
  if (scales.empty()) throw DomainError("blowdown_analyze: no scales");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0) || (i > 0 && !(scales[i] > scales[i - 1]))) {
      throw DomainError("blowdown_analyze: scales must be positive and increasing");
    }
  }
  if (!(opts.R > 0.0) || opts.voxels_per_unit < 4) throw ParameterError("blowdown_analyze: bad options");
  const int n = u.dim();
  const int N = n + 1;
  const double R = opts.R;

  const Vec c = u.window().center();
  const GraphField base = translate_graph(u, c, u.sample(c));
  const GraphField side = translate_graph(u, Vec{c[0] + 1.0, c[1], 0.0}, u.sample(Vec{c[0] + 1.0, c[1], 0.0}));

  const double half = R + 1.25;
  const int res = static_cast<int>(std::ceil(2.0 * half * opts.voxels_per_unit));
  Box box;
  box.dim = N;
  for (int a = 0; a < N; ++a) {
    box.lo[a] = -half;
    box.hi[a] = half;
  }
  std::array<int, kMaxDim> resolution{1, 1, 1};
  for (int a = 0; a < N; ++a) resolution[a] = res;
  const double dx = 2.0 * half / res;
  const double layer = dx * ball_measure(n, R) / ball_measure(N, R);

  BlowdownReport rep;
  rep.scales = scales;
  rep.directions = directions;
  rep.cylinder_defects.resize(directions.size());
  rep.tolerance = opts.tolerance_layers * layer;

  for (double r : scales) {
    const GraphField ur = rescale_graph(base, r);
    const VoxelSet e = subgraph_of(ur, box, resolution);
    rep.cone_defects.push_back(cone_defect(e, R));
    for (std::size_t d = 0; d < directions.size(); ++d) {
      rep.cylinder_defects[d].push_back(cylinder_defect(e, directions[d], R).two_sided);
    }
    const VoxelSet ey = subgraph_of(rescale_graph(side, r), box, resolution);
    rep.center_gaps.push_back(disagreement(e, ey, R) * ball_measure(N, R));

    // Least-squares affine fit of the rescaled graph over the lateral ball.
    const int m = n + 1;
    std::vector<double> ata(m * m, 0.0), atb(m, 0.0);
    for (std::size_t k = 0; k < e.occupancy().size(); k += res) {
      const Vec z = e.voxel_center(e.unflat(k));
      double r2 = 0.0;
      for (int a = 0; a < n; ++a) r2 += z[a] * z[a];
      if (r2 > R * R) continue;
      std::array<double, 3> row{1.0, z[0], n == 2 ? z[1] : 0.0};
      const double val = ur.sample(z);
      for (int i = 0; i < m; ++i) {
        atb[i] += row[i] * val;
        for (int j = 0; j < m; ++j) ata[i * m + j] += row[i] * row[j];
      }
    }
    // Gaussian elimination on the small normal equations.
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        const double f = ata[j * m + i] / ata[i * m + i];
        for (int k = i; k < m; ++k) ata[j * m + k] -= f * ata[i * m + k];
        atb[j] -= f * atb[i];
      }
    }
    std::array<double, 3> coef{};
    for (int i = m - 1; i >= 0; --i) {
      double s = atb[i];
      for (int k = i + 1; k < m; ++k) s -= ata[i * m + k] * coef[k];
      coef[i] = s / ata[i * m + i];
    }
    const VoxelSet plane = voxelize(
        u.params(), box, resolution,
        [&](const Vec& z) { return z[n] < coef[0] + coef[1] * z[0] + (n == 2 ? coef[2] * z[1] : 0.0); },
        HalfSpaceExterior{Vec{-coef[1], n == 2 ? -coef[2] : 1.0, n == 2 ? 1.0 : 0.0}, coef[0]}, false);
    rep.halfspace_defects.push_back(disagreement(e, plane, R));
  }

  if (tends_to_zero(rep.halfspace_defects, rep.tolerance, layer)) {
    rep.verdict = Verdict::half_space;
  } else {
    for (std::size_t d = 0; d < directions.size(); ++d) {
      if (tends_to_zero(rep.cylinder_defects[d], rep.tolerance, layer)) rep.split_directions.push_back(directions[d]);
    }
    if (!rep.split_directions.empty()) {
      rep.verdict = Verdict::cylinder_split;
    } else if (tends_to_zero(rep.cone_defects, rep.tolerance, layer)) {
      rep.verdict = Verdict::cone_detected;
    }
  }
  return rep;
}

}  // namespace nlmg
