#include <algorithm>
#include <cmath>
#include <Eigen/Dense>
#include <limits>
#include <numbers>

#include "nlmg/curvature.hpp"
#include "nlmg/errors.hpp"
#include "nlmg/quadrature.hpp"
#include "exterior_rays.hpp"

namespace nlmg {
namespace {

using detail::exterior_part_adaptive;

using Voxel = std::array<int, kMaxDim>;

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kNearShell = 2;
constexpr double kExteriorTol = 1e-6;

struct Face {
  Vec center{};
  Voxel low{};  // voxel on the low side along `axis`
  int axis = 0;
};

template <class Visit>
void for_each_voxel(const Voxel& lo, const Voxel& hi, int dim, Visit&& visit) {
  Voxel v = lo;
  for (;;) {
    visit(v);
    int a = dim - 1;
    while (a >= 0 && ++v[a] > hi[a]) {
      v[a] = lo[a];
      --a;
    }
    if (a < 0) return;
  }
}

Face nearest_face(const VoxelSet& e, const Vec& x) {
  const int N = e.dim();
  const double dx = e.voxel_size();
  const Voxel v0 = e.voxel_of(x);
  Voxel lo{}, hi{};
  for (int a = 0; a < N; ++a) {
    lo[a] = std::max(0, v0[a] - 2);
    hi[a] = std::min(e.resolution()[a] - 1, v0[a] + 2);
  }
  Face best;
  double best_d = std::numeric_limits<double>::infinity();
  for_each_voxel(lo, hi, N, [&](const Voxel& v) {
    for (int a = 0; a < N; ++a) {
      Voxel w = v;
      if (++w[a] >= e.resolution()[a]) continue;
      if (e.occupied(v) == e.occupied(w)) continue;
      Vec c = e.voxel_center(v);
      c[a] += 0.5 * dx;
      double d2 = 0.0;
      for (int b = 0; b < N; ++b) d2 += (c[b] - x[b]) * (c[b] - x[b]);
      if (d2 < best_d) {
        best_d = d2;
        best = {c, v, a};
      }
    }
  });
  if (!(std::sqrt(best_d) <= dx * (0.5 + 0.5 * std::sqrt(double(N))))) {
    throw DomainError("set_curvature_at: point is not within a voxel of the boundary");
  }
  return best;
}

}  // namespace

Vec snap_to_boundary(const VoxelSet& e, const Vec& x) { return nearest_face(e, x).center; }

namespace {

// Inner part (everything inside the voxel box) of the set curvature at a point.
struct InnerPart {
  bool ok = false;
  double value = 0.0;
  double err = 0.0;       // midpoint and quadrature estimates
  double abs_sum = 0.0;
  Vec point{};
  int degree = 0;
  int block = 0;
};

// Paired voxel sum about a face center: voxel c pairs with its point reflection.
// The two nearest shells are too close for the midpoint rule and count fully as error.
InnerPart paired_voxels(const VoxelSet& e, const Face& f) {
  const int N = e.dim();
  const Vec& xs = f.center;
  const double dx = e.voxel_size();
  const double s = N + e.params().alpha;
  const double vol = std::pow(dx, N);
  const auto& res = e.resolution();

  Voxel slo{}, shi{};
  for (int a = 0; a < N; ++a) {
    const int v = f.low[a];
    const int m = a == f.axis ? std::min(v + 1, res[a] - 1 - v) : std::min(v, res[a] - 1 - v);
    slo[a] = a == f.axis ? v - m + 1 : v - m;
    shi[a] = v + m;
  }
  auto reflect = [&](const Voxel& c) {
    Voxel r{};
    for (int a = 0; a < N; ++a) r[a] = (a == f.axis ? 2 * f.low[a] + 1 : 2 * f.low[a]) - c[a];
    return r;
  };
  auto shell = [&](const Voxel& c) {
    int o = 0;
    for (int a = 0; a < N; ++a) {
      const int d = a == f.axis ? (c[a] > f.low[a] ? c[a] - f.low[a] - 1 : f.low[a] - c[a])
                                : std::abs(c[a] - f.low[a]);
      o = std::max(o, d);
    }
    return o;
  };
  auto kernel_at = [&](const Voxel& c, double& rho) {
    const Vec y = e.voxel_center(c);
    double r2 = 0.0;
    for (int a = 0; a < N; ++a) r2 += (y[a] - xs[a]) * (y[a] - xs[a]);
    rho = std::sqrt(r2);
    return std::pow(rho, -s);
  };
  auto sigma = [&](const Voxel& c) { return e.occupied(c) ? -1.0 : 1.0; };
  const double midpoint = s * (s + 1.0) / 24.0;

  InnerPart out;
  out.ok = true;
  out.point = xs;
  CompensatedSum sum;
  Voxel plo = slo;
  plo[f.axis] = f.low[f.axis] + 1;
  for_each_voxel(plo, shi, N, [&](const Voxel& c) {
    const double net = sigma(c) + sigma(reflect(c));
    if (net == 0.0) return;
    double rho;
    const double t = net * vol * kernel_at(c, rho);
    sum.add(t);
    out.abs_sum += std::abs(t);
    out.err += shell(c) <= kNearShell ? std::abs(t) : midpoint * (dx / rho) * (dx / rho) * std::abs(t);
  });
  Voxel blo{}, bhi{};
  for (int a = 0; a < N; ++a) bhi[a] = res[a] - 1;
  for_each_voxel(blo, bhi, N, [&](const Voxel& c) {
    for (int a = 0; a < N; ++a) {
      if (c[a] < slo[a] || c[a] > shi[a]) {
        double rho;
        const double t = sigma(c) * vol * kernel_at(c, rho);
        sum.add(t);
        out.abs_sum += std::abs(t);
        out.err += midpoint * (dx / rho) * (dx / rho) * std::abs(t);
        return;
      }
    }
  });
  out.value = sum.value();
  return out;
}

constexpr int kFitDegree = 6;
constexpr double kMaxResidual = 0.4;
// Rounding the heights to whole voxels alone leaves an rms residual near 1/sqrt(12).
constexpr double kNoiseResidual = 0.35;

std::vector<std::array<int, 2>> monomials(int nlat, int degree) {
  std::vector<std::array<int, 2>> m;
  for (int d = 0; d <= degree; ++d) {
    if (nlat == 1) {
      m.push_back({d, 0});
    } else {
      for (int i = d; i >= 0; --i) m.push_back({i, d - i});
    }
  }
  return m;
}

double monomial(const std::array<int, 2>& m, double e0, double e1) {
  double v = 1.0;
  for (int i = 0; i < m[0]; ++i) v *= e0;
  for (int i = 0; i < m[1]; ++i) v *= e1;
  return v;
}

// Near field from a polynomial reconstruction of the boundary as a graph over the
// lateral axes. Inside a block of (2M+1)^n columns and a slab of rows around the
// point, the boundary is replaced by the least-squares polynomial through the column
// heights, and each column integral is done in closed form through G; the rest of
// the box is summed voxel by voxel.
// The fit degree is the lowest one whose residual is at the rounding level, unless
// `degree` forces one.
InnerPart graph_patch(const VoxelSet& e, const Kernel& K, int axis, const Voxel& col, int zrow, bool face_row,
                      int M, double slope, int degree = -1) {
  InnerPart out;
  const int N = e.dim();
  const int n = N - 1;
  const double dx = e.voxel_size();
  const double alpha = e.params().alpha;
  const double p = N + alpha;
  const auto& res = e.resolution();
  std::array<int, 2> lat{0, 0};
  for (int a = 0, m = 0; a < N; ++a) {
    if (a != axis) lat[m++] = a;
  }
  for (int k = 0; k < n; ++k) {
    if (col[lat[k]] - M < 0 || col[lat[k]] + M > res[lat[k]] - 1) return out;
  }
  const int kv = static_cast<int>(std::ceil(M * (1.5 * slope + 0.5))) + 4;
  const int row_lo = std::max(0, face_row ? zrow - kv + 1 : zrow - kv);
  const int row_hi = std::min(res[axis] - 1, zrow + kv);
  const int rows = row_hi - row_lo + 1;

  // Column heights, in voxels above the slab bottom.
  const int side = 2 * M + 1;
  const int ncols = n == 1 ? side : side * side;
  int max_degree = kFitDegree;
  while (max_degree > 0 && ncols < 2 * static_cast<int>(monomials(n, max_degree).size())) --max_degree;
  if (max_degree < 1 || degree > max_degree) return out;
  const auto mono = monomials(n, max_degree);
  Eigen::MatrixXd A(ncols, mono.size());
  Eigen::VectorXd z(ncols);
  int orient = 0;
  for (int c = 0; c < ncols; ++c) {
    const int k0 = c % side - M, k1 = n == 1 ? 0 : c / side - M;
    Voxel v = col;
    v[lat[0]] += k0;
    if (n == 2) v[lat[1]] += k1;
    v[axis] = row_lo;
    const bool bottom = e.occupied(v);
    int same = 0, changes = 0;
    bool prev = bottom;
    for (int r = row_lo; r <= row_hi; ++r) {
      v[axis] = r;
      const bool cur = e.occupied(v);
      if (cur != prev) ++changes;
      if (changes == 0) ++same;
      prev = cur;
    }
    if (changes != 1) return out;
    const int o = bottom ? 1 : -1;
    if (orient != 0 && o != orient) return out;
    orient = o;
    z[c] = same;
    for (std::size_t j = 0; j < mono.size(); ++j) A(c, j) = monomial(mono[j], double(k0) / M, double(k1) / M);
  }
  Eigen::VectorXd coef;
  double rms = 0.0;
  for (int d = degree > 0 ? degree : 1; d <= max_degree; ++d) {
    const auto used = static_cast<Eigen::Index>(monomials(n, d).size());
    const Eigen::VectorXd c = A.leftCols(used).colPivHouseholderQr().solve(z);
    coef = Eigen::VectorXd::Zero(A.cols());
    coef.head(used) = c;
    rms = std::sqrt((A.leftCols(used) * c - z).squaredNorm() / ncols);
    out.degree = d;
    if (degree > 0 || rms <= kNoiseResidual) break;
  }
  if (!(rms <= kMaxResidual)) return out;
  const double z0 = coef[0];
  if (!(z0 >= 0.5 && z0 <= rows - 0.5)) return out;

  Vec x0 = e.voxel_center(col);
  x0[axis] = e.box().lo[axis] + (row_lo + z0) * dx;
  const double hi = (rows - z0) * dx, lo = -z0 * dx;
  // Boundary height above x0 at a lateral offset (physical units).
  auto delta = [&](double d0, double d1) {
    const double e0 = d0 / (dx * M), e1 = d1 / (dx * M);
    double v = 0.0;
    for (std::size_t j = 1; j < mono.size(); ++j) v += coef[j] * monomial(mono[j], e0, e1);
    return v * dx;
  };
  auto F = [&](double t, double rho) { return std::pow(rho, 1.0 - p) * K.G(t / rho); };
  auto column_pair = [&](double rho, double w0, double w1) {
    const double dp = std::clamp(delta(rho * w0, rho * w1), lo, hi);
    const double dm = std::clamp(delta(-rho * w0, -rho * w1), lo, hi);
    return 2.0 * (F(hi, rho) + F(lo, rho)) - 2.0 * (F(dp, rho) + F(dm, rho));
  };
  const double q = 1.0 / (1.0 - alpha);
  auto radial = [&](double rmax, double w0, double w1, const GaussRule& g) {
    static constexpr double kBreaks[] = {0.0, 0.125, 0.25, 0.5, 1.0};
    double acc = 0.0;
    for (int pn = 0; pn < 4; ++pn) {
      const double mid = 0.5 * (kBreaks[pn] + kBreaks[pn + 1]), half = 0.5 * (kBreaks[pn + 1] - kBreaks[pn]);
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double u = mid + half * g.nodes[i];
        const double rho = rmax * std::pow(u, q);
        const double jac = rmax * q * std::pow(u, q - 1.0) * half * g.weights[i];
        acc += jac * std::pow(rho, n - 1) * column_pair(rho, w0, w1);
      }
    }
    return acc;
  };
  const double half_width = (M + 0.5) * dx;
  auto block = [&](const GaussRule& gr, const GaussRule& ga) {
    if (n == 1) return radial(half_width, 1.0, 0.0, gr);
    static constexpr double kAngles[] = {0.0, 0.25, 0.75, 1.0};
    double acc = 0.0;
    for (int pn = 0; pn < 3; ++pn) {
      const double a0 = kAngles[pn] * std::numbers::pi, a1 = kAngles[pn + 1] * std::numbers::pi;
      const double mid = 0.5 * (a0 + a1), half = 0.5 * (a1 - a0);
      for (std::size_t i = 0; i < ga.nodes.size(); ++i) {
        const double th = mid + half * ga.nodes[i];
        const double c = std::cos(th), sn = std::sin(th);
        const double rmax = half_width / std::max(std::abs(c), std::abs(sn));
        acc += half * ga.weights[i] * radial(rmax, c, sn, gr);
      }
    }
    return acc;
  };
  const double near = orient * block(gauss_legendre(8), gauss_legendre(12));
  const double near_c = orient * block(gauss_legendre(4), gauss_legendre(6));

  // Voxels outside the block.
  const double s = N + alpha;
  const double vol = std::pow(dx, N);
  const double midpoint = s * (s + 1.0) / 24.0;
  CompensatedSum sum;
  sum.add(near);
  double err = std::abs(near - near_c);
  double abs_sum = std::abs(near);
  Voxel blo{}, bhi{};
  for (int a = 0; a < N; ++a) bhi[a] = res[a] - 1;
  for_each_voxel(blo, bhi, N, [&](const Voxel& c) {
    bool in_block = c[axis] >= row_lo && c[axis] <= row_hi;
    for (int k = 0; k < n && in_block; ++k) in_block = std::abs(c[lat[k]] - col[lat[k]]) <= M;
    if (in_block) return;
    const Vec y = e.voxel_center(c);
    double r2 = 0.0;
    for (int a = 0; a < N; ++a) r2 += (y[a] - x0[a]) * (y[a] - x0[a]);
    const double rho = std::sqrt(r2);
    const double t = (e.occupied(c) ? -vol : vol) * std::pow(rho, -s);
    sum.add(t);
    abs_sum += std::abs(t);
    err += midpoint * (dx / rho) * (dx / rho) * std::abs(t);
  });
  out.ok = true;
  out.value = sum.value();
  out.err = err;
  out.abs_sum = abs_sum;
  out.point = x0;
  out.block = M;
  return out;
}

}  // namespace

Estimate set_curvature_at(const VoxelSet& e, const Vec& x, const QuadratureSpec& q) {
  validate(q);
  const int N = e.dim();
  for (int a = 0; a < N; ++a) {
    if (!std::isfinite(x[a])) throw DomainError("set_curvature_at: non-finite point");
  }
  const Face f = nearest_face(e, x);
  const double alpha = e.params().alpha;
  const auto& res = e.resolution();

  // Outward normal from the first moment of (outside - inside) around the face.
  Vec m{};
  {
    Voxel lo{}, hi{};
    for (int a = 0; a < N; ++a) {
      lo[a] = std::max(0, f.low[a] - 4);
      hi[a] = std::min(res[a] - 1, f.low[a] + 4);
    }
    for_each_voxel(lo, hi, N, [&](const Voxel& c) {
      const Vec y = e.voxel_center(c);
      const double sg = e.occupied(c) ? -1.0 : 1.0;
      for (int a = 0; a < N; ++a) m[a] += sg * (y[a] - f.center[a]);
    });
  }
  int axis = 0;
  for (int a = 1; a < N; ++a) {
    if (std::abs(m[a]) > std::abs(m[axis])) axis = a;
  }
  double lateral = 0.0;
  for (int a = 0; a < N; ++a) {
    if (a != axis) lateral += m[a] * m[a];
  }
  const double slope = m[axis] != 0.0 ? std::sqrt(lateral) / std::abs(m[axis]) : 1e9;

  // Growing reconstruction blocks; the last two accepted ones give the estimate and
  // its reconstruction error.
  const Kernel& K = kernel_for(e.params());
  static constexpr int kBlocks[] = {3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128};
  const int max_block = N == 2 ? 128 : 48;
  std::vector<InnerPart> accepted;
  if (slope < 4.0) {
    for (int M : kBlocks) {
      if (M > max_block) break;
      InnerPart part = graph_patch(e, K, axis, f.low, f.low[axis], axis == f.axis, M, slope);
      if (!part.ok) {
        if (accepted.empty()) continue;
        break;
      }
      accepted.push_back(part);
    }
  }
  if (accepted.size() == 1) {
    // A lone block is checked against a neighbouring fit degree instead.
    const InnerPart& a = accepted[0];
    for (int d : {a.degree + 1, a.degree - 1}) {
      if (d < 1) continue;
      InnerPart alt = graph_patch(e, K, axis, f.low, f.low[axis], axis == f.axis, a.block, slope, d);
      if (!alt.ok) continue;
      accepted.insert(accepted.begin(), alt);
      break;
    }
  }
  InnerPart inner;
  double err_rec = 0.0;
  // Lateral radius beyond which the boundary is taken from the voxels as they are.
  double resolved = 0.0;
  if (accepted.size() >= 2) {
    inner = accepted.back();
    for (std::size_t i = accepted.size() >= 3 ? accepted.size() - 3 : 0; i + 1 < accepted.size(); ++i) {
      err_rec = std::max(err_rec, std::abs(inner.value - accepted[i].value));
    }
    resolved = (inner.block + 0.5) * e.voxel_size();
  } else {
    inner = paired_voxels(e, f);
    resolved = (kNearShell + 0.5) * e.voxel_size();
  }
  // Rounded voxels misplace the boundary by up to (1 + slope) / 2 voxels per column;
  // the flipped sliver beyond `resolved` is bounded with lateral distances.
  const double thickness = 0.5 * (1.0 + std::min(slope, 1.0)) * e.voxel_size();
  const double err_dig = 2.0 * thickness * sphere_area(N - 1) * std::pow(resolved, -1.0 - alpha) / (1.0 + alpha);

  // Exterior: rays beyond the box, primary and coarse angular rules.
  const double area = sphere_area(N);
  const double R = std::max(4.0 * e.box().diameter(), std::pow(area / (alpha * q.tail_budget), 1.0 / alpha));
  if (!std::isfinite(R) || R > 1e150) throw BudgetError("set_curvature_at: tail budget unattainable", R);
  bool truncated = false;
  double ext_err = 0.0;
  const double ext_p = exterior_part_adaptive(e, inner.point, R, kExteriorTol, truncated, ext_err);
  const double tail = truncated ? area * std::pow(R, -alpha) / alpha : 0.0;

  Estimate out;
  out.value = inner.value + ext_p;
  out.err = inner.err + err_rec + err_dig + ext_err + tail +
            3.0 * kEps * (inner.abs_sum + std::abs(ext_p));
  return out;
}

ConsistencyReport graph_set_consistency(const GraphField& u, const Vec& x, const QuadratureSpec& q,
                                        int voxels_per_cell) {
  if (voxels_per_cell < 1) throw ParameterError("graph_set_consistency: voxels_per_cell must be >= 1");
  const int n = u.dim();
  const double h = u.spacing();
  const double dx = h / voxels_per_cell;
  ConsistencyReport rep;
  rep.voxel_size = dx;
  rep.graph = curvature_at(u, x, q);

  const double ux = u.sample(x);
  double lo_u = ux, hi_u = ux, span = 0.0;
  for (double v : u.values()) {
    lo_u = std::min(lo_u, v);
    hi_u = std::max(hi_u, v);
  }
  Box box;
  box.dim = n + 1;
  std::array<int, kMaxDim> res{1, 1, 1};
  for (int a = 0; a < n; ++a) {
    box.lo[a] = u.window().lo[a] - 0.5 * dx;
    box.hi[a] = u.window().hi[a] + 0.5 * dx;
    res[a] = (u.count(a) - 1) * voxels_per_cell + 1;
    span = std::max(span, u.window().extent(a));
  }
  const int below = static_cast<int>(std::ceil(std::max(span, ux - lo_u + 2.0 * dx) / dx));
  const int above = static_cast<int>(std::ceil(std::max(span, hi_u - ux + 2.0 * dx) / dx));
  box.lo[n] = ux - below * dx;
  box.hi[n] = ux + above * dx;
  res[n] = below + above;
  const VoxelSet e = subgraph_of(u, box, res);
  Vec xs = x;
  xs[n] = ux;
  rep.set = set_curvature_at(e, xs, q);
  rep.defect = std::abs(rep.set.value - rep.graph.value);
  rep.err = rep.set.err + rep.graph.err;
  return rep;
}

}  // namespace nlmg
