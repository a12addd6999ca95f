#include "nlmg/field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlmg/errors.hpp"

namespace nlmg {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_box(const Box& b, const char* what) {
  if (b.dim < 1 || b.dim > kMaxDim) throw DomainError(std::string(what) + ": bad dimension");
  for (int a = 0; a < b.dim; ++a) {
    if (!std::isfinite(b.lo[a]) || !std::isfinite(b.hi[a]) || !(b.hi[a] > b.lo[a])) {
      throw DomainError(std::string(what) + ": empty or non-finite box");
    }
  }
}

}  // namespace

double Box::diameter() const {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += extent(a) * extent(a);
  return std::sqrt(s);
}

Vec Box::center() const {
  Vec c{};
  for (int a = 0; a < dim; ++a) c[a] = 0.5 * (lo[a] + hi[a]);
  return c;
}

bool Box::contains(const Vec& x, double slack) const {
  for (int a = 0; a < dim; ++a) {
    if (x[a] < lo[a] - slack || x[a] > hi[a] + slack) return false;
  }
  return true;
}

Box make_box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  if (lo.size() != hi.size() || lo.size() == 0 || lo.size() > kMaxDim) {
    throw DomainError("make_box: mismatched corner dimensions");
  }
  Box b;
  b.dim = static_cast<int>(lo.size());
  std::copy(lo.begin(), lo.end(), b.lo.begin());
  std::copy(hi.begin(), hi.end(), b.hi.begin());
  return b;
}

std::string exterior_name(const ExteriorModel& m) {
  return std::visit(overloaded{[](const AffineExterior&) { return std::string("affine"); },
                               [](const ConstantBeyondExterior&) { return std::string("constant_beyond"); },
                               [](const Homogeneous1Exterior&) { return std::string("homogeneous1"); }},
                    m);
}

// ---------------------------------------------------------------- GraphField

GraphField::GraphField(const FracParams& params, const Box& window, double spacing,
                       std::vector<double> values, ExteriorModel exterior, double seam_tolerance)
    : params_(make_params(params.n, params.alpha)),
      window_(window),
      h_(spacing),
      values_(std::move(values)),
      exterior_(std::move(exterior)) {
  check_box(window_, "GraphField window");
  if (window_.dim != params_.n) throw DomainError("GraphField: window dimension differs from n");
  if (!(h_ > 0.0) || !std::isfinite(h_)) throw DomainError("GraphField: spacing must be positive");
  std::size_t total = 1;
  for (int a = 0; a < params_.n; ++a) {
    const double steps = window_.extent(a) / h_;
    const double r = std::round(steps);
    if (std::abs(steps - r) > 1e-6 * std::max(1.0, r) || r < 1) {
      throw DomainError("GraphField: window extent is not a multiple of the spacing");
    }
    counts_[a] = static_cast<int>(r) + 1;
    total *= counts_[a];
  }
  if (values_.size() != total) {
    std::ostringstream os;
    os << "GraphField: expected " << total << " node values, got " << values_.size();
    throw DomainError(os.str());
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("GraphField: non-finite node value");
  }
  if (auto* a = std::get_if<AffineExterior>(&exterior_)) {
    for (int i = 0; i < params_.n; ++i) {
      if (!std::isfinite(a->gradient[i])) throw DomainError("Affine exterior: non-finite gradient");
    }
    if (!std::isfinite(a->offset)) throw DomainError("Affine exterior: non-finite offset");
  }
  if (auto* hm = std::get_if<Homogeneous1Exterior>(&exterior_)) {
    if (!window_.contains(hm->center)) {
      throw DomainError("Homogeneous1 exterior: window must contain the center");
    }
    if (std::isnan(hm->apex)) hm->apex = interpolate(hm->center);
  }
  seam_tol_ = seam_tolerance >= 0 ? seam_tolerance : 1e-6 * (1.0 + max_abs());
  check_seam();
}

GraphField GraphField::from_function(const FracParams& params, const Box& window, double spacing,
                                     const std::function<double(const Vec&)>& f,
                                     ExteriorModel exterior, double seam_tolerance) {
  check_box(window, "GraphField window");
  std::array<int, 2> counts{1, 1};
  for (int a = 0; a < window.dim; ++a) {
    counts[a] = static_cast<int>(std::round(window.extent(a) / spacing)) + 1;
  }
  std::vector<double> v;
  v.reserve(std::size_t(counts[0]) * counts[1]);
  for (int i = 0; i < counts[0]; ++i) {
    for (int j = 0; j < counts[1]; ++j) {
      Vec x{};
      x[0] = window.lo[0] + i * spacing;
      if (window.dim == 2) x[1] = window.lo[1] + j * spacing;
      v.push_back(f(x));
    }
  }
  return GraphField(params, window, spacing, std::move(v), std::move(exterior), seam_tolerance);
}

Index GraphField::unflat(std::size_t k) const {
  if (dim() == 1) return {static_cast<int>(k), 0};
  return {static_cast<int>(k / counts_[1]), static_cast<int>(k % counts_[1])};
}

bool GraphField::in_window(const Index& i) const {
  for (int a = 0; a < dim(); ++a) {
    if (i[a] < 0 || i[a] >= counts_[a]) return false;
  }
  return true;
}

Vec GraphField::node(const Index& i) const {
  Vec x{};
  for (int a = 0; a < dim(); ++a) x[a] = window_.lo[a] + i[a] * h_;
  return x;
}

int GraphField::margin(const Index& i) const {
  int m = std::numeric_limits<int>::max();
  for (int a = 0; a < dim(); ++a) m = std::min({m, i[a], counts_[a] - 1 - i[a]});
  return m;
}

double GraphField::lattice_value(const Index& i) const {
  if (in_window(i)) return values_[flat(i)];
  return exterior_value(node(i));
}

double GraphField::sample(const Vec& x) const {
  if (window_.contains(x, 1e-12 * h_)) return interpolate(x);
  return exterior_value(x);
}

double GraphField::interpolate(const Vec& x) const {
  std::array<int, 2> i0{0, 0};
  std::array<double, 2> w{0.0, 0.0};
  for (int a = 0; a < dim(); ++a) {
    const double f = std::clamp((x[a] - window_.lo[a]) / h_, 0.0, double(counts_[a] - 1));
    int i = static_cast<int>(std::floor(f));
    i = std::clamp(i, 0, counts_[a] - 2);
    i0[a] = i;
    w[a] = f - i;
  }
  if (dim() == 1) {
    const double a = values_[i0[0]], b = values_[i0[0] + 1];
    if (w[0] == 0.0) return a;
    return (1.0 - w[0]) * a + w[0] * b;
  }
  auto at = [&](int di, int dj) { return values_[flat({i0[0] + di, i0[1] + dj})]; };
  const double r0 = w[1] == 0.0 ? at(0, 0) : (1.0 - w[1]) * at(0, 0) + w[1] * at(0, 1);
  const double r1 = w[1] == 0.0 ? at(1, 0) : (1.0 - w[1]) * at(1, 0) + w[1] * at(1, 1);
  if (w[0] == 0.0) return r0;
  return (1.0 - w[0]) * r0 + w[0] * r1;
}

// Point where the ray c -> x leaves the window; t = |x-c| / |b-c|.
double GraphField::boundary_value_along_ray(const Vec& c, const Vec& x, double& t) const {
  double s = std::numeric_limits<double>::infinity();
  for (int a = 0; a < dim(); ++a) {
    const double d = x[a] - c[a];
    if (d > 0) s = std::min(s, (window_.hi[a] - c[a]) / d);
    if (d < 0) s = std::min(s, (window_.lo[a] - c[a]) / d);
  }
  Vec b = c;
  for (int a = 0; a < dim(); ++a) b[a] = std::clamp(c[a] + s * (x[a] - c[a]), window_.lo[a], window_.hi[a]);
  t = 1.0 / s;
  return interpolate(b);
}

double GraphField::exterior_value(const Vec& x) const {
  return std::visit(
      overloaded{[&](const AffineExterior& a) {
                   double v = a.offset;
                   for (int i = 0; i < dim(); ++i) v += a.gradient[i] * x[i];
                   return v;
                 },
                 [&](const ConstantBeyondExterior&) {
                   Vec c{};
                   for (int i = 0; i < dim(); ++i) c[i] = std::clamp(x[i], window_.lo[i], window_.hi[i]);
                   return interpolate(c);
                 },
                 [&](const Homogeneous1Exterior& hm) {
                   bool at_center = true;
                   for (int i = 0; i < dim(); ++i) at_center = at_center && x[i] == hm.center[i];
                   if (at_center) return hm.apex;
                   double t = 1.0;
                   const double ub = boundary_value_along_ray(hm.center, x, t);
                   return hm.apex + t * (ub - hm.apex);
                 }},
      exterior_);
}

double GraphField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

GraphField GraphField::with_values(std::vector<double> values) const {
  ExteriorModel ext = exterior_;
  return GraphField(params_, window_, h_, std::move(values), std::move(ext), seam_tol_);
}

void GraphField::check_seam() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    const Index i = unflat(k);
    if (margin(i) != 0) continue;
    worst = std::max(worst, std::abs(exterior_value(node(i)) - values_[k]));
  }
  if (worst > seam_tol_) {
    std::ostringstream os;
    os << "GraphField: exterior model (" << exterior_name(exterior_) << ") disagrees with boundary nodes by "
       << worst << " > seam tolerance " << seam_tol_;
    throw DomainError(os.str());
  }
}

// ------------------------------------------------------------------ VoxelSet

VoxelSet::VoxelSet(const FracParams& params, const Box& box, std::array<int, kMaxDim> resolution,
                   std::vector<std::uint8_t> occupancy, SetExterior exterior, bool complement,
                   double seam_tolerance)
    : params_(make_params(params.n, params.alpha)),
      box_(box),
      res_(resolution),
      occ_(std::move(occupancy)),
      exterior_(std::move(exterior)),
      complement_(complement) {
  check_box(box_, "VoxelSet box");
  if (box_.dim != params_.ambient_dim()) throw DomainError("VoxelSet: box dimension must be n+1");
  std::size_t total = 1;
  for (int a = 0; a < dim(); ++a) {
    if (res_[a] < 1) throw ParameterError("VoxelSet: resolution must be positive");
    total *= res_[a];
  }
  for (int a = dim(); a < kMaxDim; ++a) res_[a] = 1;
  dx_ = box_.extent(0) / res_[0];
  for (int a = 1; a < dim(); ++a) {
    if (std::abs(box_.extent(a) / res_[a] - dx_) > 1e-9 * dx_) {
      throw DomainError("VoxelSet: voxels must be cubic");
    }
  }
  if (occ_.size() != total) throw DomainError("VoxelSet: occupancy size does not match resolution");
  for (auto v : occ_) {
    if (v > 1) throw DomainError("VoxelSet: occupancy values must be 0 or 1");
  }
  if (auto* hs = std::get_if<HalfSpaceExterior>(&exterior_)) {
    double nn = 0.0;
    for (int a = 0; a < dim(); ++a) nn += hs->normal[a] * hs->normal[a];
    if (!(nn > 0.0) || !std::isfinite(hs->offset)) throw DomainError("HalfSpace exterior: bad normal");
  }
  if (auto* sg = std::get_if<SubgraphExterior>(&exterior_)) {
    if (!sg->graph || sg->graph->dim() != params_.n) {
      throw DomainError("SubgraphOf exterior: graph missing or of wrong dimension");
    }
  }
  if (auto* c = std::get_if<ConeExterior>(&exterior_)) {
    if (!box_.contains(c->apex)) throw DomainError("ConeFrom exterior: apex must lie in the box");
  }
  check_seam(seam_tolerance);
}

double VoxelSet::voxel_volume() const { return std::pow(dx_, dim()); }

std::array<int, kMaxDim> VoxelSet::unflat(std::size_t k) const {
  std::array<int, kMaxDim> v{0, 0, 0};
  for (int a = dim() - 1; a >= 0; --a) {
    v[a] = static_cast<int>(k % res_[a]);
    k /= res_[a];
  }
  return v;
}

bool VoxelSet::valid(const std::array<int, kMaxDim>& v) const {
  for (int a = 0; a < dim(); ++a) {
    if (v[a] < 0 || v[a] >= res_[a]) return false;
  }
  return true;
}

Vec VoxelSet::voxel_center(const std::array<int, kMaxDim>& v) const {
  Vec x{};
  for (int a = 0; a < dim(); ++a) x[a] = box_.lo[a] + (v[a] + 0.5) * dx_;
  return x;
}

std::array<int, kMaxDim> VoxelSet::voxel_of(const Vec& x) const {
  std::array<int, kMaxDim> v{0, 0, 0};
  for (int a = 0; a < dim(); ++a) {
    v[a] = std::clamp(static_cast<int>(std::floor((x[a] - box_.lo[a]) / dx_)), 0, res_[a] - 1);
  }
  return v;
}

Membership VoxelSet::member(const Vec& x) const {
  const bool in = box_.contains(x) ? occupied(voxel_of(x)) : exterior_contains(x);
  return in ? Membership::inside : Membership::outside;
}

bool VoxelSet::exterior_contains(const Vec& x) const {
  const int n = params_.n;
  return std::visit(
      overloaded{[&](const HalfSpaceExterior& hs) {
                   double s = 0.0;
                   for (int a = 0; a < dim(); ++a) s += hs.normal[a] * x[a];
                   return (s < hs.offset) != complement_;
                 },
                 [&](const SubgraphExterior& sg) {
                   Vec xp{};
                   for (int a = 0; a < n; ++a) xp[a] = x[a];
                   return (x[n] < sg.graph->sample(xp)) != complement_;
                 },
                 [&](const ConeExterior& c) {
                   double s = 1.0;
                   for (int a = 0; a < dim(); ++a) {
                     const double d = x[a] - c.apex[a];
                     if (d > 0) s = std::min(s, (box_.hi[a] - c.apex[a]) / d);
                     if (d < 0) s = std::min(s, (box_.lo[a] - c.apex[a]) / d);
                   }
                   Vec b{};
                   for (int a = 0; a < dim(); ++a) b[a] = c.apex[a] + s * (x[a] - c.apex[a]);
                   return occupied(voxel_of(b));
                 },
                 [&](const EmptyExterior&) { return complement_; }},
      exterior_);
}

VoxelSet VoxelSet::complement() const {
  std::vector<std::uint8_t> occ(occ_.size());
  for (std::size_t k = 0; k < occ_.size(); ++k) occ[k] = occ_[k] ? 0 : 1;
  return VoxelSet(params_, box_, res_, std::move(occ), exterior_, !complement_, 1.0);
}

std::size_t VoxelSet::occupied_count() const {
  return static_cast<std::size_t>(std::count(occ_.begin(), occ_.end(), std::uint8_t{1}));
}

void VoxelSet::check_seam(double tol) const {
  std::size_t layer = 0, bad = 0;
  for (std::size_t k = 0; k < occ_.size(); ++k) {
    const auto v = unflat(k);
    bool edge = false;
    for (int a = 0; a < dim(); ++a) edge = edge || v[a] == 0 || v[a] == res_[a] - 1;
    if (!edge) continue;
    ++layer;
    if ((occ_[k] != 0) != exterior_contains(voxel_center(v))) ++bad;
  }
  if (static_cast<double>(bad) > tol * static_cast<double>(layer)) {
    std::ostringstream os;
    os << "VoxelSet: exterior model disagrees with " << bad << " of " << layer
       << " boundary-layer voxels (seam tolerance " << tol << ")";
    throw DomainError(os.str());
  }
}

VoxelSet voxelize(const FracParams& params, const Box& box, std::array<int, kMaxDim> resolution,
                  const std::function<bool(const Vec&)>& inside, SetExterior exterior, bool complement) {
  check_box(box, "voxelize");
  std::size_t total = 1;
  for (int a = 0; a < box.dim; ++a) {
    if (resolution[a] < 1) throw ParameterError("voxelize: resolution must be positive");
    total *= resolution[a];
  }
  const double dx = box.extent(0) / resolution[0];
  std::vector<std::uint8_t> occ(total);
  std::array<int, kMaxDim> v{0, 0, 0};
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t r = k;
    for (int a = box.dim - 1; a >= 0; --a) {
      v[a] = static_cast<int>(r % resolution[a]);
      r /= resolution[a];
    }
    Vec x{};
    for (int a = 0; a < box.dim; ++a) x[a] = box.lo[a] + (v[a] + 0.5) * dx;
    occ[k] = inside(x) ? 1 : 0;
  }
  return VoxelSet(params, box, resolution, std::move(occ), std::move(exterior), complement);
}

VoxelSet subgraph_of(const GraphField& u, const Box& box, std::array<int, kMaxDim> resolution) {
  const int n = u.dim();
  if (box.dim != n + 1) throw DomainError("subgraph_of: box must have dimension n+1");
  check_box(box, "subgraph_of");
  std::size_t columns = 1;
  for (int a = 0; a <= n; ++a) {
    if (resolution[a] < 1) throw ParameterError("subgraph_of: resolution must be positive");
    if (a < n) columns *= resolution[a];
  }
  const int nz = resolution[n];
  const double dx = box.extent(0) / resolution[0];
  std::vector<std::uint8_t> occ(columns * nz);
  for (std::size_t c = 0; c < columns; ++c) {
    Vec xp{};
    std::size_t r = c;
    for (int a = n - 1; a >= 0; --a) {
      xp[a] = box.lo[a] + (static_cast<double>(r % resolution[a]) + 0.5) * dx;
      r /= resolution[a];
    }
    const double height = u.sample(xp);
    for (int k = 0; k < nz; ++k) {
      const double z = box.lo[n] + (k + 0.5) * dx;
      occ[c * nz + k] = z < height ? 1 : 0;
    }
  }
  auto g = std::make_shared<const GraphField>(u);
  return VoxelSet(u.params(), box, resolution, std::move(occ), SubgraphExterior{g});
}

double sample(const GraphField& u, const Vec& x) { return u.sample(x); }
Membership member(const VoxelSet& e, const Vec& x) { return e.member(x); }

void validate(const QuadratureSpec& q) {
  if (!(q.far_radius >= 0.0) || !std::isfinite(q.far_radius)) {
    throw ParameterError("QuadratureSpec: far_radius must be finite and nonnegative");
  }
  if (!(q.tail_budget > 0.0)) throw ParameterError("QuadratureSpec: tail_budget must be positive");
  if (!(q.inner_tolerance > 0.0)) throw ParameterError("QuadratureSpec: inner_tolerance must be positive");
}

}  // namespace nlmg
