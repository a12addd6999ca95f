#include "nlmg/curvature.hpp"

#include <algorithm>
#include <cmath>

#include "nlmg/errors.hpp"
#include "nlmg/io.hpp"
#include "nlmg/parallel.hpp"
#include "nlmg/quadrature.hpp"

namespace nlmg {

double CurvatureField::max_abs_value() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double CurvatureField::max_error() const {
  double m = 0.0;
  for (double v : error_bounds) m = std::max(m, v);
  return m;
}

std::string CurvatureField::to_csv() const {
  std::string out = base && base->dim() == 2 ? "x1,x2,value,err\n" : "x1,value,err\n";
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Vec x = base->node(nodes[k]);
    out += format_double(x[0]);
    if (base->dim() == 2) out += "," + format_double(x[1]);
    out += "," + format_double(values[k]) + "," + format_double(error_bounds[k]) + "\n";
  }
  return out;
}

Estimate curvature_at(const GraphField& u, const Vec& x, const QuadratureSpec& q) {
  for (int a = 0; a < u.dim(); ++a) {
    if (!std::isfinite(x[a])) throw DomainError("curvature_at: non-finite point");
  }
  return graph_curvature_at(u, x, q);
}

CurvatureField curvature_field(const GraphField& u, const QuadratureSpec& q) {
  const GraphOperator op(u, q);
  const std::vector<double> ext = op.extend();
  CurvatureField out;
  out.base = &u;
  for (std::size_t k = 0; k < u.node_count(); ++k) {
    const Index i = u.unflat(k);
    if (u.margin(i) >= 2) out.nodes.push_back(i);
  }
  out.values.resize(out.nodes.size());
  out.error_bounds.resize(out.nodes.size());
  parallel_for(out.nodes.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const Estimate c = op.curvature(ext, out.nodes[k]);
      out.values[k] = c.value;
      out.error_bounds[k] = c.err;
    }
  });
  return out;
}

Estimate weak_pairing(const GraphOperator& op, const std::vector<double>& ext, const std::vector<double>& v) {
  const GraphField& u = op.field();
  if (v.size() != u.node_count()) throw DomainError("weak_pairing: test function has the wrong size");
  std::vector<std::size_t> support;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] == 0.0) continue;
    if (u.margin(u.unflat(k)) < 2) {
      throw DomainError("weak_pairing: test function is not compactly supported in the window interior");
    }
    support.push_back(k);
  }
  std::vector<Estimate> parts(support.size());
  parallel_for(support.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) parts[i] = op.curvature(ext, u.unflat(support[i]));
  });
  const double hn = std::pow(u.spacing(), u.dim());
  CompensatedSum s;
  double err = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    s.add(hn * v[support[i]] * parts[i].value);
    err += hn * std::abs(v[support[i]]) * parts[i].err;
  }
  return {s.value(), err};
}

Estimate weak_pairing(const GraphField& u, const GraphField& v, const QuadratureSpec& q) {
  if (v.dim() != u.dim() || v.spacing() != u.spacing() || v.window().lo != u.window().lo ||
      v.window().hi != u.window().hi) {
    throw DomainError("weak_pairing: test function must live on the grid of u");
  }
  const auto* zero = std::get_if<AffineExterior>(&v.exterior());
  bool vanishes = zero && zero->offset == 0.0;
  for (int a = 0; vanishes && a < u.dim(); ++a) vanishes = zero->gradient[a] == 0.0;
  if (!vanishes) throw DomainError("weak_pairing: test function must vanish outside the window");
  const GraphOperator op(u, q);
  return weak_pairing(op, op.extend(), v.values());
}

}  // namespace nlmg
