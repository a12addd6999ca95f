#include "nlmg/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <stdexcept>

namespace nlmg {
namespace {

template <int N>
GaussRule make_rule() {
  using Rule = boost::math::quadrature::gauss<double, N>;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  GaussRule r;
  // Boost stores the non-negative half; index 0 is the centre node for odd N.
  for (std::size_t i = x.size(); i-- > 0;) {
    if (x[i] == 0.0) continue;
    r.nodes.push_back(-x[i]);
    r.weights.push_back(w[i]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.nodes.push_back(x[i]);
    r.weights.push_back(w[i]);
  }
  return r;
}

}  // namespace

const GaussRule& gauss_legendre(int points) {
  static const GaussRule r2 = make_rule<2>(), r3 = make_rule<3>(), r4 = make_rule<4>(),
                         r5 = make_rule<5>(), r6 = make_rule<6>(), r8 = make_rule<8>(),
                         r10 = make_rule<10>(), r12 = make_rule<12>(), r16 = make_rule<16>(),
                         r20 = make_rule<20>();
  switch (points) {
    case 2: return r2;
    case 3: return r3;
    case 4: return r4;
    case 5: return r5;
    case 6: return r6;
    case 8: return r8;
    case 10: return r10;
    case 12: return r12;
    case 16: return r16;
    case 20: return r20;
    default: throw std::invalid_argument("unsupported Gauss-Legendre point count");
  }
}

}  // namespace nlmg
