#include "medfx/numeric.hpp"

#include <boost/math/distributions/normal.hpp>

#include <stdexcept>

namespace medfx {

double normal_critical_value(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  static const boost::math::normal standard;
  return boost::math::quantile(standard, 1.0 - alpha / 2.0);
}

double two_sided_p_value(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

}  // namespace medfx
