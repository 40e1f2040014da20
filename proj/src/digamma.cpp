#include "metricmi/digamma.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace metricmi {

double digamma(double x) {
  if (!(x > 0.0) || std::isinf(x)) throw std::domain_error("digamma: argument must be finite and > 0");

  double shift = 0.0;
  while (x < 6.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }

  // B_2k / (2k) for k = 1..7
  const double inv2 = 1.0 / (x * x);
  double series = inv2 * (1.0 / 12.0 -
                  inv2 * (1.0 / 120.0 -
                  inv2 * (1.0 / 252.0 -
                  inv2 * (1.0 / 240.0 -
                  inv2 * (1.0 / 132.0 -
                  inv2 * (691.0 / 32760.0 -
                  inv2 * (1.0 / 12.0)))))));
  return shift + std::log(x) - 0.5 / x - series;
}

double digamma_large_x(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma_large_x: argument must be > 0");
  return std::log(x) - 0.5 / x;
}

} // namespace metricmi
