#pragma once

#include <cmath>

namespace spsim {

// Scaled complementary error function exp(x^2) * erfc(x) for x >= 0.
// Direct product below x = 6 (both factors exactly representable), asymptotic
// series above (truncation error < 1e-8 relative at x = 6).
inline double erfcx_pos(double x) {
  if (x < 6.0) return std::exp(x * x) * std::erfc(x);
  double q = 1.0 / (2.0 * x * x);
  // 1 - q + 3q^2 - 15q^3 + 105q^4 - 945q^5 + 10395q^6 - 135135q^7
  double s = 1.0 + q * (-1.0 + q * (3.0 + q * (-15.0 + q * (105.0 + q * (-945.0 +
             q * (10395.0 - q * 135135.0))))));
  return s / (x * 1.7724538509055160273);  // x * sqrt(pi)
}

}  // namespace spsim
