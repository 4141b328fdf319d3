#pragma once

#include <complex>

namespace brw {

/// lambda = theta + i*gamma.
struct ComplexParameter {
  double theta = 0.0;
  double gamma = 0.0;

  constexpr std::complex<double> value() const { return {theta, gamma}; }
  friend constexpr bool operator==(const ComplexParameter&, const ComplexParameter&) = default;
};

}  // namespace brw
