// Scalar reference kernels. These define the expected results for the SIMD
// variants and are what runs on targets without AVX2.

#include <cmath>
#include <numbers>

#include "brw/compensated.hpp"
#include "brw/kernels/kernels.hpp"
#include "brw/random.hpp"

namespace brw::kernels {

namespace {

void complex_exp_sums(std::span<const double> positions, std::span<const ComplexParameter> lambdas,
                      std::span<std::complex<double>> out) {
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    const double theta = lambdas[j].theta;
    const double gamma = lambdas[j].gamma;
    CompensatedSum re, im;
    for (double s : positions) {
      const double mag = theta == 0.0 ? 1.0 : std::exp(-theta * s);
      const double phase = gamma * s;
      re.add(mag * std::cos(phase));
      im.add(-mag * std::sin(phase));
    }
    out[j] = {re.value(), im.value()};
  }
}

void real_exp_sums(std::span<const double> positions, std::span<const double> thetas,
                   std::span<double> out) {
  for (std::size_t j = 0; j < thetas.size(); ++j) {
    const double theta = thetas[j];
    CompensatedSum acc;
    for (double s : positions) acc.add(theta == 0.0 ? 1.0 : std::exp(-theta * s));
    out[j] = acc.value();
  }
}

void complex_exp_terms(std::span<const double> positions, ComplexParameter lambda,
                       std::span<double> re, std::span<double> im) {
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double s = positions[i];
    const double mag = lambda.theta == 0.0 ? 1.0 : std::exp(-lambda.theta * s);
    re[i] = mag * std::cos(lambda.gamma * s);
    im[i] = -mag * std::sin(lambda.gamma * s);
  }
}

double weighted_exp_sum(std::span<const double> weights, std::span<const double> nodes,
                        double scale) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < nodes.size(); ++i) acc.add(weights[i] * std::exp(-scale * nodes[i]));
  return acc.value();
}

void gaussian_from_bits(std::span<const std::uint64_t> bits, std::span<double> out) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const std::size_t n = out.size();
  for (std::size_t k = 0; 2 * k < n; ++k) {
    const double u1 = RandomStream::to_unit_open_closed(bits[2 * k]);
    const double u2 = RandomStream::to_unit_closed_open(bits[2 * k + 1]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[2 * k] = r * std::cos(two_pi * u2);
    if (2 * k + 1 < n) out[2 * k + 1] = r * std::sin(two_pi * u2);
  }
}

void pareto_from_bits(std::span<const std::uint64_t> bits, double scale, double exponent,
                      std::span<double> y, std::span<double> log_y) {
  const double log_scale = std::log(scale);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double u = RandomStream::to_unit_open_closed(bits[i]);
    const double ly = log_scale - exponent * std::log(u);
    log_y[i] = ly;
    y[i] = std::exp(ly);
  }
}

constexpr KernelTable kScalar{
    Isa::scalar,        complex_exp_sums,   real_exp_sums,    complex_exp_terms,
    weighted_exp_sum,   gaussian_from_bits, pareto_from_bits,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace brw::kernels
