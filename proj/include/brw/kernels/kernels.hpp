#pragma once

// Data-parallel inner loops of the simulator and estimators.
//
// Every kernel has a scalar reference implementation and, where the target
// supports it, an AVX2+FMA variant. The active table is chosen once at
// startup from CPUID (overridable with BRW_KERNEL_ISA=scalar|avx2 or
// select_isa()). Variants agree to a few ulp per element; sums use
// compensated accumulation in both, so they agree to O(eps * sum|terms|).

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "brw/complex_parameter.hpp"

namespace brw::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;

  /// out[j] = sum_i exp(-lambda_j * s_i) for every lambda_j.
  void (*complex_exp_sums)(std::span<const double> positions,
                           std::span<const ComplexParameter> lambdas,
                           std::span<std::complex<double>> out);

  /// out[j] = sum_i exp(-theta_j * s_i).
  void (*real_exp_sums)(std::span<const double> positions, std::span<const double> thetas,
                        std::span<double> out);

  /// Elementwise exp(-lambda * s_i) into split real/imag arrays.
  void (*complex_exp_terms)(std::span<const double> positions, ComplexParameter lambda,
                            std::span<double> re, std::span<double> im);

  /// sum_i w_i * exp(-scale * x_i).
  double (*weighted_exp_sum)(std::span<const double> weights, std::span<const double> nodes,
                             double scale);

  /// Box-Muller: two 64-bit words per pair of standard normals.
  /// bits.size() must equal 2 * ceil(out.size() / 2).
  void (*gaussian_from_bits)(std::span<const std::uint64_t> bits, std::span<double> out);

  /// y_i = scale * u_i^(-exponent) with u_i uniform on (0,1] from bits; log_y_i = log(y_i).
  void (*pareto_from_bits)(std::span<const std::uint64_t> bits, double scale, double exponent,
                           std::span<double> y, std::span<double> log_y);
};

const KernelTable& scalar_table();
/// nullptr when the build or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

Isa best_available_isa();
bool isa_available(Isa isa);

/// The table used by the library. Thread-safe to read.
const KernelTable& active();
/// Throws std::invalid_argument if the ISA is unavailable.
void select_isa(Isa isa);
Isa parse_isa(std::string_view name);

}  // namespace brw::kernels
