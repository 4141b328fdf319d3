#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brw/models.hpp"
#include "brw/simulator.hpp"

namespace brw {

struct MCEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::uint64_t n = 0;
};

/// Sample mean and standard error (compensated sums). Needs n >= 2.
MCEstimate mean_estimate(std::span<const double> xs);

/// |Z_n(lambda)|^p over replicas; 0^0 is taken as 0 on extinct paths.
MCEstimate pth_moment(const TrajectoryBatch& batch, std::size_t lambda_index, double p, int n);
/// |Z_{n+1}(lambda) - Z_n(lambda)|^p over replicas, n < N.
MCEstimate increment_moment(const TrajectoryBatch& batch, std::size_t lambda_index, double p, int n);
/// Z_n(theta')^p for a companion.
MCEstimate companion_moment(const TrajectoryBatch& batch, std::size_t companion_index, double p, int n);

/// m(2 theta)/|m(lambda)|^2: the exact geometric rate of E|Z_{n+1} - Z_n|^2.
double quadratic_increment_rate(const ReproductionModel& model, ComplexParameter lambda);

enum class EmpiricalVerdict { bounded, growing, inconclusive };
std::string_view empirical_verdict_name(EmpiricalVerdict v);

struct DiagnosticWindow {
  int first = 1;
  int last = -1;  // -1: last available generation
};

struct ConvergenceDiagnostic {
  /// Least-squares slope of log E|Z_n|^p over the window, with 95% CI.
  double slope = 0.0, slope_lo = 0.0, slope_hi = 0.0;
  /// E|dZ_n|^p / E|dZ_{n-1}|^p for consecutive n in the window.
  std::vector<double> cauchy_rates;
  /// exp of the least-squares slope of log E|dZ_n|^p, with 95% CI.
  double increment_rate = 0.0, rate_lo = 0.0, rate_hi = 0.0;
  std::optional<double> predicted_rate;
  EmpiricalVerdict verdict = EmpiricalVerdict::inconclusive;
  /// "increment_rate", "moment_slope", "degenerate" or "none".
  std::string basis = "none";
  std::vector<std::string> notes;
};

/// Bounded if the increment-rate CI lies below 1, growing if above 1;
/// otherwise decided by the moment slope (CI reaching 0 or below is bounded,
/// strictly positive is growing). Inconclusive when a standard error in the
/// window exceeds half its estimate. CIs are jackknife intervals over
/// contiguous replica groups.
ConvergenceDiagnostic convergence_diagnostic(const TrajectoryBatch& batch, std::size_t lambda_index, double p,
                                             DiagnosticWindow window = {},
                                             std::optional<double> predicted_rate = std::nullopt);

struct FractionalQuadrature {
  double s_min = 1e-6;
  double s_max = 1e6;
  int nodes = 400;
};

/// E X^a = (a / Gamma(1-a)) int_0^inf s^{-a-1} (1 - E e^{-sX}) ds evaluated on
/// the empirical Laplace transform. Throws ResolutionError when halving the
/// grid moves the estimate by more than 1%.
MCEstimate fractional_moment_transform(std::span<const double> samples, double a, FractionalQuadrature quad = {});

struct TailProfile {
  double alpha_hat = 0.0;
  std::size_t k = 0;
  double ci_lo = 0.0, ci_hi = 0.0;
  bool lattice_warning = false;
};

/// Hill estimator on the k largest samples; k = floor(n^0.6) when 0.
TailProfile hill_tail_index(std::span<const double> samples, std::size_t k = 0);

struct QuadraticVariationPoint {
  int horizon = 0;
  double mean_qv = 0.0;       // E sum_{n<N} |dZ_n|^2
  double mean_qv_pow = 0.0;   // E (sum_{n<N} |dZ_n|^2)^{p/2}
};
std::vector<QuadraticVariationPoint> quadratic_variation_series(const TrajectoryBatch& batch,
                                                                std::size_t lambda_index, double p);

struct BurkholderPoint {
  int horizon = 0;
  MCEstimate moment;    // E|Z_N|^p
  MCEstimate centered;  // E|Z_N - 1|^p
  MCEstimate qv;        // E (sum_{n<N} |dZ_n|^2)^{p/2}
  /// centered / qv; absent when qv is 0.
  std::optional<double> ratio;
  bool degenerate = false;
};
std::vector<BurkholderPoint> burkholder_ratio_probe(const TrajectoryBatch& batch, std::size_t lambda_index, double p);

struct GrowthRateCheck {
  double fitted_rate = 0.0, rate_lo = 0.0, rate_hi = 0.0;
  double predicted_rate = 0.0;
  /// c in log E[Z_n]^p - n log(predicted) ~ const + c log n.
  double poly_exponent = 0.0;
  bool poly_correction_ok = false;
};

/// Geometric growth of E[Z_n(theta')]^p for companion `companion_index`
/// against m(p theta')/m(theta')^p. Requires theta' != 0, a predicted rate
/// >= 1 and a declared finite E[Z_1(theta')]^p.
GrowthRateCheck growth_rate_check(const TrajectoryBatch& batch, const ReproductionModel& model,
                                  std::size_t companion_index, double p, DiagnosticWindow window = {});

struct StableSumOracleSpec {
  double alpha = 1.5;
  double b = 1.0;
  double p = 1.2;
  std::uint64_t k = 10000;
  std::uint64_t trials = 10000;
};

struct StableSumResult {
  /// Trial mean of S^q - M^q plus the exact E M^q, where S is the scaled sum
  /// and M its largest summand. Unbiased for E S^q with finite variance.
  MCEstimate empirical;
  /// Trial mean of ((sum eta^2) / k^{2/alpha})^{p/2}; heavy-tailed, reported only.
  MCEstimate empirical_direct;
  double theoretical = 0.0;             // closed form
  double theoretical_quadrature = 0.0;  // integral of the limit transform
  double rel_err = 0.0;                 // |empirical - quadrature| / quadrature
  double rel_err_direct = 0.0;
};

/// E[eta_stable]^{p/2} for the positive (alpha/2)-stable law with Laplace
/// transform exp(-b Gamma(1 - alpha/2) s^{alpha/2}).
double stable_moment_closed_form(double alpha, double b, double p);
double stable_moment_quadrature(double alpha, double b, double p);

StableSumResult stable_sum_limit_check(const StableSumOracleSpec& spec, std::uint64_t seed);

}  // namespace brw
