#pragma once

// Executable L^p convergence criteria for Z_n(lambda) and the dispatcher
// that picks the applicable one.
//
// Condition ids:
//   real_moment          E[Z_1(theta)]^p < inf
//   real_ratio           m(p theta) / m(theta)^p < 1
//   complex_moment       E|Z_1(lambda)|^p < inf
//   quadratic_ratio      max(m(2 theta)/|m|^2, m(p theta)/|m|^p) < 1   (theta != 0)
//   centered_ratio       m(0)/|m|^2 < 1                               (theta = 0)
//   tilted_half_moment   E[Z_1(2 theta)]^{p/2} < inf                  (p > 2)
//   tail_hypothesis      alpha available: 2 if E|Z_1|^2 < inf, else the declared tail index
//   p_below_alpha        p < alpha
//   xlogx                E Z_1(0) log+ Z_1(0) < inf
//   norming_series       A = sum_n l(m(0)^n)^{-p/alpha}, informational
//   alpha_ratio          m(alpha theta)/|m|^alpha < 1 (<= 1 when A < inf)
//   ui_xlogx             E Z_1(alpha theta) log+ Z_1(alpha theta) < inf
//   ui_tilted_mean       -alpha theta E sum X e^{-alpha theta X} < m(alpha theta) log m(alpha theta)
//   r_moment, r_ratio    the same pair at the chosen exponent r of the sufficient grid

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "brw/laplace.hpp"
#include "brw/models.hpp"

namespace brw {

enum class Verdict { converges, diverges, converges_sufficient_only, indeterminate };
std::string_view verdict_name(Verdict v);

enum class ConditionStatus { pass, fail, unknown };
std::string_view condition_status_name(ConditionStatus s);

struct ConditionRecord {
  std::string name;
  std::string inequality;
  /// Numeric left side; NaN for moment facts (see lhs_text).
  double lhs_value = 0.0;
  /// Number, "finite", "inf" or "unknown".
  std::string lhs_text;
  double threshold = 1.0;
  ConditionStatus status = ConditionStatus::unknown;
};

struct VerdictReport {
  Verdict verdict = Verdict::indeterminate;
  std::string theorem;
  std::vector<ConditionRecord> conditions;
  std::optional<double> alpha_used;
  std::optional<double> r_used;
  std::optional<CaseLabel> case_label;
  std::vector<std::string> notes;

  const ConditionRecord* find(std::string_view name) const;
};

struct ConvergenceQuery {
  const ReproductionModel* model = nullptr;
  ComplexParameter lambda;
  double p = 2.0;
};

struct VerdictOptions {
  MonteCarloOptions monte_carlo;
  double case_tolerance = kDefaultCaseTolerance;
  /// Relative distance below which a ratio counts as equal to its threshold.
  double tie_tolerance = 1e-12;
};

inline constexpr int kSufficientGridIntervals = 64;

VerdictReport criterion_real(const ReproductionModel& model, double theta, double p,
                             const VerdictOptions& opts = {});
VerdictReport criterion_p_ge_2(const ReproductionModel& model, ComplexParameter lambda, double p,
                               const VerdictOptions& opts = {});
VerdictReport criterion_p_lt_2_theta0(const ReproductionModel& model, ComplexParameter lambda, double p,
                                      const VerdictOptions& opts = {});
VerdictReport criterion_p_lt_2_theta_ne0(const ReproductionModel& model, ComplexParameter lambda, double p,
                                         const VerdictOptions& opts = {});
/// Scans r on kSufficientGridIntervals + 1 uniform points of [p, 2]. Never
/// returns diverges.
VerdictReport sufficient_biggins(const ReproductionModel& model, ComplexParameter lambda, double p,
                                 const VerdictOptions& opts = {});

VerdictReport decide(const ConvergenceQuery& query, const VerdictOptions& opts = {});

/// Decides whether A = sum_{n>=1} l(m0^n)^{-p/alpha} is finite: infinite if
/// the partial sum up to 10^4 exceeds 10^6 or the Raabe statistic at the
/// horizon is <= 1.
bool norming_series_finite(const LogPowerNorming& l, double m0, double p, double alpha, double* partial = nullptr);

}  // namespace brw
