#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string_view>

#include "brw/complex_parameter.hpp"
#include "brw/models.hpp"

namespace brw {

enum class EvalMethod { analytic, monte_carlo };
std::string_view eval_method_name(EvalMethod m);

struct MonteCarloOptions {
  std::uint64_t samples = 100000;
  std::uint64_t seed = 0;
};

/// m(lambda) with provenance. `se` and `samples` are set iff method is Monte Carlo.
struct LaplaceEvaluation {
  std::complex<double> value;
  EvalMethod method = EvalMethod::analytic;
  std::optional<double> se;
  std::optional<std::uint64_t> samples;
  /// Monte Carlo standard error exceeds |value|; do not classify on it.
  bool unreliable = false;
};

/// Closed form when the model has one, otherwise the sample mean of
/// sum_i exp(-lambda X_i). Throws PreconditionError if samples < 1000.
LaplaceEvaluation evaluate_m(const ReproductionModel& model, ComplexParameter lambda,
                             const MonteCarloOptions& opts = {});

/// E sum_i X_i exp(-theta X_i), analytic or Monte Carlo.
struct TiltedMeanEvaluation {
  double value = 0.0;
  EvalMethod method = EvalMethod::analytic;
  std::optional<double> se;
};
TiltedMeanEvaluation evaluate_tilted_mean(const ReproductionModel& model, double theta,
                                          const MonteCarloOptions& opts = {});

enum class CaseLabel { I, II, III };
std::string_view case_label_name(CaseLabel c);

struct CaseClassification {
  CaseLabel label = CaseLabel::II;
  double tolerance = 0.0;
  double modulus = 0.0;  // |m(lambda)|
  double m_theta = 0.0;
  EvalMethod method = EvalMethod::analytic;
  /// Monte Carlo value within 3 SE of a case boundary; label forced to II.
  bool uncertain_boundary = false;
  /// Case I: Z_n(lambda) equals Z_n(theta) pathwise.
  bool collapses_to_real = false;
};

inline constexpr double kDefaultCaseTolerance = 1e-9;

/// Throws OutOfStripError if m(theta) is not finite and positive.
CaseClassification classify_case(const ReproductionModel& model, ComplexParameter lambda,
                                 double tolerance = kDefaultCaseTolerance,
                                 const MonteCarloOptions& opts = {});

}  // namespace brw
