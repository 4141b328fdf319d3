#pragma once

// Reproduction point processes: an offspring count law J combined with an
// i.i.d. displacement law D, independent of J. Every built-in family is such
// a compound law, so the intensity transform factors as m(lambda) = E[J] * L(lambda)
// with L(lambda) = E exp(-lambda D).

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brw/complex_parameter.hpp"
#include "brw/random.hpp"

namespace brw {

enum class ModelKind {
  poisson_gaussian,
  binary_uniform,
  discrete_pareto_count,
  lattice_deterministic,
  case3_poisson,
  compound,
};

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

enum class Finiteness { finite, infinite, unknown };
std::string_view finiteness_name(Finiteness f);

enum class MomentQuantity {
  real_martingale,     // E[Z_1(theta')]^q
  complex_martingale,  // E|Z_1(lambda)|^q, keyed by theta = Re(lambda)
  xlogx,               // E Z_1(theta') log+ Z_1(theta')
};

/// Declares a finiteness fact for orders in [order_lo, order_hi] and
/// theta in [theta_lo, theta_hi]. The first matching override wins.
struct MomentOverride {
  MomentQuantity quantity = MomentQuantity::complex_martingale;
  double order_lo = 0.0;
  double order_hi = 1e300;
  double theta_lo = -1e300;
  double theta_hi = 1e300;
  Finiteness status = Finiteness::unknown;
};

/// l(t) = (1 + log t)^power for t >= 1.
struct LogPowerNorming {
  double power = 1.0;
  double operator()(double t) const;
};

struct ModelMetadata {
  bool has_analytic_laplace = true;
  /// Declared alpha in (1,2) for a regularly varying tail of |Z_1(lambda)|.
  std::optional<double> tail_index;
  bool xlogx_finite = true;
  std::optional<LogPowerNorming> seneta_heyde_norming;
  std::vector<MomentOverride> moments;
  /// When false, queries not covered by `moments` return `moment_default`
  /// instead of the family's own facts.
  bool family_moments = true;
  Finiteness moment_default = Finiteness::unknown;
};

struct CountLaw {
  enum class Kind { poisson, fixed, zeta };
  Kind kind = Kind::poisson;
  double mu = 2.0;        // poisson mean
  std::uint64_t k = 2;    // fixed count
  double alpha = 1.5;     // zeta: P{J = k} proportional to k^-(alpha+1)

  double mean() const;
  /// E[J(J-1)]; +inf when the second moment diverges.
  double factorial_moment2() const;
};

struct DisplacementLaw {
  enum class Kind { gaussian, uniform, point, two_point, fejer };
  Kind kind = Kind::gaussian;
  double mean = 0.0;   // gaussian
  double sigma = 1.0;  // gaussian
  double a = 1.0;      // uniform on (-a, a)
  double d = 0.0;      // point mass
  double x0 = 0.0, x1 = 1.0, prob0 = 0.5;  // two_point: x0 w.p. prob0, else x1
  double tilt = 0.0;   // fejer: density proportional to e^{tilt x}(1 - cos x)/x^2

  /// E exp(-lambda D). Infinite real part signals divergence.
  std::complex<double> laplace(ComplexParameter lambda) const;
  /// E[D exp(-theta D)] when absolutely convergent.
  std::optional<double> tilted_mean(double theta) const;
};

/// One draw of the reproduction point process.
struct OffspringSample {
  std::vector<double> displacements;
};

class ReproductionModel {
 public:
  static ReproductionModel poisson_gaussian(double mu = 2.0, double sigma = 1.0);
  static ReproductionModel binary_uniform(double a = 1.0);
  static ReproductionModel discrete_pareto_count(double alpha = 1.5, double sigma = 1.0);
  static ReproductionModel lattice_deterministic(double d = 2.0 * 3.14159265358979323846,
                                                 std::uint64_t children = 2);
  static ReproductionModel case3_poisson(double theta0 = 0.0);
  static ReproductionModel compound(CountLaw count, DisplacementLaw displacement);

  /// Builds a catalog family from named parameters; unknown names are errors.
  static ReproductionModel from_params(ModelKind kind, const std::map<std::string, double>& params);

  ModelKind kind() const noexcept { return kind_; }
  const std::map<std::string, double>& params() const noexcept { return params_; }
  const ModelMetadata& metadata() const noexcept { return metadata_; }
  const CountLaw& count_law() const noexcept { return count_; }
  const DisplacementLaw& displacement_law() const noexcept { return displacement_; }

  /// Applies user overrides on top of the family defaults.
  void set_metadata(ModelMetadata metadata) { metadata_ = std::move(metadata); }

  /// E[J]; infinite for an infinite-mass intensity.
  double mean_offspring() const;

  /// Closed-form m(lambda); nullopt when the model declares no formula.
  /// A value with infinite real part means lambda is outside the strip.
  std::optional<std::complex<double>> laplace_analytic(ComplexParameter lambda) const;

  /// E sum_i X_i exp(-theta X_i) in closed form, when available.
  std::optional<double> tilted_mean_analytic(double theta) const;

  /// E|Z_1(lambda)|^2 in closed form, when available (may be +inf).
  std::optional<double> z1_second_moment(ComplexParameter lambda) const;

  Finiteness declared_finiteness(MomentQuantity quantity, double order, double theta) const;

  OffspringSample sample_offspring(RandomStream& rng) const;
  /// Bulk draws used by the simulator: counts for many parents, then
  /// i.i.d. displacements for all children.
  void sample_counts(RandomStream& rng, std::span<std::uint64_t> counts) const;
  void sample_displacements(RandomStream& rng, std::span<double> out) const;

  /// Canonical "builtin:<kind>(k=v,...)" spelling (or "compound(...)").
  std::string describe() const;

 private:
  ReproductionModel(ModelKind kind, CountLaw count, DisplacementLaw displacement,
                    std::map<std::string, double> params);
  Finiteness family_finiteness(MomentQuantity quantity, double order, double theta) const;

  ModelKind kind_;
  CountLaw count_;
  DisplacementLaw displacement_;
  std::map<std::string, double> params_;
  ModelMetadata metadata_;
  std::vector<double> poisson_cdf_;
  std::vector<std::uint32_t> poisson_guide_;
};

/// Parses "builtin:<kind>(k=v,...)", an inline JSON document, or a path to
/// a JSON file.
ReproductionModel parse_model_spec(const std::string& spec);

}  // namespace brw
