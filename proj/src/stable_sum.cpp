#include <algorithm>
#include <cmath>
#include <vector>

#include "brw/compensated.hpp"
#include "brw/errors.hpp"
#include "brw/estimators.hpp"
#include "brw/kernels/kernels.hpp"
#include "brw/random.hpp"

namespace brw {

namespace {

constexpr std::uint64_t kStableStream = 0x737461626c650000ULL;
constexpr std::size_t kBatch = 4096;

void validate(double alpha, double b, double p) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw PreconditionError("alpha must lie in (1, 2)");
  if (!(b > 0.0)) throw PreconditionError("b must be positive");
  if (!(p > 0.0)) throw PreconditionError("p must be positive");
  if (p >= alpha) throw PreconditionError("p >= alpha: the limiting moment is infinite");
}

// E M^q for M the largest of k draws of x0 U^{-1/beta}: M = x0 V^{-1/beta} with
// V ~ Beta(1, k), so E M^q = x0^q Gamma(1 - s) Gamma(k + 1) / Gamma(k + 1 - s), s = q / beta < 1.
double max_moment(double x0, double beta, double q, double k) {
  const double s = q / beta;
  return std::pow(x0, q) * std::exp(std::lgamma(1.0 - s) + std::lgamma(k + 1.0) - std::lgamma(k + 1.0 - s));
}

}  // namespace

double stable_moment_closed_form(double alpha, double b, double p) {
  validate(alpha, b, p);
  const double beta = alpha / 2.0, q = p / 2.0;
  const double c = b * std::tgamma(1.0 - beta);
  return std::pow(c, q / beta) * std::tgamma(1.0 - q / beta) / std::tgamma(1.0 - q);
}

double stable_moment_quadrature(double alpha, double b, double p) {
  validate(alpha, b, p);
  const double beta = alpha / 2.0, q = p / 2.0;
  const double c = b * std::tgamma(1.0 - beta);
  // In u = log s the integrand is e^{-q u} (1 - exp(-c e^{beta u})).
  // Below u_lo, c e^{beta u} <= 1e-4 and the series of 1 - e^{-x} is integrated term by term.
  const double u_lo = std::log(1e-4 / c) / beta;
  const double u_hi = std::log(800.0 / c) / beta;
  const double h = 1e-3;
  const int n = static_cast<int>(std::ceil((u_hi - u_lo) / h));
  const double step = (u_hi - u_lo) / n;
  CompensatedSum body;
  for (int i = 0; i <= n; ++i) {
    const double u = u_lo + step * i;
    const double w = (i == 0 || i == n) ? 0.5 * step : step;
    body.add(w * std::exp(-q * u) * -std::expm1(-c * std::exp(beta * u)));
  }
  double lower = 0.0, cj = 1.0, fact = 1.0;
  for (int j = 1; j <= 4; ++j) {
    cj *= c;
    fact *= j;
    const double sign = (j % 2 == 1) ? 1.0 : -1.0;
    lower += sign * cj / fact * std::exp((j * beta - q) * u_lo) / (j * beta - q);
  }
  const double upper = std::exp(-q * u_hi) / q;
  return q / std::tgamma(1.0 - q) * (body.value() + lower + upper);
}

StableSumResult stable_sum_limit_check(const StableSumOracleSpec& spec, std::uint64_t seed) {
  validate(spec.alpha, spec.b, spec.p);
  if (spec.k < 1) throw PreconditionError("k must be at least 1");
  if (spec.trials < 2) throw PreconditionError("trials must be at least 2");

  const double q = spec.p / 2.0;
  const double kd = static_cast<double>(spec.k);
  // eta = x_m U^{-1/alpha} with b = x_m^alpha; eta^2 k^{-2/alpha} = (x_m^2 k^{-2/alpha}) U^{-2/alpha}.
  const double x_m = std::pow(spec.b, 1.0 / spec.alpha);
  const double scale = x_m * x_m * std::pow(kd, -2.0 / spec.alpha);
  const double exponent = 2.0 / spec.alpha;

  std::vector<double> direct(spec.trials), reduced(spec.trials);
  RandomStream rng(seed, kStableStream);
  const auto& kern = kernels::active();
  std::vector<std::uint64_t> bits(kBatch);
  std::vector<double> y(kBatch), log_y(kBatch);
  for (std::uint64_t t = 0; t < spec.trials; ++t) {
    CompensatedSum sum;
    double largest = 0.0;
    for (std::uint64_t done = 0; done < spec.k; done += kBatch) {
      const std::size_t m = static_cast<std::size_t>(std::min<std::uint64_t>(kBatch, spec.k - done));
      std::span<std::uint64_t> b(bits.data(), m);
      rng.fill(b);
      kern.pareto_from_bits(b, scale, exponent, std::span<double>(y.data(), m), std::span<double>(log_y.data(), m));
      for (std::size_t i = 0; i < m; ++i) {
        sum.add(y[i]);
        largest = std::max(largest, y[i]);
      }
    }
    direct[t] = std::pow(sum.value(), q);
    // S^q - M^q is dominated by the second-largest summand, whose q-th power has finite variance.
    reduced[t] = direct[t] - std::pow(largest, q);
  }

  StableSumResult r;
  r.theoretical = stable_moment_closed_form(spec.alpha, spec.b, spec.p);
  r.theoretical_quadrature = stable_moment_quadrature(spec.alpha, spec.b, spec.p);
  r.empirical_direct = mean_estimate(direct);
  r.empirical = mean_estimate(reduced);
  r.empirical.mean += max_moment(scale, spec.alpha / 2.0, q, kd);
  r.rel_err = std::abs(r.empirical.mean - r.theoretical_quadrature) / r.theoretical_quadrature;
  r.rel_err_direct = std::abs(r.empirical_direct.mean - r.theoretical_quadrature) / r.theoretical_quadrature;
  return r;
}

}  // namespace brw
