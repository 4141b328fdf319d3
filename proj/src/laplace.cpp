#include "brw/laplace.hpp"

#include <cmath>

#include "brw/compensated.hpp"
#include "brw/errors.hpp"

namespace brw {

namespace {

constexpr std::uint64_t kLaplaceStream = 0x6c61706c61636500ULL;

void check_samples(const MonteCarloOptions& opts) {
  if (opts.samples < 1000) throw PreconditionError("Monte Carlo evaluation needs at least 1000 samples");
}

}  // namespace

std::string_view eval_method_name(EvalMethod m) {
  return m == EvalMethod::analytic ? "analytic" : "monte_carlo";
}

std::string_view case_label_name(CaseLabel c) {
  switch (c) {
    case CaseLabel::I: return "I";
    case CaseLabel::II: return "II";
    case CaseLabel::III: return "III";
  }
  return "II";
}

LaplaceEvaluation evaluate_m(const ReproductionModel& model, ComplexParameter lambda,
                             const MonteCarloOptions& opts) {
  if (!std::isfinite(lambda.theta) || !std::isfinite(lambda.gamma))
    throw PreconditionError("lambda must be finite");
  if (auto v = model.laplace_analytic(lambda)) return {*v, EvalMethod::analytic, std::nullopt, std::nullopt, false};

  check_samples(opts);
  RandomStream rng(opts.seed, kLaplaceStream);
  CompensatedSum re, im, re2, im2;
  const std::complex<double> minus_lambda = -lambda.value();
  for (std::uint64_t i = 0; i < opts.samples; ++i) {
    const auto draw = model.sample_offspring(rng);
    CompensatedComplexSum s;
    for (double x : draw.displacements) s.add(std::exp(minus_lambda * x));
    const auto v = s.value();
    re.add(v.real());
    im.add(v.imag());
    re2.add(v.real() * v.real());
    im2.add(v.imag() * v.imag());
  }
  const double n = static_cast<double>(opts.samples);
  const double mr = re.value() / n, mi = im.value() / n;
  const double vr = std::max(0.0, (re2.value() / n - mr * mr) * n / (n - 1));
  const double vi = std::max(0.0, (im2.value() / n - mi * mi) * n / (n - 1));
  // Componentwise errors combined as an upper bound on the modulus error.
  const double se = std::sqrt((vr + vi) / n);
  LaplaceEvaluation out{{mr, mi}, EvalMethod::monte_carlo, se, opts.samples, false};
  out.unreliable = se > std::abs(out.value);
  return out;
}

TiltedMeanEvaluation evaluate_tilted_mean(const ReproductionModel& model, double theta,
                                          const MonteCarloOptions& opts) {
  if (auto v = model.tilted_mean_analytic(theta)) return {*v, EvalMethod::analytic, std::nullopt};
  check_samples(opts);
  RandomStream rng(opts.seed, kLaplaceStream + 1);
  CompensatedSum sum, sum2;
  for (std::uint64_t i = 0; i < opts.samples; ++i) {
    const auto draw = model.sample_offspring(rng);
    CompensatedSum s;
    for (double x : draw.displacements) s.add(x * std::exp(-theta * x));
    const double v = s.value();
    sum.add(v);
    sum2.add(v * v);
  }
  const double n = static_cast<double>(opts.samples);
  const double mean = sum.value() / n;
  const double var = std::max(0.0, (sum2.value() / n - mean * mean) * n / (n - 1));
  return {mean, EvalMethod::monte_carlo, std::sqrt(var / n)};
}

CaseClassification classify_case(const ReproductionModel& model, ComplexParameter lambda, double tolerance,
                                 const MonteCarloOptions& opts) {
  const LaplaceEvaluation at_theta = evaluate_m(model, {lambda.theta, 0.0}, opts);
  const double m_theta = at_theta.value.real();
  if (!std::isfinite(m_theta) || !(m_theta > 0.0))
    throw OutOfStripError("m(theta) is not finite and positive at theta = " + std::to_string(lambda.theta));
  const LaplaceEvaluation at_lambda = evaluate_m(model, lambda, opts);

  CaseClassification c;
  c.tolerance = tolerance;
  c.modulus = std::abs(at_lambda.value);
  c.m_theta = m_theta;
  c.method = at_lambda.method == EvalMethod::monte_carlo || at_theta.method == EvalMethod::monte_carlo
                 ? EvalMethod::monte_carlo
                 : EvalMethod::analytic;

  const double se_l = at_lambda.se.value_or(0.0);
  const double se_t = at_theta.se.value_or(0.0);
  if (se_l > 0.0 || se_t > 0.0) {
    const double band = 3.0 * std::hypot(se_l, se_t);
    const bool near_one = std::abs(m_theta - c.modulus) <= band;
    const bool near_three = c.modulus <= 3.0 * se_l;
    c.label = CaseLabel::II;
    c.uncertain_boundary = near_one || near_three || at_lambda.unreliable;
    return c;
  }
  if (c.modulus >= (1.0 - tolerance) * m_theta) {
    c.label = CaseLabel::I;
    c.collapses_to_real = true;
  } else if (c.modulus <= tolerance * m_theta) {
    c.label = CaseLabel::III;
  } else {
    c.label = CaseLabel::II;
  }
  return c;
}

}  // namespace brw
