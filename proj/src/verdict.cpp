#include "brw/verdict.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "brw/errors.hpp"

namespace brw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
  if (std::isnan(v)) return "unknown";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// A real quantity with a +-3 SE envelope (degenerate for analytic values).
struct Bounded {
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

class Evaluator {
 public:
  Evaluator(const ReproductionModel& model, const VerdictOptions& opts) : model_(model), opts_(opts) {}

  Bounded m_real(double theta) const {
    const auto e = evaluate_m(model_, {theta, 0.0}, opts_.monte_carlo);
    const double v = e.value.real();
    const double band = 3.0 * e.se.value_or(0.0);
    return {v, v - band, v + band};
  }

  Bounded modulus(ComplexParameter lambda) const {
    const auto e = evaluate_m(model_, lambda, opts_.monte_carlo);
    const double v = std::abs(e.value);
    const double band = 3.0 * e.se.value_or(0.0);
    return {v, std::max(0.0, v - band), v + band};
  }

  // num / den^q with a conservative envelope.
  static Bounded ratio(const Bounded& num, const Bounded& den, double q) {
    auto div = [q](double a, double b) { return b > 0 ? a / std::pow(b, q) : kInf; };
    return {div(num.value, den.value), div(std::max(0.0, num.lo), den.hi), div(num.hi, den.lo)};
  }

  const ReproductionModel& model() const { return model_; }
  const VerdictOptions& opts() const { return opts_; }

 private:
  const ReproductionModel& model_;
  const VerdictOptions& opts_;
};

ConditionRecord inequality_record(std::string name, std::string inequality, const Bounded& lhs, double threshold,
                                  bool strict, double tie_tol) {
  ConditionRecord r{std::move(name), std::move(inequality), lhs.value, format_double(lhs.value), threshold,
                    ConditionStatus::unknown};
  if (std::isnan(lhs.value)) return r;
  if (std::isinf(lhs.value)) {
    r.status = lhs.value > 0 ? ConditionStatus::fail : ConditionStatus::pass;
    return r;
  }
  if (std::abs(lhs.value - threshold) <= tie_tol * std::abs(threshold)) {
    r.status = strict ? ConditionStatus::fail : ConditionStatus::pass;
    return r;
  }
  const bool holds = strict ? lhs.value < threshold : lhs.value <= threshold;
  const bool lo_holds = strict ? lhs.lo < threshold : lhs.lo <= threshold;
  const bool hi_holds = strict ? lhs.hi < threshold : lhs.hi <= threshold;
  if (lo_holds != hi_holds) return r;  // envelope straddles the threshold
  r.status = holds ? ConditionStatus::pass : ConditionStatus::fail;
  return r;
}

ConditionRecord moment_record(std::string name, std::string inequality, Finiteness f) {
  ConditionRecord r{std::move(name), std::move(inequality), kNaN, std::string(finiteness_name(f)), kInf,
                    ConditionStatus::unknown};
  if (f == Finiteness::finite) r.status = ConditionStatus::pass;
  if (f == Finiteness::infinite) {
    r.status = ConditionStatus::fail;
    r.lhs_text = "inf";
  }
  return r;
}

bool any_unknown(const VerdictReport& r) {
  return std::any_of(r.conditions.begin(), r.conditions.end(),
                     [](const ConditionRecord& c) { return c.status == ConditionStatus::unknown; });
}

// If-and-only-if criterion over every recorded condition.
void settle_iff(VerdictReport& r) {
  if (any_unknown(r)) {
    r.verdict = Verdict::indeterminate;
    for (const auto& c : r.conditions)
      if (c.status == ConditionStatus::unknown) r.notes.push_back("undecided condition: " + c.name);
    return;
  }
  const bool all_pass = std::all_of(r.conditions.begin(), r.conditions.end(),
                                    [](const ConditionRecord& c) { return c.status == ConditionStatus::pass; });
  r.verdict = all_pass ? Verdict::converges : Verdict::diverges;
}

void require_p(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw PreconditionError("p must be a finite number greater than 1");
}

void require_case_two(const ReproductionModel& model, ComplexParameter lambda, const VerdictOptions& opts) {
  const auto c = classify_case(model, lambda, opts.case_tolerance, opts.monte_carlo);
  if (c.label != CaseLabel::II) throw PreconditionError("criterion requires Case II");
}

// alpha = 2 when E|Z_1(lambda)|^2 is finite, else the declared tail index.
std::optional<double> tail_alpha(const ReproductionModel& model, ComplexParameter lambda, VerdictReport& r) {
  const Finiteness f2 = model.declared_finiteness(MomentQuantity::complex_martingale, 2.0, lambda.theta);
  ConditionRecord rec{"tail_hypothesis", "E|Z_1(lambda)|^2 < inf or declared regularly varying tail",
                      kNaN, "unknown", kInf, ConditionStatus::unknown};
  std::optional<double> alpha;
  if (f2 == Finiteness::finite) {
    alpha = 2.0;
    rec.lhs_text = "second moment finite";
  } else if (model.metadata().tail_index) {
    alpha = *model.metadata().tail_index;
    rec.lhs_text = "declared tail index";
  }
  if (alpha) {
    rec.lhs_value = *alpha;
    rec.status = ConditionStatus::pass;
    r.alpha_used = alpha;
  } else {
    r.notes.push_back("no tail hypothesis declared: need E|Z_1|^2 < inf or a tail index");
  }
  r.conditions.push_back(rec);
  return alpha;
}

ConditionRecord p_below_alpha(double p, double alpha) {
  ConditionRecord rec{"p_below_alpha", "p < alpha", p, format_double(p), alpha, ConditionStatus::unknown};
  rec.status = p < alpha ? ConditionStatus::pass : ConditionStatus::fail;
  return rec;
}

}  // namespace

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::converges: return "converges";
    case Verdict::diverges: return "diverges";
    case Verdict::converges_sufficient_only: return "converges_sufficient_only";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

std::string_view condition_status_name(ConditionStatus s) {
  switch (s) {
    case ConditionStatus::pass: return "pass";
    case ConditionStatus::fail: return "fail";
    case ConditionStatus::unknown: return "unknown";
  }
  return "unknown";
}

const ConditionRecord* VerdictReport::find(std::string_view name) const {
  for (const auto& c : conditions)
    if (c.name == name) return &c;
  return nullptr;
}

bool norming_series_finite(const LogPowerNorming& l, double m0, double p, double alpha, double* partial) {
  constexpr int kHorizon = 10000;
  constexpr double kPartialCap = 1e6;
  const double e = -p / alpha;
  auto term = [&](int n) { return std::pow(l(std::pow(m0, n)), e); };
  // Terms depend on n only through n log m0, which stays finite even when m0^n overflows.
  auto term_log = [&](int n) {
    const double t = 1.0 + static_cast<double>(n) * std::log(m0);
    return std::pow(std::pow(t, l.power), e);
  };
  double sum = 0.0;
  for (int n = 1; n <= kHorizon; ++n) {
    const double a = std::isfinite(std::pow(m0, n)) ? term(n) : term_log(n);
    sum += a;
    if (sum > kPartialCap) break;
  }
  if (partial) *partial = sum;
  if (sum > kPartialCap) return false;
  const double a_n = term_log(kHorizon), a_n1 = term_log(kHorizon + 1);
  const double raabe = kHorizon * (a_n / a_n1 - 1.0);
  return raabe > 1.0;
}

VerdictReport criterion_real(const ReproductionModel& model, double theta, double p, const VerdictOptions& opts) {
  require_p(p);
  Evaluator ev(model, opts);
  const Bounded mt = ev.m_real(theta);
  if (!std::isfinite(mt.value) || !(mt.value > 0))
    throw OutOfStripError("m(theta) is not finite and positive at theta = " + format_double(theta));
  VerdictReport r;
  r.theorem = "real_parameter_criterion";
  r.conditions.push_back(moment_record("real_moment", "E[Z_1(theta)]^p < inf",
                                       model.declared_finiteness(MomentQuantity::real_martingale, p, theta)));
  const Bounded mp = ev.m_real(p * theta);
  r.conditions.push_back(inequality_record("real_ratio", "m(p theta)/m(theta)^p < 1", Evaluator::ratio(mp, mt, p), 1.0,
                                           true, opts.tie_tolerance));
  if (theta == 0.0) r.notes.push_back("theta = 0: ratio equals m(0)^(1-p) < 1 since m(0) > 1");
  settle_iff(r);
  return r;
}

VerdictReport criterion_p_ge_2(const ReproductionModel& model, ComplexParameter lambda, double p,
                               const VerdictOptions& opts) {
  require_p(p);
  if (p < 2.0) throw PreconditionError("criterion requires p >= 2");
  require_case_two(model, lambda, opts);
  Evaluator ev(model, opts);
  const double theta = lambda.theta;
  const Bounded ml = ev.modulus(lambda);
  VerdictReport r;
  r.theorem = "p_at_least_2_criterion";
  r.case_label = CaseLabel::II;
  r.conditions.push_back(moment_record("complex_moment", "E|Z_1(lambda)|^p < inf",
                                       model.declared_finiteness(MomentQuantity::complex_martingale, p, theta)));
  if (theta != 0.0) {
    const Bounded r2 = Evaluator::ratio(ev.m_real(2.0 * theta), ml, 2.0);
    const Bounded rp = Evaluator::ratio(ev.m_real(p * theta), ml, p);
    const Bounded mx{std::max(r2.value, rp.value), std::max(r2.lo, rp.lo), std::max(r2.hi, rp.hi)};
    r.conditions.push_back(inequality_record("quadratic_ratio", "max(m(2 theta)/|m|^2, m(p theta)/|m|^p) < 1", mx, 1.0,
                                             true, opts.tie_tolerance));
  } else {
    r.conditions.push_back(inequality_record("centered_ratio", "m(0)/|m(lambda)|^2 < 1",
                                             Evaluator::ratio(ev.m_real(0.0), ml, 2.0), 1.0, true,
                                             opts.tie_tolerance));
  }
  if (p > 2.0) {
    r.conditions.push_back(
        moment_record("tilted_half_moment", "E[Z_1(2 theta)]^(p/2) < inf",
                      model.declared_finiteness(MomentQuantity::real_martingale, p / 2.0, 2.0 * theta)));
  }
  settle_iff(r);
  return r;
}

VerdictReport criterion_p_lt_2_theta0(const ReproductionModel& model, ComplexParameter lambda, double p,
                                      const VerdictOptions& opts) {
  require_p(p);
  if (p >= 2.0) throw PreconditionError("criterion requires p < 2");
  if (lambda.theta != 0.0) throw PreconditionError("criterion requires theta = 0");
  require_case_two(model, lambda, opts);
  Evaluator ev(model, opts);
  VerdictReport r;
  r.theorem = "subquadratic_theta0_criterion";
  r.case_label = CaseLabel::II;
  const auto alpha = tail_alpha(model, lambda, r);
  if (!alpha) {
    r.verdict = Verdict::indeterminate;
    return r;
  }
  r.conditions.push_back(p_below_alpha(p, *alpha));

  const Finiteness xlogx = model.declared_finiteness(MomentQuantity::xlogx, 1.0, 0.0);
  r.conditions.push_back(moment_record("xlogx", "E Z_1(0) log+ Z_1(0) < inf", xlogx));
  const Bounded m0 = ev.m_real(0.0);
  const Bounded ratio = Evaluator::ratio(m0, ev.modulus(lambda), *alpha);
  if (xlogx == Finiteness::finite) {
    r.conditions.push_back(
        inequality_record("alpha_ratio", "m(0)/|m(lambda)|^alpha < 1", ratio, 1.0, true, opts.tie_tolerance));
  } else if (xlogx == Finiteness::infinite) {
    // The x log x record is informational on this branch; the norming series takes over.
    r.conditions.back().status = ConditionStatus::pass;
    r.conditions.back().lhs_text = "inf";
    const auto& norming = model.metadata().seneta_heyde_norming;
    if (!norming) {
      r.conditions.push_back({"norming_series", "A = sum l(m(0)^n)^(-p/alpha)", kNaN, "unknown", kInf,
                              ConditionStatus::unknown});
      r.notes.push_back("Seneta-Heyde norming required");
      r.verdict = Verdict::indeterminate;
      return r;
    }
    double partial = 0.0;
    const bool finite_a = norming_series_finite(*norming, m0.value, p, *alpha, &partial);
    r.conditions.push_back({"norming_series", "A = sum l(m(0)^n)^(-p/alpha)", partial,
                            finite_a ? format_double(partial) : "inf", kInf, ConditionStatus::pass});
    if (finite_a) {
      r.conditions.push_back(
          inequality_record("alpha_ratio", "m(0)/|m(lambda)|^alpha <= 1", ratio, 1.0, false, opts.tie_tolerance));
    } else {
      r.conditions.push_back(
          inequality_record("alpha_ratio", "m(0)/|m(lambda)|^alpha < 1", ratio, 1.0, true, opts.tie_tolerance));
    }
  }
  settle_iff(r);
  return r;
}

VerdictReport sufficient_biggins(const ReproductionModel& model, ComplexParameter lambda, double p,
                                 const VerdictOptions& opts) {
  require_p(p);
  if (p >= 2.0) throw PreconditionError("sufficient grid requires p < 2");
  require_case_two(model, lambda, opts);
  Evaluator ev(model, opts);
  const Bounded ml = ev.modulus(lambda);
  VerdictReport r;
  r.theorem = "sufficient_r_grid";
  r.case_label = CaseLabel::II;

  std::optional<std::pair<ConditionRecord, ConditionRecord>> best;
  double best_r = p;
  for (int i = 0; i <= kSufficientGridIntervals; ++i) {
    const double rr = i == kSufficientGridIntervals ? 2.0 : p + i * (2.0 - p) / kSufficientGridIntervals;
    const Finiteness f = model.declared_finiteness(MomentQuantity::complex_martingale, rr, lambda.theta);
    if (f != Finiteness::finite) continue;
    auto mom = moment_record("r_moment", "E|Z_1(lambda)|^r < inf", f);
    auto rat = inequality_record("r_ratio", "m(r theta)/|m(lambda)|^r < 1",
                                 Evaluator::ratio(ev.m_real(rr * lambda.theta), ml, rr), 1.0, true,
                                 opts.tie_tolerance);
    if (rat.status == ConditionStatus::pass) {
      r.verdict = Verdict::converges_sufficient_only;
      r.r_used = rr;
      r.conditions.push_back(mom);
      r.conditions.push_back(rat);
      return r;
    }
    if (!best || (rat.lhs_value < best->second.lhs_value)) {
      best = std::make_pair(mom, rat);
      best_r = rr;
    }
  }
  r.verdict = Verdict::indeterminate;
  r.notes.push_back("not established: no grid exponent in [p, 2] satisfies both conditions");
  if (best) {
    r.r_used = best_r;
    r.conditions.push_back(best->first);
    r.conditions.push_back(best->second);
  } else {
    r.conditions.push_back(moment_record("r_moment", "E|Z_1(lambda)|^r < inf", Finiteness::unknown));
  }
  return r;
}

VerdictReport criterion_p_lt_2_theta_ne0(const ReproductionModel& model, ComplexParameter lambda, double p,
                                         const VerdictOptions& opts) {
  require_p(p);
  if (p >= 2.0) throw PreconditionError("criterion requires p < 2");
  if (lambda.theta == 0.0) throw PreconditionError("criterion requires theta != 0");
  require_case_two(model, lambda, opts);
  Evaluator ev(model, opts);
  VerdictReport r;
  r.theorem = "subquadratic_tilted_criterion";
  r.case_label = CaseLabel::II;

  auto fall_back = [&](const std::string& why) {
    r.notes.push_back(why);
    VerdictReport s = sufficient_biggins(model, lambda, p, opts);
    if (s.verdict == Verdict::converges_sufficient_only) {
      s.conditions.insert(s.conditions.begin(), r.conditions.begin(), r.conditions.end());
      s.notes.insert(s.notes.begin(), r.notes.begin(), r.notes.end());
      s.alpha_used = r.alpha_used;
      return s;
    }
    r.notes.insert(r.notes.end(), s.notes.begin(), s.notes.end());
    r.verdict = Verdict::indeterminate;
    return r;
  };

  const auto alpha = tail_alpha(model, lambda, r);
  if (!alpha) return fall_back("tail hypothesis missing; trying sufficient grid");
  r.conditions.push_back(p_below_alpha(p, *alpha));

  const double at = *alpha * lambda.theta;
  const Bounded mat = ev.m_real(at);
  if (!std::isfinite(mat.value)) {
    r.notes.push_back("m(alpha theta) is infinite");
    r.verdict = Verdict::indeterminate;
    return r;
  }
  r.conditions.push_back(inequality_record("alpha_ratio", "m(alpha theta)/|m(lambda)|^alpha < 1",
                                           Evaluator::ratio(mat, ev.modulus(lambda), *alpha), 1.0, true,
                                           opts.tie_tolerance));

  // Uniform integrability of Z_n(alpha theta) from the two sufficient conditions.
  const auto ui_x = moment_record("ui_xlogx", "E Z_1(alpha theta) log+ Z_1(alpha theta) < inf",
                                  model.declared_finiteness(MomentQuantity::xlogx, 1.0, at));
  const auto tm = evaluate_tilted_mean(model, at, opts.monte_carlo);
  const double lhs = -at * tm.value;
  const double lhs_band = 3.0 * std::abs(at) * tm.se.value_or(0.0);
  const double rhs = mat.value * std::log(mat.value);
  ConditionRecord ui_t{"ui_tilted_mean", "-alpha theta E sum X e^{-alpha theta X} < m(alpha theta) log m(alpha theta)",
                       lhs, format_double(lhs), rhs, ConditionStatus::unknown};
  const double rhs_lo = std::max(0.0, mat.lo) > 0 ? mat.lo * std::log(mat.lo) : -kInf;
  const double rhs_hi = mat.hi * std::log(mat.hi);
  const double rhs_band = std::max(std::abs(rhs - rhs_lo), std::abs(rhs_hi - rhs));
  if (lhs + lhs_band < rhs - rhs_band) {
    ui_t.status = ConditionStatus::pass;
  } else if (lhs - lhs_band >= rhs + rhs_band) {
    ui_t.status = ConditionStatus::fail;
  }
  r.conditions.push_back(ui_x);
  r.conditions.push_back(ui_t);

  if (ui_x.status != ConditionStatus::pass || ui_t.status != ConditionStatus::pass) {
    return fall_back("uniform integrability of Z_n(alpha theta) not established; trying sufficient grid");
  }
  settle_iff(r);
  return r;
}

VerdictReport decide(const ConvergenceQuery& query, const VerdictOptions& opts) {
  if (query.model == nullptr) throw PreconditionError("query has no model");
  require_p(query.p);
  const ReproductionModel& model = *query.model;
  const ComplexParameter lambda = query.lambda;
  const auto c = classify_case(model, lambda, opts.case_tolerance, opts.monte_carlo);

  VerdictReport r;
  if (c.uncertain_boundary) {
    r.theorem = "classification";
    r.case_label = c.label;
    r.verdict = Verdict::indeterminate;
    r.notes.push_back("uncertain-boundary: Monte Carlo m(lambda) within 3 SE of a case boundary");
    return r;
  }
  switch (c.label) {
    case CaseLabel::I:
      r = criterion_real(model, lambda.theta, query.p, opts);
      r.case_label = CaseLabel::I;
      r.notes.push_back("Case I: Z_n(lambda) = Z_n(theta)");
      return r;
    case CaseLabel::III:
      r.theorem = "case_three";
      r.case_label = CaseLabel::III;
      r.verdict = Verdict::indeterminate;
      r.notes.push_back("not a martingale: m(lambda) = 0");
      return r;
    case CaseLabel::II: break;
  }
  if (query.p >= 2.0) return criterion_p_ge_2(model, lambda, query.p, opts);
  if (lambda.theta == 0.0) return criterion_p_lt_2_theta0(model, lambda, query.p, opts);
  return criterion_p_lt_2_theta_ne0(model, lambda, query.p, opts);
}

}  // namespace brw
