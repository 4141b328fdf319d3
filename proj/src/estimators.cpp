#include "brw/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "brw/compensated.hpp"
#include "brw/errors.hpp"
#include "brw/kernels/kernels.hpp"
#include "brw/laplace.hpp"

namespace brw {

namespace {

constexpr double kZ95 = 1.959963984540054;
constexpr std::size_t kJackknifeGroups = 20;

double abs_pow(double x, double p) { return x == 0.0 ? 0.0 : std::pow(x, p); }

struct Fit {
  double slope = 0.0;
  double intercept = 0.0;
};

Fit least_squares(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  return {slope, my - slope * mx};
}

// Per-group sums of a per-replica series, for delete-one-group jackknife.
class GroupedSeries {
 public:
  GroupedSeries(std::size_t replicas, std::size_t points)
      : groups_(std::min(kJackknifeGroups, replicas)), points_(points), sums_(groups_ * points, 0.0),
        counts_(groups_, 0) {
    replicas_ = replicas;
  }

  std::size_t groups() const { return groups_; }
  std::size_t group_of(std::size_t replica) const { return replica * groups_ / replicas_; }

  void add(std::size_t replica, std::size_t point, double v) { sums_[group_of(replica) * points_ + point] += v; }
  void count(std::size_t replica) { ++counts_[group_of(replica)]; }

  // Mean of each point with group `skip` removed (skip == groups() keeps all).
  std::vector<double> means(std::size_t skip) const {
    std::vector<double> out(points_, 0.0);
    std::size_t total = 0;
    for (std::size_t g = 0; g < groups_; ++g) {
      if (g == skip) continue;
      total += counts_[g];
      for (std::size_t i = 0; i < points_; ++i) out[i] += sums_[g * points_ + i];
    }
    for (auto& v : out) v /= static_cast<double>(total);
    return out;
  }

 private:
  std::size_t groups_;
  std::size_t points_;
  std::size_t replicas_ = 1;
  std::vector<double> sums_;
  std::vector<std::size_t> counts_;
};

struct JackknifeResult {
  double estimate = 0.0;
  double se = 0.0;
  bool valid = false;
};

// Least-squares slope of log(mean) against x, with a jackknife SE.
JackknifeResult log_slope(const GroupedSeries& s, std::span<const double> x) {
  auto slope_of = [&](const std::vector<double>& m, bool& ok) {
    std::vector<double> y(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!(m[i] > 0)) ok = false;
      y[i] = std::log(m[i]);
    }
    return ok ? least_squares(x, y).slope : 0.0;
  };
  JackknifeResult r;
  bool ok = true;
  r.estimate = slope_of(s.means(s.groups()), ok);
  if (!ok) return r;
  const std::size_t g = s.groups();
  if (g < 2) {
    r.valid = true;
    return r;
  }
  std::vector<double> loo(g);
  for (std::size_t i = 0; i < g; ++i) {
    bool ok_i = true;
    loo[i] = slope_of(s.means(i), ok_i);
    if (!ok_i) return r;
  }
  const double mean = std::accumulate(loo.begin(), loo.end(), 0.0) / static_cast<double>(g);
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  r.se = std::sqrt(static_cast<double>(g - 1) / static_cast<double>(g) * ss);
  r.valid = true;
  return r;
}

void check_lambda(const TrajectoryBatch& batch, std::size_t j) {
  if (j >= batch.lambda_count()) throw PreconditionError("lambda index out of range");
}

void check_n(const TrajectoryBatch& batch, int n) {
  if (n < 0 || n > batch.generations()) throw PreconditionError("generation index out of range");
}

}  // namespace

std::string_view empirical_verdict_name(EmpiricalVerdict v) {
  switch (v) {
    case EmpiricalVerdict::bounded: return "bounded";
    case EmpiricalVerdict::growing: return "growing";
    case EmpiricalVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

MCEstimate mean_estimate(std::span<const double> xs) {
  if (xs.size() < 2) throw PreconditionError("a standard error needs at least 2 samples");
  CompensatedSum s;
  for (double x : xs) s.add(x);
  const double n = static_cast<double>(xs.size());
  const double mean = s.value() / n;
  CompensatedSum ss;
  for (double x : xs) ss.add((x - mean) * (x - mean));
  return {mean, std::sqrt(ss.value() / (n - 1) / n), xs.size()};
}

MCEstimate pth_moment(const TrajectoryBatch& batch, std::size_t lambda_index, double p, int n) {
  check_lambda(batch, lambda_index);
  check_n(batch, n);
  if (!(p >= 0)) throw PreconditionError("p must be nonnegative");
  std::vector<double> v(batch.replicas.size());
  for (std::size_t r = 0; r < v.size(); ++r) v[r] = abs_pow(std::abs(batch.z(r, n, lambda_index)), p);
  return mean_estimate(v);
}

MCEstimate increment_moment(const TrajectoryBatch& batch, std::size_t lambda_index, double p, int n) {
  check_lambda(batch, lambda_index);
  if (n < 0 || n >= batch.generations()) throw PreconditionError("increment index out of range");
  std::vector<double> v(batch.replicas.size());
  for (std::size_t r = 0; r < v.size(); ++r)
    v[r] = abs_pow(std::abs(batch.z(r, n + 1, lambda_index) - batch.z(r, n, lambda_index)), p);
  return mean_estimate(v);
}

MCEstimate companion_moment(const TrajectoryBatch& batch, std::size_t companion_index, double p, int n) {
  if (companion_index >= batch.companion_count()) throw PreconditionError("companion index out of range");
  check_n(batch, n);
  std::vector<double> v(batch.replicas.size());
  for (std::size_t r = 0; r < v.size(); ++r) v[r] = abs_pow(batch.companion(r, n, companion_index), p);
  return mean_estimate(v);
}

double quadratic_increment_rate(const ReproductionModel& model, ComplexParameter lambda) {
  const double m2 = evaluate_m(model, {2.0 * lambda.theta, 0.0}).value.real();
  return m2 / std::norm(evaluate_m(model, lambda).value);
}

constexpr double kDegenerateTol = 1e-12;

ConvergenceDiagnostic convergence_diagnostic(const TrajectoryBatch& batch, std::size_t lambda_index, double p,
                                             DiagnosticWindow window, std::optional<double> predicted_rate) {
  check_lambda(batch, lambda_index);
  const int N = batch.generations();
  const int first = std::max(0, window.first);
  const int last = window.last < 0 ? N : std::min(window.last, N);
  if (last - first + 1 < 4) throw PreconditionError("diagnostic window needs at least 4 generations");
  const std::size_t R = batch.replicas.size();
  if (R < 2) throw PreconditionError("diagnostic needs at least 2 replicas");

  ConvergenceDiagnostic d;
  d.predicted_rate = predicted_rate;

  const int inc_last = std::min(last, N - 1);
  const std::size_t mpts = static_cast<std::size_t>(last - first + 1);
  const std::size_t ipts = inc_last >= first ? static_cast<std::size_t>(inc_last - first + 1) : 0;
  GroupedSeries moments(R, mpts), increments(R, std::max<std::size_t>(ipts, 1));
  std::vector<CompensatedSum> m1(mpts), m2(mpts), i1(ipts), i2(ipts);
  for (std::size_t r = 0; r < R; ++r) {
    moments.count(r);
    increments.count(r);
    for (std::size_t i = 0; i < mpts; ++i) {
      const double v = abs_pow(std::abs(batch.z(r, first + static_cast<int>(i), lambda_index)), p);
      moments.add(r, i, v);
      m1[i].add(v);
      m2[i].add(v * v);
    }
    for (std::size_t i = 0; i < ipts; ++i) {
      const int n = first + static_cast<int>(i);
      const double v = abs_pow(std::abs(batch.z(r, n + 1, lambda_index) - batch.z(r, n, lambda_index)), p);
      increments.add(r, i, v);
      i1[i].add(v);
      i2[i].add(v * v);
    }
  }

  const double rn = static_cast<double>(R);
  auto mean_se = [rn](const CompensatedSum& s1, const CompensatedSum& s2) {
    const double mean = s1.value() / rn;
    const double var = std::max(0.0, (s2.value() / rn - mean * mean) * rn / (rn - 1));
    return std::pair{mean, std::sqrt(var / rn)};
  };
  // Increments below kDegenerateTol (in |dZ|) are rounding noise of a constant path.
  const double inc_floor = std::pow(kDegenerateTol, p);
  bool noisy = false, all_increments_zero = ipts > 0, any_increment_zero = false, moment_var_zero = true;
  std::vector<double> imeans(ipts);
  for (std::size_t i = 0; i < mpts; ++i) {
    const auto [mean, se] = mean_se(m1[i], m2[i]);
    if (se > 0.5 * mean) noisy = true;
    if (se > kDegenerateTol * mean) moment_var_zero = false;
  }
  for (std::size_t i = 0; i < ipts; ++i) {
    const auto [mean, se] = mean_se(i1[i], i2[i]);
    imeans[i] = mean;
    if (mean > inc_floor) all_increments_zero = false;
    if (!(mean > 0)) any_increment_zero = true;
    if (mean > 0 && se > 0.5 * mean) noisy = true;
  }
  for (std::size_t i = 1; i < ipts; ++i) d.cauchy_rates.push_back(imeans[i - 1] > 0 ? imeans[i] / imeans[i - 1] : 0.0);

  std::vector<double> xm(mpts), xi(ipts);
  std::iota(xm.begin(), xm.end(), static_cast<double>(first));
  std::iota(xi.begin(), xi.end(), static_cast<double>(first));
  const auto slope = log_slope(moments, xm);
  d.slope = slope.estimate;
  d.slope_lo = slope.estimate - kZ95 * slope.se;
  d.slope_hi = slope.estimate + kZ95 * slope.se;

  if (all_increments_zero && moment_var_zero) {
    d.verdict = EmpiricalVerdict::bounded;
    d.basis = "degenerate";
    d.notes.push_back("all increments vanish; Z_n is constant");
    return d;
  }

  JackknifeResult rate;
  if (ipts >= 3 && !any_increment_zero) rate = log_slope(increments, xi);
  if (rate.valid) {
    d.increment_rate = std::exp(rate.estimate);
    d.rate_lo = std::exp(rate.estimate - kZ95 * rate.se);
    d.rate_hi = std::exp(rate.estimate + kZ95 * rate.se);
  }
  if (noisy) {
    d.verdict = EmpiricalVerdict::inconclusive;
    d.notes.push_back("standard error exceeds 50% of an estimate in the window");
    return d;
  }
  if (rate.valid && d.rate_hi < 1.0) {
    d.verdict = EmpiricalVerdict::bounded;
    d.basis = "increment_rate";
  } else if (rate.valid && d.rate_lo > 1.0) {
    d.verdict = EmpiricalVerdict::growing;
    d.basis = "increment_rate";
  } else if (slope.valid) {
    d.basis = "moment_slope";
    d.verdict = d.slope_lo <= 0.0 ? EmpiricalVerdict::bounded : EmpiricalVerdict::growing;
  }
  return d;
}

MCEstimate fractional_moment_transform(std::span<const double> samples, double a, FractionalQuadrature quad) {
  if (!(a > 0.0 && a < 1.0)) throw PreconditionError("a must lie in (0, 1)");
  if (samples.empty()) throw PreconditionError("no samples");
  if (!(quad.s_min > 0 && quad.s_max > quad.s_min) || quad.nodes < 5)
    throw PreconditionError("invalid quadrature grid");
  for (double x : samples)
    if (!(x >= 0.0) || !std::isfinite(x)) throw PreconditionError("samples must be finite and nonnegative");

  const double scale = a / std::tgamma(1.0 - a);
  const auto& k = kernels::active();
  const double lo = std::log(quad.s_min), hi = std::log(quad.s_max);
  const int last = quad.nodes - 1;

  // Per-sample g(x) = scale * [sum_i w_i s_i^{-a} (1 - e^{-s_i x}) + x s_min^{1-a}/(1-a) + 1{x>0} s_max^{-a}/a],
  // trapezoid in u = log s; its sample mean is the estimate. Both grids keep both endpoints.
  auto functional = [&](int stride) {
    std::vector<int> idx;
    for (int i = 0; i < last; i += stride) idx.push_back(i);
    idx.push_back(last);
    std::vector<double> u(idx.size()), nodes(idx.size()), weights(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      u[i] = lo + (hi - lo) * idx[i] / last;
      nodes[i] = std::exp(u[i]);
    }
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const double left = i > 0 ? u[i] - u[i - 1] : 0.0;
      const double right = i + 1 < idx.size() ? u[i + 1] - u[i] : 0.0;
      weights[i] = 0.5 * (left + right) * std::pow(nodes[i], -a);
    }
    const double wsum = compensated_sum(weights);
    const double lower = std::pow(quad.s_min, 1.0 - a) / (1.0 - a);
    const double upper = std::pow(quad.s_max, -a) / a;
    std::vector<double> g(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double x = samples[i];
      g[i] = x == 0.0 ? 0.0 : scale * ((wsum - k.weighted_exp_sum(weights, nodes, x)) + x * lower + upper);
    }
    return g;
  };

  const auto g = functional(1);
  const MCEstimate est = g.size() >= 2 ? mean_estimate(g) : MCEstimate{g[0], 0.0, 1};
  const auto g2 = functional(2);
  const double coarse = compensated_sum(g2) / static_cast<double>(g2.size());
  if (std::abs(coarse - est.mean) > 0.01 * std::abs(est.mean))
    throw ResolutionError("fractional-moment quadrature drifts by more than 1% under grid halving");
  return est;
}

TailProfile hill_tail_index(std::span<const double> samples, std::size_t k) {
  const std::size_t n = samples.size();
  if (k == 0) k = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), 0.6)));
  if (k < 1 || 2 * k >= n) throw PreconditionError("Hill estimator needs 1 <= k < n/2");
  for (double x : samples)
    if (!(x > 0.0) || !std::isfinite(x)) throw PreconditionError("Hill estimator needs positive finite samples");
  std::vector<double> v(samples.begin(), samples.end());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end(), std::greater<>());
  std::sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), std::greater<>());
  const double threshold = v[k];
  CompensatedSum s;
  std::size_t ties = 0;
  for (std::size_t i = 0; i < k; ++i) {
    s.add(std::log(v[i] / threshold));
    if (v[i] == v[i + 1]) ++ties;
  }
  TailProfile t;
  t.k = k;
  t.alpha_hat = s.value() > 0 ? static_cast<double>(k) / s.value() : std::numeric_limits<double>::infinity();
  const double half = kZ95 / std::sqrt(static_cast<double>(k));
  t.ci_lo = t.alpha_hat * std::exp(-half);
  t.ci_hi = t.alpha_hat * std::exp(half);
  t.lattice_warning = static_cast<double>(ties) > 0.1 * static_cast<double>(k);
  return t;
}

std::vector<QuadraticVariationPoint> quadratic_variation_series(const TrajectoryBatch& batch,
                                                                std::size_t lambda_index, double p) {
  check_lambda(batch, lambda_index);
  const int N = batch.generations();
  const std::size_t R = batch.replicas.size();
  std::vector<CompensatedSum> qv(static_cast<std::size_t>(N)), qvp(static_cast<std::size_t>(N));
  for (std::size_t r = 0; r < R; ++r) {
    double cum = 0.0;
    for (int n = 0; n < N; ++n) {
      cum += std::norm(batch.z(r, n + 1, lambda_index) - batch.z(r, n, lambda_index));
      qv[static_cast<std::size_t>(n)].add(cum);
      qvp[static_cast<std::size_t>(n)].add(abs_pow(cum, p / 2.0));
    }
  }
  std::vector<QuadraticVariationPoint> out;
  for (int n = 0; n < N; ++n) {
    out.push_back({n + 1, qv[static_cast<std::size_t>(n)].value() / static_cast<double>(R),
                   qvp[static_cast<std::size_t>(n)].value() / static_cast<double>(R)});
  }
  return out;
}

std::vector<BurkholderPoint> burkholder_ratio_probe(const TrajectoryBatch& batch, std::size_t lambda_index,
                                                    double p) {
  check_lambda(batch, lambda_index);
  if (!(p > 1.0)) throw PreconditionError("Burkholder probe needs p > 1");
  const int N = batch.generations();
  const std::size_t R = batch.replicas.size();
  std::vector<double> cum(R, 0.0), mom(R), cen(R), qv(R);
  std::vector<BurkholderPoint> out;
  for (int n = 1; n <= N; ++n) {
    for (std::size_t r = 0; r < R; ++r) {
      const auto z = batch.z(r, n, lambda_index);
      cum[r] += std::norm(z - batch.z(r, n - 1, lambda_index));
      mom[r] = abs_pow(std::abs(z), p);
      cen[r] = abs_pow(std::abs(z - 1.0), p);
      qv[r] = abs_pow(cum[r], p / 2.0);
    }
    BurkholderPoint b;
    b.horizon = n;
    b.moment = mean_estimate(mom);
    b.centered = mean_estimate(cen);
    b.qv = mean_estimate(qv);
    if (b.qv.mean > 0) {
      b.ratio = b.centered.mean / b.qv.mean;
    } else {
      b.degenerate = true;
    }
    out.push_back(b);
  }
  return out;
}

GrowthRateCheck growth_rate_check(const TrajectoryBatch& batch, const ReproductionModel& model,
                                  std::size_t companion_index, double p, DiagnosticWindow window) {
  if (companion_index >= batch.companion_count()) throw PreconditionError("companion index out of range");
  const double theta = batch.config.companion_thetas[companion_index];
  if (theta == 0.0) throw PreconditionError("growth-rate check requires theta' != 0");
  const double mt = evaluate_m(model, {theta, 0.0}).value.real();
  const double mp = evaluate_m(model, {p * theta, 0.0}).value.real();
  GrowthRateCheck g;
  g.predicted_rate = mp / std::pow(mt, p);
  if (!(g.predicted_rate >= 1.0))
    throw PreconditionError("growth-rate check requires m(p theta')/m(theta')^p >= 1");
  if (model.declared_finiteness(MomentQuantity::real_martingale, p, theta) != Finiteness::finite)
    throw PreconditionError("growth-rate check requires a declared finite E[Z_1(theta')]^p");

  const int N = batch.generations();
  const int first = std::max(1, window.first);
  const int last = window.last < 0 ? N : std::min(window.last, N);
  if (last - first + 1 < 3) throw PreconditionError("growth-rate window needs at least 3 generations");
  const std::size_t pts = static_cast<std::size_t>(last - first + 1);
  const std::size_t R = batch.replicas.size();
  GroupedSeries s(R, pts);
  for (std::size_t r = 0; r < R; ++r) {
    s.count(r);
    for (std::size_t i = 0; i < pts; ++i)
      s.add(r, i, abs_pow(batch.companion(r, first + static_cast<int>(i), companion_index), p));
  }
  std::vector<double> x(pts);
  std::iota(x.begin(), x.end(), static_cast<double>(first));
  const auto fit = log_slope(s, x);
  if (!fit.valid) throw PreconditionError("growth-rate fit needs positive moments across the window");
  g.fitted_rate = std::exp(fit.estimate);
  g.rate_lo = std::exp(fit.estimate - kZ95 * fit.se);
  g.rate_hi = std::exp(fit.estimate + kZ95 * fit.se);

  const auto means = s.means(s.groups());
  std::vector<double> logn(pts), resid(pts);
  for (std::size_t i = 0; i < pts; ++i) {
    logn[i] = std::log(x[i]);
    resid[i] = std::log(means[i]) - x[i] * std::log(g.predicted_rate);
  }
  g.poly_exponent = pts >= 2 ? least_squares(logn, resid).slope : 0.0;
  g.poly_correction_ok = g.rate_lo <= g.predicted_rate;
  return g;
}

}  // namespace brw
