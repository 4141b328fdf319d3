#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "brw/errors.hpp"
#include "brw/estimators.hpp"
#include "oracles.hpp"

using namespace brw;

namespace {

TrajectoryBatch run(const ReproductionModel& m, std::vector<ComplexParameter> lambdas, int n, std::uint64_t r,
                    std::uint64_t seed, std::vector<double> companions = {}, bool qi = false) {
  SimConfig cfg;
  cfg.generations = n;
  cfg.replicas = r;
  cfg.seed = seed;
  cfg.lambdas = std::move(lambdas);
  cfg.companion_thetas = std::move(companions);
  cfg.quadratic_increments = qi;
  return simulate_trajectories(m, cfg);
}

std::vector<double> exponential_samples(std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = e(rng);
  return x;
}

std::vector<double> pareto_samples(std::size_t n, double alpha, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  std::vector<double> x(n);
  for (auto& v : x) v = std::pow(rng.uniform_positive(), -1.0 / alpha);
  return x;
}

}  // namespace

TEST(MeanEstimate, MatchesTextbook) {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const auto e = mean_estimate(x);
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  EXPECT_NEAR(e.se, std::sqrt((1.25 * 4 / 3.0) / 4.0), 1e-15);
  EXPECT_EQ(e.n, 4u);
  const std::vector<double> one{1.0};
  EXPECT_THROW(mean_estimate(one), PreconditionError);
}

TEST(PthMoment, LatticeIsExactlyOne) {
  const auto b = run(ReproductionModel::lattice_deterministic(), {{0.0, 1.0}}, 5, 10, 1);
  for (double p : {0.5, 1.0, 2.0, 3.0}) {
    for (int n = 0; n <= 5; ++n) EXPECT_NEAR(pth_moment(b, 0, p, n).mean, 1.0, 1e-12);
  }
}

TEST(PthMoment, QuadraticMomentMatchesOrthogonalSum) {
  const auto m = ReproductionModel::poisson_gaussian(4.0, 1.0);
  const auto b = run(m, {{0.0, 1.0}}, 5, 10000, 8);
  double ref = 0.0;
  for (int k = 0; k <= 5; ++k) ref += std::pow(std::exp(1.0) / 4.0, k);
  EXPECT_NEAR(ref, oracle::poisson_gaussian_l2(4.0, 1.0, 0.0, 1.0, 5), 1e-9);
  const auto e = pth_moment(b, 0, 2.0, 5);
  EXPECT_LT(std::abs(e.mean - ref), 3.5 * e.se);
}

TEST(QuadraticIncrementRate, GaussianClosedForm) {
  const auto m = ReproductionModel::poisson_gaussian(4.0, 1.0);
  EXPECT_NEAR(quadratic_increment_rate(m, {0.0, 1.3}), std::exp(1.69) / 4.0, 1e-12);
  EXPECT_NEAR(quadratic_increment_rate(m, {0.3, 0.5}), std::exp(0.09 + 0.25) / 4.0, 1e-12);
}

TEST(ConvergenceDiagnostic, LatticeIsDegenerateBounded) {
  const auto b = run(ReproductionModel::lattice_deterministic(), {{0.0, 1.0}}, 6, 20, 1);
  const auto d = convergence_diagnostic(b, 0, 2.0);
  EXPECT_EQ(d.verdict, EmpiricalVerdict::bounded);
  EXPECT_EQ(d.basis, "degenerate");
  EXPECT_NEAR(d.slope, 0.0, 1e-12);
}

TEST(ConvergenceDiagnostic, GrowingIncrementRate) {
  const auto m = ReproductionModel::poisson_gaussian(4.0, 1.0);
  const auto b = run(m, {{0.0, 1.3}}, 7, 3000, 21);
  const double r = quadratic_increment_rate(m, {0.0, 1.3});
  const auto d = convergence_diagnostic(b, 0, 2.0, {}, r);
  EXPECT_EQ(d.verdict, EmpiricalVerdict::growing);
  EXPECT_NEAR(d.increment_rate, r, 0.1 * r);
  ASSERT_TRUE(d.predicted_rate);
  EXPECT_EQ(*d.predicted_rate, r);
}

TEST(ConvergenceDiagnostic, BoundedBelowBoundary) {
  const auto m = ReproductionModel::poisson_gaussian(4.0, 1.0);
  const auto b = run(m, {{0.0, 1.0}}, 7, 3000, 22);
  const auto d = convergence_diagnostic(b, 0, 2.0);
  EXPECT_EQ(d.verdict, EmpiricalVerdict::bounded);
  EXPECT_LT(d.rate_hi, 1.0);
}

TEST(ConvergenceDiagnostic, WindowTooShort) {
  const auto b = run(ReproductionModel::poisson_gaussian(4.0, 1.0), {{0.0, 1.0}}, 3, 50, 1);
  EXPECT_THROW(convergence_diagnostic(b, 0, 2.0, {1, 3}), PreconditionError);
}

TEST(FractionalMoment, DegenerateOne) {
  const std::vector<double> x(1000, 1.0);
  EXPECT_NEAR(fractional_moment_transform(x, 0.5).mean, 1.0, 1e-4);
}

TEST(FractionalMoment, ExponentialHalfMoment) {
  const auto x = exponential_samples(100000, 4);
  const auto e = fractional_moment_transform(x, 0.5);
  EXPECT_NEAR(e.mean, std::sqrt(oracle::kPi) / 2.0, 0.02 * std::sqrt(oracle::kPi) / 2.0);
}

TEST(FractionalMoment, ZerosContributeNothing) {
  std::vector<double> x(1000, 2.0);
  x.resize(2000, 0.0);
  EXPECT_NEAR(fractional_moment_transform(x, 0.3).mean, 0.5 * std::pow(2.0, 0.3), 1e-4);
}

TEST(FractionalMoment, CoarseGridFailsResolution) {
  const auto x = exponential_samples(1000, 5);
  EXPECT_THROW(fractional_moment_transform(x, 0.5, {1e-6, 1e6, 5}), ResolutionError);
}

TEST(FractionalMoment, RejectsBadOrder) {
  const std::vector<double> x(10, 1.0);
  EXPECT_THROW(fractional_moment_transform(x, 1.0), PreconditionError);
  EXPECT_THROW(fractional_moment_transform(std::vector<double>{}, 0.5), PreconditionError);
}

TEST(Hill, ParetoTailIndex) {
  const auto x = pareto_samples(100000, 1.5, 12);
  const auto t = hill_tail_index(x);
  EXPECT_EQ(t.k, static_cast<std::size_t>(std::floor(std::pow(1e5, 0.6))));
  EXPECT_GE(t.alpha_hat, 1.35);
  EXPECT_LE(t.alpha_hat, 1.65);
  EXPECT_LT(t.ci_lo, t.alpha_hat);
  EXPECT_GT(t.ci_hi, t.alpha_hat);
  EXPECT_FALSE(t.lattice_warning);
}

TEST(Hill, LightTailRejected) {
  const auto x = exponential_samples(100000, 13);
  EXPECT_GT(hill_tail_index(x).alpha_hat, 3.0);
  // Exponential excesses give alpha_hat ~ log(n/k): no stable plateau.
  EXPECT_GT(hill_tail_index(x, 100).alpha_hat, hill_tail_index(x, 3000).alpha_hat + 1.0);
}

TEST(Hill, LatticeWarningOnTies) {
  std::vector<double> x;
  for (int i = 0; i < 10000; ++i) x.push_back(1.0 + static_cast<double>(i % 7));
  EXPECT_TRUE(hill_tail_index(x, 100).lattice_warning);
}

TEST(Hill, RejectsBadK) {
  const auto x = pareto_samples(100, 1.5, 1);
  EXPECT_THROW(hill_tail_index(x, 50), PreconditionError);
  EXPECT_NO_THROW(hill_tail_index(x, 49));
}

TEST(QuadraticVariation, NonDecreasingInHorizon) {
  const auto b = run(ReproductionModel::poisson_gaussian(3.0, 1.0), {{0.1, 0.8}}, 6, 500, 3);
  const auto qv = quadratic_variation_series(b, 0, 1.5);
  ASSERT_EQ(qv.size(), 6u);
  EXPECT_EQ(qv.front().horizon, 1);
  for (std::size_t i = 1; i < qv.size(); ++i) {
    EXPECT_GE(qv[i].mean_qv, qv[i - 1].mean_qv);
    EXPECT_GE(qv[i].mean_qv_pow, qv[i - 1].mean_qv_pow);
  }
}

TEST(Burkholder, LatticeIsDegenerate) {
  const auto b = run(ReproductionModel::lattice_deterministic(), {{0.0, 1.0}}, 4, 10, 1);
  const auto pts = burkholder_ratio_probe(b, 0, 2.0);
  for (const auto& pt : pts) {
    EXPECT_NEAR(pt.moment.mean, 1.0, 1e-12);
    EXPECT_TRUE(pt.degenerate);
    EXPECT_FALSE(pt.ratio);
  }
}

TEST(Burkholder, QuadraticRatioIsOne) {
  const auto m = ReproductionModel::poisson_gaussian(4.0, 1.0);
  const auto b = run(m, {{0.0, 1.0}}, 6, 10000, 31);
  const auto pts = burkholder_ratio_probe(b, 0, 2.0);
  const double r = std::exp(1.0) / 4.0;
  for (const auto& pt : pts) {
    if (pt.horizon < 1) continue;
    // E|Z_N - 1|^2 = E sum_{n<N} |dZ_n|^2 = sum_{k<N} r^{k+1}.
    double ref = 0.0;
    for (int k = 0; k < pt.horizon; ++k) ref += std::pow(r, k + 1);
    EXPECT_LT(std::abs(pt.qv.mean - ref), 3.5 * pt.qv.se) << pt.horizon;
    ASSERT_TRUE(pt.ratio);
    EXPECT_NEAR(*pt.ratio, 1.0, 0.1);
  }
}

TEST(Burkholder, RequiresPAboveOne) {
  const auto b = run(ReproductionModel::lattice_deterministic(), {{0.0, 1.0}}, 2, 4, 1);
  EXPECT_THROW(burkholder_ratio_probe(b, 0, 1.0), PreconditionError);
}

TEST(GrowthRate, HypothesisGates) {
  const auto m = ReproductionModel::poisson_gaussian(4.0, 1.0);
  const auto b = run(m, {}, 4, 100, 2, {0.0, 0.1});
  EXPECT_THROW(growth_rate_check(b, m, 0, 2.0), PreconditionError);  // theta' = 0
  EXPECT_THROW(growth_rate_check(b, m, 1, 2.0), PreconditionError);  // predicted < 1
}

TEST(StableSum, ClosedFormMatchesQuadratureAndOracle) {
  const double cf = stable_moment_closed_form(1.5, 1.0, 1.2);
  const double q = stable_moment_quadrature(1.5, 1.0, 1.2);
  EXPECT_NEAR(cf, oracle::kStableMomentAlpha15P12, 1e-8);
  EXPECT_NEAR(q, oracle::kStableMomentAlpha15P12, 1e-8);
}

TEST(StableSum, SingleSummandIsParetoMoment) {
  const auto r = stable_sum_limit_check({1.5, 1.0, 1.2, 1, 1000}, 3);
  EXPECT_NEAR(r.empirical.mean, oracle::pareto_moment(1.0, 1.5, 1.2), 1e-9);
}

TEST(StableSum, ModerateSizeWithinFivePercent) {
  const auto r = stable_sum_limit_check({1.5, 1.0, 1.2, 1000, 2000}, 4);
  EXPECT_LT(r.rel_err, 0.05);
  EXPECT_EQ(r.empirical.n, 2000u);
}

TEST(StableSum, RejectsPAtOrAboveAlpha) {
  EXPECT_THROW(stable_sum_limit_check({1.5, 1.0, 1.5, 10, 10}, 1), PreconditionError);
  EXPECT_THROW(stable_sum_limit_check({2.5, 1.0, 1.2, 10, 10}, 1), PreconditionError);
}
