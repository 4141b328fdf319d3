#include <gtest/gtest.h>

#include <cmath>

#include "brw/errors.hpp"
#include "brw/estimators.hpp"
#include "brw/simulator.hpp"
#include "oracles.hpp"

using namespace brw;

namespace {

ReproductionModel two_point_binary(double x0, double x1, double q0) {
  CountLaw c;
  c.kind = CountLaw::Kind::fixed;
  c.k = 2;
  DisplacementLaw d;
  d.kind = DisplacementLaw::Kind::two_point;
  d.x0 = x0;
  d.x1 = x1;
  d.prob0 = q0;
  return ReproductionModel::compound(c, d);
}

}  // namespace

TEST(StepGeneration, LatticeIsDeterministic) {
  const auto m = ReproductionModel::lattice_deterministic(2.0 * oracle::kPi, 2);
  RandomStream rng(1, 0);
  const auto g = step_generation({{0.0}, 0}, m, rng);
  EXPECT_EQ(g.n, 1);
  ASSERT_EQ(g.positions.size(), 2u);
  EXPECT_EQ(g.positions[0], 2.0 * oracle::kPi);
  EXPECT_EQ(g.positions[1], 2.0 * oracle::kPi);
}

TEST(StepGeneration, ExtinctionIsAbsorbing) {
  const auto m = ReproductionModel::poisson_gaussian(2.0, 1.0);
  RandomStream rng(1, 0);
  const auto g = step_generation({{}, 4}, m, rng);
  EXPECT_TRUE(g.positions.empty());
  EXPECT_EQ(g.n, 5);
}

TEST(StepGeneration, MeanPopulationTwo) {
  const auto m = ReproductionModel::poisson_gaussian(2.0, 1.0);
  RandomStream rng(9, 0);
  double s = 0.0, s2 = 0.0;
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    const double k = static_cast<double>(step_generation({{0.0}, 0}, m, rng).positions.size());
    s += k;
    s2 += k * k;
  }
  const double mean = s / trials, se = std::sqrt((s2 / trials - mean * mean) / trials);
  EXPECT_LT(std::abs(mean - 2.0), 3.0 * se);
}

TEST(StepGeneration, CountsGroupChildren) {
  const auto m = ReproductionModel::poisson_gaussian(3.0, 1.0);
  RandomStream rng(2, 0);
  std::vector<std::uint64_t> counts;
  const Generation parents{{0.0, 10.0, 20.0}, 1};
  const auto g = step_generation(parents, m, rng, 1000, &counts);
  ASSERT_EQ(counts.size(), 3u);
  std::size_t at = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::uint64_t c = 0; c < counts[i]; ++c, ++at) EXPECT_LT(std::abs(g.positions[at] - parents.positions[i]), 8.0);
  }
  EXPECT_EQ(at, g.positions.size());
}

TEST(StepGeneration, CapReportsNextGeneration) {
  const auto m = ReproductionModel::lattice_deterministic(1.0, 3);
  RandomStream rng(1, 0);
  try {
    step_generation({std::vector<double>(10, 0.0), 6}, m, rng, 20);
    FAIL() << "cap not enforced";
  } catch (const PopulationCapError& e) {
    EXPECT_EQ(e.generation(), 7);
  }
}

TEST(QuadraticIncrementSum, LatticeIsZero) {
  const auto m = ReproductionModel::lattice_deterministic(2.0 * oracle::kPi, 2);
  RandomStream rng(1, 0);
  std::vector<std::uint64_t> counts;
  const Generation parents{{0.0, 2.0 * oracle::kPi}, 1};
  const auto kids = step_generation(parents, m, rng, 100, &counts);
  const auto ml = *m.laplace_analytic({0.0, 1.0});
  EXPECT_NEAR(quadratic_increment_sum(parents, counts, kids, {0.0, 1.0}, ml), 0.0, 1e-24);
}

TEST(QuadraticIncrementSum, SingleAncestorIsFirstIncrement) {
  const auto m = ReproductionModel::poisson_gaussian(4.0, 1.0);
  RandomStream rng(4, 0);
  std::vector<std::uint64_t> counts;
  const Generation root{{0.0}, 0};
  const auto kids = step_generation(root, m, rng, 1000, &counts);
  const ComplexParameter l{0.0, 1.0};
  const auto ml = *m.laplace_analytic(l);
  std::complex<double> z1 = 0.0;
  for (double x : kids.positions) z1 += std::exp(-l.value() * x);
  z1 /= ml;
  EXPECT_NEAR(quadratic_increment_sum(root, counts, kids, l, ml), std::norm(z1 - 1.0), 1e-12);
}

TEST(QuadraticIncrementSum, PoissonGaussianMeanMatchesOracle) {
  const auto m = ReproductionModel::poisson_gaussian(4.0, 1.0);
  const ComplexParameter l{0.0, 1.0};
  const auto ml = *m.laplace_analytic(l);
  RandomStream rng(6, 0);
  double s = 0.0, s2 = 0.0;
  const int trials = 100000;
  std::vector<std::uint64_t> counts;
  for (int t = 0; t < trials; ++t) {
    const Generation root{{0.0}, 0};
    const auto kids = step_generation(root, m, rng, 1000, &counts);
    const double q = quadratic_increment_sum(root, counts, kids, l, ml);
    s += q;
    s2 += q * q;
  }
  const double mean = s / trials, se = std::sqrt((s2 / trials - mean * mean) / trials);
  const double ref = oracle::poisson_gaussian_z1_second_moment(4.0, 1.0, 0.0, 1.0) - 1.0;
  EXPECT_NEAR(ref, std::exp(1.0) / 4.0, 1e-9);
  EXPECT_LT(std::abs(mean - ref), 3.0 * se);
}

TEST(Simulate, LatticeCaseOneIsExactlyOne) {
  const auto m = ReproductionModel::lattice_deterministic(2.0 * oracle::kPi, 2);
  SimConfig cfg;
  cfg.generations = 6;
  cfg.replicas = 5;
  cfg.lambdas = {{0.0, 1.0}};
  const auto b = simulate_trajectories(m, cfg);
  for (std::size_t r = 0; r < 5; ++r) {
    for (int n = 0; n <= 6; ++n) {
      EXPECT_NEAR(std::abs(b.z(r, n, 0) - 1.0), 0.0, 1e-12);
      EXPECT_EQ(b.replicas[r].population[static_cast<std::size_t>(n)], 1ull << n);
    }
  }
}

TEST(Simulate, MeanOneAndMartingaleDifferences) {
  const auto m = ReproductionModel::poisson_gaussian(4.0, 1.0);
  SimConfig cfg;
  cfg.generations = 5;
  cfg.replicas = 10000;
  cfg.seed = 77;
  cfg.lambdas = {{0.0, 1.0}, {0.2, 0.6}};
  const auto b = simulate_trajectories(m, cfg);
  std::vector<double> re(cfg.replicas), im(cfg.replicas), dre(cfg.replicas);
  for (std::size_t l = 0; l < 2; ++l) {
    for (int n = 1; n <= 5; ++n) {
      for (std::size_t r = 0; r < cfg.replicas; ++r) {
        re[r] = b.z(r, n, l).real();
        im[r] = b.z(r, n, l).imag();
        dre[r] = (b.z(r, n, l) - b.z(r, n - 1, l)).real();
      }
      const auto er = mean_estimate(re), ei = mean_estimate(im), ed = mean_estimate(dre);
      EXPECT_LT(std::abs(er.mean - 1.0), 3.5 * er.se) << "lambda " << l << " n " << n;
      EXPECT_LT(std::abs(ei.mean), 3.5 * ei.se);
      EXPECT_LT(std::abs(ed.mean), 3.5 * ed.se);
    }
  }
}

TEST(Simulate, TwoPointSecondMomentMatchesEnumeration) {
  const double x0 = 0.0, x1 = 1.0, q0 = 0.3;
  const ComplexParameter l{0.1, 1.2};
  const auto m = two_point_binary(x0, x1, q0);
  const auto exact = oracle::enumerate_two_point(x0, x1, q0, l.value());
  EXPECT_NEAR(std::abs(exact.mean_z2 - 1.0), 0.0, 1e-12);

  SimConfig cfg;
  cfg.generations = 2;
  cfg.replicas = 100000;
  cfg.seed = 5;
  cfg.lambdas = {l};
  cfg.quadratic_increments = true;
  const auto b = simulate_trajectories(m, cfg);
  const auto z2 = pth_moment(b, 0, 2.0, 2);
  EXPECT_LT(std::abs(z2.mean - exact.z2_second), 3.5 * z2.se);
  const auto d1 = increment_moment(b, 0, 2.0, 1);
  EXPECT_LT(std::abs(d1.mean - exact.increment1), 3.5 * d1.se);

  // Orthogonal increments: E|dZ_1|^2 = E|dZ_0|^2 * m(2 theta)/|m|^2.
  EXPECT_NEAR(exact.increment1, exact.increment0 * quadratic_increment_rate(m, l), 1e-12);
  EXPECT_NEAR(exact.z2_second, 1.0 + exact.increment0 + exact.increment1, 1e-12);
}

TEST(Simulate, PopulationBookkeeping) {
  const auto m = ReproductionModel::poisson_gaussian(2.0, 1.0);
  SimConfig cfg;
  cfg.generations = 6;
  cfg.replicas = 200;
  cfg.seed = 3;
  cfg.lambdas = {{0.0, 0.5}};
  cfg.companion_thetas = {0.0};
  const auto b = simulate_trajectories(m, cfg);
  for (std::size_t r = 0; r < cfg.replicas; ++r) {
    const auto& rep = b.replicas[r];
    ASSERT_EQ(rep.population.size(), 7u);
    EXPECT_EQ(rep.population[0], 1u);
    for (int n = 0; n <= 6; ++n) {
      const double expect = static_cast<double>(rep.population[static_cast<std::size_t>(n)]) / std::pow(2.0, n);
      EXPECT_NEAR(b.companion(r, n, 0), expect, 1e-12 * (1.0 + expect));
      if (rep.extinct_at >= 0 && n >= rep.extinct_at) {
        EXPECT_EQ(rep.population[static_cast<std::size_t>(n)], 0u);
      }
    }
  }
}

TEST(Simulate, ThreadCountDoesNotChangeResults) {
  const auto m = ReproductionModel::poisson_gaussian(3.0, 1.0);
  SimConfig cfg;
  cfg.generations = 5;
  cfg.replicas = 64;
  cfg.seed = 123;
  cfg.lambdas = {{0.0, 1.0}, {0.3, 0.2}};
  cfg.companion_thetas = {0.5};
  cfg.quadratic_increments = true;
  cfg.threads = 1;
  const auto a = simulate_trajectories(m, cfg);
  cfg.threads = 4;
  const auto b = simulate_trajectories(m, cfg);
  ASSERT_EQ(a.replicas.size(), b.replicas.size());
  for (std::size_t r = 0; r < a.replicas.size(); ++r) {
    EXPECT_EQ(a.replicas[r].z, b.replicas[r].z);
    EXPECT_EQ(a.replicas[r].companions, b.replicas[r].companions);
    EXPECT_EQ(a.replicas[r].population, b.replicas[r].population);
    EXPECT_EQ(a.replicas[r].quadratic_increments, b.replicas[r].quadratic_increments);
  }
}

TEST(Simulate, RejectsCaseThreeLambda) {
  const auto m = ReproductionModel::binary_uniform(1.0);
  SimConfig cfg;
  cfg.lambdas = {{0.0, oracle::kPi}};
  EXPECT_THROW(simulate_trajectories(m, cfg), CaseThreeError);
}

TEST(Simulate, CapErrorFromSimulation) {
  const auto m = ReproductionModel::lattice_deterministic(1.0, 2);
  SimConfig cfg;
  cfg.generations = 12;
  cfg.replicas = 3;
  cfg.max_population = 1000;
  cfg.lambdas = {{0.0, 0.5}};
  try {
    simulate_trajectories(m, cfg);
    FAIL() << "cap not enforced";
  } catch (const PopulationCapError& e) {
    EXPECT_EQ(e.generation(), 10);  // 2^10 = 1024 > 1000
  }
}
