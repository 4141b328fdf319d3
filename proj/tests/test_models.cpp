#include <gtest/gtest.h>

#include <cmath>

#include "brw/errors.hpp"
#include "brw/model_spec.hpp"
#include "brw/models.hpp"
#include "brw/random.hpp"
#include "oracles.hpp"

using namespace brw;

TEST(Models, PoissonGaussianLaplaceMatchesQuadrature) {
  const auto m = ReproductionModel::poisson_gaussian(4.0, 1.0);
  for (ComplexParameter l : {ComplexParameter{0, 1}, {0.3, 0.7}, {-0.5, 1.4}, {1.0, 0.0}}) {
    const auto v = *m.laplace_analytic(l);
    const auto ref = 4.0 * oracle::gaussian_laplace(0.0, 1.0, l.value());
    EXPECT_NEAR(v.real(), ref.real(), 1e-9);
    EXPECT_NEAR(v.imag(), ref.imag(), 1e-9);
  }
}

TEST(Models, BinaryUniformLaplaceMatchesQuadrature) {
  const auto m = ReproductionModel::binary_uniform(1.0);
  for (ComplexParameter l : {ComplexParameter{0, 1}, {0.4, 2.5}, {-0.2, 5.0}}) {
    const auto v = *m.laplace_analytic(l);
    const auto ref = 2.0 * oracle::uniform_laplace(1.0, l.value());
    EXPECT_NEAR(v.real(), ref.real(), 1e-10);
    EXPECT_NEAR(v.imag(), ref.imag(), 1e-10);
  }
}

TEST(Models, CaseThreePoissonTriangleTransform) {
  const auto m = ReproductionModel::case3_poisson(0.0);
  for (double g : {0.0, 0.25, 0.5, 0.9}) {
    const auto v = *m.laplace_analytic({0.0, g});
    EXPECT_NEAR(v.real(), 2.0 * (1.0 - g), 1e-12);
    EXPECT_NEAR(v.imag(), 0.0, 1e-12);
    EXPECT_NEAR(v.real(), 2.0 * oracle::fejer_cosine_transform(g), 2e-3);
  }
  EXPECT_EQ(m.laplace_analytic({0.0, 1.5})->real(), 0.0);
  EXPECT_TRUE(std::isinf(m.laplace_analytic({0.3, 0.0})->real()));
}

TEST(Models, LatticeLaplaceIsPeriodic) {
  const auto m = ReproductionModel::lattice_deterministic(2.0 * oracle::kPi, 2);
  const auto v = *m.laplace_analytic({0.25, 1.0});
  EXPECT_NEAR(std::abs(v), 2.0 * std::exp(-0.25 * 2.0 * oracle::kPi), 1e-12);
}

TEST(Models, ZetaCountMeanAndTail) {
  const auto m = ReproductionModel::discrete_pareto_count(1.5, 1.0);
  EXPECT_NEAR(m.mean_offspring(), std::riemann_zeta(1.5) / std::riemann_zeta(2.5), 1e-12);
  EXPECT_EQ(m.metadata().tail_index, 1.5);
  EXPECT_TRUE(std::isinf(m.count_law().factorial_moment2()));
}

TEST(Models, RejectsIllegalParameters) {
  EXPECT_THROW(ReproductionModel::poisson_gaussian(0.8, 1.0), ConfigError);
  EXPECT_THROW(ReproductionModel::poisson_gaussian(2.0, -1.0), ConfigError);
  EXPECT_THROW(ReproductionModel::binary_uniform(0.0), ConfigError);
  EXPECT_THROW(ReproductionModel::discrete_pareto_count(2.5, 1.0), ConfigError);
  EXPECT_THROW(ReproductionModel::lattice_deterministic(1.0, 1), ConfigError);
  try {
    ReproductionModel::poisson_gaussian(0.5, 1.0);
    FAIL() << "subcritical mean accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.parameter(), "mu");
  }
}

TEST(Models, PoissonCountSampleMean) {
  const auto m = ReproductionModel::poisson_gaussian(3.0, 1.0);
  RandomStream rng(11, 0);
  std::vector<std::uint64_t> counts(200000);
  m.sample_counts(rng, counts);
  double s = 0.0, s2 = 0.0;
  for (auto c : counts) {
    s += static_cast<double>(c);
    s2 += static_cast<double>(c) * static_cast<double>(c);
  }
  const double n = static_cast<double>(counts.size());
  const double mean = s / n, var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 3.0, 3.0 * std::sqrt(var / n) + 1e-12);
  EXPECT_NEAR(var, 3.0, 0.05);
}

TEST(Models, GaussianDisplacementMoments) {
  const auto m = ReproductionModel::poisson_gaussian(2.0, 1.7);
  RandomStream rng(5, 1);
  std::vector<double> x(200001);
  m.sample_displacements(rng, x);
  double s = 0.0, s2 = 0.0;
  for (double v : x) {
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(x.size());
  EXPECT_NEAR(s / n, 0.0, 3.0 * 1.7 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.7 * 1.7, 0.03);
}

TEST(Models, FejerSamplesMatchCharacteristicFunction) {
  const auto m = ReproductionModel::case3_poisson(0.0);
  RandomStream rng(3, 2);
  std::vector<double> x(100000);
  m.sample_displacements(rng, x);
  for (double g : {0.3, 0.7}) {
    double c = 0.0;
    for (double v : x) c += std::cos(g * v);
    EXPECT_NEAR(c / static_cast<double>(x.size()), 1.0 - g, 0.01);
  }
}

TEST(Models, FejerSamplingRejectsTilt) {
  const auto m = ReproductionModel::case3_poisson(0.5);
  RandomStream rng(1, 1);
  std::vector<double> x(4);
  EXPECT_THROW(m.sample_displacements(rng, x), ConfigError);
}

TEST(Models, DeclaredFinitenessOverrides) {
  auto m = ReproductionModel::poisson_gaussian(2.0, 1.0);
  EXPECT_EQ(m.declared_finiteness(MomentQuantity::complex_martingale, 3.0, 0.2), Finiteness::finite);
  ModelMetadata md = m.metadata();
  md.moments.push_back({MomentQuantity::complex_martingale, 2.5, 4.0, -1.0, 1.0, Finiteness::infinite});
  m.set_metadata(md);
  EXPECT_EQ(m.declared_finiteness(MomentQuantity::complex_martingale, 3.0, 0.2), Finiteness::infinite);
  EXPECT_EQ(m.declared_finiteness(MomentQuantity::complex_martingale, 2.0, 0.2), Finiteness::finite);
}

TEST(ModelSpec, BuiltinRoundTrip) {
  const auto m = parse_model_spec("builtin:poisson_gaussian(mu=4,sigma=1)");
  EXPECT_EQ(m.kind(), ModelKind::poisson_gaussian);
  EXPECT_EQ(m.params().at("mu"), 4.0);
  const auto again = parse_model_spec(m.describe());
  EXPECT_EQ(again.describe(), m.describe());
  const auto j = model_to_json(m);
  EXPECT_EQ(model_from_json(j).describe(), m.describe());
}

TEST(ModelSpec, CompoundDocument) {
  const auto m = parse_model_spec(
      R"({"kind":"compound","count":{"law":"fixed","k":3},"displacement":{"law":"two_point","x0":0,"x1":1,"prob0":0.25}})");
  EXPECT_EQ(m.mean_offspring(), 3.0);
  const auto v = *m.laplace_analytic({0.0, oracle::kPi});
  EXPECT_NEAR(v.real(), 3.0 * (0.25 - 0.75), 1e-12);
}

TEST(ModelSpec, MetadataParsed) {
  const auto m = parse_model_spec(
      R"({"kind":"poisson_gaussian","params":{"mu":2,"sigma":1},
          "metadata":{"tail_index":1.7,"xlogx_finite":false,"seneta_heyde_norming":{"kind":"log_power","power":2}}})");
  EXPECT_EQ(m.metadata().tail_index, 1.7);
  EXPECT_FALSE(m.metadata().xlogx_finite);
  ASSERT_TRUE(m.metadata().seneta_heyde_norming);
  EXPECT_EQ(m.metadata().seneta_heyde_norming->power, 2.0);
}

TEST(ModelSpec, RejectsUnknownInputs) {
  EXPECT_THROW(parse_model_spec("builtin:no_such_family()"), ConfigError);
  EXPECT_THROW(parse_model_spec("builtin:poisson_gaussian(mu=4,nu=1)"), ConfigError);
  EXPECT_THROW(parse_model_spec("{not json"), ConfigError);
  EXPECT_THROW(parse_model_spec("/nonexistent/model.json"), ConfigError);
}
