#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "brw/errors.hpp"
#include "brw/harness.hpp"

using namespace brw;
using nlohmann::json;

namespace {

ExperimentConfig sweep_config(const std::string& model, json grid) {
  return experiment_from_json({{"mode", "sweep"}, {"model", model}, {"grid", std::move(grid)}});
}

std::string csv_of(const RegimeReport& r) {
  std::ostringstream out;
  write_regime_csv(r, out);
  return out.str();
}

}  // namespace

TEST(ExperimentConfig, ParsesAxisForms) {
  const auto c = experiment_from_json({{"model", "builtin:poisson_gaussian(mu=4,sigma=1)"},
                                       {"grid", {{"theta", 0.25}, {"gamma", {0.5, 1.0}}, {"p", {{"min", 1.5}, {"max", 2.0}, {"steps", 3}}}}},
                                       {"simulation", {{"generations", 5}, {"replicas", 10}, {"seed", 9}}}});
  EXPECT_EQ(c.mode, ExperimentMode::verify);
  EXPECT_EQ(c.thetas, std::vector<double>{0.25});
  EXPECT_EQ(c.gammas, (std::vector<double>{0.5, 1.0}));
  ASSERT_EQ(c.ps.size(), 3u);
  EXPECT_DOUBLE_EQ(c.ps[1], 1.75);
  EXPECT_EQ(c.simulation.generations, 5);
  EXPECT_EQ(c.simulation.seed, 9u);
  EXPECT_EQ(c.boundary_band, 0.05);

  const auto again = experiment_from_json(experiment_to_json(c));
  EXPECT_EQ(again.gammas, c.gammas);
  EXPECT_EQ(again.ps, c.ps);
  EXPECT_EQ(again.simulation.replicas, c.simulation.replicas);
}

TEST(ExperimentConfig, RejectsBadDocuments) {
  EXPECT_THROW(experiment_from_json({{"model", "builtin:poisson_gaussian()"}}), ConfigError);
  EXPECT_THROW(experiment_from_json({{"schema_version", 7}, {"model", "x"}, {"grid", {{"gamma", 1}}}}), ConfigError);
  EXPECT_THROW(experiment_from_json({{"mode", "explore"}, {"model", "x"}, {"grid", {{"gamma", 1}}}}), ConfigError);
  EXPECT_THROW(load_experiment("/nonexistent/experiment.json"), ConfigError);
}

TEST(Sweep, QuadraticBoundaryAtSqrtLogMu) {
  const auto c = sweep_config("builtin:poisson_gaussian(mu=4,sigma=1)",
                              {{"gamma", {{"min", 0.02}, {"max", 2.0}, {"steps", 100}}},
                               {"p", {{"min", 1.02}, {"max", 3.0}, {"steps", 100}}}});
  const auto r = run_sweep(c);
  EXPECT_EQ(r.rows.size(), 10000u);
  EXPECT_FALSE(r.agreement_rate);
  // Both axes have step 0.02; p = 2 is grid point 49.
  double last_converging = -1.0, first_diverging = 1e9;
  for (const auto& row : r.rows) {
    EXPECT_FALSE(row.empirical);
    if (std::abs(row.p - 2.0) > 1e-9) continue;
    if (row.predicted == Verdict::converges) last_converging = std::max(last_converging, row.gamma);
    if (row.predicted == Verdict::diverges) first_diverging = std::min(first_diverging, row.gamma);
  }
  const double g_star = std::sqrt(std::log(4.0));
  EXPECT_LT(last_converging, g_star);
  EXPECT_GT(first_diverging, g_star);
  EXPECT_NEAR(first_diverging - last_converging, 0.02, 1e-9);
}

TEST(Sweep, LatticeIsAllCaseOne) {
  const auto r = run_sweep(sweep_config("builtin:lattice_deterministic(d=6.283185307179586,children=2)",
                                        {{"gamma", {0.5, 1.0, 2.0}}, {"p", {1.5, 2.0}}}));
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.case_label, CaseLabel::I);
    EXPECT_EQ(row.predicted, Verdict::converges);
  }
}

TEST(Sweep, GammaZeroLineIsCaseOne) {
  const auto r = run_sweep(sweep_config("builtin:poisson_gaussian(mu=3,sigma=1)", {{"gamma", 0.0}, {"p", {1.5, 2.5}}}));
  ASSERT_EQ(r.rows.size(), 2u);
  for (const auto& row : r.rows) EXPECT_EQ(row.case_label, CaseLabel::I);
}

TEST(Sweep, CaseThreeRowsExcluded) {
  const auto r = run_sweep(sweep_config("builtin:case3_poisson(theta0=0)", {{"gamma", {0.5, 0.9, 1.1, 2.0}}, {"p", 1.5}}));
  ASSERT_EQ(r.rows.size(), 4u);
  EXPECT_EQ(r.rows[0].excluded, "");
  EXPECT_EQ(r.rows[2].excluded, "case_three");
  EXPECT_EQ(r.rows[3].excluded, "case_three");
  EXPECT_NE(r.rows[3].note.find("not a martingale"), std::string::npos);
  EXPECT_EQ(r.exclusions.at("case_three"), 2u);
}

TEST(Sweep, ZetaFlipsAtTailIndex) {
  const auto r = run_sweep(sweep_config("builtin:discrete_pareto_count(alpha=1.5,sigma=1)",
                                        {{"gamma", 0.2}, {"p", {1.2, 1.4, 1.6, 1.8}}}));
  ASSERT_EQ(r.rows.size(), 4u);
  EXPECT_EQ(r.rows[0].predicted, Verdict::converges);
  EXPECT_EQ(r.rows[1].predicted, Verdict::converges);
  EXPECT_EQ(r.rows[2].predicted, Verdict::diverges);
  EXPECT_EQ(r.rows[3].predicted, Verdict::diverges);
}

TEST(Sweep, OutputIsDeterministic) {
  const auto c = sweep_config("builtin:poisson_gaussian(mu=4,sigma=1)", {{"gamma", {{"min", 0}, {"max", 2}, {"steps", 9}}}, {"p", {1.5, 2.0}}});
  EXPECT_EQ(csv_of(run_sweep(c)), csv_of(run_sweep(c)));
  EXPECT_EQ(regime_report_json(run_sweep(c)).dump(), regime_report_json(run_sweep(c)).dump());
}

TEST(Sweep, MonteCarloModelNeedsOptIn) {
  const json model = {{"kind", "poisson_gaussian"},
                      {"params", {{"mu", 2}, {"sigma", 1}}},
                      {"metadata", {{"has_analytic_laplace", false}}}};
  auto c = experiment_from_json({{"mode", "sweep"}, {"model", model}, {"grid", {{"gamma", 0.5}}}});
  try {
    run_sweep(c);
    FAIL() << "Monte Carlo sweep ran without opt-in";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.parameter(), "allow_mc");
  }
  c.allow_mc = true;
  EXPECT_EQ(run_sweep(c).rows.size(), 1u);
}

TEST(Verify, QuadraticFlipAgrees) {
  auto c = experiment_from_json({{"model", "builtin:poisson_gaussian(mu=4,sigma=1)"},
                                 {"grid", {{"gamma", {0.6, 0.8, 1.0, 1.4, 1.6}}, {"p", 2.0}}},
                                 {"simulation", {{"generations", 7}, {"replicas", 1000}, {"seed", 2}}}});
  const auto r = run_verify(c);
  ASSERT_EQ(r.rows.size(), 5u);
  EXPECT_EQ(r.rows[0].predicted, Verdict::converges);
  EXPECT_EQ(r.rows[4].predicted, Verdict::diverges);
  ASSERT_TRUE(r.agreement_rate);
  EXPECT_GE(r.scored, 4u);
  EXPECT_EQ(*r.agreement_rate, 1.0);
}

TEST(Verify, CapMarksRows) {
  auto c = experiment_from_json({{"model", "builtin:poisson_gaussian(mu=4,sigma=1)"},
                                 {"grid", {{"gamma", {0.5, 1.5}}, {"p", 2.0}}},
                                 {"simulation", {{"generations", 8}, {"replicas", 20}, {"max_population", 1000}}}});
  const auto r = run_verify(c);
  for (const auto& row : r.rows) EXPECT_EQ(row.excluded, "cap");
  EXPECT_EQ(r.scored, 0u);
  EXPECT_FALSE(r.agreement_rate);
}

TEST(Verify, BoundaryBandExcluded) {
  const double g = std::sqrt(std::log(4.0) + 0.01);  // ratio e^{0.01}
  auto c = experiment_from_json({{"model", "builtin:poisson_gaussian(mu=4,sigma=1)"},
                                 {"grid", {{"gamma", g}, {"p", 2.0}}},
                                 {"simulation", {{"generations", 5}, {"replicas", 200}}}});
  const auto r = run_verify(c);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].excluded, "boundary");
}

TEST(RegimeCsv, HeaderAndColumns) {
  const auto r = run_sweep(sweep_config("builtin:poisson_gaussian(mu=4,sigma=1)", {{"gamma", 1.0}, {"p", 2.0}}));
  std::istringstream in(csv_of(r));
  std::string l1, l2, l3;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  EXPECT_EQ(l1, "# schema_version=1");
  EXPECT_EQ(l2, "theta,gamma,p,case,predicted,theorem,ratio_name,ratio_value,empirical,agreement,excluded,note");
  EXPECT_EQ(l3.rfind("0,1,2,II,converges,p_at_least_2_criterion,centered_ratio,", 0), 0u) << l3;
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(1e300), "1e+300");
  EXPECT_EQ(format_double(INFINITY), "inf");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
  EXPECT_EQ(format_double(NAN), "nan");
  const double x = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_double(x)), x);
}
