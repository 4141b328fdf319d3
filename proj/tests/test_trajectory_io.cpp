#include <gtest/gtest.h>

#include <sstream>

#include "brw/errors.hpp"
#include "brw/model_spec.hpp"
#include "brw/trajectory_io.hpp"

using namespace brw;

namespace {

TrajectoryBatch sample_batch() {
  const auto m = ReproductionModel::poisson_gaussian(2.0, 1.0);
  SimConfig cfg;
  cfg.generations = 4;
  cfg.replicas = 7;
  cfg.seed = 99;
  cfg.lambdas = {{0.0, 1.0}, {0.2, 0.3}, {-0.1, 0.7}};
  cfg.companion_thetas = {0.5};
  return simulate_trajectories(m, cfg);
}

}  // namespace

TEST(TrajectoryCsv, RoundTripIsExact) {
  const auto b = sample_batch();
  std::ostringstream out;
  write_trajectory_csv(b, out);
  const auto side = trajectory_sidecar(b, "builtin:poisson_gaussian(mu=2,sigma=1)",
                                       model_to_json(ReproductionModel::poisson_gaussian(2.0, 1.0)));
  std::istringstream in(out.str());
  const auto back = read_trajectory_csv(in, &side);
  ASSERT_EQ(back.replicas.size(), b.replicas.size());
  EXPECT_EQ(back.generations(), 4);
  EXPECT_EQ(back.config.lambdas, b.config.lambdas);
  EXPECT_EQ(back.config.companion_thetas, b.config.companion_thetas);
  for (std::size_t r = 0; r < b.replicas.size(); ++r) {
    EXPECT_EQ(back.replicas[r].z, b.replicas[r].z);
    EXPECT_EQ(back.replicas[r].companions, b.replicas[r].companions);
    EXPECT_EQ(back.replicas[r].population, b.replicas[r].population);
  }
  std::ostringstream again;
  write_trajectory_csv(back, again);
  EXPECT_EQ(again.str(), out.str());
}

TEST(TrajectoryCsv, HeaderAndRowCount) {
  const auto b = sample_batch();
  std::ostringstream out;
  write_trajectory_csv(b, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# schema_version=1");
  std::getline(in, line);
  EXPECT_EQ(line, "replica,n,lambda_index,z_re,z_im,companion_index,z_real_companion,population");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 7u * 5u * 3u);  // one row per (replica, n, max(L, C))
}

TEST(TrajectoryCsv, RejectsMalformedInput) {
  std::istringstream bad_header("# schema_version=1\nfoo,bar\n");
  EXPECT_THROW(read_trajectory_csv(bad_header), ConfigError);
  std::istringstream short_row(
      "# schema_version=1\nreplica,n,lambda_index,z_re,z_im,companion_index,z_real_companion,population\n0,0,0,1\n");
  EXPECT_THROW(read_trajectory_csv(short_row), ConfigError);
  std::istringstream empty("");
  EXPECT_THROW(read_trajectory_csv(empty), ConfigError);
}
