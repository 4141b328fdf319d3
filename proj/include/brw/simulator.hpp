#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "brw/complex_parameter.hpp"
#include "brw/models.hpp"
#include "brw/random.hpp"

namespace brw {

struct SimConfig {
  int generations = 8;
  std::uint64_t replicas = 1000;
  std::uint64_t seed = 0;
  std::uint64_t max_population = 50'000'000;
  std::vector<ComplexParameter> lambdas;
  std::vector<double> companion_thetas;
  /// Record sum_u |Y_u(lambda)|^2 |Z_1^(u)(lambda) - 1|^2 for every generation.
  bool quadratic_increments = false;
  unsigned threads = 1;
};

/// Positions S(u) of all individuals of generation n.
struct Generation {
  std::vector<double> positions;
  int n = 0;
};

struct ReplicaTrajectory {
  std::uint64_t stream = 0;
  /// First generation with no individuals, or -1 if the line survived.
  int extinct_at = -1;
  std::vector<std::complex<double>> z;        // (N+1) x L, row-major in n
  std::vector<double> companions;              // (N+1) x C
  std::vector<std::uint64_t> population;       // N+1
  std::vector<double> quadratic_increments;    // N x L, entry n sums over parents in generation n
};

struct TrajectoryBatch {
  SimConfig config;
  std::string model_description;
  std::vector<std::complex<double>> m_lambda;
  std::vector<double> m_companion;
  std::vector<ReplicaTrajectory> replicas;

  int generations() const { return config.generations; }
  std::size_t lambda_count() const { return config.lambdas.size(); }
  std::size_t companion_count() const { return config.companion_thetas.size(); }
  std::complex<double> z(std::size_t replica, int n, std::size_t lambda_index) const {
    return replicas[replica].z[static_cast<std::size_t>(n) * lambda_count() + lambda_index];
  }
  double companion(std::size_t replica, int n, std::size_t index) const {
    return replicas[replica].companions[static_cast<std::size_t>(n) * companion_count() + index];
  }
  double quadratic_increment(std::size_t replica, int n, std::size_t lambda_index) const {
    return replicas[replica].quadratic_increments[static_cast<std::size_t>(n) * lambda_count() + lambda_index];
  }
};

/// One branching step. `counts`, if given, receives the offspring count of
/// each parent; children of parent i are contiguous and in parent order.
/// Throws PopulationCapError (carrying gen.n + 1) if the new generation
/// would exceed max_population.
Generation step_generation(const Generation& gen, const ReproductionModel& model, RandomStream& rng,
                           std::uint64_t max_population = 50'000'000,
                           std::vector<std::uint64_t>* counts = nullptr);

/// sum_u |Y_u|^2 |Z_1^(u) - 1|^2 with Y_u = e^{-lambda S(u)} / m^n, computed
/// from a parent generation, its offspring counts and the resulting children.
double quadratic_increment_sum(const Generation& parents, std::span<const std::uint64_t> counts,
                               const Generation& children, ComplexParameter lambda,
                               std::complex<double> m_lambda);

/// Runs config.replicas independent trees; replica r draws from stream r of
/// config.seed, so results do not depend on the thread count. Throws
/// CaseThreeError for a lambda with m(lambda) = 0 and PopulationCapError
/// (from the lowest failing replica) on a cap breach.
TrajectoryBatch simulate_trajectories(const ReproductionModel& model, const SimConfig& config);

}  // namespace brw
