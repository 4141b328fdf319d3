#pragma once

// Trajectory CSV (schema 1):
//   # schema_version=1
//   replica,n,lambda_index,z_re,z_im,companion_index,z_real_companion,population
// Row k of (replica, n) carries lambda k and companion k; the columns of an
// index past the end of its list are left empty. Numbers use the shortest
// round-trip representation.

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "brw/simulator.hpp"

namespace brw {

inline constexpr int kTrajectorySchemaVersion = 1;

void write_trajectory_csv(const TrajectoryBatch& batch, std::ostream& out);

/// Config and model as given on input; written next to the CSV.
nlohmann::json trajectory_sidecar(const TrajectoryBatch& batch, const std::string& model_spec,
                                  const nlohmann::json& model_json);

/// Inverse of write_trajectory_csv. Lambda and companion values are not in
/// the CSV; lambdas/companion_thetas are filled from `sidecar` when given.
TrajectoryBatch read_trajectory_csv(std::istream& in, const nlohmann::json* sidecar = nullptr);

}  // namespace brw
