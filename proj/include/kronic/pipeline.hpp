#ifndef KRONIC_PIPELINE_HPP
#define KRONIC_PIPELINE_HPP

/**
 * @file
 * @brief The command stages behind the CLI: simulate, discover, verify, estimate-b, control, reproduce.
 *
 * Each stage reads and writes plain files so stages can be rerun independently.
 * Layout of a data directory: manifest.json plus traj_###.csv.
 */

#include <Eigen/Core>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kronic/config.hpp"
#include "kronic/discovery.hpp"
#include "kronic/features.hpp"
#include "kronic/systems.hpp"

namespace kronic {

namespace fs = std::filesystem;

/// Trajectory indices held out for validation, evenly spaced over the ensemble.
[[nodiscard]] std::vector<int> holdout_indices(int count, double fraction);

/// Initial conditions of an ensemble for the configured system.
[[nodiscard]] std::vector<Eigen::VectorXd> discovery_initial_states(const ExperimentConfig & cfg, int count,
                                                                    std::uint64_t seed);

struct LoadedData
{
  TrajectoryDataset train;
  std::optional<TrajectoryDataset> holdout;
  nlohmann::json manifest;
};

[[nodiscard]] LoadedData load_data_dir(const fs::path & data_dir);

struct LoadedSubspace
{
  Dictionary dictionary;
  double lambda{0.0};
  Eigen::MatrixXd basis;   ///< P x d orthonormal
  Eigen::MatrixXd sparse;  ///< P x d, sparsified; equals basis when absent

  [[nodiscard]] std::vector<CoefficientVector> sparse_functions() const;
};

[[nodiscard]] LoadedSubspace load_subspace(const fs::path & path);

/// Writes traj_###.csv and manifest.json; returns the manifest.
nlohmann::json cmd_simulate(const ExperimentConfig & cfg, const fs::path & out_dir);

struct DiscoverOutcome
{
  InvariantSubspace subspace;
  SparsifyResult sparse;
  nlohmann::json report;
  std::string message;
};

/// Writes subspace.json and singular_values.csv.
DiscoverOutcome cmd_discover(const ExperimentConfig & cfg, const fs::path & data_dir, const fs::path & out_dir);

/// Writes involution.json; the report carries per-check PASS/FAIL and an overall "pass".
nlohmann::json cmd_verify(const ExperimentConfig & cfg, const fs::path & subspace_path, const fs::path & data_dir,
                          const fs::path & out_dir);

/// Writes estimate.json.
nlohmann::json cmd_estimate_b(const ExperimentConfig & cfg, const fs::path & subspace_path, const fs::path & out_dir);

/// Writes closed_loop_###.csv, baseline_###.csv and summary.json. Uses the configured B when no estimate is given.
nlohmann::json cmd_control(const ExperimentConfig & cfg, const fs::path & subspace_path,
                           const std::optional<fs::path> & b_path, const fs::path & out_dir);

struct Check
{
  std::string name;
  double value{0.0};
  std::string threshold;
  bool pass{false};
};

struct ReproduceOutcome
{
  std::vector<Check> checks;
  bool pass{false};
};

/// Every stage in sequence under out_dir, then REPORT.md. `quick` shrinks the ensembles to 10 trajectories.
ReproduceOutcome cmd_reproduce(ExperimentConfig cfg, const fs::path & out_dir, bool quick);

}  // namespace kronic

#endif  // KRONIC_PIPELINE_HPP
