#ifndef KRONIC_CONFIG_HPP
#define KRONIC_CONFIG_HPP

/**
 * @file
 * @brief Experiment configuration with strict JSON parsing.
 *
 * Every block is optional and falls back to the rigid-body defaults. Unknown keys are
 * rejected before any computation starts.
 */

#include <Eigen/Core>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kronic/control.hpp"
#include "kronic/discovery.hpp"
#include "kronic/systems.hpp"

namespace kronic {

struct SystemBlock
{
  std::string name{"rigid_body"};   ///< rigid_body | linear
  Eigen::Vector3d inertia{1.0, 0.5, 1.0 / 3.0};
  Eigen::MatrixXd control_matrix{Eigen::MatrixXd::Identity(3, 3)};
  Eigen::MatrixXd A;                ///< linear only
};

struct SimulationBlock
{
  double dt{0.01};
  double t_end{10.0};
  int trajectories{114};
  double momentum_min{0.5};  ///< radius range of the discovery ensemble
  double momentum_max{1.5};
  double noise_std{0.0};     ///< additive state noise; derivatives then come from central differences
};

struct DictionaryBlock
{
  int degree{3};
  bool include_constant{false};
};

struct DiscoveryBlock
{
  double lambda{0.0};
  double rank_tolerance{1e-6};
  std::optional<double> l1_weight;
  int max_iters{1000};
  bool column_scaling{true};
  double holdout_fraction{0.2};
  double residual_tolerance{1e-6};
  double involution_tolerance{1e-3};
  std::string bracket{"lie_poisson_so3"};
};

struct ActuationBlock
{
  std::string forcing{"cubic_sine"};
  int trajectories{20};
  double t_end{10.0};
  std::optional<std::string> forced_data;  ///< CSV path; simulated when absent
};

struct ControlBlock
{
  Eigen::MatrixXd Q{Eigen::Vector2d(2.0, 2.0).asDiagonal()};
  Eigen::MatrixXd R{Eigen::Vector3d(1e-3, 1e-3, 1e-3).asDiagonal()};
  int horizon_steps{10};
  double plant_dt{0.01};
  int substeps{10};
  Eigen::VectorXd reference_state{Eigen::Vector3d(0.0, 1.0, 0.0)};
  std::optional<InputBounds> input_bounds;
  double t_end{10.0};
  int trajectories{114};
  double momentum{1.0};          ///< |Π| of the control ensemble
  double tolerance{1e-2};        ///< componentwise |C − C*|
  double state_tolerance{0.05};  ///< min |x ∓ x*|
  std::string prediction{"zero_order_hold"};
};

struct IoBlock
{
  std::uint64_t seed{0};
  std::string out{"out"};
};

struct ExperimentConfig
{
  SystemBlock system;
  SimulationBlock simulation;
  DictionaryBlock dictionary;
  DiscoveryBlock discovery;
  ActuationBlock actuation;
  ControlBlock control;
  IoBlock io;

  /// Range and consistency checks; throws InvalidArgument.
  void validate() const;

  [[nodiscard]] SystemSpec system_spec() const;
  [[nodiscard]] Dictionary make_dictionary() const;
  [[nodiscard]] MpcConfig mpc_config() const;
  [[nodiscard]] SparsifyOptions sparsify_options() const;
  [[nodiscard]] PredictionModel prediction_model() const;
};

/// Strict parse: unknown keys and wrong types throw InvalidArgument.
[[nodiscard]] ExperimentConfig config_from_json(const nlohmann::json & j);
[[nodiscard]] nlohmann::json to_json(const ExperimentConfig & c);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path & path);

/// FNV-1a of the canonical JSON dump.
[[nodiscard]] std::string config_hash(const ExperimentConfig & c);

}  // namespace kronic

#endif  // KRONIC_CONFIG_HPP
