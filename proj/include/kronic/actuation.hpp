#ifndef KRONIC_ACTUATION_HPP
#define KRONIC_ACTUATION_HPP

/**
 * @file
 * @brief Control matrix B from forced data, given eigenfunctions identified on unforced data.
 *
 * Along x' = f(x) + B u an eigenfunction φ = Θ ξ obeys
 *   [Γ(x, x') − λ Θ(x)] ξ = ∇φ(x) · B u = (∇φ(x) ⊗ uᵀ) vec(B),
 * with vec(B) the rows of B stacked (b₁ᵀ, ..., b_nᵀ). Each sample and each eigenfunction
 * contributes one linear equation in the n q entries of B.
 */

#include <Eigen/Core>

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "kronic/discovery.hpp"
#include "kronic/features.hpp"
#include "kronic/systems.hpp"

namespace kronic {

struct ControlMatrixEstimate
{
  Eigen::MatrixXd B_hat;  ///< n x q
  double residual_rms{0.0};
  double regressor_condition{0.0};
  Eigen::Index regressor_rank{0};
  double lambda{0.0};
  std::vector<std::string> warnings;
};

/// [g₁u₁, ..., g₁u_q, g₂u₁, ..., g_n u_q], matching row-major vec(B).
[[nodiscard]] Eigen::VectorXd kron_row(const Eigen::VectorXd & g, const Eigen::VectorXd & u);

/// Row-major vec(B) and its inverse.
[[nodiscard]] Eigen::VectorXd vec_rows(const Eigen::MatrixXd & B);
[[nodiscard]] Eigen::MatrixXd unvec_rows(const Eigen::VectorXd & v, Eigen::Index n, Eigen::Index q);

struct ActuationOptions
{
  double rank_tolerance{1e-10};     ///< relative to the largest regressor singular value
  double condition_warning{1e10};
};

/**
 * @brief Minimum-norm least-squares estimate of B over all samples and eigenfunctions.
 *
 * Throws InvalidArgument if the data lacks inputs or derivatives, UnidentifiableError if
 * the stacked regressor has numerical rank below n q.
 */
[[nodiscard]] ControlMatrixEstimate estimate_B(const std::vector<CoefficientVector> & eigenfunctions,
                                               const TrajectoryDataset & forced, double lambda,
                                               const ActuationOptions & opts = {});

[[nodiscard]] ControlMatrixEstimate estimate_B(const InvariantSubspace & subspace, const TrajectoryDataset & forced,
                                               double lambda, const ActuationOptions & opts = {});

[[nodiscard]] nlohmann::json to_json(const ControlMatrixEstimate & e);
[[nodiscard]] ControlMatrixEstimate control_estimate_from_json(const nlohmann::json & j);

}  // namespace kronic

#endif  // KRONIC_ACTUATION_HPP
