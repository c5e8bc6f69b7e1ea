#ifndef KRONIC_DISCOVERY_HPP
#define KRONIC_DISCOVERY_HPP

/**
 * @file
 * @brief Koopman eigenfunctions from data: the null space of λΘ(X) − Γ(X, X').
 *
 * For λ = 0 the null space holds the coefficients of every conserved quantity that the
 * dictionary can represent.
 */

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "kronic/features.hpp"
#include "kronic/systems.hpp"

namespace kronic {

struct InvariantSubspace
{
  Dictionary dictionary;
  Eigen::MatrixXd basis;            ///< P x d, orthonormal columns
  Eigen::VectorXd singular_values;  ///< full spectrum, length P, non-increasing
  double rank_tolerance{1e-6};
  double lambda{0.0};
  Eigen::VectorXd column_scale;  ///< 2-norms of the generator matrix columns

  [[nodiscard]] Eigen::Index kernel_dimension() const noexcept { return basis.cols(); }
  [[nodiscard]] CoefficientVector column(Eigen::Index c) const { return {dictionary, basis.col(c)}; }
};

/// λ Θ(X) − Γ(X, X'). Throws InvalidArgument if the dataset has no derivatives.
[[nodiscard]] Eigen::MatrixXd build_generator_matrix(const Dictionary & dict, const TrajectoryDataset & data, double lambda);

/**
 * @brief Right singular vectors of A whose singular value is at most rank_tolerance · σ₁.
 *
 * The returned subspace has no dictionary attached; see discover_invariants.
 * Throws DegenerateDataError if A is identically zero.
 */
[[nodiscard]] InvariantSubspace null_space(const Eigen::MatrixXd & A, double rank_tolerance);

/// build_generator_matrix followed by null_space.
[[nodiscard]] InvariantSubspace discover_invariants(const Dictionary & dict, const TrajectoryDataset & data,
                                                    double lambda, double rank_tolerance);

struct SparsifyOptions
{
  /// Soft-threshold level of the ADM iteration; 1/sqrt(P) when unset.
  std::optional<double> l1_weight;
  int max_iters{1000};
  /// Measure sparsity of diag(column_scale) ξ instead of ξ.
  bool column_scaling{true};
};

struct SparsifyResult
{
  std::vector<CoefficientVector> vectors;  ///< unit 2-norm, one per kernel dimension
  bool converged{true};
  std::vector<std::string> warnings;
};

/**
 * @brief Sparse basis of an invariant subspace, one direction at a time.
 *
 * Each round runs the alternating soft-threshold/renormalize iteration for the sparsest
 * direction q of the (weighted) basis from every row initialization, rounds each iterate
 * to an exactly sparse vertex (d − 1 vanishing weighted entries), keeps the one of least
 * weighted ℓ1 norm, then deflates it. With column scaling the weights are the generator
 * column norms, so coefficients are compared in the units of the data.
 */
[[nodiscard]] SparsifyResult sparsify(const InvariantSubspace & subspace, const SparsifyOptions & opts = {});

/// RMS over samples of |∇φ(x_i)·x'_i − λ φ(x_i)| for φ = Θ ξ.
[[nodiscard]] double eigenfunction_residual(const CoefficientVector & xi, const TrajectoryDataset & data, double lambda);

}  // namespace kronic

#endif  // KRONIC_DISCOVERY_HPP
