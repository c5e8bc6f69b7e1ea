#ifndef KRONIC_LINALG_HPP
#define KRONIC_LINALG_HPP

#include <Eigen/Core>

namespace kronic::linalg {

/// Singular values (non-increasing, length = cols) and right singular vectors of A.
struct RightSvd
{
  Eigen::VectorXd singular_values;
  Eigen::MatrixXd V;  ///< cols x cols
};

/**
 * @brief SVD of a tall data matrix through a Householder QR of A first.
 *
 * When A has fewer rows than columns the missing singular values are reported as zero.
 */
[[nodiscard]] RightSvd right_svd(const Eigen::MatrixXd & A);

/// Orthonormal basis of range(A) (thin QR; A is assumed to have full column rank).
[[nodiscard]] Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd & A);

/**
 * @brief Largest principal angle (radians) between range(A) and range(B).
 *
 * If dim B < dim A this is the largest angle between B and its projection onto A.
 * Computed from the sine so that tiny angles keep full precision.
 */
[[nodiscard]] double largest_principal_angle(const Eigen::MatrixXd & A, const Eigen::MatrixXd & B);

/// Orthonormal basis of the orthogonal complement of unit vector v in R^d (d x (d-1)).
[[nodiscard]] Eigen::MatrixXd complement_basis(const Eigen::VectorXd & v);

}  // namespace kronic::linalg

#endif  // KRONIC_LINALG_HPP
