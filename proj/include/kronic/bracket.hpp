#ifndef KRONIC_BRACKET_HPP
#define KRONIC_BRACKET_HPP

/**
 * @file
 * @brief Poisson brackets of dictionary-expanded functions.
 *
 * Two structures are supported:
 *  - canonical: x = (q₁..q_k, p₁..p_k), {F,G} = Σⱼ ∂F/∂qⱼ ∂G/∂pⱼ − ∂F/∂pⱼ ∂G/∂qⱼ;
 *  - Lie-Poisson on so(3)*: {F,G}(x) = −x · (∇F × ∇G).
 *
 * With the so(3) sign above, xᵢ' = {xᵢ, H} reproduces the free rigid body for
 * H = ½ Σ Πᵢ²/Iᵢ, and the angular momentum ½|x|² is a Casimir. The vector-field
 * recovery and the D matrix below use this same sign.
 */

#include <Eigen/Core>

#include <string>
#include <vector>

#include "kronic/discovery.hpp"
#include "kronic/features.hpp"

namespace kronic {

enum class BracketKind { canonical, lie_poisson_so3 };

[[nodiscard]] const char * to_string(BracketKind k) noexcept;
[[nodiscard]] BracketKind bracket_kind_from_string(const std::string & s);

/// Throws InvalidArgument unless n suits the bracket (even for canonical, 3 for so(3)).
void check_bracket_dimension(BracketKind kind, Eigen::Index n);

/// Bracket of two functions given their gradients at x.
[[nodiscard]] double bracket_of_gradients(BracketKind kind, const Eigen::VectorXd & grad_f, const Eigen::VectorXd & grad_g,
                                          const Eigen::VectorXd & x);

[[nodiscard]] double bracket_eval(BracketKind kind, const CoefficientVector & F, const CoefficientVector & G,
                                  const Eigen::VectorXd & x);

/// ∂F/∂x_i at x for F = Θ ξ (i is zero-based).
[[nodiscard]] double basis_partial(const CoefficientVector & F, Eigen::Index i, const Eigen::VectorXd & x);

/// (i, j) = RMS over the rows of X of {C_i, C_j}(x).
[[nodiscard]] Eigen::MatrixXd involution_check(BracketKind kind, const std::vector<CoefficientVector> & candidates,
                                               const Eigen::MatrixXd & X);

/**
 * @brief Matrix D with (D η)_i = {Υ η, H}(x_i) for the so(3) bracket and H = Θ ξ_H.
 *
 * Row i is x₁(Θ₂ξ Υ₃ − Θ₃ξ Υ₂) + x₂(Θ₃ξ Υ₁ − Θ₁ξ Υ₃) + x₃(Θ₁ξ Υ₂ − Θ₂ξ Υ₁), with
 * Θ_k ξ = ∂_k H and Υ_k the row of ∂_k υ_j. Row-parallel.
 */
[[nodiscard]] Eigen::MatrixXd build_D_matrix(const CoefficientVector & hamiltonian, const Dictionary & upsilon,
                                             const Eigen::MatrixXd & X);

struct BracketDiscovery
{
  InvariantSubspace subspace;  ///< in the Υ dictionary, λ = 0
  SparsifyResult sparse;       ///< empty when the kernel is trivial
};

/// Functions C = Υ η in involution with a known H on the data.
[[nodiscard]] BracketDiscovery discover_via_bracket(const CoefficientVector & hamiltonian, const Dictionary & upsilon,
                                                    const Eigen::MatrixXd & X, double rank_tolerance,
                                                    const SparsifyOptions & sparsify_opts = {});

/// fᵢ(x) = {xᵢ, Θ ξ_H} under the so(3) bracket.
[[nodiscard]] Eigen::Vector3d recover_vector_field(const CoefficientVector & hamiltonian, const Eigen::Vector3d & x);

}  // namespace kronic

#endif  // KRONIC_BRACKET_HPP
