#ifndef KRONIC_FEATURES_HPP
#define KRONIC_FEATURES_HPP

/**
 * @file
 * @brief Monomial dictionaries Θ(x), their analytic gradients, and the data matrices
 * Θ(X) and Γ(X, X') = [∇θ₁·x' ... ∇θ_P·x'].
 */

#include <Eigen/Core>

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace kronic {

/// Exponent vector α of the monomial ∏ xᵢ^αᵢ.
using MultiIndex = std::vector<int>;

/**
 * @brief Ordered set of monomials in n variables up to total degree p.
 *
 * Terms are sorted by total degree, then lexicographically with x₁ > x₂ > ... > x_n,
 * e.g. for n = 3, p = 2: x₁, x₂, x₃, x₁², x₁x₂, x₁x₃, x₂², x₂x₃, x₃².
 */
class Dictionary
{
public:
  Dictionary() = default;

  [[nodiscard]] static Dictionary monomials(int state_dim, int max_degree, bool include_constant = false);

  [[nodiscard]] int state_dim() const noexcept { return state_dim_; }
  [[nodiscard]] int max_degree() const noexcept { return max_degree_; }
  [[nodiscard]] bool include_constant() const noexcept { return include_constant_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(terms_.size()); }
  [[nodiscard]] const std::vector<MultiIndex> & terms() const noexcept { return terms_; }
  [[nodiscard]] const MultiIndex & term(Eigen::Index k) const { return terms_.at(static_cast<std::size_t>(k)); }

  [[nodiscard]] std::optional<Eigen::Index> index_of(const MultiIndex & alpha) const;

  /// Human-readable term, e.g. "x1^2*x3"; "1" for the constant.
  [[nodiscard]] std::string label(Eigen::Index k) const;

  /// θ(x) as a row of length P.
  [[nodiscard]] Eigen::RowVectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd> & x) const;

  /// ∂θ_k/∂x_i for all k, written into `grad` (P x n).
  void gradient(const Eigen::Ref<const Eigen::VectorXd> & x, Eigen::Ref<Eigen::MatrixXd> grad) const;

  friend bool operator==(const Dictionary &, const Dictionary &) = default;

private:
  int state_dim_{0};
  int max_degree_{0};
  bool include_constant_{false};
  std::vector<MultiIndex> terms_;
};

/// Function F = Θ(x) ξ expressed in a dictionary.
struct CoefficientVector
{
  Dictionary dictionary;
  Eigen::VectorXd coefficients;

  /// Length matches the dictionary and entries are finite.
  void validate() const;

  [[nodiscard]] double value(const Eigen::Ref<const Eigen::VectorXd> & x) const;
  [[nodiscard]] Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd> & x) const;
};

/// Build a coefficient vector from (multi-index, coefficient) pairs; throws if a term is missing.
[[nodiscard]] CoefficientVector make_function(const Dictionary & dict,
                                              const std::vector<std::pair<MultiIndex, double>> & terms);

/// JSON array of {"multi_index": [...], "coefficient": c}; exact zeros are omitted.
[[nodiscard]] nlohmann::json to_json(const CoefficientVector & f);
[[nodiscard]] CoefficientVector coefficients_from_json(const Dictionary & dict, const nlohmann::json & j);

/// Θ(X): entry (i, k) = θ_k(x_i). Row-parallel.
[[nodiscard]] Eigen::MatrixXd eval_theta(const Dictionary & dict, const Eigen::MatrixXd & X);

/// Γ(X, X'): entry (i, k) = ∇θ_k(x_i) · x'_i. Row-parallel.
[[nodiscard]] Eigen::MatrixXd eval_gamma(const Dictionary & dict, const Eigen::MatrixXd & X, const Eigen::MatrixXd & Xdot);

/// Θ_x(x): row k is ∇θ_k(x).
[[nodiscard]] Eigen::MatrixXd grad_theta_at(const Dictionary & dict, const Eigen::VectorXd & x);

/**
 * @brief Numerical time derivative of sampled states.
 *
 * Second-order three-point differences on a possibly non-uniform grid: centred in the
 * interior, one-sided at both ends, so all m rows are kept.
 */
[[nodiscard]] Eigen::MatrixXd differentiate_trajectory(const Eigen::VectorXd & times, const Eigen::MatrixXd & X);

namespace reference {
/// Straightforward per-entry versions kept for cross-checking the parallel kernels.
[[nodiscard]] Eigen::MatrixXd eval_theta(const Dictionary & dict, const Eigen::MatrixXd & X);
[[nodiscard]] Eigen::MatrixXd eval_gamma(const Dictionary & dict, const Eigen::MatrixXd & X, const Eigen::MatrixXd & Xdot);
}  // namespace reference

}  // namespace kronic

#endif  // KRONIC_FEATURES_HPP
