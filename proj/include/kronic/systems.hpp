#ifndef KRONIC_SYSTEMS_HPP
#define KRONIC_SYSTEMS_HPP

/**
 * @file
 * @brief Control-affine dynamical systems x' = f(x) + B u, fixed-step RK4 integration,
 * and initial-condition / forcing generators.
 */

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kronic {

/// Drift vector field f(x).
using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd &)>;

/// Closed-form input signal u(t).
using ForcingSignal = std::function<Eigen::VectorXd(double)>;

struct SystemSpec
{
  std::string name;
  int state_dim{1};
  int input_dim{0};
  std::map<std::string, double> parameters;
  Eigen::MatrixXd control_matrix;  ///< n x q
  VectorField drift;

  /// Throws InvalidArgument if dimensions or parameters are inconsistent.
  void validate() const;

  /// f(x) + B u. An empty `u` means no input.
  [[nodiscard]] Eigen::VectorXd rhs(const Eigen::VectorXd & x, const Eigen::VectorXd & u) const;
};

/**
 * @brief Forced Euler equations for the free rigid body in body-frame angular momentum.
 *
 * Π' = [ (I₂−I₃)/(I₂I₃) Π₂Π₃, (I₃−I₁)/(I₃I₁) Π₃Π₁, (I₁−I₂)/(I₁I₂) Π₁Π₂ ] + τ.
 */
[[nodiscard]] Eigen::Vector3d rigid_body_rhs(const Eigen::Vector3d & momentum,
                                             const Eigen::Vector3d & torque,
                                             const Eigen::Vector3d & inertia);

/// Rigid body with principal moments `inertia` and control matrix `B` (3 x q).
[[nodiscard]] SystemSpec rigid_body_system(const Eigen::Vector3d & inertia,
                                           const Eigen::MatrixXd & B = Eigen::Matrix3d::Identity());

/// Linear system x' = A x + B u.
[[nodiscard]] SystemSpec linear_system(const Eigen::MatrixXd & A, const Eigen::MatrixXd & B);

enum class DerivativeSource { analytic, central_difference, external };

[[nodiscard]] const char * to_string(DerivativeSource s) noexcept;

struct TrajectoryDataset
{
  Eigen::VectorXd times;                     ///< m, strictly increasing
  Eigen::MatrixXd states;                    ///< m x n
  std::optional<Eigen::MatrixXd> derivatives;  ///< m x n
  std::optional<Eigen::MatrixXd> inputs;       ///< m x q
  DerivativeSource derivative_source{DerivativeSource::analytic};
  bool stacked{false};  ///< several trajectories stacked; times restart at each boundary

  [[nodiscard]] Eigen::Index samples() const noexcept { return states.rows(); }
  [[nodiscard]] Eigen::Index state_dim() const noexcept { return states.cols(); }

  /// Row counts agree, times increase, everything finite.
  void validate() const;
};

/// Stack several datasets row-wise. All must agree on which optional blocks are present.
[[nodiscard]] TrajectoryDataset concatenate(const std::vector<TrajectoryDataset> & parts);

struct IntegrationOptions
{
  double overflow_guard{1e9};
};

/**
 * @brief Fixed-step classical RK4 from t = 0, sampled at every multiple of dt up to t_end.
 *
 * Derivatives are the analytic right-hand side at each sample. The input at sample i is
 * u(t_i); within a step the forcing is evaluated at t, t + dt/2 and t + dt.
 */
[[nodiscard]] TrajectoryDataset integrate(const SystemSpec & spec,
                                          const Eigen::VectorXd & x0,
                                          const ForcingSignal & forcing,
                                          double t_end,
                                          double dt,
                                          const IntegrationOptions & opts = {});

/// One RK4 step of x' = f(x) + B u with u held constant.
[[nodiscard]] Eigen::VectorXd rk4_step_held(const SystemSpec & spec,
                                            const Eigen::VectorXd & x,
                                            const Eigen::VectorXd & u,
                                            double h);

/// Integrates every initial condition; OpenMP-parallel over trajectories.
[[nodiscard]] std::vector<TrajectoryDataset> integrate_ensemble(const SystemSpec & spec,
                                                                const std::vector<Eigen::VectorXd> & initial,
                                                                const ForcingSignal & forcing,
                                                                double t_end,
                                                                double dt,
                                                                const IntegrationOptions & opts = {});

namespace reference {
/// Sequential version of integrate_ensemble.
[[nodiscard]] std::vector<TrajectoryDataset> integrate_ensemble(const SystemSpec & spec,
                                                                const std::vector<Eigen::VectorXd> & initial,
                                                                const ForcingSignal & forcing,
                                                                double t_end,
                                                                double dt,
                                                                const IntegrationOptions & opts = {});
}  // namespace reference

/**
 * @brief Near-uniform points on the sphere L(Π) = ½|Π|² = L_value.
 *
 * Fibonacci lattice, rigidly rotated by a rotation drawn from `seed`.
 */
[[nodiscard]] std::vector<Eigen::VectorXd> sample_momentum_sphere(double L_value, int count, std::uint64_t seed);

/**
 * @brief Fibonacci directions with magnitudes drawn uniformly from [r_min, r_max].
 *
 * Conserved-quantity discovery needs data off a single momentum sphere; on one sphere
 * every multiple of (|Π|² − r²) is also annihilated by the generator.
 */
[[nodiscard]] std::vector<Eigen::VectorXd> sample_momentum_shell(double r_min, double r_max, int count,
                                                                 std::uint64_t seed);

/// τ(t) = [ (0.5 + sin 40t)³, 0.5 + sin 10t, sin 20t ].
[[nodiscard]] ForcingSignal cubic_sine_forcing();

/// u(t) = 0 in q channels.
[[nodiscard]] ForcingSignal zero_forcing(int q);

}  // namespace kronic

#endif  // KRONIC_SYSTEMS_HPP
