#ifndef KRONIC_CONTROL_HPP
#define KRONIC_CONTROL_HPP

/**
 * @file
 * @brief Model predictive control in intrinsic coordinates C(x) = Θ(x) Ξ.
 *
 * Conserved quantities are unaffected by the drift, so C' = ∇C(x)ᵀ B u. The predictive
 * model freezes B_c = ∇C(x_now)ᵀ B over the horizon and optimizes one constant input,
 * which makes the horizon cost a strictly convex quadratic with a closed-form minimizer.
 */

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "kronic/features.hpp"
#include "kronic/systems.hpp"

namespace kronic {

struct InputBounds
{
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct MpcConfig
{
  Eigen::MatrixXd Q;              ///< d x d, symmetric positive definite
  Eigen::MatrixXd R;              ///< q x q, symmetric positive semidefinite
  int horizon_steps{10};          ///< prediction horizon in macro-steps
  double plant_dt{0.01};          ///< macro-step length; control is recomputed once per macro-step
  int substeps{10};               ///< RK4 plant steps per macro-step
  Eigen::VectorXd reference_state;
  std::optional<InputBounds> input_bounds;

  void validate(Eigen::Index d, Eigen::Index q) const;
};

/// C = Θ Ξ with actuation matrix B.
struct IntrinsicModel
{
  Dictionary dictionary;
  Eigen::MatrixXd coefficients;  ///< P x d
  Eigen::MatrixXd B;             ///< n x q

  [[nodiscard]] Eigen::Index dim() const noexcept { return coefficients.cols(); }
};

[[nodiscard]] Eigen::VectorXd conserved_coordinates(const Dictionary & dict, const Eigen::MatrixXd & coefficients,
                                                    const Eigen::VectorXd & x);

/// B_c(x): row c is ∇C_c(x)ᵀ B.
[[nodiscard]] Eigen::MatrixXd control_gain_map(const Dictionary & dict, const Eigen::MatrixXd & coefficients,
                                               const Eigen::MatrixXd & B, const Eigen::VectorXd & x);

enum class PredictionModel {
  zero_order_hold,     ///< B_c frozen at the measurement (default)
  nonlinear_shooting,  ///< propagate x with the known drift; for validating the default only
};

struct MpcStep
{
  Eigen::VectorXd u;
  bool uncontrollable{false};  ///< B_c vanished while C differs from the reference
};

/// One receding-horizon solve at x_now. `plant` is only used by the shooting variant.
[[nodiscard]] MpcStep mpc_step(const MpcConfig & config, const IntrinsicModel & model, const Eigen::VectorXd & x_now,
                               PredictionModel prediction = PredictionModel::zero_order_hold,
                               const SystemSpec * plant = nullptr);

struct ClosedLoopOptions
{
  bool controlled{true};        ///< false gives the unforced baseline with the same bookkeeping
  double tolerance{1e-2};       ///< componentwise |C − C*| for convergence
  PredictionModel prediction{PredictionModel::zero_order_hold};
  double overflow_guard{1e9};
};

struct ClosedLoopResult
{
  Eigen::VectorXd times;        ///< macro-step boundaries
  Eigen::MatrixXd states;       ///< rows: x(t_k)
  Eigen::MatrixXd inputs;       ///< rows: u held on [t_k, t_{k+1}); last row is the unapplied final solve
  Eigen::MatrixXd coordinates;  ///< rows: C(x(t_k))
  Eigen::VectorXd cost;         ///< (C − C*)ᵀQ(C − C*) + uᵀRu at t_k
  Eigen::VectorXd reference;    ///< C*
  bool converged{false};
  double final_error{0.0};      ///< max_c |C_c(t_end) − C*_c|
  double final_distance{0.0};   ///< min(|x − x*|, |x + x*|) at t_end
  double settling_time{-1.0};   ///< first time after which |C − C*| stays within tolerance; −1 if never
  int uncontrollable_steps{0};

  [[nodiscard]] double cumulative_cost(double dt) const { return cost.sum() * dt; }
};

/**
 * @brief Receding-horizon loop: solve, hold u for `substeps` RK4 steps of plant_dt/substeps, repeat.
 *
 * Throws DivergenceError if the plant state exceeds the overflow guard.
 */
[[nodiscard]] ClosedLoopResult run_closed_loop(const SystemSpec & spec, const MpcConfig & config,
                                               const IntrinsicModel & model, const Eigen::VectorXd & x0, double t_end,
                                               const ClosedLoopOptions & opts = {});

/// run_closed_loop over every initial condition; OpenMP-parallel over trajectories.
[[nodiscard]] std::vector<ClosedLoopResult> run_closed_loop_ensemble(const SystemSpec & spec, const MpcConfig & config,
                                                                     const IntrinsicModel & model,
                                                                     const std::vector<Eigen::VectorXd> & initial,
                                                                     double t_end, const ClosedLoopOptions & opts = {});

namespace reference {
[[nodiscard]] std::vector<ClosedLoopResult> run_closed_loop_ensemble(const SystemSpec & spec, const MpcConfig & config,
                                                                     const IntrinsicModel & model,
                                                                     const std::vector<Eigen::VectorXd> & initial,
                                                                     double t_end, const ClosedLoopOptions & opts = {});
}  // namespace reference

}  // namespace kronic

#endif  // KRONIC_CONTROL_HPP
