#include "kronic/control.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <exception>

#include "kronic/error.hpp"

namespace kronic {

void MpcConfig::validate(Eigen::Index d, Eigen::Index q) const
{
  if (Q.rows() != d || Q.cols() != d) { throw InvalidArgument("mpc: Q must be " + std::to_string(d) + " x " + std::to_string(d)); }
  if (R.rows() != q || R.cols() != q) { throw InvalidArgument("mpc: R must be " + std::to_string(q) + " x " + std::to_string(q)); }
  if (!Q.allFinite() || !R.allFinite()) { throw InvalidArgument("mpc: weights must be finite"); }
  if ((Q - Q.transpose()).norm() > 1e-12 * (1.0 + Q.norm()) || (R - R.transpose()).norm() > 1e-12 * (1.0 + R.norm())) {
    throw InvalidArgument("mpc: weights must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eq(Q, Eigen::EigenvaluesOnly);
  if (!(eq.eigenvalues().minCoeff() > 0.0)) { throw InvalidArgument("mpc: Q must be positive definite"); }
  if (q > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(R, Eigen::EigenvaluesOnly);
    if (er.eigenvalues().minCoeff() < -1e-12 * (1.0 + R.norm())) { throw InvalidArgument("mpc: R must be positive semidefinite"); }
  }
  if (horizon_steps < 1 || substeps < 1) { throw InvalidArgument("mpc: horizon_steps and substeps must be >= 1"); }
  if (!(plant_dt > 0.0) || !std::isfinite(plant_dt)) { throw InvalidArgument("mpc: plant_dt must be positive"); }
  if (!reference_state.allFinite() || reference_state.size() == 0) { throw InvalidArgument("mpc: reference state missing"); }
  if (input_bounds) {
    if (input_bounds->lower.size() != q || input_bounds->upper.size() != q ||
        (input_bounds->lower.array() > input_bounds->upper.array()).any()) {
      throw InvalidArgument("mpc: input bounds must be q intervals with lower <= upper");
    }
  }
}

Eigen::VectorXd conserved_coordinates(const Dictionary & dict, const Eigen::MatrixXd & coefficients, const Eigen::VectorXd & x)
{
  if (coefficients.rows() != dict.size()) { throw InvalidArgument("conserved_coordinates: coefficient rows != dictionary size"); }
  return (dict.evaluate(x) * coefficients).transpose();
}

Eigen::MatrixXd control_gain_map(const Dictionary & dict, const Eigen::MatrixXd & coefficients, const Eigen::MatrixXd & B,
                                 const Eigen::VectorXd & x)
{
  if (coefficients.rows() != dict.size()) { throw InvalidArgument("control_gain_map: coefficient rows != dictionary size"); }
  if (B.rows() != dict.state_dim()) { throw InvalidArgument("control_gain_map: B has the wrong row count"); }
  // (∇Θ(x)ᵀ Ξ)ᵀ B
  return (grad_theta_at(dict, x).transpose() * coefficients).transpose() * B;
}

namespace {

Eigen::VectorXd clip(Eigen::VectorXd u, const std::optional<InputBounds> & bounds)
{
  if (bounds) { u = u.cwiseMax(bounds->lower).cwiseMin(bounds->upper); }
  return u;
}

Eigen::VectorXd solve_psd(const Eigen::MatrixXd & H, const Eigen::VectorXd & rhs)
{
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() == Eigen::Success) { return llt.solve(rhs); }
  // singular when R = 0 and B_c has fewer rows than columns: minimum-norm minimizer
  return H.completeOrthogonalDecomposition().solve(rhs);
}

// min ½uᵀHu + gᵀu over a box by cyclic coordinate descent, started from the clipped unconstrained point
Eigen::VectorXd box_qp(const Eigen::MatrixXd & H, const Eigen::VectorXd & g, const InputBounds & b, Eigen::VectorXd u)
{
  u = clip(std::move(u), b);
  for (int sweep = 0; sweep < 10000; ++sweep) {
    double moved = 0.0;
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      const double grad = H.row(j).dot(u) + g[j];
      const double next = H(j, j) > 0.0 ? std::clamp(u[j] - grad / H(j, j), b.lower[j], b.upper[j])
                                        : (grad > 0.0 ? b.lower[j] : grad < 0.0 ? b.upper[j] : u[j]);
      moved = std::max(moved, std::abs(next - u[j]));
      u[j] = next;
    }
    if (moved <= 1e-15 * (1.0 + u.cwiseAbs().maxCoeff())) { break; }
  }
  return u;
}

MpcStep zero_order_hold_step(const MpcConfig & config, const IntrinsicModel & model, const Eigen::VectorXd & C0,
                             const Eigen::VectorXd & C_ref, const Eigen::MatrixXd & G)
{
  const Eigen::Index q = model.B.cols();
  const Eigen::VectorXd e0 = C0 - C_ref;
  MpcStep step;
  step.u = Eigen::VectorXd::Zero(q);
  if (G.cwiseAbs().maxCoeff() == 0.0 || q == 0) {
    step.uncontrollable = e0.cwiseAbs().maxCoeff() > 0.0;
    return step;
  }
  // J(u) = Σ_{k=1..N} h [ (e0 + k h G u)ᵀ Q (e0 + k h G u) + uᵀ R u ]
  const int N = config.horizon_steps;
  const double h = config.plant_dt;
  double s1 = 0.0, s2 = 0.0;
  for (int k = 1; k <= N; ++k) {
    s1 += k * h;
    s2 += (k * h) * (k * h);
  }
  const Eigen::MatrixXd GtQ = G.transpose() * config.Q;
  const Eigen::MatrixXd H = s2 * GtQ * G + static_cast<double>(N) * config.R;
  const Eigen::VectorXd g = s1 * GtQ * e0;
  step.u = -solve_psd(H, g);
  if (config.input_bounds && clip(step.u, config.input_bounds) != step.u) {
    step.u = box_qp(H, g, *config.input_bounds, step.u);
  }
  return step;
}

double shooting_cost(const MpcConfig & config, const IntrinsicModel & model, const SystemSpec & plant,
                     const Eigen::VectorXd & x0, const Eigen::VectorXd & C_ref, const Eigen::VectorXd & u,
                     Eigen::VectorXd * residual_out)
{
  const int N = config.horizon_steps;
  const double h = config.plant_dt;
  const double hs = h / config.substeps;
  const auto d = model.dim();
  Eigen::VectorXd residual(N * d);
  Eigen::VectorXd x = x0;
  double J = 0.0;
  for (int k = 0; k < N; ++k) {
    for (int s = 0; s < config.substeps; ++s) { x = rk4_step_held(plant, x, u, hs); }
    const Eigen::VectorXd e = conserved_coordinates(model.dictionary, model.coefficients, x) - C_ref;
    residual.segment(k * d, d) = e;
    J += h * (e.dot(config.Q * e) + u.dot(config.R * u));
  }
  if (residual_out) { *residual_out = residual; }
  return J;
}

// Gauss-Newton on the horizon cost with a finite-difference Jacobian of the predicted C.
Eigen::VectorXd shooting_refine(const MpcConfig & config, const IntrinsicModel & model, const SystemSpec & plant,
                                const Eigen::VectorXd & x0, const Eigen::VectorXd & C_ref, Eigen::VectorXd u)
{
  const int N = config.horizon_steps;
  const auto q = u.size();
  const auto d = model.dim();
  Eigen::VectorXd r;
  double J = shooting_cost(config, model, plant, x0, C_ref, u, &r);
  for (int iter = 0; iter < 20; ++iter) {
    Eigen::MatrixXd Jac(N * d, q);
    for (Eigen::Index j = 0; j < q; ++j) {
      const double du = 1e-6 * (1.0 + std::abs(u[j]));
      Eigen::VectorXd up = u, um = u, rp, rm;
      up[j] += du;
      um[j] -= du;
      (void)shooting_cost(config, model, plant, x0, C_ref, up, &rp);
      (void)shooting_cost(config, model, plant, x0, C_ref, um, &rm);
      Jac.col(j) = (rp - rm) / (2.0 * du);
    }
    Eigen::MatrixXd H = static_cast<double>(N) * config.R;
    Eigen::VectorXd g = static_cast<double>(N) * config.R * u;
    for (int k = 0; k < N; ++k) {
      const auto Jk = Jac.middleRows(k * d, d);
      H += Jk.transpose() * config.Q * Jk;
      g += Jk.transpose() * config.Q * r.segment(k * d, d);
    }
    const Eigen::VectorXd delta = -solve_psd(H, g);
    double step = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 20; ++ls) {
      Eigen::VectorXd cand = clip(u + step * delta, config.input_bounds);
      Eigen::VectorXd rc;
      const double Jc = shooting_cost(config, model, plant, x0, C_ref, cand, &rc);
      if (Jc < J) {
        const double gain = J - Jc;
        u = cand;
        r = rc;
        J = Jc;
        improved = gain > 1e-14 * (1.0 + J);
        break;
      }
      step *= 0.5;
    }
    if (!improved || delta.norm() * step < 1e-12) { break; }
  }
  return u;
}

}  // namespace

MpcStep mpc_step(const MpcConfig & config, const IntrinsicModel & model, const Eigen::VectorXd & x_now,
                 PredictionModel prediction, const SystemSpec * plant)
{
  config.validate(model.dim(), model.B.cols());
  if (x_now.size() != model.dictionary.state_dim() || config.reference_state.size() != x_now.size()) {
    throw InvalidArgument("mpc_step: state dimension mismatch");
  }
  const Eigen::VectorXd C_ref = conserved_coordinates(model.dictionary, model.coefficients, config.reference_state);
  const Eigen::VectorXd C0 = conserved_coordinates(model.dictionary, model.coefficients, x_now);
  const Eigen::MatrixXd G = control_gain_map(model.dictionary, model.coefficients, model.B, x_now);
  MpcStep step = zero_order_hold_step(config, model, C0, C_ref, G);
  if (prediction == PredictionModel::nonlinear_shooting && !step.uncontrollable) {
    if (!plant) { throw InvalidArgument("mpc_step: shooting prediction needs the plant model"); }
    step.u = shooting_refine(config, model, *plant, x_now, C_ref, step.u);
  }
  return step;
}

ClosedLoopResult run_closed_loop(const SystemSpec & spec, const MpcConfig & config, const IntrinsicModel & model,
                                 const Eigen::VectorXd & x0, double t_end, const ClosedLoopOptions & opts)
{
  spec.validate();
  config.validate(model.dim(), model.B.cols());
  if (model.B.rows() != spec.state_dim || model.B.cols() != spec.input_dim) {
    throw InvalidArgument("closed loop: model B does not match the plant's input layout");
  }
  if (x0.size() != spec.state_dim || !x0.allFinite()) { throw InvalidArgument("closed loop: bad initial state"); }
  if (!(t_end > 0.0)) { throw InvalidArgument("closed loop: t_end must be positive"); }

  const long steps = std::max(1L, std::lround(t_end / config.plant_dt));
  const auto n = spec.state_dim;
  const auto q = spec.input_dim;
  const auto d = model.dim();
  const double hs = config.plant_dt / config.substeps;

  ClosedLoopResult res;
  res.times.resize(steps + 1);
  res.states.resize(steps + 1, n);
  res.inputs.resize(steps + 1, q);
  res.coordinates.resize(steps + 1, d);
  res.cost.resize(steps + 1);
  res.reference = conserved_coordinates(model.dictionary, model.coefficients, config.reference_state);

  Eigen::VectorXd x = x0;
  for (long k = 0; k <= steps; ++k) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(q);
    if (opts.controlled) {
      const auto step = mpc_step(config, model, x, opts.prediction, &spec);
      u = step.u;
      if (step.uncontrollable) { ++res.uncontrollable_steps; }
    }
    const Eigen::VectorXd C = conserved_coordinates(model.dictionary, model.coefficients, x);
    const Eigen::VectorXd e = C - res.reference;
    res.times[k] = static_cast<double>(k) * config.plant_dt;
    res.states.row(k) = x.transpose();
    res.inputs.row(k) = u.transpose();
    res.coordinates.row(k) = C.transpose();
    res.cost[k] = e.dot(config.Q * e) + u.dot(config.R * u);
    if (k == steps) { break; }

    for (int s = 0; s < config.substeps; ++s) { x = rk4_step_held(spec, x, u, hs); }
    const double norm = x.norm();
    if (!std::isfinite(norm) || norm > opts.overflow_guard) {
      throw DivergenceError(static_cast<double>(k + 1) * config.plant_dt, norm);
    }
  }

  const Eigen::VectorXd err = (res.coordinates.row(steps).transpose() - res.reference).cwiseAbs();
  res.final_error = err.size() > 0 ? err.maxCoeff() : 0.0;
  res.converged = res.final_error <= opts.tolerance;
  const Eigen::VectorXd & xs = config.reference_state;
  res.final_distance = std::min((x - xs).norm(), (x + xs).norm());
  res.settling_time = -1.0;
  for (long k = steps; k >= 0; --k) {
    const double ek = (res.coordinates.row(k).transpose() - res.reference).cwiseAbs().maxCoeff();
    if (ek > opts.tolerance) { break; }
    res.settling_time = res.times[k];
  }
  return res;
}

std::vector<ClosedLoopResult> run_closed_loop_ensemble(const SystemSpec & spec, const MpcConfig & config,
                                                       const IntrinsicModel & model,
                                                       const std::vector<Eigen::VectorXd> & initial, double t_end,
                                                       const ClosedLoopOptions & opts)
{
  const auto count = static_cast<long>(initial.size());
  std::vector<ClosedLoopResult> out(initial.size());
  std::vector<std::exception_ptr> errors(initial.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    try {
      out[i] = run_closed_loop(spec, config, model, initial[i], t_end, opts);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto & e : errors) {
    if (e) { std::rethrow_exception(e); }
  }
  return out;
}

namespace reference {

std::vector<ClosedLoopResult> run_closed_loop_ensemble(const SystemSpec & spec, const MpcConfig & config,
                                                       const IntrinsicModel & model,
                                                       const std::vector<Eigen::VectorXd> & initial, double t_end,
                                                       const ClosedLoopOptions & opts)
{
  std::vector<ClosedLoopResult> out;
  out.reserve(initial.size());
  for (const auto & x0 : initial) { out.push_back(run_closed_loop(spec, config, model, x0, t_end, opts)); }
  return out;
}

}  // namespace reference

}  // namespace kronic
