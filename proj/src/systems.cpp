#include "kronic/systems.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <exception>
#include <numbers>
#include <random>

#include "kronic/error.hpp"

namespace kronic {

namespace {

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd> & m) { return m.allFinite(); }

long step_count(double t_end, double dt)
{
  if (!(dt > 0.0) || !(t_end > 0.0) || !std::isfinite(dt) || !std::isfinite(t_end)) {
    throw InvalidArgument("integrate: dt and t_end must be positive and finite");
  }
  if (dt > t_end * (1.0 + 1e-12)) { throw InvalidArgument("integrate: dt must not exceed t_end"); }
  return std::max(1L, std::lround(t_end / dt));
}

}  // namespace

void SystemSpec::validate() const
{
  if (state_dim < 1) { throw InvalidArgument("system: state_dim must be >= 1"); }
  if (input_dim < 0) { throw InvalidArgument("system: input_dim must be >= 0"); }
  if (control_matrix.rows() != state_dim || control_matrix.cols() != input_dim) {
    throw InvalidArgument("system: control matrix must be " + std::to_string(state_dim) + " x " +
                          std::to_string(input_dim));
  }
  if (!all_finite(control_matrix)) { throw InvalidArgument("system: control matrix is not finite"); }
  if (!drift) { throw InvalidArgument("system: missing drift vector field"); }
  if (name == "rigid_body") {
    for (const char * key : {"I1", "I2", "I3"}) {
      auto it = parameters.find(key);
      if (it == parameters.end() || !(it->second > 0.0) || !std::isfinite(it->second)) {
        throw InvalidArgument(std::string("rigid body: moment of inertia ") + key + " must be positive");
      }
    }
  }
}

Eigen::VectorXd SystemSpec::rhs(const Eigen::VectorXd & x, const Eigen::VectorXd & u) const
{
  Eigen::VectorXd dx = drift(x);
  if (input_dim > 0 && u.size() > 0) { dx.noalias() += control_matrix * u; }
  return dx;
}

Eigen::Vector3d rigid_body_rhs(const Eigen::Vector3d & momentum, const Eigen::Vector3d & torque,
                               const Eigen::Vector3d & inertia)
{
  if (!momentum.allFinite() || !torque.allFinite() || !inertia.allFinite()) {
    throw InvalidArgument("rigid_body_rhs: non-finite input");
  }
  if ((inertia.array() <= 0.0).any()) { throw InvalidArgument("rigid_body_rhs: inertia must be positive"); }
  const double I1 = inertia[0], I2 = inertia[1], I3 = inertia[2];
  const Eigen::Vector3d & p = momentum;
  return Eigen::Vector3d{(I2 - I3) / (I3 * I2) * p[1] * p[2],
                         (I3 - I1) / (I1 * I3) * p[2] * p[0],
                         (I1 - I2) / (I2 * I1) * p[0] * p[1]} +
         torque;
}

SystemSpec rigid_body_system(const Eigen::Vector3d & inertia, const Eigen::MatrixXd & B)
{
  SystemSpec spec;
  spec.name = "rigid_body";
  spec.state_dim = 3;
  spec.input_dim = static_cast<int>(B.cols());
  spec.parameters = {{"I1", inertia[0]}, {"I2", inertia[1]}, {"I3", inertia[2]}};
  spec.control_matrix = B;
  const Eigen::Vector3d I = inertia;
  const Eigen::Vector3d coef{(I[1] - I[2]) / (I[2] * I[1]), (I[2] - I[0]) / (I[0] * I[2]),
                             (I[0] - I[1]) / (I[1] * I[0])};
  spec.drift = [coef](const Eigen::VectorXd & p) -> Eigen::VectorXd {
    return Eigen::Vector3d{coef[0] * p[1] * p[2], coef[1] * p[2] * p[0], coef[2] * p[0] * p[1]};
  };
  spec.validate();
  return spec;
}

SystemSpec linear_system(const Eigen::MatrixXd & A, const Eigen::MatrixXd & B)
{
  if (A.rows() != A.cols()) { throw InvalidArgument("linear system: A must be square"); }
  SystemSpec spec;
  spec.name = "linear";
  spec.state_dim = static_cast<int>(A.rows());
  spec.input_dim = static_cast<int>(B.cols());
  spec.control_matrix = B.size() == 0 ? Eigen::MatrixXd(A.rows(), 0) : B;
  spec.drift = [A](const Eigen::VectorXd & x) -> Eigen::VectorXd { return A * x; };
  spec.validate();
  return spec;
}

const char * to_string(DerivativeSource s) noexcept
{
  switch (s) {
  case DerivativeSource::analytic: return "analytic";
  case DerivativeSource::central_difference: return "central_difference";
  case DerivativeSource::external: return "external";
  }
  return "unknown";
}

void TrajectoryDataset::validate() const
{
  const auto m = states.rows();
  if (times.size() != m) { throw InvalidArgument("dataset: times and states row counts differ"); }
  if (derivatives && (derivatives->rows() != m || derivatives->cols() != states.cols())) {
    throw InvalidArgument("dataset: derivative block has the wrong shape");
  }
  if (inputs && inputs->rows() != m) { throw InvalidArgument("dataset: input block has the wrong row count"); }
  if (!times.allFinite() || !states.allFinite() || (derivatives && !derivatives->allFinite()) ||
      (inputs && !inputs->allFinite())) {
    throw InvalidArgument("dataset: non-finite entries");
  }
  for (Eigen::Index i = 1; i < m && !stacked; ++i) {
    if (!(times[i] > times[i - 1])) { throw InvalidArgument("dataset: times must be strictly increasing"); }
  }
}

TrajectoryDataset concatenate(const std::vector<TrajectoryDataset> & parts)
{
  if (parts.empty()) { throw InvalidArgument("concatenate: no datasets"); }
  const auto n = parts.front().state_dim();
  const bool has_d = parts.front().derivatives.has_value();
  const bool has_u = parts.front().inputs.has_value();
  const auto q = has_u ? parts.front().inputs->cols() : 0;
  Eigen::Index m = 0;
  for (const auto & p : parts) {
    if (p.state_dim() != n || p.derivatives.has_value() != has_d || p.inputs.has_value() != has_u ||
        (has_u && p.inputs->cols() != q)) {
      throw InvalidArgument("concatenate: datasets have inconsistent layouts");
    }
    m += p.samples();
  }
  TrajectoryDataset out;
  out.times.resize(m);
  out.states.resize(m, n);
  if (has_d) { out.derivatives = Eigen::MatrixXd(m, n); }
  if (has_u) { out.inputs = Eigen::MatrixXd(m, q); }
  out.derivative_source = parts.front().derivative_source;
  out.stacked = parts.size() > 1 || parts.front().stacked;
  Eigen::Index row = 0;
  for (const auto & p : parts) {
    const auto k = p.samples();
    out.times.segment(row, k) = p.times;
    out.states.middleRows(row, k) = p.states;
    if (has_d) { out.derivatives->middleRows(row, k) = *p.derivatives; }
    if (has_u) { out.inputs->middleRows(row, k) = *p.inputs; }
    row += k;
  }
  return out;
}

Eigen::VectorXd rk4_step_held(const SystemSpec & spec, const Eigen::VectorXd & x, const Eigen::VectorXd & u,
                              double h)
{
  const Eigen::VectorXd k1 = spec.rhs(x, u);
  const Eigen::VectorXd k2 = spec.rhs(x + 0.5 * h * k1, u);
  const Eigen::VectorXd k3 = spec.rhs(x + 0.5 * h * k2, u);
  const Eigen::VectorXd k4 = spec.rhs(x + h * k3, u);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

TrajectoryDataset integrate(const SystemSpec & spec, const Eigen::VectorXd & x0, const ForcingSignal & forcing,
                            double t_end, double dt, const IntegrationOptions & opts)
{
  spec.validate();
  if (x0.size() != spec.state_dim) { throw InvalidArgument("integrate: x0 has the wrong dimension"); }
  if (!x0.allFinite()) { throw InvalidArgument("integrate: x0 is not finite"); }
  const long steps = step_count(t_end, dt);
  const bool forced = static_cast<bool>(forcing) && spec.input_dim > 0;
  const int n = spec.state_dim;
  const int q = spec.input_dim;

  auto input_at = [&](double t) -> Eigen::VectorXd {
    if (!forced) { return Eigen::VectorXd::Zero(q); }
    Eigen::VectorXd u = forcing(t);
    if (u.size() != q) { throw InvalidArgument("integrate: forcing returned the wrong input dimension"); }
    return u;
  };

  TrajectoryDataset data;
  data.times.resize(steps + 1);
  data.states.resize(steps + 1, n);
  data.derivatives = Eigen::MatrixXd(steps + 1, n);
  if (forced) { data.inputs = Eigen::MatrixXd(steps + 1, q); }
  data.derivative_source = DerivativeSource::analytic;

  Eigen::VectorXd x = x0;
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Eigen::VectorXd u = input_at(t);
    data.times[k] = t;
    data.states.row(k) = x.transpose();
    data.derivatives->row(k) = spec.rhs(x, u).transpose();
    if (forced) { data.inputs->row(k) = u.transpose(); }
    if (k == steps) { break; }

    const Eigen::VectorXd u_mid = input_at(t + 0.5 * dt);
    const Eigen::VectorXd u_end = input_at(t + dt);
    const Eigen::VectorXd k1 = spec.rhs(x, u);
    const Eigen::VectorXd k2 = spec.rhs(x + 0.5 * dt * k1, u_mid);
    const Eigen::VectorXd k3 = spec.rhs(x + 0.5 * dt * k2, u_mid);
    const Eigen::VectorXd k4 = spec.rhs(x + dt * k3, u_end);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double norm = x.norm();
    if (!std::isfinite(norm) || norm > opts.overflow_guard) {
      throw DivergenceError(t + dt, norm);
    }
  }
  return data;
}

std::vector<TrajectoryDataset> integrate_ensemble(const SystemSpec & spec,
                                                  const std::vector<Eigen::VectorXd> & initial,
                                                  const ForcingSignal & forcing, double t_end, double dt,
                                                  const IntegrationOptions & opts)
{
  const auto count = static_cast<long>(initial.size());
  std::vector<TrajectoryDataset> out(initial.size());
  std::vector<std::exception_ptr> errors(initial.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    try {
      out[i] = integrate(spec, initial[i], forcing, t_end, dt, opts);
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

std::vector<TrajectoryDataset> integrate_ensemble(const SystemSpec & spec,
                                                  const std::vector<Eigen::VectorXd> & initial,
                                                  const ForcingSignal & forcing, double t_end, double dt,
                                                  const IntegrationOptions & opts)
{
  std::vector<TrajectoryDataset> out;
  out.reserve(initial.size());
  for (const auto & x0 : initial) { out.push_back(integrate(spec, x0, forcing, t_end, dt, opts)); }
  return out;
}

}  // namespace reference

namespace {

std::vector<Eigen::Vector3d> fibonacci_directions(int count)
{
  std::vector<Eigen::Vector3d> dirs;
  dirs.reserve(static_cast<std::size_t>(count));
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * i;
    dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return dirs;
}

Eigen::Matrix3d seeded_rotation(std::mt19937_64 & rng)
{
  std::normal_distribution<double> normal;
  Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
  q.normalize();
  return q.toRotationMatrix();
}

}  // namespace

std::vector<Eigen::VectorXd> sample_momentum_sphere(double L_value, int count, std::uint64_t seed)
{
  if (!(L_value > 0.0) || !std::isfinite(L_value)) { throw InvalidArgument("sphere sampling: L must be positive"); }
  if (count < 1) { throw InvalidArgument("sphere sampling: count must be >= 1"); }
  const double radius = std::sqrt(2.0 * L_value);
  std::mt19937_64 rng(seed);
  const Eigen::Matrix3d rot = seeded_rotation(rng);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (const auto & d : fibonacci_directions(count)) {
    Eigen::Vector3d p = rot * d;
    pts.emplace_back(radius * p / p.norm());
  }
  return pts;
}

std::vector<Eigen::VectorXd> sample_momentum_shell(double r_min, double r_max, int count, std::uint64_t seed)
{
  if (!(r_min > 0.0) || !(r_max >= r_min) || !std::isfinite(r_max)) {
    throw InvalidArgument("shell sampling: need 0 < r_min <= r_max");
  }
  if (count < 1) { throw InvalidArgument("shell sampling: count must be >= 1"); }
  std::mt19937_64 rng(seed);
  const Eigen::Matrix3d rot = seeded_rotation(rng);
  std::uniform_real_distribution<double> radius(r_min, r_max);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (const auto & d : fibonacci_directions(count)) {
    Eigen::Vector3d p = rot * d;
    pts.emplace_back(radius(rng) * p / p.norm());
  }
  return pts;
}

ForcingSignal cubic_sine_forcing()
{
  return [](double t) -> Eigen::VectorXd {
    const double a = 0.5 + std::sin(40.0 * t);
    return Eigen::Vector3d{a * a * a, 0.5 + std::sin(10.0 * t), std::sin(20.0 * t)};
  };
}

ForcingSignal zero_forcing(int q)
{
  return [q](double) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(q); };
}

}  // namespace kronic
