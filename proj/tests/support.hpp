#ifndef KRONIC_TESTS_SUPPORT_HPP
#define KRONIC_TESTS_SUPPORT_HPP

#include <Eigen/Core>
#include <Eigen/QR>

#include <cstdint>
#include <random>
#include <vector>

#include "kronic/features.hpp"
#include "kronic/systems.hpp"

namespace testing_support {

inline Eigen::Vector3d inertia() { return {1.0, 0.5, 1.0 / 3.0}; }

// multi-radius unforced ensemble; a single sphere would make (|x|^2 - r^2) x_i conserved too
inline kronic::TrajectoryDataset rigid_body_data(int count, double t_end, double dt = 0.01, std::uint64_t seed = 0)
{
  const auto spec = kronic::rigid_body_system(inertia());
  const auto x0 = kronic::sample_momentum_shell(0.5, 1.5, count, seed);
  return kronic::concatenate(kronic::integrate_ensemble(spec, x0, kronic::zero_forcing(3), t_end, dt));
}

inline kronic::CoefficientVector momentum(const kronic::Dictionary & d)
{
  return kronic::make_function(d, {{{2, 0, 0}, 0.5}, {{0, 2, 0}, 0.5}, {{0, 0, 2}, 0.5}});
}

inline kronic::CoefficientVector energy(const kronic::Dictionary & d)
{
  const auto I = inertia();
  return kronic::make_function(d, {{{2, 0, 0}, 0.5 / I[0]}, {{0, 2, 0}, 0.5 / I[1]}, {{0, 0, 2}, 0.5 / I[2]}});
}

inline Eigen::MatrixXd uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 & rng, double lo = -1.0,
                               double hi = 1.0)
{
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < M.size(); ++i) { M.data()[i] = u(rng); }
  return M;
}

// Householder Q of a Gaussian matrix
inline Eigen::MatrixXd random_orthogonal(Eigen::Index d, std::mt19937_64 & rng)
{
  std::normal_distribution<double> g;
  Eigen::MatrixXd A(d, d);
  for (Eigen::Index i = 0; i < A.size(); ++i) { A.data()[i] = g(rng); }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
}

}  // namespace testing_support

#endif  // KRONIC_TESTS_SUPPORT_HPP
