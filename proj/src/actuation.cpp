#include "kronic/actuation.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>

#include "kronic/error.hpp"
#include "kronic/linalg.hpp"

namespace kronic {

Eigen::VectorXd kron_row(const Eigen::VectorXd & g, const Eigen::VectorXd & u)
{
  const auto n = g.size();
  const auto q = u.size();
  Eigen::VectorXd out(n * q);
  for (Eigen::Index i = 0; i < n; ++i) { out.segment(i * q, q) = g[i] * u; }
  return out;
}

Eigen::VectorXd vec_rows(const Eigen::MatrixXd & B)
{
  Eigen::VectorXd v(B.size());
  for (Eigen::Index i = 0; i < B.rows(); ++i) { v.segment(i * B.cols(), B.cols()) = B.row(i).transpose(); }
  return v;
}

Eigen::MatrixXd unvec_rows(const Eigen::VectorXd & v, Eigen::Index n, Eigen::Index q)
{
  if (v.size() != n * q) { throw InvalidArgument("unvec_rows: size mismatch"); }
  Eigen::MatrixXd B(n, q);
  for (Eigen::Index i = 0; i < n; ++i) { B.row(i) = v.segment(i * q, q).transpose(); }
  return B;
}

ControlMatrixEstimate estimate_B(const std::vector<CoefficientVector> & eigenfunctions, const TrajectoryDataset & forced,
                                 double lambda, const ActuationOptions & opts)
{
  if (eigenfunctions.empty()) { throw InvalidArgument("estimate_B: no eigenfunctions"); }
  if (!forced.inputs) { throw InvalidArgument("estimate_B: forced dataset has no input columns"); }
  if (!forced.derivatives) { throw InvalidArgument("estimate_B: forced dataset has no derivatives"); }
  forced.validate();
  const auto & dict = eigenfunctions.front().dictionary;
  for (const auto & f : eigenfunctions) {
    f.validate();
    if (!(f.dictionary == dict)) { throw InvalidArgument("estimate_B: eigenfunctions use different dictionaries"); }
  }
  const auto n = forced.state_dim();
  const auto q = forced.inputs->cols();
  const auto m = forced.samples();
  const auto d = static_cast<Eigen::Index>(eigenfunctions.size());
  if (dict.state_dim() != n) { throw InvalidArgument("estimate_B: dictionary does not match the state dimension"); }
  if (q < 1) { throw InvalidArgument("estimate_B: no input channels"); }

  Eigen::MatrixXd Xi(dict.size(), d);
  for (Eigen::Index c = 0; c < d; ++c) { Xi.col(c) = eigenfunctions[static_cast<std::size_t>(c)].coefficients; }

  // rows ordered sample-major: row i*d + c is sample i, eigenfunction c
  const Eigen::MatrixXd target_by_fn = (-build_generator_matrix(dict, forced, lambda)) * Xi;  // m x d
  Eigen::MatrixXd regressor(m * d, n * q);
  Eigen::VectorXd target(m * d);
#pragma omp parallel
  {
    Eigen::MatrixXd grad(dict.size(), n);
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::VectorXd x = forced.states.row(i).transpose();
      const Eigen::VectorXd u = forced.inputs->row(i).transpose();
      dict.gradient(x, grad);
      const Eigen::MatrixXd grad_phi = grad.transpose() * Xi;  // n x d
      for (Eigen::Index c = 0; c < d; ++c) {
        regressor.row(i * d + c) = kron_row(grad_phi.col(c), u).transpose();
        target[i * d + c] = target_by_fn(i, c);
      }
    }
  }

  const auto svd = linalg::right_svd(regressor);
  const double smax = svd.singular_values[0];
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < svd.singular_values.size(); ++k) {
    if (smax > 0.0 && svd.singular_values[k] > opts.rank_tolerance * smax) { ++rank; }
  }
  if (rank < n * q) { throw UnidentifiableError(rank, n * q); }

  ControlMatrixEstimate est;
  const Eigen::VectorXd b = regressor.completeOrthogonalDecomposition().solve(target);
  est.B_hat = unvec_rows(b, n, q);
  const Eigen::VectorXd resid = regressor * b - target;
  est.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
  est.regressor_condition = smax / svd.singular_values[svd.singular_values.size() - 1];
  est.regressor_rank = rank;
  est.lambda = lambda;
  if (est.regressor_condition > opts.condition_warning) {
    est.warnings.push_back("actuation regressor is ill-conditioned (condition " + std::to_string(est.regressor_condition) +
                           ")");
  }
  return est;
}

ControlMatrixEstimate estimate_B(const InvariantSubspace & subspace, const TrajectoryDataset & forced, double lambda,
                                 const ActuationOptions & opts)
{
  if (subspace.kernel_dimension() < 1) { throw InvalidArgument("estimate_B: empty invariant subspace"); }
  std::vector<CoefficientVector> fns;
  for (Eigen::Index c = 0; c < subspace.kernel_dimension(); ++c) { fns.push_back(subspace.column(c)); }
  return estimate_B(fns, forced, lambda, opts);
}

nlohmann::json to_json(const ControlMatrixEstimate & e)
{
  const Eigen::VectorXd flat = vec_rows(e.B_hat);
  return {{"B_hat", std::vector<double>(flat.begin(), flat.end())},
          {"shape", {e.B_hat.rows(), e.B_hat.cols()}},
          {"residual_rms", e.residual_rms},
          {"regressor_condition", e.regressor_condition},
          {"regressor_rank", e.regressor_rank},
          {"lambda", e.lambda},
          {"warnings", e.warnings}};
}

ControlMatrixEstimate control_estimate_from_json(const nlohmann::json & j)
{
  ControlMatrixEstimate e;
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  if (shape.size() != 2) { throw InvalidArgument("estimate JSON: shape must have two entries"); }
  const auto flat = j.at("B_hat").get<std::vector<double>>();
  e.B_hat = unvec_rows(Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size())), shape[0],
                       shape[1]);
  e.residual_rms = j.at("residual_rms").get<double>();
  e.regressor_condition = j.at("regressor_condition").get<double>();
  e.regressor_rank = j.value("regressor_rank", Eigen::Index{0});
  e.lambda = j.at("lambda").get<double>();
  e.warnings = j.value("warnings", std::vector<std::string>{});
  return e;
}

}  // namespace kronic
