#include "kronic/discovery.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kronic/error.hpp"
#include "kronic/linalg.hpp"

namespace kronic {

Eigen::MatrixXd build_generator_matrix(const Dictionary & dict, const TrajectoryDataset & data, double lambda)
{
  if (!data.derivatives) { throw InvalidArgument("generator matrix: dataset has no derivatives"); }
  if (!std::isfinite(lambda)) { throw InvalidArgument("generator matrix: lambda must be finite"); }
  Eigen::MatrixXd A = -eval_gamma(dict, data.states, *data.derivatives);
  if (lambda != 0.0) { A += lambda * eval_theta(dict, data.states); }
  return A;
}

InvariantSubspace null_space(const Eigen::MatrixXd & A, double rank_tolerance)
{
  if (A.rows() < 1 || A.cols() < 1) { throw InvalidArgument("null_space: empty matrix"); }
  if (!(rank_tolerance > 0.0 && rank_tolerance < 1.0)) {
    throw InvalidArgument("null_space: rank tolerance must lie in (0, 1)");
  }
  if (!A.allFinite()) { throw InvalidArgument("null_space: non-finite matrix"); }

  const auto svd = linalg::right_svd(A);
  const double sigma_max = svd.singular_values[0];
  if (!(sigma_max > 0.0)) {
    throw DegenerateDataError("null_space: every singular value vanishes; the data does not constrain the dictionary");
  }
  const double cutoff = rank_tolerance * sigma_max;
  Eigen::Index first = A.cols();
  while (first > 0 && svd.singular_values[first - 1] <= cutoff) { --first; }

  InvariantSubspace out;
  out.basis = svd.V.rightCols(A.cols() - first);
  out.singular_values = svd.singular_values;
  out.rank_tolerance = rank_tolerance;
  out.column_scale = A.colwise().norm().transpose();
  return out;
}

InvariantSubspace discover_invariants(const Dictionary & dict, const TrajectoryDataset & data, double lambda,
                                      double rank_tolerance)
{
  auto out = null_space(build_generator_matrix(dict, data, lambda), rank_tolerance);
  out.dictionary = dict;
  out.lambda = lambda;
  return out;
}

namespace {

Eigen::VectorXd soft_threshold(const Eigen::VectorXd & v, double level)
{
  return v.unaryExpr([level](double a) { return std::copysign(std::max(std::abs(a) - level, 0.0), a); });
}

// Unit q with M_S q = 0 for d-1 independent rows S, chosen in order of increasing |M q_hint|.
// `first` (if >= 0) is taken before the others.
Eigen::VectorXd round_to_vertex(const Eigen::MatrixXd & M, const Eigen::VectorXd & q_hint, Eigen::Index first = -1)
{
  const auto d = M.cols();
  const Eigen::VectorXd r = M * q_hint;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(M.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if ((a == first) != (b == first)) { return a == first; }
    return std::abs(r[a]) < std::abs(r[b]);
  });

  // rows at round-off level are entries the subspace never uses; they carry no direction
  const double floor = 1e-8 * M.rowwise().norm().maxCoeff();
  Eigen::MatrixXd picked(d - 1, d);
  Eigen::MatrixXd ortho(d, 0);
  Eigen::Index count = 0;
  for (Eigen::Index k : order) {
    if (count == d - 1) { break; }
    const Eigen::VectorXd row = M.row(k).transpose();
    const double norm = row.norm();
    if (norm <= floor) { continue; }
    Eigen::VectorXd resid = row - ortho * (ortho.transpose() * row);
    if (resid.norm() <= 1e-8 * norm) { continue; }
    ortho.conservativeResize(d, ortho.cols() + 1);
    ortho.col(ortho.cols() - 1) = resid.normalized();
    picked.row(count++) = row.transpose() / norm;
  }
  if (count < d - 1) { return q_hint.normalized(); }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(picked, Eigen::ComputeFullV);
  Eigen::VectorXd q = svd.matrixV().col(d - 1);
  if (q.dot(q_hint) < 0.0) { q = -q; }
  return q;
}

struct Candidate
{
  Eigen::VectorXd q;  // coordinates in the current basis, unit norm
  double score;
  bool converged;
};

Candidate sparsest_direction(const Eigen::MatrixXd & Y, const Eigen::VectorXd & weights, double level, int max_iters)
{
  const auto d = Y.cols();
  const Eigen::MatrixXd M = weights.asDiagonal() * Y;
  // ADM runs on an orthonormal basis Z of range(M); M = Z R
  const Eigen::MatrixXd Z = linalg::orthonormalize(M);
  const Eigen::MatrixXd R = Z.transpose() * M;

  Candidate best{Eigen::VectorXd::Unit(d, 0), std::numeric_limits<double>::infinity(), true};
  bool all_converged = true;
  const double floor = 1e-8 * Z.rowwise().norm().maxCoeff();
  for (Eigen::Index k = 0; k < Z.rows(); ++k) {
    const double row_norm = Z.row(k).norm();
    if (row_norm <= floor) { continue; }
    Eigen::VectorXd qz = Z.row(k).transpose() / row_norm;
    bool converged = false;
    for (int it = 0; it < max_iters; ++it) {
      const Eigen::VectorXd x = soft_threshold(Z * qz, level);
      const Eigen::VectorXd next = Z.transpose() * x;
      const double nn = next.norm();
      if (nn == 0.0) {
        converged = true;
        break;
      }
      const Eigen::VectorXd qn = next / nn;
      const double change = (qn - qz).norm();
      qz = qn;
      if (change <= 1e-10) {
        converged = true;
        break;
      }
    }
    all_converged = all_converged && converged;

    const Eigen::VectorXd hint = R.triangularView<Eigen::Upper>().solve(qz).normalized();
    // ADM is local; the vertex through row k is tried as well
    for (const Eigen::Index first : {Eigen::Index{-1}, k}) {
      const Eigen::VectorXd q = round_to_vertex(M, hint, first);
      const double score = (M * q).lpNorm<1>();
      if (score < best.score * (1.0 - 1e-12)) { best = {q, score, true}; }
    }
  }
  best.converged = all_converged;
  return best;
}

Eigen::VectorXd clean(Eigen::VectorXd v)
{
  const double peak = v.cwiseAbs().maxCoeff();
  for (auto & a : v) {
    if (std::abs(a) < 1e-6 * peak) { a = 0.0; }
  }
  v.normalize();
  Eigen::Index lead = 0;
  v.cwiseAbs().maxCoeff(&lead);
  if (v[lead] < 0.0) { v = -v; }
  v.array() += 0.0;  // no -0 in reports
  return v;
}

}  // namespace

SparsifyResult sparsify(const InvariantSubspace & subspace, const SparsifyOptions & opts)
{
  const auto P = subspace.basis.rows();
  auto d = subspace.basis.cols();
  if (d < 1) { throw InvalidArgument("sparsify: empty subspace"); }
  if (opts.max_iters < 1) { throw InvalidArgument("sparsify: max_iters must be >= 1"); }
  const double level = opts.l1_weight.value_or(1.0 / std::sqrt(static_cast<double>(P)));
  if (!(level >= 0.0) || !std::isfinite(level)) { throw InvalidArgument("sparsify: l1 weight must be >= 0"); }

  Eigen::VectorXd weights = Eigen::VectorXd::Ones(P);
  if (opts.column_scaling && subspace.column_scale.size() == P) {
    weights = subspace.column_scale;
    // a column the data never excites is penalised like the strongest one
    const double top = weights.maxCoeff();
    for (auto & w : weights) {
      if (!(w > 0.0)) { w = top > 0.0 ? top : 1.0; }
    }
  }

  SparsifyResult out;
  Eigen::MatrixXd Y = subspace.basis;
  while (d >= 1) {
    Eigen::VectorXd q;
    if (d == 1) {
      q = Eigen::VectorXd::Ones(1);
    } else {
      auto cand = sparsest_direction(Y, weights, level, opts.max_iters);
      if (!cand.converged) { out.converged = false; }
      q = cand.q;
    }
    out.vectors.push_back({subspace.dictionary, clean(Y * q)});
    if (d == 1) { break; }
    Y = Y * linalg::complement_basis(q);
    --d;
  }
  if (!out.converged) {
    out.warnings.emplace_back("sparsify: soft-threshold iteration did not settle to 1e-10 within " +
                              std::to_string(opts.max_iters) + " iterations for some initialization");
  }
  return out;
}

double eigenfunction_residual(const CoefficientVector & xi, const TrajectoryDataset & data, double lambda)
{
  xi.validate();
  const Eigen::VectorXd r = build_generator_matrix(xi.dictionary, data, lambda) * xi.coefficients;
  if (r.size() == 0) { return 0.0; }
  return std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
}

}  // namespace kronic
