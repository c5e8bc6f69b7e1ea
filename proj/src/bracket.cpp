#include "kronic/bracket.hpp"

#include <Eigen/Geometry>

#include <cmath>

#include "kronic/error.hpp"

namespace kronic {

const char * to_string(BracketKind k) noexcept
{
  switch (k) {
  case BracketKind::canonical: return "canonical";
  case BracketKind::lie_poisson_so3: return "lie_poisson_so3";
  }
  return "unknown";
}

BracketKind bracket_kind_from_string(const std::string & s)
{
  if (s == "canonical") { return BracketKind::canonical; }
  if (s == "lie_poisson_so3") { return BracketKind::lie_poisson_so3; }
  throw InvalidArgument("unknown bracket kind '" + s + "'");
}

void check_bracket_dimension(BracketKind kind, Eigen::Index n)
{
  if (kind == BracketKind::canonical && (n < 2 || n % 2 != 0)) {
    throw InvalidArgument("canonical bracket needs an even state dimension");
  }
  if (kind == BracketKind::lie_poisson_so3 && n != 3) {
    throw InvalidArgument("so(3) Lie-Poisson bracket needs state dimension 3");
  }
}

double bracket_of_gradients(BracketKind kind, const Eigen::VectorXd & grad_f, const Eigen::VectorXd & grad_g,
                            const Eigen::VectorXd & x)
{
  if (kind == BracketKind::lie_poisson_so3) {
    const Eigen::Vector3d a = grad_f.head<3>();
    const Eigen::Vector3d b = grad_g.head<3>();
    return -x.head<3>().dot(a.cross(b));
  }
  const auto k = x.size() / 2;
  double s = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) { s += grad_f[j] * grad_g[k + j] - grad_f[k + j] * grad_g[j]; }
  return s;
}

double bracket_eval(BracketKind kind, const CoefficientVector & F, const CoefficientVector & G, const Eigen::VectorXd & x)
{
  F.validate();
  G.validate();
  const auto n = x.size();
  if (F.dictionary.state_dim() != n || G.dictionary.state_dim() != n) {
    throw InvalidArgument("bracket: dictionaries do not match the state dimension");
  }
  check_bracket_dimension(kind, n);
  return bracket_of_gradients(kind, F.gradient(x), G.gradient(x), x);
}

double basis_partial(const CoefficientVector & F, Eigen::Index i, const Eigen::VectorXd & x)
{
  F.validate();
  if (i < 0 || i >= F.dictionary.state_dim()) { throw InvalidArgument("basis_partial: coordinate index out of range"); }
  return grad_theta_at(F.dictionary, x).col(i).dot(F.coefficients);
}

Eigen::MatrixXd involution_check(BracketKind kind, const std::vector<CoefficientVector> & candidates,
                                 const Eigen::MatrixXd & X)
{
  const auto c = static_cast<Eigen::Index>(candidates.size());
  if (c < 1) { throw InvalidArgument("involution_check: no candidates"); }
  for (const auto & f : candidates) {
    f.validate();
    if (f.dictionary.state_dim() != X.cols()) { throw InvalidArgument("involution_check: dimension mismatch"); }
  }
  check_bracket_dimension(kind, X.cols());
  const auto m = X.rows();

  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(c, c);
#pragma omp parallel
  {
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(c, c);
    std::vector<Eigen::VectorXd> grads(static_cast<std::size_t>(c));
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::VectorXd x = X.row(i).transpose();
      for (Eigen::Index a = 0; a < c; ++a) { grads[static_cast<std::size_t>(a)] = candidates[static_cast<std::size_t>(a)].gradient(x); }
      for (Eigen::Index a = 0; a < c; ++a) {
        for (Eigen::Index b = 0; b < c; ++b) {
          const double v = bracket_of_gradients(kind, grads[static_cast<std::size_t>(a)], grads[static_cast<std::size_t>(b)], x);
          local(a, b) += v * v;
        }
      }
    }
#pragma omp critical
    sums += local;
  }
  return (m > 0 ? (sums / static_cast<double>(m)).cwiseSqrt() : sums).eval();
}

Eigen::MatrixXd build_D_matrix(const CoefficientVector & hamiltonian, const Dictionary & upsilon, const Eigen::MatrixXd & X)
{
  hamiltonian.validate();
  if (hamiltonian.dictionary.state_dim() != 3 || upsilon.state_dim() != 3 || X.cols() != 3) {
    throw Unsupported("D matrix is defined for three degrees of freedom only");
  }
  if (!X.allFinite()) { throw InvalidArgument("D matrix: non-finite data"); }
  const auto m = X.rows();
  const auto r = upsilon.size();
  const auto P = hamiltonian.dictionary.size();
  Eigen::MatrixXd D(m, r);
#pragma omp parallel
  {
    Eigen::MatrixXd theta_grad(P, 3);
    Eigen::MatrixXd ups_grad(r, 3);
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Vector3d x = X.row(i).transpose();
      hamiltonian.dictionary.gradient(x, theta_grad);
      upsilon.gradient(x, ups_grad);
      // dH[k] = Θ_k ξ, Υ_k = ups_grad.col(k)
      const Eigen::Vector3d dH = theta_grad.transpose() * hamiltonian.coefficients;
      D.row(i) = (x[0] * (dH[1] * ups_grad.col(2) - dH[2] * ups_grad.col(1)) +
                  x[1] * (dH[2] * ups_grad.col(0) - dH[0] * ups_grad.col(2)) +
                  x[2] * (dH[0] * ups_grad.col(1) - dH[1] * ups_grad.col(0)))
                     .transpose();
    }
  }
  return D;
}

BracketDiscovery discover_via_bracket(const CoefficientVector & hamiltonian, const Dictionary & upsilon,
                                      const Eigen::MatrixXd & X, double rank_tolerance,
                                      const SparsifyOptions & sparsify_opts)
{
  BracketDiscovery out;
  out.subspace = null_space(build_D_matrix(hamiltonian, upsilon, X), rank_tolerance);
  out.subspace.dictionary = upsilon;
  out.subspace.lambda = 0.0;
  if (out.subspace.kernel_dimension() > 0) { out.sparse = sparsify(out.subspace, sparsify_opts); }
  return out;
}

Eigen::Vector3d recover_vector_field(const CoefficientVector & hamiltonian, const Eigen::Vector3d & x)
{
  hamiltonian.validate();
  if (hamiltonian.dictionary.state_dim() != 3) { throw Unsupported("vector-field recovery needs n = 3"); }
  const Eigen::VectorXd xd = x;
  const Eigen::Vector3d grad_h = hamiltonian.gradient(xd);
  Eigen::Vector3d f;
  for (int i = 0; i < 3; ++i) {
    // ∇xᵢ = eᵢ
    f[i] = bracket_of_gradients(BracketKind::lie_poisson_so3, Eigen::Vector3d::Unit(i), grad_h, xd);
  }
  return f;
}

}  // namespace kronic
