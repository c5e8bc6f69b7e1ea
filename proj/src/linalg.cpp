#include "kronic/linalg.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "kronic/error.hpp"

namespace kronic::linalg {

RightSvd right_svd(const Eigen::MatrixXd & A)
{
  const auto m = A.rows();
  const auto P = A.cols();
  RightSvd out;
  out.singular_values = Eigen::VectorXd::Zero(P);
  if (m >= P) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    const Eigen::MatrixXd R = qr.matrixQR().topRows(P).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeFullV);
    out.singular_values = svd.singularValues();
    out.V = svd.matrixV();
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    out.singular_values.head(svd.singularValues().size()) = svd.singularValues();
    out.V = svd.matrixV();
  }
  return out;
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd & A)
{
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  return qr.householderQ() * Eigen::MatrixXd::Identity(A.rows(), A.cols());
}

double largest_principal_angle(const Eigen::MatrixXd & A, const Eigen::MatrixXd & B)
{
  if (A.rows() != B.rows()) { throw InvalidArgument("principal angle: ambient dimensions differ"); }
  if (A.cols() == 0 || B.cols() == 0) { throw InvalidArgument("principal angle: empty subspace"); }
  const Eigen::MatrixXd QA = orthonormalize(A);
  const Eigen::MatrixXd QB = orthonormalize(B);
  const Eigen::MatrixXd & big = QA.cols() >= QB.cols() ? QA : QB;
  const Eigen::MatrixXd & small = QA.cols() >= QB.cols() ? QB : QA;
  const Eigen::MatrixXd residual = small - big * (big.transpose() * small);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  const double s = svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
  return std::asin(std::clamp(s, 0.0, 1.0));
}

Eigen::MatrixXd complement_basis(const Eigen::VectorXd & v)
{
  const auto d = v.size();
  Eigen::MatrixXd M(d, 1);
  M.col(0) = v.normalized();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  return Q.rightCols(d - 1);
}

}  // namespace kronic::linalg
