#include "kronic/features.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "kronic/error.hpp"

namespace kronic {

namespace {

// all exponent vectors of total degree `degree`, x1-major descending order
void enumerate_degree(int n, int degree, std::vector<MultiIndex> & out)
{
  MultiIndex alpha(static_cast<std::size_t>(n), 0);
  std::function<void(int, int)> rec = [&](int var, int remaining) {
    if (var == n - 1) {
      alpha[static_cast<std::size_t>(var)] = remaining;
      out.push_back(alpha);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      alpha[static_cast<std::size_t>(var)] = e;
      rec(var + 1, remaining - e);
    }
  };
  rec(0, degree);
}

// powers(j, e) = x_j^e for e = 0..p
void fill_powers(const Eigen::Ref<const Eigen::VectorXd> & x, int p, Eigen::MatrixXd & powers)
{
  const auto n = x.size();
  powers.resize(n, p + 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    powers(j, 0) = 1.0;
    for (int e = 1; e <= p; ++e) { powers(j, e) = powers(j, e - 1) * x[j]; }
  }
}

double monomial(const MultiIndex & alpha, const Eigen::MatrixXd & powers)
{
  double v = 1.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) { v *= powers(static_cast<Eigen::Index>(j), alpha[j]); }
  return v;
}

double monomial_partial(const MultiIndex & alpha, const Eigen::MatrixXd & powers, std::size_t i)
{
  if (alpha[i] == 0) { return 0.0; }
  double v = alpha[i] * powers(static_cast<Eigen::Index>(i), alpha[i] - 1);
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (j != i) { v *= powers(static_cast<Eigen::Index>(j), alpha[j]); }
  }
  return v;
}

void check_data(const Dictionary & dict, const Eigen::MatrixXd & X, const char * what)
{
  if (X.cols() != dict.state_dim()) {
    throw InvalidArgument(std::string(what) + ": data has " + std::to_string(X.cols()) + " columns, dictionary expects " +
                          std::to_string(dict.state_dim()));
  }
  if (!X.allFinite()) { throw InvalidArgument(std::string(what) + ": non-finite data"); }
}

}  // namespace

Dictionary Dictionary::monomials(int state_dim, int max_degree, bool include_constant)
{
  if (state_dim < 1) { throw InvalidArgument("dictionary: state dimension must be >= 1"); }
  if (max_degree < 1) { throw InvalidArgument("dictionary: degree must be >= 1"); }
  Dictionary d;
  d.state_dim_ = state_dim;
  d.max_degree_ = max_degree;
  d.include_constant_ = include_constant;
  for (int deg = include_constant ? 0 : 1; deg <= max_degree; ++deg) { enumerate_degree(state_dim, deg, d.terms_); }
  return d;
}

std::optional<Eigen::Index> Dictionary::index_of(const MultiIndex & alpha) const
{
  auto it = std::find(terms_.begin(), terms_.end(), alpha);
  if (it == terms_.end()) { return std::nullopt; }
  return static_cast<Eigen::Index>(it - terms_.begin());
}

std::string Dictionary::label(Eigen::Index k) const
{
  const auto & alpha = term(k);
  std::string s;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (alpha[j] == 0) { continue; }
    if (!s.empty()) { s += '*'; }
    s += "x" + std::to_string(j + 1);
    if (alpha[j] > 1) { s += "^" + std::to_string(alpha[j]); }
  }
  return s.empty() ? "1" : s;
}

Eigen::RowVectorXd Dictionary::evaluate(const Eigen::Ref<const Eigen::VectorXd> & x) const
{
  Eigen::MatrixXd powers;
  fill_powers(x, max_degree_, powers);
  Eigen::RowVectorXd row(size());
  for (Eigen::Index k = 0; k < size(); ++k) { row[k] = monomial(terms_[static_cast<std::size_t>(k)], powers); }
  return row;
}

void Dictionary::gradient(const Eigen::Ref<const Eigen::VectorXd> & x, Eigen::Ref<Eigen::MatrixXd> grad) const
{
  Eigen::MatrixXd powers;
  fill_powers(x, max_degree_, powers);
  for (Eigen::Index k = 0; k < size(); ++k) {
    for (int i = 0; i < state_dim_; ++i) {
      grad(k, i) = monomial_partial(terms_[static_cast<std::size_t>(k)], powers, static_cast<std::size_t>(i));
    }
  }
}

void CoefficientVector::validate() const
{
  if (coefficients.size() != dictionary.size()) {
    throw InvalidArgument("coefficient vector length " + std::to_string(coefficients.size()) +
                          " does not match dictionary size " + std::to_string(dictionary.size()));
  }
  if (!coefficients.allFinite()) { throw InvalidArgument("coefficient vector has non-finite entries"); }
}

double CoefficientVector::value(const Eigen::Ref<const Eigen::VectorXd> & x) const
{
  return dictionary.evaluate(x).dot(coefficients);
}

Eigen::VectorXd CoefficientVector::gradient(const Eigen::Ref<const Eigen::VectorXd> & x) const
{
  Eigen::MatrixXd g(dictionary.size(), dictionary.state_dim());
  dictionary.gradient(x, g);
  return g.transpose() * coefficients;
}

CoefficientVector make_function(const Dictionary & dict, const std::vector<std::pair<MultiIndex, double>> & terms)
{
  CoefficientVector f{dict, Eigen::VectorXd::Zero(dict.size())};
  for (const auto & [alpha, c] : terms) {
    auto k = dict.index_of(alpha);
    if (!k) { throw InvalidArgument("term is not in the dictionary"); }
    f.coefficients[*k] += c;
  }
  return f;
}

nlohmann::json to_json(const CoefficientVector & f)
{
  auto arr = nlohmann::json::array();
  for (Eigen::Index k = 0; k < f.coefficients.size(); ++k) {
    if (f.coefficients[k] == 0.0) { continue; }
    arr.push_back({{"multi_index", f.dictionary.term(k)}, {"coefficient", f.coefficients[k]}});
  }
  return arr;
}

CoefficientVector coefficients_from_json(const Dictionary & dict, const nlohmann::json & j)
{
  if (!j.is_array()) { throw InvalidArgument("coefficient vector JSON must be an array"); }
  CoefficientVector f{dict, Eigen::VectorXd::Zero(dict.size())};
  for (const auto & entry : j) {
    if (!entry.is_object() || entry.size() != 2 || !entry.contains("multi_index") || !entry.contains("coefficient")) {
      throw InvalidArgument("coefficient entry must have exactly multi_index and coefficient");
    }
    const auto alpha = entry.at("multi_index").get<MultiIndex>();
    auto k = dict.index_of(alpha);
    if (!k) { throw InvalidArgument("coefficient JSON references a term outside the dictionary"); }
    f.coefficients[*k] = entry.at("coefficient").get<double>();
  }
  f.validate();
  return f;
}

Eigen::MatrixXd eval_theta(const Dictionary & dict, const Eigen::MatrixXd & X)
{
  check_data(dict, X, "eval_theta");
  const auto m = X.rows();
  const auto P = dict.size();
  const int p = dict.max_degree();
  const auto & terms = dict.terms();
  // row-major so each thread writes contiguous memory
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(m, P);
#pragma omp parallel
  {
    Eigen::MatrixXd powers;
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < m; ++i) {
      fill_powers(X.row(i).transpose(), p, powers);
      for (Eigen::Index k = 0; k < P; ++k) { out(i, k) = monomial(terms[static_cast<std::size_t>(k)], powers); }
    }
  }
  return out;
}

Eigen::MatrixXd eval_gamma(const Dictionary & dict, const Eigen::MatrixXd & X, const Eigen::MatrixXd & Xdot)
{
  check_data(dict, X, "eval_gamma");
  check_data(dict, Xdot, "eval_gamma");
  if (Xdot.rows() != X.rows()) { throw InvalidArgument("eval_gamma: states and derivatives differ in row count"); }
  const auto m = X.rows();
  const auto P = dict.size();
  const int n = dict.state_dim();
  const int p = dict.max_degree();
  const auto & terms = dict.terms();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(m, P);
#pragma omp parallel
  {
    Eigen::MatrixXd powers;
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < m; ++i) {
      fill_powers(X.row(i).transpose(), p, powers);
      for (Eigen::Index k = 0; k < P; ++k) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
          acc += monomial_partial(terms[static_cast<std::size_t>(k)], powers, static_cast<std::size_t>(j)) * Xdot(i, j);
        }
        out(i, k) = acc;
      }
    }
  }
  return out;
}

Eigen::MatrixXd grad_theta_at(const Dictionary & dict, const Eigen::VectorXd & x)
{
  if (x.size() != dict.state_dim()) { throw InvalidArgument("grad_theta_at: wrong state dimension"); }
  if (!x.allFinite()) { throw InvalidArgument("grad_theta_at: non-finite state"); }
  Eigen::MatrixXd g(dict.size(), dict.state_dim());
  dict.gradient(x, g);
  return g;
}

Eigen::MatrixXd differentiate_trajectory(const Eigen::VectorXd & times, const Eigen::MatrixXd & X)
{
  const auto m = X.rows();
  if (m < 3) { throw InvalidArgument("differentiate_trajectory: need at least 3 samples"); }
  if (times.size() != m) { throw InvalidArgument("differentiate_trajectory: times and states differ in length"); }
  if (!times.allFinite() || !X.allFinite()) { throw InvalidArgument("differentiate_trajectory: non-finite data"); }
  for (Eigen::Index i = 1; i < m; ++i) {
    if (!(times[i] > times[i - 1])) { throw InvalidArgument("differentiate_trajectory: times must increase strictly"); }
  }

  Eigen::MatrixXd D(m, X.cols());
  {
    const double h1 = times[1] - times[0];
    const double h2 = times[2] - times[1];
    D.row(0) = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * X.row(0) + (h1 + h2) / (h1 * h2) * X.row(1) -
               h1 / (h2 * (h1 + h2)) * X.row(2);
  }
  for (Eigen::Index i = 1; i + 1 < m; ++i) {
    const double h1 = times[i] - times[i - 1];
    const double h2 = times[i + 1] - times[i];
    D.row(i) = -h2 / (h1 * (h1 + h2)) * X.row(i - 1) + (h2 - h1) / (h1 * h2) * X.row(i) +
               h1 / (h2 * (h1 + h2)) * X.row(i + 1);
  }
  {
    const double h1 = times[m - 2] - times[m - 3];
    const double h2 = times[m - 1] - times[m - 2];
    D.row(m - 1) = h2 / (h1 * (h1 + h2)) * X.row(m - 3) - (h1 + h2) / (h1 * h2) * X.row(m - 2) +
                   (2.0 * h2 + h1) / (h2 * (h1 + h2)) * X.row(m - 1);
  }
  return D;
}

namespace reference {

Eigen::MatrixXd eval_theta(const Dictionary & dict, const Eigen::MatrixXd & X)
{
  check_data(dict, X, "eval_theta");
  Eigen::MatrixXd out(X.rows(), dict.size());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index k = 0; k < dict.size(); ++k) {
      const auto & alpha = dict.term(k);
      double v = 1.0;
      for (int j = 0; j < dict.state_dim(); ++j) { v *= std::pow(X(i, j), alpha[static_cast<std::size_t>(j)]); }
      out(i, k) = v;
    }
  }
  return out;
}

Eigen::MatrixXd eval_gamma(const Dictionary & dict, const Eigen::MatrixXd & X, const Eigen::MatrixXd & Xdot)
{
  check_data(dict, X, "eval_gamma");
  check_data(dict, Xdot, "eval_gamma");
  if (Xdot.rows() != X.rows()) { throw InvalidArgument("eval_gamma: states and derivatives differ in row count"); }
  const int n = dict.state_dim();
  Eigen::MatrixXd out(X.rows(), dict.size());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index k = 0; k < dict.size(); ++k) {
      const auto & alpha = dict.term(k);
      double acc = 0.0;
      for (int j = 0; j < n; ++j) {
        const int aj = alpha[static_cast<std::size_t>(j)];
        if (aj == 0) { continue; }
        double partial = aj * std::pow(X(i, j), aj - 1);
        for (int l = 0; l < n; ++l) {
          if (l != j) { partial *= std::pow(X(i, l), alpha[static_cast<std::size_t>(l)]); }
        }
        acc += partial * Xdot(i, j);
      }
      out(i, k) = acc;
    }
  }
  return out;
}

}  // namespace reference

}  // namespace kronic
