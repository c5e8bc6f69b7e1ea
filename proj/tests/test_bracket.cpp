#include <doctest.h>

#include <Eigen/Geometry>

#include <cmath>
#include <random>

#include "kronic/bracket.hpp"
#include "kronic/error.hpp"
#include "kronic/linalg.hpp"
#include "support.hpp"

using namespace kronic;
namespace ts = testing_support;

namespace {

CoefficientVector random_function(const Dictionary & d, std::mt19937_64 & rng)
{
  return {d, ts::uniform(d.size(), 1, rng)};
}

}  // namespace

TEST_CASE("bracket kinds")
{
  CHECK(bracket_kind_from_string("canonical") == BracketKind::canonical);
  CHECK(bracket_kind_from_string("lie_poisson_so3") == BracketKind::lie_poisson_so3);
  CHECK(std::string(to_string(BracketKind::lie_poisson_so3)) == "lie_poisson_so3");
  CHECK_THROWS_AS((void)bracket_kind_from_string("poisson"), InvalidArgument);
  CHECK_THROWS_AS(check_bracket_dimension(BracketKind::canonical, 3), InvalidArgument);
  CHECK_THROWS_AS(check_bracket_dimension(BracketKind::lie_poisson_so3, 4), InvalidArgument);
  CHECK_NOTHROW(check_bracket_dimension(BracketKind::canonical, 4));
}

TEST_CASE("coordinate brackets")
{
  const auto d3 = Dictionary::monomials(3, 1);
  const auto x1 = make_function(d3, {{{1, 0, 0}, 1.0}});
  const auto x2 = make_function(d3, {{{0, 1, 0}, 1.0}});
  const Eigen::Vector3d x(0.2, -0.4, 0.9);
  // {x1, x2} = -x · (e1 × e2) = -x3
  CHECK(bracket_eval(BracketKind::lie_poisson_so3, x1, x2, x) == doctest::Approx(-0.9));

  const auto d2 = Dictionary::monomials(2, 2);
  const auto q = make_function(d2, {{{1, 0}, 1.0}});
  const auto p = make_function(d2, {{{0, 1}, 1.0}});
  const Eigen::Vector2d z(0.3, 0.8);
  CHECK(bracket_eval(BracketKind::canonical, q, p, z) == doctest::Approx(1.0));
  // harmonic oscillator: {q, H} = p, {p, H} = -q
  const auto H = make_function(d2, {{{2, 0}, 0.5}, {{0, 2}, 0.5}});
  CHECK(bracket_eval(BracketKind::canonical, q, H, z) == doctest::Approx(0.8));
  CHECK(bracket_eval(BracketKind::canonical, p, H, z) == doctest::Approx(-0.3));
  CHECK_THROWS_AS((void)bracket_eval(BracketKind::lie_poisson_so3, q, p, z), InvalidArgument);
}

TEST_CASE("bracket antisymmetry, bilinearity and the Casimir property on random inputs")
{
  const auto d = Dictionary::monomials(3, 3);
  const auto L = ts::momentum(d);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> scalar(-3.0, 3.0);
  double worst_anti = 0, worst_lin = 0, worst_casimir = 0;
  for (int k = 0; k < 10000; ++k) {
    const auto F = random_function(d, rng);
    const auto G = random_function(d, rng);
    const auto K = random_function(d, rng);
    const Eigen::Vector3d x = ts::uniform(3, 1, rng, -2, 2);
    const double a = scalar(rng), b = scalar(rng);
    const double fg = bracket_eval(BracketKind::lie_poisson_so3, F, G, x);
    const double gf = bracket_eval(BracketKind::lie_poisson_so3, G, F, x);
    const double scale = 1.0 + std::abs(fg);
    worst_anti = std::max(worst_anti, std::abs(fg + gf) / scale);
    const CoefficientVector combo{d, a * F.coefficients + b * K.coefficients};
    const double lhs = bracket_eval(BracketKind::lie_poisson_so3, combo, G, x);
    const double rhs = a * fg + b * bracket_eval(BracketKind::lie_poisson_so3, K, G, x);
    worst_lin = std::max(worst_lin, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
    worst_casimir = std::max(worst_casimir, std::abs(bracket_eval(BracketKind::lie_poisson_so3, L, G, x)) /
                                              (1.0 + G.gradient(x).norm() * x.squaredNorm()));
  }
  CHECK(worst_anti <= 1e-12);
  CHECK(worst_lin <= 1e-12);
  CHECK(worst_casimir <= 1e-12);
}

TEST_CASE("canonical bracket Jacobi identity on random quadratics")
{
  const auto d = Dictionary::monomials(4, 2);
  std::mt19937_64 rng(8);
  // for quadratics the bracket is again quadratic, so {F,{G,K}} is computable by finite differences of the gradient
  for (int k = 0; k < 200; ++k) {
    const auto F = random_function(d, rng), G = random_function(d, rng), K = random_function(d, rng);
    const Eigen::Vector4d x = ts::uniform(4, 1, rng);
    auto br = [&](const CoefficientVector & A, const CoefficientVector & B) {
      return [&, A, B](const Eigen::VectorXd & y) { return bracket_eval(BracketKind::canonical, A, B, y); };
    };
    auto outer = [&](const CoefficientVector & A, auto inner, const Eigen::VectorXd & y) {
      Eigen::VectorXd g(4);
      for (int i = 0; i < 4; ++i) {
        Eigen::VectorXd yp = y, ym = y;
        yp[i] += 1e-4;
        ym[i] -= 1e-4;
        g[i] = (inner(yp) - inner(ym)) / 2e-4;
      }
      return bracket_of_gradients(BracketKind::canonical, A.gradient(y), g, y);
    };
    const double j = outer(F, br(G, K), x) + outer(G, br(K, F), x) + outer(K, br(F, G), x);
    CHECK(std::abs(j) <= 1e-7);
  }
}

TEST_CASE("basis partial derivatives")
{
  const auto d = Dictionary::monomials(3, 3);
  const auto F = make_function(d, {{{1, 2, 0}, 2.0}, {{0, 0, 3}, -1.0}});
  const Eigen::Vector3d x(0.5, -1.0, 2.0);
  CHECK(basis_partial(F, 0, x) == doctest::Approx(2.0 * 1.0));
  CHECK(basis_partial(F, 1, x) == doctest::Approx(2.0 * 2 * 0.5 * -1.0));
  CHECK(basis_partial(F, 2, x) == doctest::Approx(-3.0 * 4.0));
  CHECK_THROWS_AS((void)basis_partial(F, 3, x), InvalidArgument);
}

TEST_CASE("vector field recovery reproduces the rigid body equations")
{
  const auto d = Dictionary::monomials(3, 3);
  const auto H = ts::energy(d);
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Eigen::Vector3d x = ts::uniform(3, 1, rng, -2, 2);
    const Eigen::Vector3d f = recover_vector_field(H, x);
    const Eigen::Vector3d expect = rigid_body_rhs(x, Eigen::Vector3d::Zero(), ts::inertia());
    worst = std::max(worst, (f - expect).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-10);
  CHECK_THROWS_AS((void)recover_vector_field(make_function(Dictionary::monomials(2, 2), {{{2, 0}, 1.0}}),
                                             Eigen::Vector3d::Zero()),
                  Unsupported);
}

TEST_CASE("D matrix rows agree with the bracket")
{
  const auto theta = Dictionary::monomials(3, 3);
  const auto ups = Dictionary::monomials(3, 3);
  const auto H = ts::energy(theta);
  std::mt19937_64 rng(13);
  const Eigen::MatrixXd X = ts::uniform(200, 3, rng, -1.5, 1.5);
  const auto D = build_D_matrix(H, ups, X);
  for (int trial = 0; trial < 20; ++trial) {
    const auto eta = random_function(ups, rng);
    const Eigen::VectorXd via_D = D * eta.coefficients;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double b = bracket_eval(BracketKind::lie_poisson_so3, eta, H, X.row(i).transpose());
      CHECK(std::abs(via_D[i] - b) <= 1e-10 * (1.0 + std::abs(b)));
    }
  }
  CHECK_THROWS_AS((void)build_D_matrix(make_function(Dictionary::monomials(2, 2), {{{2, 0}, 1.0}}),
                                       Dictionary::monomials(2, 2), Eigen::MatrixXd::Zero(3, 2)),
                  Unsupported);
}

TEST_CASE("bracket-based discovery recovers the angular momentum")
{
  const auto d = Dictionary::monomials(3, 3);
  const auto data = ts::rigid_body_data(20, 5.0);
  const auto r = discover_via_bracket(ts::energy(d), Dictionary::monomials(3, 3), data.states, 1e-6);
  // everything in the cubic span that commutes with H: L and H themselves
  REQUIRE(r.subspace.kernel_dimension() == 2);
  const Eigen::MatrixXd L = ts::momentum(d).coefficients;
  CHECK(linalg::largest_principal_angle(r.subspace.basis, L) <= 1e-6);
  double best = 0.0;
  for (const auto & v : r.sparse.vectors) { best = std::max(best, std::abs(v.coefficients.dot(L.col(0).normalized()))); }
  CHECK(best >= 1.0 - 1e-6);
}

TEST_CASE("involution check")
{
  const auto d = Dictionary::monomials(3, 3);
  const auto data = ts::rigid_body_data(10, 2.0);
  const auto M = involution_check(BracketKind::lie_poisson_so3, {ts::momentum(d), ts::energy(d)}, data.states);
  CHECK(M.rows() == 2);
  CHECK(M.cwiseAbs().maxCoeff() <= 1e-12);

  const auto one = involution_check(BracketKind::lie_poisson_so3, {ts::energy(d)}, data.states);
  CHECK(one.rows() == 1);
  CHECK(one(0, 0) == 0.0);

  // RMS of {x1, x2} = RMS of x3
  const auto d1 = Dictionary::monomials(3, 1);
  const auto x1 = make_function(d1, {{{1, 0, 0}, 1.0}});
  const auto x2 = make_function(d1, {{{0, 1, 0}, 1.0}});
  const auto P = involution_check(BracketKind::lie_poisson_so3, {x1, x2}, data.states);
  const double rms_x3 = std::sqrt(data.states.col(2).squaredNorm() / static_cast<double>(data.samples()));
  CHECK(P(0, 1) == doctest::Approx(rms_x3).epsilon(1e-12));
  CHECK(P(1, 0) == doctest::Approx(rms_x3).epsilon(1e-12));
  CHECK_THROWS_AS((void)involution_check(BracketKind::lie_poisson_so3, {}, data.states), InvalidArgument);
}
