// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "kronic/actuation.hpp"
#include "kronic/bracket.hpp"
#include "kronic/config.hpp"
#include "kronic/control.hpp"
#include "kronic/discovery.hpp"
#include "kronic/linalg.hpp"
#include "support.hpp"

using namespace kronic;
namespace ts = testing_support;

namespace {

int failures = 0;

void report(const char * id, bool pass, const std::string & detail)
{
  std::printf("%s %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) { ++failures; }
}

std::string fmt(const char * f, double a, double b = 0, double c = 0, double d = 0)
{
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::MatrixXd columns(const std::vector<CoefficientVector> & fs)
{
  Eigen::MatrixXd M(fs.front().coefficients.size(), static_cast<Eigen::Index>(fs.size()));
  for (std::size_t c = 0; c < fs.size(); ++c) { M.col(static_cast<Eigen::Index>(c)) = fs[c].coefficients; }
  return M;
}

}  // namespace

int main()
{
  const ExperimentConfig cfg;  // defaults are the rigid-body experiment
  const auto spec = cfg.system_spec();
  const auto dict = cfg.make_dictionary();
  const auto L = ts::momentum(dict);
  const auto H = ts::energy(dict);
  Eigen::MatrixXd LH(dict.size(), 2);
  LH << L.coefficients, H.coefficients;

  // 1: null-space dimension and spectral gap
  const auto t1 = std::chrono::steady_clock::now();
  const auto x0 = sample_momentum_shell(cfg.simulation.momentum_min, cfg.simulation.momentum_max,
                                        cfg.simulation.trajectories, cfg.io.seed);
  const auto data = concatenate(integrate_ensemble(spec, x0, nullptr, cfg.simulation.t_end, cfg.simulation.dt));
  const auto sub = discover_invariants(dict, data, 0.0, cfg.discovery.rank_tolerance);
  const double rt1 = seconds_since(t1);
  {
    const auto & s = sub.singular_values;
    const auto P = s.size();
    const double r1 = s[P - 2] / s[0], r0 = s[P - 1] / s[0], r2 = s[P - 3] / s[0];
    const bool ok = sub.kernel_dimension() == 2 && r1 <= 1e-8 && r0 <= 1e-8 && r2 >= 1e-4 && rt1 <= 60.0;
    report("AC1", ok,
           "d=" + std::to_string(sub.kernel_dimension()) +
               fmt(" s[P-1]/s1=%.2e s[P]/s1=%.2e s[P-2]/s1=%.2e t=%.2fs", r1, r0, r2, rt1));
  }

  // 2: subspace angle to span{L, H}
  {
    const double angle = sub.kernel_dimension() > 0 ? linalg::largest_principal_angle(sub.basis, LH) : M_PI / 2;
    report("AC2", sub.kernel_dimension() == 2 && angle <= 1e-6, fmt("angle=%.2e rad", angle));
  }

  // 3: sparsified vector along L
  const auto sparse = sparsify(sub, cfg.sparsify_options());
  {
    double best = 0.0;
    const Eigen::VectorXd l = L.coefficients.normalized();
    for (const auto & v : sparse.vectors) { best = std::max(best, std::abs(v.coefficients.normalized().dot(l))); }
    report("AC3", best >= 1.0 - 1e-6, fmt("cosine=%.12f", best));
  }

  // 4: involution of the sparsified pair
  {
    const auto M = involution_check(BracketKind::lie_poisson_so3, sparse.vectors, data.states);
    double off = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      for (Eigen::Index k = 0; k < M.cols(); ++k) {
        if (i != k) { off = std::max(off, M(i, k)); }
      }
    }
    report("AC4", M.rows() >= 2 && off <= 1e-3, fmt("rms=%.2e", off));
  }

  // 5: bracket-based discovery from the energy alone
  {
    const auto r = discover_via_bracket(H, dict, data.states, cfg.discovery.rank_tolerance);
    const double angle = r.subspace.kernel_dimension() > 0
                             ? linalg::largest_principal_angle(r.subspace.basis, L.coefficients)
                             : M_PI / 2;
    report("AC5", angle <= 1e-6, "d=" + std::to_string(r.subspace.kernel_dimension()) + fmt(" angle=%.2e rad", angle));
  }

  // 6: vector field from the energy
  {
    std::mt19937_64 rng(6);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const Eigen::Vector3d x = ts::uniform(3, 1, rng, -2.0, 2.0);
      const Eigen::Vector3d I = ts::inertia();
      // x1' = (1/I3 - 1/I2) x2 x3 and cyclic
      const Eigen::Vector3d expect((1 / I[2] - 1 / I[1]) * x[1] * x[2], (1 / I[0] - 1 / I[2]) * x[2] * x[0],
                                   (1 / I[1] - 1 / I[0]) * x[0] * x[1]);
      worst = std::max(worst, (recover_vector_field(H, x) - expect).cwiseAbs().maxCoeff());
    }
    report("AC6", worst <= 1e-10, fmt("max err=%.2e", worst));
  }

  // 7: actuation estimate, forced ensemble and synthetic B with analytic derivatives
  ControlMatrixEstimate est;
  {
    const auto xf = sample_momentum_shell(cfg.simulation.momentum_min, cfg.simulation.momentum_max,
                                          cfg.actuation.trajectories, cfg.io.seed + 1);
    const auto forced =
        concatenate(integrate_ensemble(spec, xf, cubic_sine_forcing(), cfg.actuation.t_end, cfg.simulation.dt));
    est = estimate_B(sparse.vectors, forced, 0.0);
    const double err = (est.B_hat - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();

    std::mt19937_64 rng(7);
    const Eigen::MatrixXd B = ts::uniform(3, 3, rng);
    const auto syn_spec = rigid_body_system(ts::inertia(), B);
    const auto syn = concatenate(integrate_ensemble(syn_spec, sample_momentum_shell(0.5, 1.5, 10, 3), cubic_sine_forcing(), 5.0, 0.01));
    const double syn_err = (estimate_B(sparse.vectors, syn, 0.0).B_hat - B).cwiseAbs().maxCoeff();
    report("AC7", err <= 1e-2 && syn_err <= 1e-6, fmt("|B_hat - I|=%.2e synthetic=%.2e", err, syn_err));
  }

  // 8: closed loop, true B and estimated B
  {
    const auto mpc = cfg.mpc_config();
    const auto xc = sample_momentum_sphere(0.5 * cfg.control.momentum * cfg.control.momentum, cfg.control.trajectories,
                                           cfg.io.seed + 2);
    ClosedLoopOptions opts;
    opts.tolerance = cfg.control.tolerance;
    const auto Xi = columns(sparse.vectors);
    for (int which = 0; which < 2; ++which) {
      const auto t8 = std::chrono::steady_clock::now();
      const IntrinsicModel model{dict, Xi, which == 0 ? spec.control_matrix : est.B_hat};
      const auto runs = run_closed_loop_ensemble(spec, mpc, model, xc, cfg.control.t_end, opts);
      const double rt = seconds_since(t8);
      int c_ok = 0, x_ok = 0;
      double worst_c = 0.0, worst_x = 0.0;
      for (const auto & r : runs) {
        c_ok += r.final_error <= cfg.control.tolerance ? 1 : 0;
        x_ok += r.final_distance <= cfg.control.state_tolerance ? 1 : 0;
        worst_c = std::max(worst_c, r.final_error);
        worst_x = std::max(worst_x, r.final_distance);
      }
      const int N = static_cast<int>(runs.size());
      report(which == 0 ? "AC8" : "AC8b", c_ok == N && x_ok == N && rt <= 300.0,
             std::string(which == 0 ? "B" : "B_hat") + ": |C-C*|<=1e-2 " + std::to_string(c_ok) + "/" +
                 std::to_string(N) + ", |x-+x*|<=0.05 " + std::to_string(x_ok) + "/" + std::to_string(N) +
                 fmt(" max|C-C*|=%.2e max dist=%.3f t=%.2fs", worst_c, worst_x, rt));
    }
  }

  // 9: property suites
  {
    std::mt19937_64 rng(9);
    double anti = 0, lin = 0, cas = 0;
    std::uniform_real_distribution<double> sc(-3, 3);
    for (int k = 0; k < 10000; ++k) {
      const CoefficientVector F{dict, ts::uniform(dict.size(), 1, rng)}, G{dict, ts::uniform(dict.size(), 1, rng)},
          K{dict, ts::uniform(dict.size(), 1, rng)};
      const Eigen::Vector3d x = ts::uniform(3, 1, rng, -2, 2);
      const double a = sc(rng), b = sc(rng);
      const double fg = bracket_eval(BracketKind::lie_poisson_so3, F, G, x);
      anti = std::max(anti, std::abs(fg + bracket_eval(BracketKind::lie_poisson_so3, G, F, x)) / (1 + std::abs(fg)));
      const double lhs = bracket_eval(BracketKind::lie_poisson_so3, {dict, a * F.coefficients + b * K.coefficients}, G, x);
      const double rhs = a * fg + b * bracket_eval(BracketKind::lie_poisson_so3, K, G, x);
      lin = std::max(lin, std::abs(lhs - rhs) / (1 + std::abs(rhs)));
      cas = std::max(cas, std::abs(bracket_eval(BracketKind::lie_poisson_so3, L, G, x)) /
                              (1 + G.gradient(x).norm() * x.squaredNorm()));
    }

    double grad = 0.0;
    Eigen::MatrixXd g(dict.size(), 3);
    for (int k = 0; k < 200; ++k) {
      const Eigen::VectorXd x = ts::uniform(3, 1, rng, -1.5, 1.5);
      dict.gradient(x, g);
      for (int i = 0; i < 3; ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += 1e-5;
        xm[i] -= 1e-5;
        const Eigen::RowVectorXd fd = (dict.evaluate(xp) - dict.evaluate(xm)) / 2e-5;
        for (Eigen::Index j = 0; j < dict.size(); ++j) {
          grad = std::max(grad, std::abs(fd[j] - g(j, i)) / std::max(1.0, std::abs(g(j, i))));
        }
      }
    }

    const Eigen::Vector3d xr(1.0, 0.5, -0.3);
    auto end = [&](double dt) -> Eigen::VectorXd { return integrate(spec, xr, nullptr, 2.0, dt).states.bottomRows(1).transpose(); };
    const Eigen::VectorXd ref = end(0.1 / 128);
    const double factor = (end(0.1) - ref).norm() / (end(0.05) - ref).norm();

    double drift = 0.0;
    for (const auto & tr : integrate_ensemble(spec, sample_momentum_shell(0.5, 1.5, 20, 1), nullptr, 10.0, 0.01)) {
      for (const auto * f : {&L, &H}) {
        const double v0 = f->value(tr.states.row(0).transpose());
        for (Eigen::Index i = 0; i < tr.samples(); ++i) {
          drift = std::max(drift, std::abs(f->value(tr.states.row(i).transpose()) - v0));
        }
      }
    }

    double kron = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const Eigen::VectorXd gg = ts::uniform(3, 1, rng), u = ts::uniform(3, 1, rng);
      const Eigen::MatrixXd B = ts::uniform(3, 3, rng);
      kron = std::max(kron, std::abs(kron_row(gg, u).dot(vec_rows(B)) - gg.dot(B * u)));
    }
    const bool ok = anti <= 1e-12 && lin <= 1e-12 && cas <= 1e-12 && grad <= 1e-6 && factor >= 14 && factor <= 18 &&
                    drift <= 1e-8 && kron <= 1e-12;
    report("AC9", ok,
           fmt("anti=%.1e lin=%.1e casimir=%.1e grad=%.1e", anti, lin, cas, grad) +
               fmt(" rk4 factor=%.2f drift=%.1e kron=%.1e", factor, drift, kron));
  }

  // 10: x' = -x at lambda = -1
  {
    Eigen::Matrix2d A;
    A << -1, 0, 0, -2;
    const auto lin = linear_system(A, Eigen::MatrixXd(2, 0));
    std::vector<Eigen::VectorXd> xs{Eigen::Vector2d(1.0, 0.5), Eigen::Vector2d(-0.7, 1.2), Eigen::Vector2d(0.3, -0.9)};
    const auto d = concatenate(integrate_ensemble(lin, xs, nullptr, 2.0, 0.01));
    const auto dict2 = Dictionary::monomials(2, 3);
    const auto s = discover_invariants(dict2, d, -1.0, 1e-6);
    bool ok = s.kernel_dimension() == 1;
    double cos = 0.0, res = 1.0;
    if (ok) {
      const auto phi = sparsify(s).vectors.front();
      cos = std::abs(phi.coefficients.normalized()[0]);
      res = eigenfunction_residual(phi, d, -1.0);
      ok = cos >= 1.0 - 1e-12 && res <= 1e-8;
    }
    report("AC10", ok, "d=" + std::to_string(s.kernel_dimension()) + fmt(" cos(phi,x1)=%.12f residual=%.2e", cos, res));
  }

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
