// kronic: simulate -> discover -> verify -> estimate-b -> control, or all of it via reproduce.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 acceptance failure (reproduce).

#include <CLI11.hpp>

#include <omp.h>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "kronic/config.hpp"
#include "kronic/error.hpp"
#include "kronic/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using kronic::ExperimentConfig;

struct Common
{
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs{0};
};

ExperimentConfig resolve(const Common & c)
{
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : kronic::load_config(c.config);
  if (c.seed) { cfg.io.seed = *c.seed; }
  if (!c.out.empty()) { cfg.io.out = c.out; }
  if (c.jobs > 0) { omp_set_num_threads(c.jobs); }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Conserved-quantity discovery and intrinsic-coordinate control"};
  app.require_subcommand(1);
  app.set_version_flag("--version", KRONIC_VERSION);

  Common common;
  app.add_option("--config", common.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--out", common.out, "output directory");
  app.add_option("--seed", common.seed, "seed for initial-condition sampling");
  app.add_option("--jobs", common.jobs, "worker thread cap")->check(CLI::NonNegativeNumber);

  std::string data_dir, subspace_path, b_path;
  bool quick = false;

  auto * simulate = app.add_subcommand("simulate", "integrate the unforced ensemble and write trajectory CSVs");
  auto * discover = app.add_subcommand("discover", "null-space discovery of conserved quantities");
  discover->add_option("--data", data_dir, "directory written by simulate")->required();
  auto * verify = app.add_subcommand("verify", "bracket involution and held-out residual checks");
  verify->add_option("--subspace", subspace_path, "subspace.json from discover")->required();
  verify->add_option("--data", data_dir, "directory written by simulate")->required();
  auto * estimate = app.add_subcommand("estimate-b", "estimate the actuation matrix from forced data");
  estimate->add_option("--subspace", subspace_path, "subspace.json from discover")->required();
  auto * control = app.add_subcommand("control", "closed-loop MPC in intrinsic coordinates");
  control->add_option("--subspace", subspace_path, "subspace.json from discover")->required();
  control->add_option("--b", b_path, "estimate.json from estimate-b (default: configured B)");
  auto * reproduce = app.add_subcommand("reproduce", "run every stage and check the acceptance criteria");
  reproduce->add_flag("--quick", quick, "10-trajectory ensembles");
  for (auto * sub : app.get_subcommands({})) { sub->fallthrough(); }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto cfg = resolve(common);
    const fs::path out = cfg.io.out;
    if (simulate->parsed()) {
      const auto m = kronic::cmd_simulate(cfg, out);
      std::cout << "wrote " << m["files"].size() << " trajectories (" << m["samples_per_trajectory"]
                << " samples each) to " << out.string() << "\n";
    } else if (discover->parsed()) {
      const auto r = kronic::cmd_discover(cfg, data_dir, out);
      std::cout << "kernel dimension " << r.subspace.kernel_dimension() << "\n";
      if (!r.message.empty()) { std::cout << r.message << "\n"; }
      for (std::size_t c = 0; c < r.sparse.vectors.size(); ++c) {
        std::cout << "C" << c + 1 << ":";
        const auto & f = r.sparse.vectors[c];
        for (Eigen::Index k = 0; k < f.coefficients.size(); ++k) {
          if (f.coefficients[k] != 0.0) { std::cout << " " << f.coefficients[k] << "*" << f.dictionary.label(k); }
        }
        std::cout << "\n";
      }
      for (const auto & w : r.sparse.warnings) { std::cerr << "warning: " << w << "\n"; }
    } else if (verify->parsed()) {
      const auto r = kronic::cmd_verify(cfg, subspace_path, data_dir, out);
      std::cout << "max off-diagonal involution RMS " << r["max_off_diagonal"] << " " << r["involution_status"].get<std::string>()
                << "\n";
      for (const auto & row : r["residuals"]) {
        std::cout << row["label"].get<std::string>() << " residual " << row["residual"] << " "
                  << row["status"].get<std::string>() << "\n";
      }
    } else if (estimate->parsed()) {
      const auto r = kronic::cmd_estimate_b(cfg, subspace_path, out);
      std::cout << "residual_rms " << r["residual_rms"] << ", condition " << r["regressor_condition"] << "\n";
      if (r.contains("max_abs_error_vs_config")) {
        std::cout << "max |B_hat - B| " << r["max_abs_error_vs_config"] << "\n";
      }
    } else if (control->parsed()) {
      const auto bp = b_path.empty() ? std::nullopt : std::optional<fs::path>(b_path);
      const auto s = kronic::cmd_control(cfg, subspace_path, bp, out);
      std::cout << "converged " << s["converged"] << "/" << s["trajectories"] << ", within state tolerance "
                << s["state_converged"] << "/" << s["trajectories"] << ", mean settling time "
                << s["mean_settling_time"] << "\n";
    } else if (reproduce->parsed()) {
      const auto r = kronic::cmd_reproduce(cfg, out, quick);
      for (const auto & c : r.checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.value << " (" << c.threshold << ")\n";
      }
      std::cout << "report: " << (out / "REPORT.md").string() << "\n";
      return r.pass ? 0 : 4;
    }
  } catch (const kronic::InvalidArgument & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const kronic::NumericalError & e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
