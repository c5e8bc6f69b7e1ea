#include "kronic/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "kronic/actuation.hpp"
#include "kronic/bracket.hpp"
#include "kronic/control.hpp"
#include "kronic/error.hpp"
#include "kronic/io.hpp"
#include "kronic/linalg.hpp"

namespace kronic {

using json = nlohmann::json;

namespace {

std::string numbered(const std::string & stem, std::size_t i)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%03zu.csv", stem.c_str(), i);
  return buf;
}

json vector_json(const Eigen::VectorXd & v) { return std::vector<double>(v.begin(), v.end()); }

Eigen::MatrixXd columns_of(const std::vector<CoefficientVector> & fns, Eigen::Index P)
{
  Eigen::MatrixXd M(P, static_cast<Eigen::Index>(fns.size()));
  for (std::size_t c = 0; c < fns.size(); ++c) { M.col(static_cast<Eigen::Index>(c)) = fns[c].coefficients; }
  return M;
}

json dictionary_json(const Dictionary & d)
{
  std::vector<std::string> labels;
  for (Eigen::Index k = 0; k < d.size(); ++k) { labels.push_back(d.label(k)); }
  return {{"state_dim", d.state_dim()},
          {"degree", d.max_degree()},
          {"include_constant", d.include_constant()},
          {"labels", labels}};
}

// ½Σx_i² and ½Σx_i²/I_i in the given dictionary
CoefficientVector momentum_function(const Dictionary & dict)
{
  return make_function(dict, {{{2, 0, 0}, 0.5}, {{0, 2, 0}, 0.5}, {{0, 0, 2}, 0.5}});
}

CoefficientVector energy_function(const Dictionary & dict, const Eigen::Vector3d & I)
{
  return make_function(dict, {{{2, 0, 0}, 0.5 / I[0]}, {{0, 2, 0}, 0.5 / I[1]}, {{0, 0, 2}, 0.5 / I[2]}});
}

TrajectoryDataset add_noise(TrajectoryDataset d, double sigma, std::mt19937_64 & rng)
{
  std::normal_distribution<double> noise(0.0, sigma);
  for (Eigen::Index i = 0; i < d.states.size(); ++i) { d.states.data()[i] += noise(rng); }
  d.derivatives = differentiate_trajectory(d.times, d.states);
  d.derivative_source = DerivativeSource::central_difference;
  return d;
}

double residual_or_nan(const CoefficientVector & f, const std::optional<TrajectoryDataset> & data, double lambda)
{
  return data ? eigenfunction_residual(f, *data, lambda) : std::nan("");
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class F>
auto run_stage(const std::string & stage, F && f) -> decltype(f())
{
  try {
    return f();
  } catch (const InvalidArgument & e) {
    throw InvalidArgument("stage '" + stage + "' failed: " + e.what());
  } catch (const NumericalError & e) {
    throw NumericalError("stage '" + stage + "' failed: " + e.what());
  }
}

}  // namespace

std::vector<int> holdout_indices(int count, double fraction)
{
  if (count < 2 || fraction <= 0.0) { return {}; }
  const int k = std::clamp(static_cast<int>(std::lround(fraction * count)), 0, count - 1);
  std::vector<int> idx;
  for (int j = 0; j < k; ++j) {
    idx.push_back(static_cast<int>(std::floor((j + 0.5) * static_cast<double>(count) / k)));
  }
  return idx;
}

std::vector<Eigen::VectorXd> discovery_initial_states(const ExperimentConfig & cfg, int count, std::uint64_t seed)
{
  if (cfg.system.name == "rigid_body") {
    return sample_momentum_shell(cfg.simulation.momentum_min, cfg.simulation.momentum_max, count, seed);
  }
  const auto n = cfg.system_spec().state_dim;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd x(n);
    for (Eigen::Index k = 0; k < n; ++k) { x[k] = normal(rng); }
    out.push_back(x);
  }
  return out;
}

json cmd_simulate(const ExperimentConfig & cfg, const fs::path & out_dir)
{
  cfg.validate();
  const auto spec = cfg.system_spec();
  const auto x0 = discovery_initial_states(cfg, cfg.simulation.trajectories, cfg.io.seed);
  auto runs = integrate_ensemble(spec, x0, zero_forcing(spec.input_dim), cfg.simulation.t_end, cfg.simulation.dt);
  if (cfg.simulation.noise_std > 0.0) {
    std::mt19937_64 rng(cfg.io.seed ^ 0x9e3779b97f4a7c15ULL);
    for (auto & r : runs) { r = add_noise(std::move(r), cfg.simulation.noise_std, rng); }
  }
  // inputs are identically zero here; keep the files to states and derivatives
  for (auto & r : runs) { r.inputs.reset(); }

  fs::create_directories(out_dir);
  std::vector<std::string> files;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    files.push_back(numbered("traj", i));
    io::write_trajectory_csv(out_dir / files.back(), runs[i]);
  }
  json manifest = {{"version", KRONIC_VERSION},
                   {"seed", cfg.io.seed},
                   {"config_hash", config_hash(cfg)},
                   {"config", to_json(cfg)},
                   {"derivative_source", to_string(runs.front().derivative_source)},
                   {"samples_per_trajectory", runs.front().samples()},
                   {"files", files},
                   {"holdout", holdout_indices(static_cast<int>(runs.size()), cfg.discovery.holdout_fraction)}};
  io::write_json(out_dir / "manifest.json", manifest);
  return manifest;
}

LoadedData load_data_dir(const fs::path & data_dir)
{
  const auto manifest_path = data_dir / "manifest.json";
  if (!fs::exists(manifest_path)) { throw InvalidArgument("'" + data_dir.string() + "' has no manifest.json"); }
  LoadedData out;
  out.manifest = io::read_json(manifest_path);
  const auto files = out.manifest.at("files").get<std::vector<std::string>>();
  const auto hold = out.manifest.value("holdout", std::vector<int>{});
  std::vector<TrajectoryDataset> train, holdout;
  for (std::size_t i = 0; i < files.size(); ++i) {
    auto d = io::read_trajectory_csv(data_dir / files[i]);
    if (!d.derivatives) {
      d.derivatives = differentiate_trajectory(d.times, d.states);
      d.derivative_source = DerivativeSource::central_difference;
    }
    const bool held = std::find(hold.begin(), hold.end(), static_cast<int>(i)) != hold.end();
    (held ? holdout : train).push_back(std::move(d));
  }
  if (train.empty()) { throw InvalidArgument("'" + data_dir.string() + "' has no training trajectories"); }
  out.train = concatenate(train);
  if (!holdout.empty()) { out.holdout = concatenate(holdout); }
  return out;
}

std::vector<CoefficientVector> LoadedSubspace::sparse_functions() const
{
  std::vector<CoefficientVector> out;
  for (Eigen::Index c = 0; c < sparse.cols(); ++c) { out.push_back({dictionary, sparse.col(c)}); }
  return out;
}

LoadedSubspace load_subspace(const fs::path & path)
{
  const auto j = io::read_json(path);
  LoadedSubspace s;
  try {
    const auto & dj = j.at("dictionary");
    s.dictionary = Dictionary::monomials(dj.at("state_dim").get<int>(), dj.at("degree").get<int>(),
                                         dj.at("include_constant").get<bool>());
    s.lambda = j.at("lambda").get<double>();
    const auto P = s.dictionary.size();
    std::vector<CoefficientVector> basis, sparse;
    for (const auto & b : j.at("basis")) { basis.push_back(coefficients_from_json(s.dictionary, b)); }
    for (const auto & b : j.value("sparse_basis", json::array())) { sparse.push_back(coefficients_from_json(s.dictionary, b)); }
    s.basis = columns_of(basis, P);
    s.sparse = sparse.empty() ? s.basis : columns_of(sparse, P);
  } catch (const json::exception & e) {
    throw InvalidArgument("'" + path.string() + "' is not a subspace report: " + e.what());
  }
  return s;
}

DiscoverOutcome cmd_discover(const ExperimentConfig & cfg, const fs::path & data_dir, const fs::path & out_dir)
{
  cfg.validate();
  const auto data = load_data_dir(data_dir);
  const auto dict = cfg.make_dictionary();
  if (dict.state_dim() != data.train.state_dim()) {
    throw InvalidArgument("discover: data has " + std::to_string(data.train.state_dim()) +
                          " state columns but the dictionary expects " + std::to_string(dict.state_dim()));
  }
  DiscoverOutcome out;
  out.subspace = discover_invariants(dict, data.train, cfg.discovery.lambda, cfg.discovery.rank_tolerance);
  const auto d = out.subspace.kernel_dimension();
  if (d > 0) {
    out.sparse = sparsify(out.subspace, cfg.sparsify_options());
  } else {
    out.message = "no invariants: the generator matrix has full column rank for this dictionary (degree " +
                  std::to_string(dict.max_degree()) + ")";
  }

  json basis = json::array(), sparse = json::array(), train_res = json::array(), hold_res = json::array();
  for (Eigen::Index c = 0; c < d; ++c) { basis.push_back(to_json(out.subspace.column(c))); }
  for (const auto & f : out.sparse.vectors) {
    sparse.push_back(to_json(f));
    train_res.push_back(eigenfunction_residual(f, data.train, cfg.discovery.lambda));
    hold_res.push_back(nullable(residual_or_nan(f, data.holdout, cfg.discovery.lambda)));
  }
  out.report = {{"dictionary", dictionary_json(dict)},
                {"lambda", cfg.discovery.lambda},
                {"rank_tolerance", cfg.discovery.rank_tolerance},
                {"singular_values", vector_json(out.subspace.singular_values)},
                {"kernel_dimension", d},
                {"basis", basis},
                {"sparse_basis", sparse},
                {"residuals", {{"train", train_res}, {"holdout", hold_res}}},
                {"sparsify", {{"converged", out.sparse.converged}, {"warnings", out.sparse.warnings}}},
                {"samples", {{"train", data.train.samples()}, {"holdout", data.holdout ? data.holdout->samples() : 0}}},
                {"message", out.message}};
  io::write_json(out_dir / "subspace.json", out.report);

  io::CsvTable sv;
  sv.header = {"k", "sigma_k"};
  const auto P = out.subspace.singular_values.size();
  sv.values.resize(P, 2);
  for (Eigen::Index k = 0; k < P; ++k) {
    sv.values(k, 0) = static_cast<double>(k + 1);
    sv.values(k, 1) = out.subspace.singular_values[k];
  }
  io::write_csv(out_dir / "singular_values.csv", sv);
  return out;
}

json cmd_verify(const ExperimentConfig & cfg, const fs::path & subspace_path, const fs::path & data_dir,
                const fs::path & out_dir)
{
  cfg.validate();
  const auto sub = load_subspace(subspace_path);
  const auto data = load_data_dir(data_dir);
  const auto kind = bracket_kind_from_string(cfg.discovery.bracket);
  const auto fns = sub.sparse_functions();

  Eigen::MatrixXd X = data.train.states;
  if (data.holdout) {
    X.conservativeResize(X.rows() + data.holdout->samples(), Eigen::NoChange);
    X.bottomRows(data.holdout->samples()) = data.holdout->states;
  }
  const Eigen::MatrixXd rms = fns.empty() ? Eigen::MatrixXd(0, 0) : involution_check(kind, fns, X);
  double off = 0.0;
  for (Eigen::Index i = 0; i < rms.rows(); ++i) {
    for (Eigen::Index k = 0; k < rms.cols(); ++k) {
      if (i != k) { off = std::max(off, rms(i, k)); }
    }
  }
  const bool inv_pass = off <= cfg.discovery.involution_tolerance;

  const auto & check_data = data.holdout ? *data.holdout : data.train;
  json rows = json::array(), matrix = json::array();
  bool all_pass = inv_pass;
  for (std::size_t c = 0; c < fns.size(); ++c) {
    const double r = eigenfunction_residual(fns[c], check_data, sub.lambda);
    const bool ok = r <= cfg.discovery.residual_tolerance;
    all_pass = all_pass && ok;
    rows.push_back({{"label", "C" + std::to_string(c + 1)},
                    {"residual", r},
                    {"tolerance", cfg.discovery.residual_tolerance},
                    {"status", ok ? "PASS" : "FAIL"}});
    matrix.push_back(vector_json(rms.row(static_cast<Eigen::Index>(c)).transpose()));
  }
  json report = {{"bracket", to_string(kind)},
                 {"involution_rms", matrix},
                 {"max_off_diagonal", off},
                 {"involution_tolerance", cfg.discovery.involution_tolerance},
                 {"involution_status", inv_pass ? "PASS" : "FAIL"},
                 {"residual_data", data.holdout ? "holdout" : "train"},
                 {"residuals", rows},
                 {"pass", all_pass}};
  io::write_json(out_dir / "involution.json", report);
  return report;
}

json cmd_estimate_b(const ExperimentConfig & cfg, const fs::path & subspace_path, const fs::path & out_dir)
{
  cfg.validate();
  const auto sub = load_subspace(subspace_path);
  const auto fns = sub.sparse_functions();
  if (fns.empty()) { throw InvalidArgument("estimate-b: the subspace report has no eigenfunctions"); }
  const auto spec = cfg.system_spec();

  TrajectoryDataset forced;
  std::string source;
  if (cfg.actuation.forced_data) {
    source = *cfg.actuation.forced_data;
    forced = io::read_trajectory_csv(source);
    if (!forced.inputs) {
      throw InvalidArgument("forced data '" + source + "' has no input columns (expected u1..uq after the states)");
    }
    if (!forced.derivatives) {
      forced.derivatives = differentiate_trajectory(forced.times, forced.states);
      forced.derivative_source = DerivativeSource::central_difference;
    }
  } else {
    if (spec.input_dim != 3) { throw InvalidArgument("estimate-b: the cubic_sine forcing needs three inputs"); }
    source = "simulated:" + cfg.actuation.forcing;
    const auto x0 = discovery_initial_states(cfg, cfg.actuation.trajectories, cfg.io.seed + 1);
    forced = concatenate(integrate_ensemble(spec, x0, cubic_sine_forcing(), cfg.actuation.t_end, cfg.simulation.dt));
  }

  const auto est = estimate_B(fns, forced, sub.lambda);
  json report = to_json(est);
  report["forced_data"] = source;
  report["samples"] = forced.samples();
  if (est.B_hat.rows() == spec.control_matrix.rows() && est.B_hat.cols() == spec.control_matrix.cols()) {
    report["max_abs_error_vs_config"] = (est.B_hat - spec.control_matrix).cwiseAbs().maxCoeff();
  }
  io::write_json(out_dir / "estimate.json", report);
  return report;
}

json cmd_control(const ExperimentConfig & cfg, const fs::path & subspace_path, const std::optional<fs::path> & b_path,
                 const fs::path & out_dir)
{
  cfg.validate();
  const auto sub = load_subspace(subspace_path);
  const auto spec = cfg.system_spec();
  if (spec.input_dim == 0) { throw InvalidArgument("control: the system has no inputs"); }
  IntrinsicModel model{sub.dictionary, sub.sparse, spec.control_matrix};
  if (b_path) { model.B = control_estimate_from_json(io::read_json(*b_path)).B_hat; }
  if (model.dim() == 0) { throw InvalidArgument("control: the subspace report has no eigenfunctions"); }
  if (cfg.control.Q.rows() != model.dim()) {
    throw InvalidArgument("control: Q is " + std::to_string(cfg.control.Q.rows()) + "x" +
                          std::to_string(cfg.control.Q.cols()) + " but there are " + std::to_string(model.dim()) +
                          " intrinsic coordinates");
  }
  const auto mpc = cfg.mpc_config();

  std::vector<Eigen::VectorXd> x0;
  if (cfg.system.name == "rigid_body") {
    const double r = cfg.control.momentum;
    x0 = sample_momentum_sphere(0.5 * r * r, cfg.control.trajectories, cfg.io.seed + 2);
  } else {
    x0 = discovery_initial_states(cfg, cfg.control.trajectories, cfg.io.seed + 2);
  }
  ClosedLoopOptions on;
  on.tolerance = cfg.control.tolerance;
  on.prediction = cfg.prediction_model();
  ClosedLoopOptions off = on;
  off.controlled = false;
  const auto runs = run_closed_loop_ensemble(spec, mpc, model, x0, cfg.control.t_end, on);
  const auto base = run_closed_loop_ensemble(spec, mpc, model, x0, cfg.control.t_end, off);

  fs::create_directories(out_dir);
  int converged = 0, state_ok = 0, uncontrollable = 0;
  double max_err = 0.0, max_dist = 0.0, settle_sum = 0.0, cost_sum = 0.0, drift = 0.0;
  json per = json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto & r = runs[i];
    io::write_closed_loop_csv(out_dir / numbered("closed_loop", i), r);
    io::write_closed_loop_csv(out_dir / numbered("baseline", i), base[i]);
    const bool near = r.final_distance <= cfg.control.state_tolerance;
    converged += r.converged ? 1 : 0;
    state_ok += near ? 1 : 0;
    uncontrollable += r.uncontrollable_steps;
    max_err = std::max(max_err, r.final_error);
    max_dist = std::max(max_dist, r.final_distance);
    if (r.converged) { settle_sum += r.settling_time; }
    cost_sum += r.cumulative_cost(mpc.plant_dt);
    const auto & C = base[i].coordinates;
    drift = std::max(drift, (C.rowwise() - C.row(0)).cwiseAbs().maxCoeff());
    per.push_back({{"index", i},
                   {"converged", r.converged},
                   {"final_error", r.final_error},
                   {"final_distance", r.final_distance},
                   {"settling_time", r.settling_time},
                   {"cumulative_cost", r.cumulative_cost(mpc.plant_dt)}});
  }
  const auto N = static_cast<int>(runs.size());
  json summary = {{"trajectories", N},
                  {"converged", converged},
                  {"state_converged", state_ok},
                  {"tolerance", cfg.control.tolerance},
                  {"state_tolerance", cfg.control.state_tolerance},
                  {"max_final_error", max_err},
                  {"max_final_distance", max_dist},
                  {"mean_settling_time", converged ? json(settle_sum / converged) : json(nullptr)},
                  {"mean_cumulative_cost", cost_sum / N},
                  {"uncontrollable_steps", uncontrollable},
                  {"baseline_max_drift", drift},
                  {"reference_coordinates", vector_json(runs.front().reference)},
                  {"B_source", b_path ? b_path->string() : std::string("config")},
                  {"B", vector_json(vec_rows(model.B))},
                  {"prediction", cfg.control.prediction},
                  {"runs", per}};
  io::write_json(out_dir / "summary.json", summary);
  return summary;
}

ReproduceOutcome cmd_reproduce(ExperimentConfig cfg, const fs::path & out_dir, bool quick)
{
  if (quick) {
    cfg.simulation.trajectories = std::min(cfg.simulation.trajectories, 10);
    cfg.control.trajectories = std::min(cfg.control.trajectories, 10);
    cfg.actuation.trajectories = std::min(cfg.actuation.trajectories, 10);
  }
  cfg.validate();
  const auto data_dir = out_dir / "data";
  const auto sub_path = out_dir / "discover" / "subspace.json";
  const auto est_path = out_dir / "estimate" / "estimate.json";

  run_stage("simulate", [&] { return cmd_simulate(cfg, data_dir); });
  const auto disc = run_stage("discover", [&] { return cmd_discover(cfg, data_dir, out_dir / "discover"); });
  if (disc.subspace.kernel_dimension() == 0) {
    throw NumericalError("stage 'discover' failed: " + disc.message);
  }
  const auto ver = run_stage("verify", [&] { return cmd_verify(cfg, sub_path, data_dir, out_dir / "verify"); });
  const auto est = run_stage("estimate-b", [&] { return cmd_estimate_b(cfg, sub_path, out_dir / "estimate"); });
  const auto ctl = run_stage("control", [&] { return cmd_control(cfg, sub_path, std::nullopt, out_dir / "control"); });
  const auto ctl_hat =
    run_stage("control-estimated-B", [&] { return cmd_control(cfg, sub_path, est_path, out_dir / "control_estimated_b"); });

  ReproduceOutcome out;
  auto add = [&](std::string name, double value, std::string threshold, bool pass) {
    out.checks.push_back({std::move(name), value, std::move(threshold), pass});
  };
  const auto & sv = disc.subspace.singular_values;
  const auto P = sv.size();
  const auto d = disc.subspace.kernel_dimension();
  const bool rigid = cfg.system.name == "rigid_body" && cfg.dictionary.degree >= 2;

  add("kernel dimension", static_cast<double>(d), rigid ? "= 2" : ">= 1", rigid ? d == 2 : d >= 1);
  if (rigid && P >= 3) {
    add("sigma_P-1 / sigma_1", sv[P - 2] / sv[0], "<= 1e-8", sv[P - 2] / sv[0] <= 1e-8);
    add("sigma_P / sigma_1", sv[P - 1] / sv[0], "<= 1e-8", sv[P - 1] / sv[0] <= 1e-8);
    add("sigma_P-2 / sigma_1", sv[P - 3] / sv[0], ">= 1e-4", sv[P - 3] / sv[0] >= 1e-4);
    const auto & dict = disc.subspace.dictionary;
    const auto L = momentum_function(dict);
    const auto H = energy_function(dict, cfg.system.inertia);
    Eigen::MatrixXd LH(dict.size(), 2);
    LH << L.coefficients, H.coefficients;
    const double angle = d > 0 ? linalg::largest_principal_angle(disc.subspace.basis, LH) : M_PI / 2;
    add("principal angle to span{L, H} (rad)", angle, "<= 1e-6", d == 2 && angle <= 1e-6);
    double best = 0.0;
    const Eigen::VectorXd l = L.coefficients.normalized();
    for (const auto & f : disc.sparse.vectors) { best = std::max(best, std::abs(f.coefficients.normalized().dot(l))); }
    add("cosine(sparse vector, L)", best, ">= 1 - 1e-6", best >= 1.0 - 1e-6);
  }
  add("involution max off-diagonal RMS", ver.at("max_off_diagonal").get<double>(),
      "<= " + io::format_double(cfg.discovery.involution_tolerance),
      ver.at("involution_status").get<std::string>() == "PASS");
  if (est.contains("max_abs_error_vs_config")) {
    const double e = est.at("max_abs_error_vs_config").get<double>();
    add("max abs(B_hat - B)", e, "<= 1e-2", e <= 1e-2);
  }
  auto control_checks = [&](const std::string & label, const json & s) {
    const int n = s.at("trajectories").get<int>();
    const int c = s.at("converged").get<int>();
    const int near = s.at("state_converged").get<int>();
    add("control (" + label + "): trajectories with max abs(C - C*) <= " + io::format_double(cfg.control.tolerance),
        static_cast<double>(c), "= " + std::to_string(n), c == n);
    add("control (" + label + "): trajectories within " + io::format_double(cfg.control.state_tolerance) +
          " of +/-x*",
        static_cast<double>(near), "= " + std::to_string(n), near == n);
  };
  control_checks("configured B", ctl);
  control_checks("estimated B", ctl_hat);
  out.pass = std::all_of(out.checks.begin(), out.checks.end(), [](const Check & c) { return c.pass; });

  std::ostringstream md;
  md << "# Reproduction report\n\n";
  md << "- config hash: `" << config_hash(cfg) << "`\n";
  md << "- seed: " << cfg.io.seed << "\n";
  md << "- discovery trajectories: " << cfg.simulation.trajectories << ", control trajectories: "
     << cfg.control.trajectories << (quick ? " (quick)" : "") << "\n";
  md << "- overall: " << (out.pass ? "PASS" : "FAIL") << "\n\n";
  md << "| check | value | threshold | result |\n|---|---|---|---|\n";
  for (const auto & c : out.checks) {
    md << "| " << c.name << " | " << io::format_double(c.value) << " | " << c.threshold << " | "
       << (c.pass ? "PASS" : "FAIL") << " |\n";
  }
  fs::create_directories(out_dir);
  std::ofstream(out_dir / "REPORT.md", std::ios::binary) << md.str();
  return out;
}

}  // namespace kronic
