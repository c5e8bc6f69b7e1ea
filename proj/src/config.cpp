#include "kronic/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "kronic/bracket.hpp"
#include "kronic/error.hpp"
#include "kronic/io.hpp"

namespace kronic {

namespace {

using json = nlohmann::json;

void check_keys(const json & j, const std::string & block, const std::set<std::string> & allowed)
{
  if (!j.is_object()) { throw InvalidArgument("config: '" + block + "' must be an object"); }
  for (const auto & [key, value] : j.items()) {
    if (!allowed.count(key)) { throw InvalidArgument("config: unknown key '" + key + "' in '" + block + "'"); }
  }
}

template <class T>
void read(const json & j, const char * key, T & out, const std::string & block)
{
  if (!j.contains(key)) { return; }
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception &) {
    throw InvalidArgument("config: '" + block + "." + key + "' has the wrong type");
  }
}

Eigen::VectorXd vector_from(const json & j, const std::string & what)
{
  if (!j.is_array()) { throw InvalidArgument("config: '" + what + "' must be an array"); }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) { throw InvalidArgument("config: '" + what + "' must hold numbers"); }
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

// array of rows
Eigen::MatrixXd matrix_from(const json & j, const std::string & what)
{
  if (!j.is_array() || j.empty()) { throw InvalidArgument("config: '" + what + "' must be a non-empty array of rows"); }
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) { throw InvalidArgument("config: '" + what + "' must be an array of rows"); }
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = vector_from(j[static_cast<std::size_t>(r)], what);
    if (row.size() != cols) { throw InvalidArgument("config: '" + what + "' rows differ in length"); }
    M.row(r) = row.transpose();
  }
  return M;
}

json to_json_vector(const Eigen::VectorXd & v) { return std::vector<double>(v.begin(), v.end()); }

json to_json_matrix(const Eigen::MatrixXd & M)
{
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) { rows.push_back(to_json_vector(M.row(r).transpose())); }
  return rows;
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

ExperimentConfig config_from_json(const json & j)
{
  ExperimentConfig c;
  check_keys(j, "config", {"system", "simulation", "dictionary", "discovery", "actuation", "control", "io"});

  if (j.contains("system")) {
    const auto & s = j["system"];
    check_keys(s, "system", {"name", "inertia", "control_matrix", "A"});
    read(s, "name", c.system.name, "system");
    if (s.contains("inertia")) {
      const auto v = vector_from(s["inertia"], "system.inertia");
      if (v.size() != 3) { throw InvalidArgument("config: 'system.inertia' needs three entries"); }
      c.system.inertia = v;
    }
    if (s.contains("control_matrix")) { c.system.control_matrix = matrix_from(s["control_matrix"], "system.control_matrix"); }
    if (s.contains("A")) { c.system.A = matrix_from(s["A"], "system.A"); }
    // an unactuated linear system unless told otherwise
    if (c.system.name == "linear" && !s.contains("control_matrix")) {
      c.system.control_matrix = Eigen::MatrixXd(c.system.A.rows(), 0);
    }
  }
  if (j.contains("simulation")) {
    const auto & s = j["simulation"];
    check_keys(s, "simulation", {"dt", "t_end", "trajectories", "momentum_min", "momentum_max", "noise_std"});
    read(s, "dt", c.simulation.dt, "simulation");
    read(s, "t_end", c.simulation.t_end, "simulation");
    read(s, "trajectories", c.simulation.trajectories, "simulation");
    read(s, "momentum_min", c.simulation.momentum_min, "simulation");
    read(s, "momentum_max", c.simulation.momentum_max, "simulation");
    read(s, "noise_std", c.simulation.noise_std, "simulation");
  }
  if (j.contains("dictionary")) {
    const auto & s = j["dictionary"];
    check_keys(s, "dictionary", {"degree", "include_constant"});
    read(s, "degree", c.dictionary.degree, "dictionary");
    read(s, "include_constant", c.dictionary.include_constant, "dictionary");
  }
  if (j.contains("discovery")) {
    const auto & s = j["discovery"];
    check_keys(s, "discovery",
               {"lambda", "rank_tolerance", "l1_weight", "max_iters", "column_scaling", "holdout_fraction",
                "residual_tolerance", "involution_tolerance", "bracket"});
    read(s, "lambda", c.discovery.lambda, "discovery");
    read(s, "rank_tolerance", c.discovery.rank_tolerance, "discovery");
    if (s.contains("l1_weight") && !s["l1_weight"].is_null()) {
      double w = 0.0;
      read(s, "l1_weight", w, "discovery");
      c.discovery.l1_weight = w;
    }
    read(s, "max_iters", c.discovery.max_iters, "discovery");
    read(s, "column_scaling", c.discovery.column_scaling, "discovery");
    read(s, "holdout_fraction", c.discovery.holdout_fraction, "discovery");
    read(s, "residual_tolerance", c.discovery.residual_tolerance, "discovery");
    read(s, "involution_tolerance", c.discovery.involution_tolerance, "discovery");
    read(s, "bracket", c.discovery.bracket, "discovery");
  }
  if (j.contains("actuation")) {
    const auto & s = j["actuation"];
    check_keys(s, "actuation", {"forcing", "trajectories", "t_end", "forced_data"});
    read(s, "forcing", c.actuation.forcing, "actuation");
    read(s, "trajectories", c.actuation.trajectories, "actuation");
    read(s, "t_end", c.actuation.t_end, "actuation");
    if (s.contains("forced_data") && !s["forced_data"].is_null()) {
      std::string p;
      read(s, "forced_data", p, "actuation");
      c.actuation.forced_data = p;
    }
  }
  if (j.contains("control")) {
    const auto & s = j["control"];
    check_keys(s, "control",
               {"Q", "R", "horizon_steps", "plant_dt", "substeps", "reference_state", "input_bounds", "t_end",
                "trajectories", "momentum", "tolerance", "state_tolerance", "prediction"});
    if (s.contains("Q")) { c.control.Q = matrix_from(s["Q"], "control.Q"); }
    if (s.contains("R")) { c.control.R = matrix_from(s["R"], "control.R"); }
    read(s, "horizon_steps", c.control.horizon_steps, "control");
    read(s, "plant_dt", c.control.plant_dt, "control");
    read(s, "substeps", c.control.substeps, "control");
    if (s.contains("reference_state")) {
      c.control.reference_state = vector_from(s["reference_state"], "control.reference_state");
    }
    if (s.contains("input_bounds") && !s["input_bounds"].is_null()) {
      const auto & b = s["input_bounds"];
      check_keys(b, "control.input_bounds", {"lower", "upper"});
      if (!b.contains("lower") || !b.contains("upper")) {
        throw InvalidArgument("config: 'control.input_bounds' needs lower and upper");
      }
      c.control.input_bounds =
        InputBounds{vector_from(b["lower"], "control.input_bounds.lower"), vector_from(b["upper"], "control.input_bounds.upper")};
    }
    read(s, "t_end", c.control.t_end, "control");
    read(s, "trajectories", c.control.trajectories, "control");
    read(s, "momentum", c.control.momentum, "control");
    read(s, "tolerance", c.control.tolerance, "control");
    read(s, "state_tolerance", c.control.state_tolerance, "control");
    read(s, "prediction", c.control.prediction, "control");
  }
  if (j.contains("io")) {
    const auto & s = j["io"];
    check_keys(s, "io", {"seed", "out"});
    read(s, "seed", c.io.seed, "io");
    read(s, "out", c.io.out, "io");
  }
  c.validate();
  return c;
}

void ExperimentConfig::validate() const
{
  if (system.name != "rigid_body" && system.name != "linear") {
    throw InvalidArgument("config: system.name must be rigid_body or linear");
  }
  if (system.name == "rigid_body" && !(system.inertia.array() > 0.0).all()) {
    throw InvalidArgument("config: inertia entries must be positive");
  }
  if (system.name == "linear" && (system.A.size() == 0 || system.A.rows() != system.A.cols())) {
    throw InvalidArgument("config: linear system needs a square A");
  }
  if (!finite_positive(simulation.dt) || !finite_positive(simulation.t_end) || simulation.dt > simulation.t_end) {
    throw InvalidArgument("config: need 0 < simulation.dt <= simulation.t_end");
  }
  if (simulation.trajectories < 1) { throw InvalidArgument("config: simulation.trajectories must be >= 1"); }
  if (!finite_positive(simulation.momentum_min) || simulation.momentum_max < simulation.momentum_min) {
    throw InvalidArgument("config: need 0 < momentum_min <= momentum_max");
  }
  if (!(simulation.noise_std >= 0.0)) { throw InvalidArgument("config: noise_std must be non-negative"); }
  if (dictionary.degree < 1) { throw InvalidArgument("config: dictionary.degree must be >= 1"); }
  if (!(discovery.rank_tolerance > 0.0 && discovery.rank_tolerance < 1.0)) {
    throw InvalidArgument("config: rank_tolerance must lie in (0,1)");
  }
  if (discovery.l1_weight && !(*discovery.l1_weight > 0.0)) { throw InvalidArgument("config: l1_weight must be positive"); }
  if (discovery.max_iters < 1) { throw InvalidArgument("config: max_iters must be >= 1"); }
  if (!(discovery.holdout_fraction >= 0.0 && discovery.holdout_fraction < 1.0)) {
    throw InvalidArgument("config: holdout_fraction must lie in [0,1)");
  }
  (void)bracket_kind_from_string(discovery.bracket);
  if (actuation.forcing != "cubic_sine") { throw InvalidArgument("config: actuation.forcing must be cubic_sine"); }
  if (actuation.trajectories < 1 || !finite_positive(actuation.t_end)) {
    throw InvalidArgument("config: actuation needs trajectories >= 1 and t_end > 0");
  }
  if (control.horizon_steps < 1 || control.substeps < 1 || !finite_positive(control.plant_dt)) {
    throw InvalidArgument("config: control needs horizon_steps, substeps >= 1 and plant_dt > 0");
  }
  if (control.trajectories < 1 || !finite_positive(control.t_end) || !finite_positive(control.momentum)) {
    throw InvalidArgument("config: control needs trajectories >= 1, t_end > 0, momentum > 0");
  }
  if (!finite_positive(control.tolerance) || !finite_positive(control.state_tolerance)) {
    throw InvalidArgument("config: control tolerances must be positive");
  }
  (void)prediction_model();
  const auto spec = system_spec();
  if (spec.input_dim == 0) { return; }
  if (control.reference_state.size() != spec.state_dim) {
    throw InvalidArgument("config: control.reference_state must match the state dimension");
  }
  if (control.R.rows() != spec.input_dim || control.R.cols() != spec.input_dim) {
    throw InvalidArgument("config: control.R must be q x q");
  }
  if (control.Q.rows() != control.Q.cols()) { throw InvalidArgument("config: control.Q must be square"); }
}

SystemSpec ExperimentConfig::system_spec() const
{
  if (system.name == "rigid_body") { return rigid_body_system(system.inertia, system.control_matrix); }
  return linear_system(system.A, system.control_matrix);
}

Dictionary ExperimentConfig::make_dictionary() const
{
  return Dictionary::monomials(static_cast<int>(system_spec().state_dim), dictionary.degree, dictionary.include_constant);
}

MpcConfig ExperimentConfig::mpc_config() const
{
  MpcConfig m;
  m.Q = control.Q;
  m.R = control.R;
  m.horizon_steps = control.horizon_steps;
  m.plant_dt = control.plant_dt;
  m.substeps = control.substeps;
  m.reference_state = control.reference_state;
  m.input_bounds = control.input_bounds;
  return m;
}

SparsifyOptions ExperimentConfig::sparsify_options() const
{
  SparsifyOptions s;
  s.l1_weight = discovery.l1_weight;
  s.max_iters = discovery.max_iters;
  s.column_scaling = discovery.column_scaling;
  return s;
}

PredictionModel ExperimentConfig::prediction_model() const
{
  if (control.prediction == "zero_order_hold") { return PredictionModel::zero_order_hold; }
  if (control.prediction == "nonlinear_shooting") { return PredictionModel::nonlinear_shooting; }
  throw InvalidArgument("config: control.prediction must be zero_order_hold or nonlinear_shooting");
}

json to_json(const ExperimentConfig & c)
{
  json j;
  j["system"] = {{"name", c.system.name},
                 {"inertia", to_json_vector(c.system.inertia)},
                 {"control_matrix", to_json_matrix(c.system.control_matrix)}};
  if (c.system.A.size() > 0) { j["system"]["A"] = to_json_matrix(c.system.A); }
  j["simulation"] = {{"dt", c.simulation.dt},
                     {"t_end", c.simulation.t_end},
                     {"trajectories", c.simulation.trajectories},
                     {"momentum_min", c.simulation.momentum_min},
                     {"momentum_max", c.simulation.momentum_max},
                     {"noise_std", c.simulation.noise_std}};
  j["dictionary"] = {{"degree", c.dictionary.degree}, {"include_constant", c.dictionary.include_constant}};
  j["discovery"] = {{"lambda", c.discovery.lambda},
                    {"rank_tolerance", c.discovery.rank_tolerance},
                    {"l1_weight", c.discovery.l1_weight ? json(*c.discovery.l1_weight) : json(nullptr)},
                    {"max_iters", c.discovery.max_iters},
                    {"column_scaling", c.discovery.column_scaling},
                    {"holdout_fraction", c.discovery.holdout_fraction},
                    {"residual_tolerance", c.discovery.residual_tolerance},
                    {"involution_tolerance", c.discovery.involution_tolerance},
                    {"bracket", c.discovery.bracket}};
  j["actuation"] = {{"forcing", c.actuation.forcing},
                    {"trajectories", c.actuation.trajectories},
                    {"t_end", c.actuation.t_end},
                    {"forced_data", c.actuation.forced_data ? json(*c.actuation.forced_data) : json(nullptr)}};
  json bounds = nullptr;
  if (c.control.input_bounds) {
    bounds = {{"lower", to_json_vector(c.control.input_bounds->lower)},
              {"upper", to_json_vector(c.control.input_bounds->upper)}};
  }
  j["control"] = {{"Q", to_json_matrix(c.control.Q)},
                  {"R", to_json_matrix(c.control.R)},
                  {"horizon_steps", c.control.horizon_steps},
                  {"plant_dt", c.control.plant_dt},
                  {"substeps", c.control.substeps},
                  {"reference_state", to_json_vector(c.control.reference_state)},
                  {"input_bounds", bounds},
                  {"t_end", c.control.t_end},
                  {"trajectories", c.control.trajectories},
                  {"momentum", c.control.momentum},
                  {"tolerance", c.control.tolerance},
                  {"state_tolerance", c.control.state_tolerance},
                  {"prediction", c.control.prediction}};
  j["io"] = {{"seed", c.io.seed}, {"out", c.io.out}};
  return j;
}

ExperimentConfig load_config(const std::filesystem::path & path) { return config_from_json(io::read_json(path)); }

// the output directory does not change any numbers
std::string config_hash(const ExperimentConfig & c)
{
  auto j = to_json(c);
  j["io"].erase("out");
  return io::fnv1a_hex(j.dump());
}

}  // namespace kronic
