#include "tsdr/config.hpp"

#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace tsdr {

namespace {

using nlohmann::json;

MatrixXd matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw std::runtime_error("config field '" + field +
                             "' must be a nested array of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols)
      throw std::runtime_error("config field '" + field +
                               "' has ragged rows");
    for (int c = 0; c < cols; ++c) M(i, c) = j[i][c].get<double>();
  }
  return M;
}

VectorXd vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array())
    throw std::runtime_error("config field '" + field + "' must be an array");
  VectorXd v(j.size());
  for (int i = 0; i < static_cast<int>(j.size()); ++i)
    v(i) = j[i].get<double>();
  return v;
}

json to_json(const MatrixXd& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(M(i, c));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

const json& require(const json& j, const std::string& field) {
  auto it = j.find(field);
  if (it == j.end())
    throw std::runtime_error("config is missing required field '" + field +
                             "'");
  return *it;
}

const char* to_string(CutForm f) {
  switch (f) {
    case CutForm::gamma_scaled: return "gamma_scaled";
    case CutForm::plain: return "plain";
    case CutForm::gamma_norm: return "gamma_norm";
  }
  return "?";
}

CutForm cut_form_from_string(const std::string& s) {
  if (s == "gamma_scaled") return CutForm::gamma_scaled;
  if (s == "plain") return CutForm::plain;
  if (s == "gamma_norm") return CutForm::gamma_norm;
  throw std::runtime_error("config field 'solver.cut_form' must be one of "
                           "gamma_scaled|plain|gamma_norm");
}

ScenarioConfig scenario_from_json(const json& j, const std::string& name) {
  ScenarioConfig s;
  s.name = name;
  s.mu_bar0 = require(j, "mu_bar0").get<double>();
  s.sigma_bar0 = require(j, "sigma_bar0").get<double>();
  if (j.contains("runs")) s.runs = j["runs"].get<int>();
  if (j.contains("steps")) s.steps = j["steps"].get<int>();
  if (j.contains("seed")) s.seed = j["seed"].get<unsigned int>();
  if (j.contains("history_window"))
    s.history_window = j["history_window"].get<int>();
  if (j.contains("regenerate_moments"))
    s.regenerate_moments = j["regenerate_moments"].get<bool>();
  if (s.mu_bar0 < 0 || s.sigma_bar0 < 0)
    throw std::runtime_error("scenario '" + name +
                             "': moment bounds must be nonnegative");
  return s;
}

}  // namespace

ControllerContext RunConfig::make_context() const {
  LtiSystem raw{A, B, D, std::nullopt};
  return make_controller(raw, F0, G0, Q, R, N, epsilon, C, n, h, l_c, u_min,
                         u_max, prestabilize, solver);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw std::runtime_error(std::string("config parse error: ") + ex.what());
  }

  RunConfig cfg;
  cfg.A = matrix_from_json(require(j, "A"), "A");
  cfg.B = matrix_from_json(require(j, "B"), "B");
  cfg.D = matrix_from_json(require(j, "D"), "D");
  cfg.F0 = matrix_from_json(require(j, "F0"), "F0");
  cfg.G0 = vector_from_json(require(j, "G0"), "G0");
  cfg.u_min = vector_from_json(require(j, "u_min"), "u_min");
  cfg.u_max = vector_from_json(require(j, "u_max"), "u_max");
  cfg.x0 = vector_from_json(require(j, "x0"), "x0");
  cfg.Q = matrix_from_json(require(j, "Q"), "Q");
  cfg.R = matrix_from_json(require(j, "R"), "R");
  cfg.h = vector_from_json(require(j, "h"), "h");
  cfg.N = require(j, "N").get<int>();
  cfg.epsilon = require(j, "epsilon").get<double>();
  cfg.n = require(j, "n").get<int>();
  cfg.l_c = require(j, "l_c").get<double>();
  if (j.contains("C"))
    cfg.C = matrix_from_json(j["C"], "C");
  else
    cfg.C = MatrixXd::Identity(cfg.N * cfg.F0.rows(), cfg.N * cfg.F0.rows());
  if (j.contains("prestabilize"))
    cfg.prestabilize = j["prestabilize"].get<bool>();
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("solver")) {
    const json& s = j["solver"];
    if (s.contains("cut_form"))
      cfg.solver.cut_form =
          cut_form_from_string(s["cut_form"].get<std::string>());
    if (s.contains("tol_cut")) cfg.solver.tol_cut = s["tol_cut"].get<double>();
    if (s.contains("tol_sep_rel"))
      cfg.solver.tol_sep_rel = s["tol_sep_rel"].get<double>();
    if (s.contains("max_outer")) cfg.solver.max_outer = s["max_outer"].get<int>();
    if (s.contains("max_master_solves"))
      cfg.solver.max_master_solves = s["max_master_solves"].get<int>();
    if (s.contains("relax_terminal"))
      cfg.solver.relax_terminal = s["relax_terminal"].get<bool>();
  }
  if (j.contains("scenarios")) {
    for (auto it = j["scenarios"].begin(); it != j["scenarios"].end(); ++it)
      cfg.scenarios[it.key()] = scenario_from_json(it.value(), it.key());
  }
  if (cfg.N < 1) throw std::runtime_error("config field 'N' must be >= 1");
  if (cfg.epsilon < 0)
    throw std::runtime_error("config field 'epsilon' must be >= 0");
  if (cfg.n < 1) throw std::runtime_error("config field 'n' must be >= 1");
  return cfg;
}

std::string config_echo(const RunConfig& cfg) {
  json j;
  j["A"] = to_json(cfg.A);
  j["B"] = to_json(cfg.B);
  j["D"] = to_json(cfg.D);
  j["F0"] = to_json(cfg.F0);
  j["G0"] = to_json(cfg.G0);
  j["u_min"] = to_json(cfg.u_min);
  j["u_max"] = to_json(cfg.u_max);
  j["x0"] = to_json(cfg.x0);
  j["Q"] = to_json(cfg.Q);
  j["R"] = to_json(cfg.R);
  j["h"] = to_json(cfg.h);
  j["N"] = cfg.N;
  j["epsilon"] = cfg.epsilon;
  j["C"] = to_json(cfg.C);
  j["n"] = cfg.n;
  j["l_c"] = cfg.l_c;
  j["prestabilize"] = cfg.prestabilize;
  j["out_dir"] = cfg.out_dir;
  j["solver"] = {{"cut_form", to_string(cfg.solver.cut_form)},
                 {"tol_cut", cfg.solver.tol_cut},
                 {"tol_sep_rel", cfg.solver.tol_sep_rel},
                 {"max_outer", cfg.solver.max_outer},
                 {"max_master_solves", cfg.solver.max_master_solves},
                 {"relax_terminal", cfg.solver.relax_terminal}};
  json scen = json::object();
  for (const auto& [name, s] : cfg.scenarios) {
    scen[name] = {{"mu_bar0", s.mu_bar0},
                  {"sigma_bar0", s.sigma_bar0},
                  {"runs", s.runs},
                  {"steps", s.steps},
                  {"seed", s.seed},
                  {"history_window", s.history_window},
                  {"regenerate_moments", s.regenerate_moments}};
  }
  j["scenarios"] = scen;
  return j.dump(2);
}

RunConfig paper_sv_config() {
  RunConfig cfg;
  cfg.A = (MatrixXd(2, 2) << 1, 1, 0, 1).finished();
  cfg.B = (MatrixXd(2, 1) << 0.5, 1).finished();
  cfg.D = MatrixXd::Identity(2, 2);
  cfg.F0 = (MatrixXd(4, 2) << 1, 0, -1, 0, 0, 1, 0, -1).finished();
  cfg.G0 = (VectorXd(4) << -2, -10, -2, -2).finished();
  cfg.u_min = VectorXd::Constant(1, -1.0);
  cfg.u_max = VectorXd::Constant(1, 1.0);
  cfg.x0 = (VectorXd(2) << -5, -2).finished();
  cfg.Q = MatrixXd::Identity(2, 2);
  cfg.R = MatrixXd::Constant(1, 1, 0.1);
  cfg.N = 3;
  cfg.h = VectorXd::Constant(cfg.N * 4, 1e3);
  cfg.epsilon = 0.01;
  cfg.C = MatrixXd::Identity(cfg.N * 4, cfg.N * 4);
  cfg.n = 10;
  cfg.l_c = 2.0;
  cfg.prestabilize = true;

  auto scen = [](const std::string& name, double mu0, double s0) {
    ScenarioConfig s;
    s.name = name;
    s.mu_bar0 = mu0;
    s.sigma_bar0 = s0;
    return s;
  };
  cfg.scenarios["a"] = scen("a", 0.0, 0.1);
  cfg.scenarios["b"] = scen("b", 0.5, 0.1);
  cfg.scenarios["c"] = scen("c", 0.0, 0.5);
  cfg.scenarios["d"] = scen("d", 0.5, 0.5);
  cfg.scenarios["nominal"] = scen("nominal", 0.0, 0.0);
  return cfg;
}

}  // namespace tsdr
