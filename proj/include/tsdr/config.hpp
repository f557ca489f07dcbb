#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>

#include "tsdr/cutting_plane.hpp"
#include "tsdr/simulator.hpp"

namespace tsdr {

/// Full run description loaded from a JSON file. Defaults are filled in on
/// load and echoed back so a saved config reproduces the run exactly.
struct RunConfig {
  MatrixXd A, B, D, F0;
  VectorXd G0, u_min, u_max, x0, h;
  MatrixXd Q, R;
  int N = 3;
  double epsilon = 0.01;
  MatrixXd C;
  int n = 10;
  double l_c = 2.0;
  bool prestabilize = true;
  SolverOptions solver;
  std::map<std::string, ScenarioConfig> scenarios;
  std::string out_dir = "out";

  /// Builds the controller context (running the structural gates is the
  /// caller's job).
  ControllerContext make_context() const;
};

/// Parse a config file; throws std::runtime_error with the offending field
/// named on schema errors.
RunConfig load_config(const std::string& path);

/// Serialized echo with every default materialized.
std::string config_echo(const RunConfig& cfg);

/// The benchmark double-integrator study configuration.
RunConfig paper_sv_config();

}  // namespace tsdr
