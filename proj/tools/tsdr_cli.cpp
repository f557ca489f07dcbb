#include <CLI11.hpp>
#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "tsdr/analysis.hpp"
#include "tsdr/config.hpp"
#include "tsdr/cutting_plane.hpp"
#include "tsdr/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStructural = 3;
constexpr int kExitSolver = 4;

tsdr::RunConfig load_or_default(const std::string& path) {
  if (path.empty()) return tsdr::paper_sv_config();
  return tsdr::load_config(path);
}

int check_structure(const tsdr::ControllerContext& ctx) {
  tsdr::ControllerGates gates = tsdr::check_gates(ctx);
  if (!gates.contraction_ok) {
    std::cerr << "warning: prediction model spectral norm is >= 1; the "
                 "asymptotic cost bound is formally out of scope\n";
  }
  if (!gates.rank_ok) {
    std::cerr << "structural check failed: disturbance-to-constraint stack "
                 "is rank deficient (rank "
              << gates.rank << ")\n";
    return kExitStructural;
  }
  if (!gates.lc_ok) {
    std::cerr << "structural check failed: terminal parameter below the "
                 "admissible threshold "
              << gates.lc_threshold << "\n";
    return kExitStructural;
  }
  return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& scenario,
                 int runs_override, int steps_override, long seed_override,
                 const std::string& out_override, bool json_mode) {
  tsdr::RunConfig cfg;
  try {
    cfg = load_or_default(config_path);
  } catch (const std::exception& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return kExitConfig;
  }
  auto it = cfg.scenarios.find(scenario);
  if (it == cfg.scenarios.end()) {
    std::cerr << "config error: unknown scenario '" << scenario << "'\n";
    return kExitConfig;
  }
  tsdr::ScenarioConfig scen = it->second;
  if (runs_override > 0) scen.runs = runs_override;
  if (steps_override > 0) scen.steps = steps_override;
  if (seed_override >= 0) scen.seed = static_cast<unsigned int>(seed_override);
  std::string out_dir = out_override.empty() ? cfg.out_dir : out_override;

  tsdr::ControllerContext ctx;
  try {
    ctx = cfg.make_context();
  } catch (const std::exception& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return kExitConfig;
  }
  if (int rc = check_structure(ctx); rc != kExitOk) return rc;

  std::vector<tsdr::TrajectoryLog> logs;
  try {
    logs = tsdr::run_scenario(ctx, cfg.A, cfg.B, cfg.x0, scen);
  } catch (const std::exception& ex) {
    std::cerr << "solver failure: " << ex.what() << "\n";
    return kExitSolver;
  }

  fs::create_directories(out_dir);
  std::ofstream echo(fs::path(out_dir) / "config_echo.json");
  echo << tsdr::config_echo(cfg) << "\n";
  for (size_t r = 0; r < logs.size(); ++r) {
    std::ostringstream name;
    name << "run_" << scenario << "_" << r << ".csv";
    tsdr::write_csv((fs::path(out_dir) / name.str()).string(), logs[r]);
  }
  tsdr::RunStats stats = tsdr::summarize(logs, cfg.Q, cfg.R);
  {
    std::ofstream agg(fs::path(out_dir) / ("aggregate_" + scenario + ".csv"));
    agg << "runs,total_steps,violated_steps,violation_rate,max_state_norm,"
           "max_violation_margin,average_cost,failed_runs\n";
    agg.precision(12);
    agg << stats.runs << "," << stats.total_steps << "," << stats.violated_steps
        << "," << stats.violation_rate << "," << stats.max_state_norm << ","
        << stats.max_violation_margin << "," << stats.average_cost << ","
        << stats.failed_runs << "\n";
  }

  if (json_mode) {
    json out = {{"scenario", scenario},
                {"runs", stats.runs},
                {"total_steps", stats.total_steps},
                {"violation_rate", stats.violation_rate},
                {"max_state_norm", stats.max_state_norm},
                {"average_cost", stats.average_cost},
                {"failed_runs", stats.failed_runs},
                {"out_dir", out_dir}};
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "scenario " << scenario << ": " << stats.runs << " runs, "
              << stats.total_steps << " steps, violation rate "
              << stats.violation_rate << ", max |x| " << stats.max_state_norm
              << ", average cost " << stats.average_cost << "\n";
  }
  return stats.failed_runs == 0 ? kExitOk : kExitSolver;
}

int cmd_solve(const std::string& config_path,
              const std::vector<double>& state, bool json_mode) {
  tsdr::RunConfig cfg;
  tsdr::ControllerContext ctx;
  try {
    cfg = load_or_default(config_path);
    ctx = cfg.make_context();
  } catch (const std::exception& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return kExitConfig;
  }
  if (static_cast<int>(state.size()) != ctx.plant.nx()) {
    std::cerr << "config error: state must have " << ctx.plant.nx()
              << " entries\n";
    return kExitConfig;
  }
  if (int rc = check_structure(ctx); rc != kExitOk) return rc;

  Eigen::VectorXd x(state.size());
  for (size_t i = 0; i < state.size(); ++i) x(i) = state[i];

  // Zero-bootstrap empirical samples: no disturbance observed yet.
  std::vector<Eigen::VectorXd> samples(
      ctx.ambiguity.n,
      Eigen::VectorXd::Zero(ctx.lifted.N * ctx.plant.nw()));

  tsdr::Algorithm1Result res;
  try {
    res = tsdr::run_algorithm1(ctx, x, samples);
    if (res.solution.status != tsdr::SolveStatus::optimal)
      throw std::runtime_error(std::string("master status ") +
                               tsdr::to_string(res.solution.status));
  } catch (const std::exception& ex) {
    std::cerr << "solver failure: " << ex.what() << "\n";
    return kExitSolver;
  }

  if (json_mode) {
    json out;
    out["ubar"] = std::vector<double>(
        res.solution.ubar.data(),
        res.solution.ubar.data() + res.solution.ubar.size());
    out["gamma"] = res.solution.gamma;
    out["J"] = res.solution.J;
    out["master_solves"] = res.diagnostics.master_solves;
    out["outer_iterations"] = res.diagnostics.outer_iterations;
    out["support_points"] = res.diagnostics.support_points;
    out["dual_cuts"] = res.diagnostics.dual_cuts;
    out["termination"] = res.diagnostics.termination;
    out["terminal_slack"] = res.diagnostics.terminal_slack;
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "ubar* = [" << res.solution.ubar.transpose() << "]\n"
              << "gamma* = " << res.solution.gamma << "\n"
              << "J = " << res.solution.J << "\n"
              << "master solves = " << res.diagnostics.master_solves
              << ", supports = " << res.diagnostics.support_points
              << ", termination = " << res.diagnostics.termination << "\n";
  }
  return kExitOk;
}

int cmd_bounds(const std::string& config_path, const std::string& scenario,
               bool json_mode) {
  tsdr::RunConfig cfg;
  tsdr::ControllerContext ctx;
  try {
    cfg = load_or_default(config_path);
    ctx = cfg.make_context();
  } catch (const std::exception& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return kExitConfig;
  }
  if (int rc = check_structure(ctx); rc != kExitOk) return rc;

  double mu_bar0 = 0.0, sigma_bar0 = 0.0;
  if (auto it = cfg.scenarios.find(scenario); it != cfg.scenarios.end()) {
    mu_bar0 = it->second.mu_bar0;
    sigma_bar0 = it->second.sigma_bar0;
  }
  const int nw = ctx.plant.nw();
  tsdr::WorstCaseMomentBounds env =
      tsdr::scenario_envelope(nw, mu_bar0, sigma_bar0);
  double mu_bar = env.mean_bound;
  double tr_Sigma = env.trace_bound;

  tsdr::StabilityConstants c;
  tsdr::PerformanceBound b;
  try {
    double eps_seed = std::max(
        {std::cbrt(cfg.epsilon), std::sqrt(mu_bar), std::sqrt(tr_Sigma),
         1e-6});
    c = tsdr::compute_constants(ctx, std::min(1.0, eps_seed));
    b = tsdr::theorem3_bound(c, cfg.epsilon, mu_bar, tr_Sigma);
  } catch (const std::exception& ex) {
    std::cerr << "solver failure: " << ex.what() << "\n";
    return kExitSolver;
  }
  tsdr::WorstCaseMomentBounds gb = tsdr::gelbrich_report(
      ctx.ambiguity, ctx.lifted.N, mu_bar,
      Eigen::MatrixXd::Identity(nw, nw) * sigma_bar0 * sigma_bar0);

  if (json_mode) {
    json out;
    out["constants"] = {{"cA1", c.cA1},   {"cA2", c.cA2}, {"cA3", c.cA3},
                        {"cA4", c.cA4},   {"cA5", c.cA5}, {"Cw1", c.Cw1},
                        {"Cw2", c.Cw2},   {"c1", c.c1},   {"c2", c.c2},
                        {"c_l", c.c_l},   {"c_sN", c.c_sN}, {"k0", c.k0},
                        {"k1", c.k1},     {"k2", c.k2},   {"k31", c.k31},
                        {"k32", c.k32},   {"k4", c.k4},   {"k5", c.k5},
                        {"L_B1", c.L_B1}};
    out["bound"] = {{"sigma1", b.sigma1},
                    {"sigma2", b.sigma2},
                    {"sigma3", b.sigma3},
                    {"total", b.total},
                    {"eps_young", b.eps_young}};
    out["gelbrich"] = {{"mean_bound", gb.mean_bound},
                       {"trace_bound", gb.trace_bound}};
    out["config_echo"] = json::parse(tsdr::config_echo(cfg));
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "k0 = " << c.k0 << ", c1 = " << c.c1 << ", c2 = " << c.c2
              << ", c_l = " << c.c_l << "\n"
              << "cA = [" << c.cA1 << ", " << c.cA2 << ", " << c.cA3 << ", "
              << c.cA4 << ", " << c.cA5 << "]\n"
              << "k = [" << c.k1 << ", " << c.k2 << ", " << c.k31 << ", "
              << c.k32 << ", " << c.k4 << ", " << c.k5 << "]\n"
              << "bound = " << b.total << " (sigma1 " << b.sigma1
              << ", sigma2 " << b.sigma2 << ", sigma3 " << b.sigma3 << ")\n"
              << "gelbrich mean bound = " << gb.mean_bound
              << ", trace bound = " << gb.trace_bound << "\n";
  }
  return kExitOk;
}

int cmd_audit(const std::string& config_path, const std::string& log_dir,
              const std::string& out_override, bool json_mode) {
  tsdr::RunConfig cfg;
  tsdr::ControllerContext ctx;
  try {
    cfg = load_or_default(config_path);
    ctx = cfg.make_context();
  } catch (const std::exception& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return kExitConfig;
  }
  if (!fs::is_directory(log_dir)) {
    std::cerr << "config error: log directory '" << log_dir
              << "' does not exist\n";
    return kExitConfig;
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(log_dir)) {
    std::string name = entry.path().filename().string();
    if (name.rfind("run_", 0) == 0 && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "config error: no run_*.csv logs in '" << log_dir << "'\n";
    return kExitConfig;
  }

  const int nw = ctx.plant.nw();
  const int N = ctx.lifted.N;
  double min_prop1 = 1e300, min_prop2 = 1e300, min_prop3 = 1e300,
         min_lemma4 = 1e300, min_terminal = 1e300;
  int audited_rows = 0;
  std::string out_dir = out_override.empty() ? log_dir : out_override;
  fs::create_directories(out_dir);

  for (const auto& file : files) {
    std::ifstream in(file);
    std::string line;
    std::getline(in, line);  // header
    tsdr::TrajectoryLog log;
    std::vector<double> J_values;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::vector<double> vals;
      std::string tok;
      while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
      if (vals.size() < 11) {
        std::cerr << "config error: malformed log row in "
                  << file.filename().string() << "\n";
        return kExitConfig;
      }
      tsdr::StepRecord rec;
      rec.k = static_cast<int>(vals[0]);
      rec.x = (Eigen::VectorXd(2) << vals[1], vals[2]).finished();
      rec.u = Eigen::VectorXd::Constant(1, vals[3]);
      rec.v = Eigen::VectorXd::Constant(1, vals[4]);
      rec.w = (Eigen::VectorXd(2) << vals[5], vals[6]).finished();
      rec.J = vals[7];
      rec.gamma = vals[8];
      rec.viol_margin = Eigen::VectorXd::Zero(
          static_cast<int>(vals.size()) - 11);
      for (size_t i = 11; i < vals.size(); ++i)
        rec.viol_margin(i - 11) = vals[i];
      J_values.push_back(rec.J);
      log.steps.push_back(rec);
    }

    // Re-solve each step from the logged state and disturbance history to
    // recover the full first-stage sequence (logs keep only u and v).
    std::vector<Eigen::VectorXd> ubars;
    std::deque<Eigen::VectorXd> window;
    std::mt19937_64 boot_rng(
        static_cast<std::uint64_t>(cfg.scenarios.count("a")
                                       ? cfg.scenarios.at("a").seed
                                       : 1) *
            2654435761ULL +
        17);
    try {
      for (const auto& rec : log.steps) {
        tsdr::EmpiricalSamples emp =
            tsdr::build_empirical(window, ctx.ambiguity.n, N, nw, boot_rng);
        tsdr::Algorithm1Result res =
            tsdr::run_algorithm1(ctx, rec.x, emp.wbar);
        ubars.push_back(res.solution.ubar);
        window.push_back(rec.w);
        while (static_cast<int>(window.size()) > 50) window.pop_front();
      }
    } catch (const std::exception& ex) {
      std::cerr << "solver failure during audit: " << ex.what() << "\n";
      return kExitSolver;
    }

    tsdr::StabilityConstants c = tsdr::compute_constants(ctx, 0.5);
    std::vector<tsdr::AuditRow> rows =
        tsdr::audit_run(ctx, c, log, ubars, J_values);
    std::ofstream out(fs::path(out_dir) /
                      ("audit_" + file.filename().string()));
    out << tsdr::audit_csv(rows);
    for (const auto& r : rows) {
      ++audited_rows;
      min_prop1 = std::min(min_prop1, r.prop1);
      if (r.prop2_evaluated) min_prop2 = std::min(min_prop2, r.prop2);
      min_prop3 = std::min(min_prop3, r.prop3);
      min_lemma4 = std::min(min_lemma4, r.lemma4);
      min_terminal = std::min(min_terminal, r.terminal);
    }
  }

  bool pass = min_prop1 >= -1e-6 && min_prop2 >= -1e-6 && min_prop3 >= -1e-6 &&
              min_lemma4 >= -1e-6 && min_terminal >= -1e-6;
  if (json_mode) {
    json out = {{"files", files.size()},       {"rows", audited_rows},
                {"min_prop1", min_prop1},      {"min_prop2", min_prop2},
                {"min_prop3", min_prop3},      {"min_lemma4", min_lemma4},
                {"min_terminal", min_terminal}, {"pass", pass}};
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "audited " << files.size() << " logs, " << audited_rows
              << " rows; min margins: prop1 " << min_prop1 << ", prop2 "
              << min_prop2 << ", prop3 " << min_prop3 << ", lemma4 "
              << min_lemma4 << ", terminal " << min_terminal
              << (pass ? " [pass]" : " [FAIL]") << "\n";
  }
  return pass ? kExitOk : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage distributionally robust MPC toolbox"};
  app.require_subcommand(1);

  std::string config_path, scenario = "a", out_dir, log_dir;
  std::vector<double> state;
  int runs = 0, steps = 0;
  long seed = -1;
  bool json_mode = false;

  auto* sim = app.add_subcommand("simulate", "Closed-loop Monte-Carlo runs");
  sim->add_option("--config", config_path, "JSON config (default: built-in)");
  sim->add_option("--scenario", scenario, "Scenario id (a|b|c|d|nominal|...)");
  sim->add_option("--runs", runs, "Override run count");
  sim->add_option("--steps", steps, "Override step count");
  sim->add_option("--seed", seed, "Override base seed");
  sim->add_option("--out", out_dir, "Output directory");
  sim->add_flag("--json", json_mode, "JSON summary on stdout");

  auto* solve = app.add_subcommand("solve", "One solve from a given state");
  solve->add_option("--config", config_path, "JSON config");
  solve->add_option("--state", state, "State vector")->expected(-1);
  solve->add_flag("--json", json_mode, "JSON output");

  auto* bounds =
      app.add_subcommand("bounds", "Stability constants and cost envelope");
  bounds->add_option("--config", config_path, "JSON config");
  bounds->add_option("--scenario", scenario, "Scenario whose moments to use");
  bounds->add_flag("--json", json_mode, "JSON output");

  auto* audit = app.add_subcommand("audit", "Verify logged runs offline");
  audit->add_option("--config", config_path, "JSON config");
  audit->add_option("--logs", log_dir, "Directory of run_*.csv logs")
      ->required();
  audit->add_option("--out", out_dir, "Audit output directory");
  audit->add_flag("--json", json_mode, "JSON output");

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed())
    return cmd_simulate(config_path, scenario, runs, steps, seed, out_dir,
                        json_mode);
  if (solve->parsed()) return cmd_solve(config_path, state, json_mode);
  if (bounds->parsed()) return cmd_bounds(config_path, scenario, json_mode);
  if (audit->parsed())
    return cmd_audit(config_path, log_dir, out_dir, json_mode);
  return kExitConfig;
}
