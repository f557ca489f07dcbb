#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tsdr/cutting_plane.hpp"

namespace tsdr {

/// One closed-loop Monte-Carlo scenario: the controller tuning plus the
/// true-disturbance regime it is simulated against.
struct ScenarioConfig {
  std::string name;              // "a".."d" in the benchmark study
  double mu_bar0 = 0.0;          // per-coordinate mean magnitude bound
  double sigma_bar0 = 0.0;       // per-coordinate std-dev bound
  int runs = 20;
  int steps = 100;
  unsigned int seed = 1;
  int history_window = 50;       // sliding window of reconstructed samples
  bool regenerate_moments = true;  // redraw (mu_k, Sigma_k) every step
  std::optional<VectorXd> x0;
};

/// Per-step record of one closed-loop run.
struct StepRecord {
  int k = 0;
  VectorXd x;        // state at the start of the step
  VectorXd u;        // applied physical input
  VectorXd v;        // correction term when pre-stabilized, else u
  VectorXd w;        // realized disturbance
  double J = 0.0;    // optimal value reported by the controller
  double gamma = 0.0;
  int iters = 0;     // master solves spent this step
  int cuts = 0;      // support points at termination
  VectorXd viol_margin;  // -(F0 x + G0) componentwise (>=0 means satisfied)

  // Solver health kept out of the CSV: whether the cutting-plane loop hit
  // its finite-termination test, and the smallest increment between
  // consecutive master objectives (negative = non-monotone).
  bool converged = false;
  double obj_monotone_margin = std::numeric_limits<double>::infinity();
};

struct TrajectoryLog {
  std::vector<StepRecord> steps;
  bool failed = false;       // a solve failed mid-run; trajectory truncated
  std::string fail_reason;
};

struct RunStats {
  int runs = 0;
  int total_steps = 0;
  int violated_steps = 0;          // steps with min_i (F0 x + G0)_i < 0
  double violation_rate = 0.0;
  double max_state_norm = 0.0;
  double max_violation_margin = 0.0;  // largest -min_i margin over all steps
  double average_cost = 0.0;          // mean stage cost after burn-in
  int failed_runs = 0;
};

/// Moments of the true disturbance at one step.
struct TrueMoments {
  VectorXd mu;
  MatrixXd Sigma;
};

/// Draw mu uniform in the box [-mu_bar0, mu_bar0]^nw and Sigma = R' L R with
/// a random rotation R and eigenvalues uniform in [0, sigma_bar0^2].
TrueMoments sample_true_moments(int nw, double mu_bar0, double sigma_bar0,
                                std::mt19937& rng);

/// Gaussian draw N(mu, Sigma); degenerate Sigma handled via eigendecomposition
/// (Sigma = 0 returns mu exactly).
VectorXd sample_disturbance(const TrueMoments& moments, std::mt19937& rng);

/// Worst-case moment envelope the controller assumes: mean norm bound
/// sqrt(nw) * mu_bar0 and covariance trace bound nw * sigma_bar0^2.
WorstCaseMomentBounds scenario_envelope(int nw, double mu_bar0,
                                        double sigma_bar0);

/// One closed-loop run from x0. Each step rebuilds the empirical set from
/// the disturbance history, runs the cutting-plane solve, applies
/// u = K0 x + v*_0, then draws and applies the true disturbance.
TrajectoryLog run_closed_loop(const ControllerContext& ctx,
                              const MatrixXd& A_raw, const MatrixXd& B_raw,
                              const VectorXd& x0, const ScenarioConfig& cfg,
                              unsigned int run_seed);

/// Monte-Carlo wrapper: `cfg.runs` runs with seeds cfg.seed + run index.
std::vector<TrajectoryLog> run_scenario(const ControllerContext& ctx,
                                        const MatrixXd& A_raw,
                                        const MatrixXd& B_raw,
                                        const VectorXd& x0,
                                        const ScenarioConfig& cfg);

/// Aggregate statistics; average cost uses stage cost x'Qx + u'Ru with the
/// first `burn_in` steps dropped.
RunStats summarize(const std::vector<TrajectoryLog>& logs, const MatrixXd& Q,
                   const MatrixXd& R, int burn_in = 10);

/// Fixed per-run CSV: header
/// k,x1,x2,u,v,w1,w2,J,gamma,iters,cuts,viol_margin_1..m.
std::string to_csv(const TrajectoryLog& log);
void write_csv(const std::string& path, const TrajectoryLog& log);

}  // namespace tsdr
