#include "tsdr/simulator.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tsdr {

TrueMoments sample_true_moments(int nw, double mu_bar0, double sigma_bar0,
                                std::mt19937& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> unif01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  TrueMoments m;
  m.mu = VectorXd::Zero(nw);
  for (int i = 0; i < nw; ++i) m.mu(i) = mu_bar0 * unif(rng);

  // Random orthonormal frame from the QR of a Gaussian matrix.
  MatrixXd Z(nw, nw);
  for (int i = 0; i < nw; ++i)
    for (int j = 0; j < nw; ++j) Z(i, j) = gauss(rng);
  Eigen::HouseholderQR<MatrixXd> qr(Z);
  MatrixXd Qmat = qr.householderQ();

  VectorXd lambdas(nw);
  for (int i = 0; i < nw; ++i)
    lambdas(i) = sigma_bar0 * sigma_bar0 * unif01(rng);
  m.Sigma = Qmat * lambdas.asDiagonal() * Qmat.transpose();
  m.Sigma = 0.5 * (m.Sigma + m.Sigma.transpose()).eval();
  return m;
}

VectorXd sample_disturbance(const TrueMoments& moments, std::mt19937& rng) {
  const int nw = static_cast<int>(moments.mu.size());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(moments.Sigma);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("covariance eigendecomposition failed");
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXd z(nw);
  for (int i = 0; i < nw; ++i) z(i) = gauss(rng);
  VectorXd scale = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return moments.mu + es.eigenvectors() * scale.cwiseProduct(z);
}

WorstCaseMomentBounds scenario_envelope(int nw, double mu_bar0,
                                        double sigma_bar0) {
  WorstCaseMomentBounds b;
  b.mean_bound = std::sqrt(static_cast<double>(nw)) * mu_bar0;
  b.trace_bound = static_cast<double>(nw) * sigma_bar0 * sigma_bar0;
  return b;
}

TrajectoryLog run_closed_loop(const ControllerContext& ctx,
                              const MatrixXd& A_raw, const MatrixXd& B_raw,
                              const VectorXd& x0, const ScenarioConfig& cfg,
                              unsigned int run_seed) {
  const int nw = ctx.plant.nw();
  const int nu = ctx.plant.nu();
  const int N = ctx.lifted.N;
  std::mt19937 rng(run_seed);
  std::mt19937_64 boot_rng(static_cast<std::uint64_t>(run_seed) * 2654435761ULL +
                           17);

  TrajectoryLog log;
  VectorXd x = x0;
  std::deque<VectorXd> window;
  TrueMoments moments =
      sample_true_moments(nw, cfg.mu_bar0, cfg.sigma_bar0, rng);

  for (int k = 0; k < cfg.steps; ++k) {
    EmpiricalSamples emp =
        build_empirical(window, ctx.ambiguity.n, N, nw, boot_rng);

    StepRecord rec;
    rec.k = k;
    rec.x = x;
    try {
      Algorithm1Result res = run_algorithm1(ctx, x, emp.wbar);
      if (res.solution.status != SolveStatus::optimal)
        throw std::runtime_error(std::string("master status ") +
                                 to_string(res.solution.status));
      rec.v = res.solution.ubar.head(nu);
      rec.J = res.solution.J;
      rec.gamma = res.solution.gamma;
      rec.iters = res.diagnostics.master_solves;
      rec.cuts = res.diagnostics.support_points;
      rec.converged = res.diagnostics.termination == "converged";
      const auto& objs = res.diagnostics.master_objectives;
      for (size_t i = 1; i < objs.size(); ++i)
        rec.obj_monotone_margin =
            std::min(rec.obj_monotone_margin, objs[i] - objs[i - 1]);
    } catch (const std::exception& ex) {
      log.failed = true;
      log.fail_reason = ex.what();
      break;
    }

    rec.u = ctx.plant.prestab_gain ? VectorXd(*ctx.plant.prestab_gain * x + rec.v)
                                   : rec.v;
    rec.viol_margin = -(ctx.lifted.F0 * x + ctx.lifted.G0);

    if (cfg.regenerate_moments && k > 0)
      moments = sample_true_moments(nw, cfg.mu_bar0, cfg.sigma_bar0, rng);
    rec.w = sample_disturbance(moments, rng);

    VectorXd x_nom = A_raw * x + B_raw * rec.u;
    VectorXd x_next = x_nom + ctx.plant.D * rec.w;

    // Reconstruct the applied disturbance the way the controller would:
    // through the pseudo-inverse of D, not from the simulator's draw. The
    // residual is taken against the same nominal prediction used to form
    // x_next so a zero disturbance reconstructs to exactly zero.
    VectorXd w_obs =
        ctx.plant.D.completeOrthogonalDecomposition().solve(x_next - x_nom);
    window.push_back(w_obs);
    while (static_cast<int>(window.size()) > cfg.history_window)
      window.pop_front();

    log.steps.push_back(rec);
    x = x_next;
  }
  return log;
}

std::vector<TrajectoryLog> run_scenario(const ControllerContext& ctx,
                                        const MatrixXd& A_raw,
                                        const MatrixXd& B_raw,
                                        const VectorXd& x0,
                                        const ScenarioConfig& cfg) {
  std::vector<TrajectoryLog> logs;
  logs.reserve(cfg.runs);
  for (int r = 0; r < cfg.runs; ++r)
    logs.push_back(run_closed_loop(ctx, A_raw, B_raw, x0, cfg, cfg.seed + r));
  return logs;
}

RunStats summarize(const std::vector<TrajectoryLog>& logs, const MatrixXd& Q,
                   const MatrixXd& R, int burn_in) {
  RunStats st;
  st.runs = static_cast<int>(logs.size());
  double cost_sum = 0.0;
  int cost_count = 0;
  for (const auto& log : logs) {
    if (log.failed) ++st.failed_runs;
    for (const auto& rec : log.steps) {
      ++st.total_steps;
      double worst = rec.viol_margin.minCoeff();
      if (worst < 0.0) {
        ++st.violated_steps;
        st.max_violation_margin = std::max(st.max_violation_margin, -worst);
      }
      st.max_state_norm = std::max(st.max_state_norm, rec.x.norm());
      if (rec.k >= burn_in) {
        cost_sum += rec.x.dot(Q * rec.x) + rec.u.dot(R * rec.u);
        ++cost_count;
      }
    }
  }
  if (st.total_steps > 0)
    st.violation_rate =
        static_cast<double>(st.violated_steps) / st.total_steps;
  if (cost_count > 0) st.average_cost = cost_sum / cost_count;
  return st;
}

std::string to_csv(const TrajectoryLog& log) {
  std::ostringstream os;
  os.precision(12);
  int m = log.steps.empty() ? 0 : static_cast<int>(log.steps[0].viol_margin.size());
  os << "k,x1,x2,u,v,w1,w2,J,gamma,iters,cuts";
  for (int i = 1; i <= m; ++i) os << ",viol_margin_" << i;
  os << "\n";
  for (const auto& rec : log.steps) {
    os << rec.k << "," << rec.x(0) << "," << rec.x(1) << "," << rec.u(0) << ","
       << rec.v(0) << "," << rec.w(0) << "," << rec.w(1) << "," << rec.J << ","
       << rec.gamma << "," << rec.iters << "," << rec.cuts;
    for (int i = 0; i < m; ++i) os << "," << rec.viol_margin(i);
    os << "\n";
  }
  return os.str();
}

void write_csv(const std::string& path, const TrajectoryLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << to_csv(log);
}

}  // namespace tsdr
