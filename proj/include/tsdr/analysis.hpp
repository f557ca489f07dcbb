#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tsdr/cutting_plane.hpp"
#include "tsdr/simulator.hpp"

namespace tsdr {

/// Constants of the closed-loop stability machinery. Names follow the
/// Lyapunov-style proof: geometric series of L_A over the horizon (cA1..cA5),
/// constraint-propagation factors (Cw1, Cw2), the drift coefficients
/// k0..k5 (with the split k31/k32), and the cost-ratio constant c_l.
struct StabilityConstants {
  double L_A = 0.0, L_B = 0.0, L_D = 0.0, u_u = 0.0;
  double lambda_max_P = 0.0, lambda_min_Q = 0.0, lambda_max_Q = 0.0;
  double lambda_max_R = 0.0;
  double lambda_max_F0 = 0.0;  // largest eigenvalue of F0'F0
  double cA1 = 0.0, cA2 = 0.0, cA3 = 0.0, cA4 = 0.0, cA5 = 0.0;
  double Cw1 = 0.0, Cw2 = 0.0;
  double L_B1 = 0.0;           // |F Bbar|
  double c1 = 0.0;             // control-deviation constant
  double c2 = 0.0;             // c1 + 4|h|^2 + L_B1^2 u_u^2 / 4
  double c_l = 0.0;            // 2 lambda_max(P) / lambda_min(Q)
  double c_sN = 0.0;           // sqrt(lambda_max(C_s) N / lambda_min(C_s))
  double lambda_min_Cs = 0.0, lambda_max_Cs = 0.0;
  double k0 = 0.0, k1 = 0.0, k2 = 0.0, k31 = 0.0, k32 = 0.0;
  double k4 = 0.0, k5 = 0.0;
  double eps_c1 = 1.0;  // Young constants used when forming k2/k32/k4/k5
  double eps_c2 = 0.0;
  int N = 0;
};

/// The asymptotic average-cost bound and its three envelope pieces.
struct PerformanceBound {
  double sigma1 = 0.0;  // radius contribution
  double sigma2 = 0.0;  // mean-bound contribution
  double sigma3 = 0.0;  // covariance-trace contribution
  double total = 0.0;
  double eps_young = 0.0;  // the epsilon chosen inside the proof
};

/// Evaluate every constant with the Young parameters eps_c1 = 1 and
/// eps_c2 = eps_drift (the epsilon of the drift inequality). Requires L_A < 1.
StabilityConstants compute_constants(const ControllerContext& ctx,
                                     double eps_drift);

/// Average-cost envelope at ambiguity radius eps_w, mean bound mu_bar and
/// covariance trace tr_Sigma. All-zero arguments give a zero bound.
PerformanceBound theorem3_bound(const StabilityConstants& c, double eps_w,
                                double mu_bar, double tr_Sigma);

/// Worst-case moment bounds for diagnostics (delegates to the Gelbrich
/// calculators on the controller's ambiguity set).
WorstCaseMomentBounds gelbrich_report(const AmbiguityModel& ambiguity, int N,
                                      double mu_bar, const MatrixXd& Sigma_bar);

/// Nominal quadratic cost of the lifted problem:
/// V_q(ubar, wbar) = |x|_Q^2 + |Abar x + Bbar ubar + Dbar wbar|_Qbar^2
///                 + |ubar|_Rbar^2.
double quadratic_cost(const ControllerContext& ctx, const VectorXd& x,
                      const VectorXd& ubar, const VectorXd& wbar);

/// Disturbance-linear part g1 of the quadratic-cost upper bound.
double g1_term(const ControllerContext& ctx, const VectorXd& x,
               const VectorXd& ubar, const VectorXd& wbar);

/// Per-realization audit margins; margin = bound - achieved (>= 0 passes).
struct AuditRow {
  int k = 0;
  double prop1 = 0.0;      // quadratic-cost upper bound
  double prop2 = 0.0;      // recursive drift inequality
  double prop3 = 0.0;      // recourse-penalty upper bound
  double lemma4 = 0.0;     // nominal cost below the reported optimum
  double terminal = 0.0;   // l_c |x|^2 - |z_N|^2
  bool prop2_evaluated = false;
};

/// Quadratic-cost upper bound at one logged step. wbar stacks the N realized
/// disturbances from step k onward.
double check_prop1(const ControllerContext& ctx, const StabilityConstants& c,
                   const VectorXd& x, const VectorXd& ubar,
                   const VectorXd& u_applied, const VectorXd& wbar);

/// Recursive drift inequality between steps k and k+1 with Young parameter
/// eps > 0; the candidate sequence shifts ubar_k and appends the terminal law.
double check_prop2(const ControllerContext& ctx, const VectorXd& x_k,
                   const VectorXd& ubar_k, const VectorXd& u_applied_k,
                   const VectorXd& x_k1, const VectorXd& wbar_k1, double eps);

/// Recourse-penalty upper bound at one step; needs the previous disturbance.
double check_prop3(const ControllerContext& ctx, const StabilityConstants& c,
                   const VectorXd& x, const VectorXd& ubar,
                   const VectorXd& wbar, const VectorXd& w_prev,
                   double eps_c1);

/// Zero-distribution side of the saddle inequality:
/// V_q(ubar*, 0) + V_c(ubar*, 0) <= J.
double check_lemma4(const ControllerContext& ctx, const VectorXd& x,
                    const VectorXd& ubar, double J);

struct CostReport {
  double empirical_average = 0.0;
  double bound = 0.0;
  bool within_bound = false;
};

/// Empirical average stage cost (after burn-in) against the theoretical
/// envelope for the scenario moments.
CostReport average_cost_vs_bound(const RunStats& stats,
                                 const PerformanceBound& bound);

/// Offline audit of closed-loop logs. The drift inequality needs a full
/// window of realized disturbances, so the last N steps carry
/// prop2_evaluated = false. ubars must hold the re-solved first-stage
/// sequence per step (the CSV log keeps only the applied input).
std::vector<AuditRow> audit_run(const ControllerContext& ctx,
                                const StabilityConstants& c,
                                const TrajectoryLog& log,
                                const std::vector<VectorXd>& ubars,
                                const std::vector<double>& J_values);

/// Audit CSV: one row per step plus a trailing summary row of minima.
std::string audit_csv(const std::vector<AuditRow>& rows);

}  // namespace tsdr
