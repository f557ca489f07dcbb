#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tsdr/ambiguity.hpp"
#include "tsdr/convex.hpp"
#include "tsdr/reformulation.hpp"
#include "tsdr/system_model.hpp"

namespace tsdr {

/// Transport term used in the ambiguity cuts. The dual of the Wasserstein
/// worst-case expectation needs the multiplier, so gamma_scaled is the
/// default; the other two forms are kept for ablation.
enum class CutForm {
  gamma_scaled,  // nu >= theta - gamma * c_xi(xi_sigma, xi_omega)
  plain,         // nu >= theta - c_xi(xi_sigma, xi_omega)
  gamma_norm,    // nu >= theta - gamma * |xi_omega - xi_sigma|
};

struct SolverOptions {
  CutForm cut_form = CutForm::gamma_scaled;
  double tol_cut = 1e-7;
  double tol_sep_rel = 1e-6;   // support dedup: 1e-6 * (1 + |xi|)
  double sep_radius = 25.0;    // separation clamp: |w| <= sep_radius * (1 + |wbar| + |x|)
  int max_outer = 200;
  int max_master_solves = 500;
  bool relax_terminal = false;  // widen the terminal radius when infeasible
};

/// Everything Algorithm 1 needs at a time step: the (possibly
/// pre-stabilized) prediction model, weights, ambiguity set, penalty, the
/// terminal machinery and the physical input box.
struct ControllerContext {
  LtiSystem plant;        // prediction model; prestab_gain set when u = Kx + v
  LiftedProblem lifted;
  CostWeights weights;
  AmbiguityModel ambiguity;
  VectorXd h;
  double l_c = 0.0;
  VectorXd u_min, u_max;  // physical input box
  MatrixXd K_f;           // terminal gain (Riccati on the prediction model)
  NormBounds bounds;
  double gamma_low = 0.0;
  SolverOptions options;
};

struct ControllerGates {
  // Advisory: |A|_2 < 1 on the prediction model. The benchmark plant's
  // pre-stabilized matrix is Schur stable but has spectral norm slightly
  // above one, so this flag warns instead of blocking a run; the stability
  // constants are the only consumer that genuinely needs it.
  bool contraction_ok = false;
  bool rank_ok = false;          // disturbance-to-constraint stack full rank
  int rank = 0;
  bool lc_ok = false;            // l_c admits the fixed-gain terminal law
  double lc_threshold = 0.0;
  bool all_ok() const { return rank_ok && lc_ok; }
};

/// Structural feasibility checks run before any solve.
ControllerGates check_gates(const ControllerContext& ctx);

struct SupportPoint {
  VectorXd xi;
  VectorXd w;                      // disturbance generating xi (xi = FDbar w + FAbar x + G)
  std::vector<VectorXd> vertices;  // dual extreme points, components in {0, h_i}
};

struct SolveDiagnostics {
  int master_solves = 0;
  int outer_iterations = 0;
  int dual_cuts = 0;
  int support_points = 0;
  double terminal_slack = 0.0;  // extra radius granted when relaxing the SOC
  std::string termination;      // "converged" or "iteration-cap"
  std::vector<double> master_objectives;
};

struct MasterState {
  VectorXd ubar;
  double gamma = 0.0;
  VectorXd nu;
  VectorXd theta;
  double objective = 0.0;        // master value (no additive constant)
  double J = 0.0;                // objective + |Abar x|^2_Qbar + |x|^2_Q
  SolveStatus status = SolveStatus::iteration_limit;
};

/// Build the master relaxation for the given supports/vertices. Layout
/// [ubar | gamma | nu_1..nu_n | theta_1..theta_omega].
ConvexProgram assemble_master(const ControllerContext& ctx, const VectorXd& x,
                              const std::vector<VectorXd>& xi_samples,
                              const std::vector<SupportPoint>& supports,
                              double terminal_radius_extra = 0.0);

/// Dual step of Algorithm 1: append the optimal dual vertex of each support
/// whose theta underestimates it by more than tol_cut. Returns the number of
/// vertices appended (idempotent thanks to dedup).
int dual_step(const ControllerContext& ctx, const MasterState& master,
              std::vector<SupportPoint>& supports);

/// Separation step: run the per-sample inner maximization at the candidate
/// and collect worst-case support points that are new and whose implied cut
/// is violated. Returns the number of supports added.
int separation_step(const ControllerContext& ctx, const VectorXd& x,
                    const std::vector<VectorXd>& wbar_samples,
                    const std::vector<VectorXd>& xi_samples,
                    const MasterState& master,
                    std::vector<SupportPoint>& supports);

struct Algorithm1Result {
  MasterState solution;
  SolveDiagnostics diagnostics;
  std::vector<SupportPoint> supports;
};

/// Full Algorithm 1 loop for one time step.
Algorithm1Result run_algorithm1(const ControllerContext& ctx, const VectorXd& x,
                                const std::vector<VectorXd>& wbar_samples);

/// Assemble the controller context from a raw plant: Riccati pre-stabilizes
/// the plant, a second Riccati solution on the transformed model supplies
/// the terminal weight and gain, and the ambiguity set is built on the
/// lifted matrices. Throws when C_s fails the definiteness check.
ControllerContext make_controller(const LtiSystem& raw_plant,
                                  const MatrixXd& F0, const VectorXd& G0,
                                  const MatrixXd& Q, const MatrixXd& R, int N,
                                  double epsilon, const MatrixXd& C, int n,
                                  const VectorXd& h, double l_c,
                                  const VectorXd& u_min, const VectorXd& u_max,
                                  bool prestabilize_plant,
                                  const SolverOptions& options = {});

}  // namespace tsdr
