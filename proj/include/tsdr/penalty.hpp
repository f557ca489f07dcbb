#pragma once

#include <Eigen/Dense>

#include "tsdr/system_model.hpp"

namespace tsdr {

struct SecondStageSolution {
  double value = 0.0;
  VectorXd q_plus;
  VectorXd q_minus;
};

/// Recourse LP min [h' 0'] y s.t. [I -I] y = s, y >= 0, solved in closed
/// form (q+ = max(0,s), q- = max(0,-s)).
SecondStageSolution second_stage_lp(const VectorXd& h, const VectorXd& s);

/// Closed-form recourse value sum_i h_i max(0, s_i).
double penalty_closed_form(const VectorXd& h, const VectorXd& s);

/// Optimal dual vertex of the recourse LP over Pi = {0 <= pi <= h}:
/// pi_i = h_i when s_i > 0, otherwise 0 (ties resolved to 0 so the reported
/// vertex is unique).
VectorXd dual_vertex(const VectorXd& h, const VectorXd& s);

/// Recourse slack s = B1 ubar + F Dbar wbar + F Abar x + G.
VectorXd recourse_slack(const LiftedProblem& lifted, const VectorXd& ubar,
                        const VectorXd& x, const VectorXd& wbar);

/// Dual representation V_c(ubar, wbar) = max_{pi in Pi} pi' s; equals the
/// recourse LP value on the assembled slack.
double dual_value_representation(const VectorXd& h, const VectorXd& ubar,
                                 const VectorXd& x, const VectorXd& wbar,
                                 const LiftedProblem& lifted);

}  // namespace tsdr
