#pragma once

#include <Eigen/Dense>

#include "tsdr/ambiguity.hpp"
#include "tsdr/system_model.hpp"

namespace tsdr {

/// Lower bound on the transport multiplier: gamma_low is the spectral radius
/// of (C_s/2)^{-1} Dbar' Qbar Dbar, computed as a symmetric eigenproblem.
double gamma_lower_bound(const LiftedProblem& lifted, const CostWeights& weights,
                         const MatrixXd& C_s);

/// f1(ubar, gamma) = |ubar|^2_{Bbar'Qbar Bbar + Rbar}
///                   + 2 (Abar x)' Qbar Bbar ubar + eps*gamma.
double first_stage_cost(const VectorXd& ubar, double gamma, const VectorXd& x,
                        const LiftedProblem& lifted, const CostWeights& weights,
                        double epsilon);

/// State-dependent additive constant |Abar x|^2_Qbar + |x|^2_Q dropped from
/// the first-stage cost; added back when reporting J(k).
double cost_constant(const VectorXd& x, const LiftedProblem& lifted,
                     const CostWeights& weights);

struct InnerEvaluation {
  VectorXd C0;
  MatrixXd C1;
  VectorXd C2;
  VectorXd w_star;  // C1^{-1} C2
};

/// Assemble C0 = 2 Dbar'Qbar(Abar x + Bbar ubar) + gamma C_s wbar_sigma,
/// C1 = gamma C_s - 2 Dbar'Qbar Dbar, C2 = C0 + (F Dbar)' pi and the
/// worst-case disturbance C1^{-1} C2. Throws when gamma is within 1e-6
/// relative of the lower bound (C1 would lose definiteness).
InnerEvaluation inner_matrices(const VectorXd& ubar, double gamma,
                               const VectorXd& x, const VectorXd& wbar_sigma,
                               const VectorXd& pi, const LiftedProblem& lifted,
                               const CostWeights& weights,
                               const AmbiguityModel& ambiguity);

struct InnerResult {
  double value = 0.0;
  VectorXd pi_hat;
  VectorXd xi_hat;  // F Dbar w* + F Abar x + G
  VectorXd w_star;
  int ascent_iterations = 0;
};

/// Per-sample value function: coordinate ascent alternating the closed-form
/// dual vertex (at the slack of the current w) with the closed-form
/// worst-case disturbance, started from the vertex at wbar_sigma. The dual
/// takes finitely many vertex values and the objective is strictly
/// increasing, so the ascent terminates.
InnerResult eval_V(const VectorXd& ubar, double gamma,
                   const VectorXd& wbar_sigma, const VectorXd& x,
                   const LiftedProblem& lifted, const CostWeights& weights,
                   const AmbiguityModel& ambiguity, const VectorXd& h,
                   int max_iter = 100);

/// Inner objective phi(w, pi) =
///   -gamma c(w, wbar_sigma) + |w|^2_{Dbar'Qbar Dbar}
///   + 2 (Abar x + Bbar ubar)' Qbar Dbar w + pi' slack(w);
/// eval_V maximizes this over (w, pi in Pi).
double inner_objective(const VectorXd& w, const VectorXd& pi,
                       const VectorXd& ubar, double gamma, const VectorXd& x,
                       const VectorXd& wbar_sigma, const LiftedProblem& lifted,
                       const CostWeights& weights,
                       const AmbiguityModel& ambiguity);

}  // namespace tsdr
