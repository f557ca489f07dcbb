#include "tsdr/reformulation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "tsdr/penalty.hpp"

namespace tsdr {

double gamma_lower_bound(const LiftedProblem& lifted, const CostWeights& weights,
                         const MatrixXd& C_s) {
  MatrixXd M = 2.0 * lifted.Dbar.transpose() * weights.Qbar * lifted.Dbar;
  M = 0.5 * (M + M.transpose());
  // lambda_max(C_s^{-1/2} M C_s^{-1/2}) via the generalized eigenproblem.
  Eigen::LLT<MatrixXd> llt(0.5 * (C_s + C_s.transpose()));
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("C_s must be positive definite");
  MatrixXd L = llt.matrixL();
  MatrixXd W = L.triangularView<Eigen::Lower>().solve(M);
  W = L.triangularView<Eigen::Lower>().solve(W.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (W + W.transpose()));
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

double first_stage_cost(const VectorXd& ubar, double gamma, const VectorXd& x,
                        const LiftedProblem& lifted, const CostWeights& weights,
                        double epsilon) {
  MatrixXd H = lifted.Bbar.transpose() * weights.Qbar * lifted.Bbar + weights.Rbar;
  VectorXd lin = lifted.Bbar.transpose() * weights.Qbar * (lifted.Abar * x);
  return ubar.dot(H * ubar) + 2.0 * lin.dot(ubar) + epsilon * gamma;
}

double cost_constant(const VectorXd& x, const LiftedProblem& lifted,
                     const CostWeights& weights) {
  VectorXd Ax = lifted.Abar * x;
  return Ax.dot(weights.Qbar * Ax) + x.dot(weights.Q * x);
}

InnerEvaluation inner_matrices(const VectorXd& ubar, double gamma,
                               const VectorXd& x, const VectorXd& wbar_sigma,
                               const VectorXd& pi, const LiftedProblem& lifted,
                               const CostWeights& weights,
                               const AmbiguityModel& ambiguity) {
  double gamma_low = gamma_lower_bound(lifted, weights, ambiguity.C_s);
  if (gamma <= gamma_low * (1.0 + 1e-6) + 1e-300) {
    std::ostringstream msg;
    msg << "gamma " << gamma << " too close to lower bound " << gamma_low
        << "; inner maximization unbounded";
    throw std::domain_error(msg.str());
  }
  InnerEvaluation ev;
  ev.C0 = 2.0 * lifted.Dbar.transpose() * weights.Qbar *
              (lifted.Abar * x + lifted.Bbar * ubar) +
          gamma * ambiguity.C_s * wbar_sigma;
  ev.C1 = gamma * ambiguity.C_s -
          2.0 * lifted.Dbar.transpose() * weights.Qbar * lifted.Dbar;
  ev.C1 = 0.5 * (ev.C1 + ev.C1.transpose());
  ev.C2 = ev.C0 + lifted.FDbar.transpose() * pi;
  Eigen::LLT<MatrixXd> llt(ev.C1);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("C1 is not positive definite");
  ev.w_star = llt.solve(ev.C2);
  return ev;
}

double inner_objective(const VectorXd& w, const VectorXd& pi,
                       const VectorXd& ubar, double gamma, const VectorXd& x,
                       const VectorXd& wbar_sigma, const LiftedProblem& lifted,
                       const CostWeights& weights,
                       const AmbiguityModel& ambiguity) {
  VectorXd d = w - wbar_sigma;
  double val = -0.5 * gamma * d.dot(ambiguity.C_s * d);
  VectorXd Dw = lifted.Dbar * w;
  val += Dw.dot(weights.Qbar * Dw);
  val += 2.0 * (lifted.Abar * x + lifted.Bbar * ubar).dot(weights.Qbar * Dw);
  val += pi.dot(recourse_slack(lifted, ubar, x, w));
  return val;
}

InnerResult eval_V(const VectorXd& ubar, double gamma,
                   const VectorXd& wbar_sigma, const VectorXd& x,
                   const LiftedProblem& lifted, const CostWeights& weights,
                   const AmbiguityModel& ambiguity, const VectorXd& h,
                   int max_iter) {
  // Coordinate ascent can stall on the wrong face of the dual box, so run it
  // from several starting vertices and keep the best admissible pair: the
  // vertex at the sample's own slack, the zero vertex, and the full vertex h.
  std::vector<VectorXd> starts;
  starts.push_back(dual_vertex(h, recourse_slack(lifted, ubar, x, wbar_sigma)));
  starts.push_back(VectorXd::Zero(h.size()));
  starts.push_back(h);

  InnerResult best;
  best.value = -std::numeric_limits<double>::infinity();
  int total_iters = 0;
  for (size_t s = 0; s < starts.size(); ++s) {
    bool seen = false;
    for (size_t t = 0; t < s; ++t)
      if ((starts[t] - starts[s]).lpNorm<Eigen::Infinity>() == 0.0) seen = true;
    if (seen) continue;

    VectorXd pi = starts[s];
    double prev = -std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
      InnerEvaluation ev = inner_matrices(ubar, gamma, x, wbar_sigma, pi,
                                          lifted, weights, ambiguity);
      double val = inner_objective(ev.w_star, pi, ubar, gamma, x, wbar_sigma,
                                   lifted, weights, ambiguity);
      ++total_iters;
      if (val > best.value) {
        best.value = val;
        best.pi_hat = pi;
        best.w_star = ev.w_star;
        best.xi_hat = lifted.FDbar * ev.w_star + lifted.FAbar * x + lifted.G;
      }
      VectorXd pi_next =
          dual_vertex(h, recourse_slack(lifted, ubar, x, ev.w_star));
      if ((pi_next - pi).lpNorm<Eigen::Infinity>() == 0.0 ||
          val <= prev + 1e-12) {  // fixed point up to roundoff
        converged = true;
        break;
      }
      prev = val;
      pi = pi_next;
    }
    if (!converged)
      throw std::runtime_error("inner coordinate ascent hit the iteration cap");
  }
  best.ascent_iterations = total_iters;
  return best;
}

}  // namespace tsdr
