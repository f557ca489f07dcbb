#pragma once

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <random>
#include <vector>

#include "tsdr/system_model.hpp"

namespace tsdr {

/// Wasserstein ambiguity-set configuration. C weighs the constraint-output
/// space; C_s = (F Dbar)' C F Dbar is the induced disturbance-space weight
/// and must be positive definite (Cholesky-checked at construction).
struct AmbiguityModel {
  double epsilon = 0.0;
  MatrixXd C;    // (N*nc) x (N*nc)
  MatrixXd C_s;  // (N*nw) x (N*nw)
  int n = 0;     // sample count

  static AmbiguityModel build(double epsilon, const MatrixXd& C, int n,
                              const LiftedProblem& lifted);
};

struct EmpiricalSamples {
  std::vector<VectorXd> wbar;  // n stacked disturbance sequences (N*nw each)
};

struct MomentBounds {
  double mu_bar = 0.0;
  MatrixXd Sigma_bar;  // nw x nw
};

struct WorstCaseMomentBounds {
  double mean_bound = 0.0;
  double trace_bound = 0.0;
};

/// c(w, w') = 1/2 (w-w')' C_s (w-w').
double transport_cost(const VectorXd& w, const VectorXd& w_prime,
                      const MatrixXd& C_s);

/// c_xi(xi, xi') = 1/2 (xi-xi')' C (xi-xi').
double output_transport_cost(const VectorXd& xi, const VectorXd& xi_prime,
                             const MatrixXd& C);

/// Worst-case mean bound
/// (1/sqrt(lambda_min(C_s))) (sqrt(lambda_max(C_s) N) mu_bar + 2 sqrt(2 eps)).
double gelbrich_mean_bound(double epsilon, const MatrixXd& C_s, int N,
                           double mu_bar);

/// Worst-case trace bound
/// (1/lambda_min(C_s)) (sqrt(lambda_max(C_s) N tr(Sigma_bar)) + 2 sqrt(2 eps))^2.
double gelbrich_trace_bound(double epsilon, const MatrixXd& C_s, int N,
                            const MatrixXd& Sigma_bar);

struct DiscreteDistribution {
  std::vector<VectorXd> support;
  VectorXd weights;  // nonnegative, sums to 1
};

/// Exact optimal-transport value between two finite-support distributions
/// under the given ground cost (transportation LP).
double discrete_wasserstein(
    const DiscreteDistribution& P, const DiscreteDistribution& Q,
    const std::function<double(const VectorXd&, const VectorXd&)>& cost_fn);

/// Bootstrap n stacked samples of length N*nw by drawing with replacement
/// from the observed disturbance window; an empty window yields zeros.
EmpiricalSamples build_empirical(const std::deque<VectorXd>& window, int n,
                                 int N, int nw, std::mt19937_64& rng);

}  // namespace tsdr
