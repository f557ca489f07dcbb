#include "tsdr/ambiguity.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "tsdr/simplex.hpp"

namespace tsdr {

AmbiguityModel AmbiguityModel::build(double epsilon, const MatrixXd& C, int n,
                                     const LiftedProblem& lifted) {
  if (epsilon < 0) throw std::invalid_argument("ambiguity radius must be >= 0");
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  if (C.rows() != lifted.N * lifted.nc || C.cols() != C.rows())
    throw std::invalid_argument("C must be (N*nc) x (N*nc)");
  AmbiguityModel m;
  m.epsilon = epsilon;
  m.C = C;
  m.n = n;
  m.C_s = lifted.FDbar.transpose() * C * lifted.FDbar;
  m.C_s = 0.5 * (m.C_s + m.C_s.transpose());
  Eigen::LLT<MatrixXd> llt(m.C_s);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(
        "C_s = (F Dbar)' C F Dbar is not positive definite; "
        "the disturbance-to-constraint observability stack is rank deficient");
  return m;
}

double transport_cost(const VectorXd& w, const VectorXd& w_prime,
                      const MatrixXd& C_s) {
  VectorXd d = w - w_prime;
  return 0.5 * d.dot(C_s * d);
}

double output_transport_cost(const VectorXd& xi, const VectorXd& xi_prime,
                             const MatrixXd& C) {
  VectorXd d = xi - xi_prime;
  return 0.5 * d.dot(C * d);
}

namespace {
void eigen_range(const MatrixXd& C_s, double& lmin, double& lmax) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (C_s + C_s.transpose()));
  lmin = es.eigenvalues().minCoeff();
  lmax = es.eigenvalues().maxCoeff();
  if (lmin <= 0) throw std::invalid_argument("C_s must be positive definite");
}
}  // namespace

double gelbrich_mean_bound(double epsilon, const MatrixXd& C_s, int N,
                           double mu_bar) {
  double lmin, lmax;
  eigen_range(C_s, lmin, lmax);
  return (std::sqrt(lmax * N) * mu_bar + 2.0 * std::sqrt(2.0 * epsilon)) /
         std::sqrt(lmin);
}

double gelbrich_trace_bound(double epsilon, const MatrixXd& C_s, int N,
                            const MatrixXd& Sigma_bar) {
  double lmin, lmax;
  eigen_range(C_s, lmin, lmax);
  double root = std::sqrt(lmax * N * Sigma_bar.trace()) +
                2.0 * std::sqrt(2.0 * epsilon);
  return root * root / lmin;
}

double discrete_wasserstein(
    const DiscreteDistribution& P, const DiscreteDistribution& Q,
    const std::function<double(const VectorXd&, const VectorXd&)>& cost_fn) {
  const int np = static_cast<int>(P.support.size());
  const int nq = static_cast<int>(Q.support.size());
  if (P.weights.size() != np || Q.weights.size() != nq)
    throw std::invalid_argument("support/weight size mismatch");
  if (std::abs(P.weights.sum() - 1.0) > 1e-9 ||
      std::abs(Q.weights.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("distribution weights must sum to 1");

  // Transportation LP over the coupling polytope; one marginal row is
  // redundant and dropped.
  const int nvar = np * nq;
  const int nrow = np + nq - 1;
  MatrixXd A = MatrixXd::Zero(nrow, nvar);
  VectorXd b = VectorXd::Zero(nrow);
  VectorXd c = VectorXd::Zero(nvar);
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < nq; ++j) {
      int v = i * nq + j;
      c(v) = cost_fn(P.support[i], Q.support[j]);
      A(i, v) = 1.0;
      if (j < nq - 1) A(np + j, v) = 1.0;
    }
  }
  b.head(np) = P.weights;
  b.segment(np, nq - 1) = Q.weights.head(nq - 1);

  LpResult lp = solve_lp_standard_form(A, b, c);
  if (!lp.optimal)
    throw std::runtime_error("transportation LP did not solve");
  return lp.value;
}

EmpiricalSamples build_empirical(const std::deque<VectorXd>& window, int n,
                                 int N, int nw, std::mt19937_64& rng) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  EmpiricalSamples samples;
  samples.wbar.reserve(n);
  if (window.empty()) {
    for (int s = 0; s < n; ++s) samples.wbar.push_back(VectorXd::Zero(N * nw));
    return samples;
  }
  std::uniform_int_distribution<size_t> pick(0, window.size() - 1);
  for (int s = 0; s < n; ++s) {
    VectorXd w(N * nw);
    for (int i = 0; i < N; ++i) w.segment(i * nw, nw) = window[pick(rng)];
    samples.wbar.push_back(std::move(w));
  }
  return samples;
}

}  // namespace tsdr
