#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>

namespace tsdr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Discrete-time LTI plant x+ = A x + B u + D w.
struct LtiSystem {
  MatrixXd A;
  MatrixXd B;
  MatrixXd D;

  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B.cols()); }
  int nw() const { return static_cast<int>(D.cols()); }

  // Gain of a pre-stabilizing law u = K x + v, when this system is the
  // transformed plant (A <- A + B K). Empty for raw plants.
  std::optional<MatrixXd> prestab_gain;

  void validate() const;
};

/// Spectral-norm bounds of the plant plus the input-sequence diameter.
struct NormBounds {
  double L_A = 0.0;
  double L_B = 0.0;
  double L_D = 0.0;
  double u_u = 0.0;   // diameter of the input box over the horizon
  bool contraction_ok = false;  // L_A < 1
};

/// Horizon-stacked prediction matrices and constraint stacking.
struct LiftedProblem {
  int N = 0;
  int nx = 0, nu = 0, nw = 0, nc = 0;
  MatrixXd Abar;    // (N*nx) x nx
  MatrixXd Bbar;    // (N*nx) x (N*nu), lower block-triangular Toeplitz
  MatrixXd Dbar;    // (N*nx) x (N*nw)
  MatrixXd F;       // (N*nc) x (N*nx), diag(F0,...,F0)
  VectorXd G;       // N*nc
  MatrixXd F0;
  VectorXd G0;
  MatrixXd C_AB;    // nx x (N*nu) = [A^{N-1}B ... B]
  MatrixXd A_pow_N; // nx x nx

  // Cached products used by the recourse/ambiguity machinery.
  MatrixXd B1;      // F*Bbar
  MatrixXd FDbar;   // F*Dbar
  MatrixXd FAbar;   // F*Abar
};

struct RiccatiResult {
  MatrixXd P;
  MatrixXd K;
  double residual = 0.0;
  int iterations = 0;
};

struct CostWeights {
  MatrixXd Q;
  MatrixXd R;
  MatrixXd P;     // terminal weight from the Riccati solution
  MatrixXd Qbar;  // diag(Q,...,Q,P)
  MatrixXd Rbar;  // diag(R,...,R)
};

/// Stack the N-step prediction of x+ = A x + B u + D w and the per-step
/// constraints F0 x + G0 <= 0.
LiftedProblem build_lifted(const LtiSystem& sys, const MatrixXd& F0,
                           const VectorXd& G0, int N);

/// Make the block weights diag(Q,..,Q,P) and diag(R,..,R).
CostWeights make_cost_weights(const MatrixXd& Q, const MatrixXd& R,
                              const MatrixXd& P, int N);

/// Solve A'PA - P + Q - A'PB(R+B'PB)^{-1}B'PA = 0 by fixed-point iteration
/// and return P together with the gain K = -(R+B'PB)^{-1}B'PA.
RiccatiResult solve_riccati(const MatrixXd& A, const MatrixXd& B,
                            const MatrixXd& Q, const MatrixXd& R,
                            double tol = 1e-12, int max_iter = 100000);

/// Substitute u = K x + v: returns the plant with A <- A + B K and records K.
/// Does not require the result to be a spectral-norm contraction; that is
/// checked later by norm_bounds.
LtiSystem prestabilize(const LtiSystem& sys, const MatrixXd& K);

struct ObservabilityResult {
  MatrixXd O_D;  // stack(F0 D, F0 A D, ..., F0 A^{N-1} D)
  int rank = 0;
};

/// Disturbance-to-constraint observability stack and its numerical rank
/// (singular values below 1e-10 * sigma_max are treated as zero).
ObservabilityResult disturbance_observability(const MatrixXd& F0,
                                              const MatrixXd& A,
                                              const MatrixXd& D, int N);

/// True iff [(A+BK)^N]'(A+BK)^N <= l_c I (largest eigenvalue test).
bool check_lc(const MatrixXd& A, const MatrixXd& B, const MatrixXd& K, int N,
              double l_c, double tol = 1e-10);

/// Largest eigenvalue of [(A+BK)^N]'(A+BK)^N; the smallest admissible l_c.
double lc_threshold(const MatrixXd& A, const MatrixXd& B, const MatrixXd& K,
                    int N);

/// Spectral norms of (A, B, D) and the input-box diameter over U^N.
NormBounds norm_bounds(const LtiSystem& sys, const VectorXd& u_min,
                       const VectorXd& u_max, int N);

}  // namespace tsdr
