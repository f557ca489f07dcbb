#include "tsdr/system_model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

namespace tsdr {

namespace {

double spectral_norm(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  return M.jacobiSvd().singularValues()(0);
}

MatrixXd matrix_power(const MatrixXd& M, int p) {
  MatrixXd out = MatrixXd::Identity(M.rows(), M.cols());
  for (int i = 0; i < p; ++i) out = out * M;
  return out;
}

}  // namespace

void LtiSystem::validate() const {
  if (A.rows() != A.cols()) throw std::invalid_argument("A must be square");
  if (B.rows() != A.rows()) throw std::invalid_argument("B row mismatch");
  if (D.rows() != A.rows()) throw std::invalid_argument("D row mismatch");
  if (!A.allFinite() || !B.allFinite() || !D.allFinite())
    throw std::invalid_argument("plant matrices must be finite");
}

LiftedProblem build_lifted(const LtiSystem& sys, const MatrixXd& F0,
                           const VectorXd& G0, int N) {
  sys.validate();
  if (N < 1) throw std::invalid_argument("horizon must be >= 1");
  if (F0.cols() != sys.nx())
    throw std::invalid_argument("F0 column count must equal nx");
  if (G0.size() != F0.rows())
    throw std::invalid_argument("G0 length must equal F0 row count");

  const int nx = sys.nx(), nu = sys.nu(), nw = sys.nw();
  const int nc = static_cast<int>(F0.rows());

  LiftedProblem lp;
  lp.N = N;
  lp.nx = nx;
  lp.nu = nu;
  lp.nw = nw;
  lp.nc = nc;
  lp.F0 = F0;
  lp.G0 = G0;

  lp.Abar = MatrixXd::Zero(N * nx, nx);
  lp.Bbar = MatrixXd::Zero(N * nx, N * nu);
  lp.Dbar = MatrixXd::Zero(N * nx, N * nw);

  // Powers of A; Apow[i] = A^i.
  std::vector<MatrixXd> Apow(N + 1);
  Apow[0] = MatrixXd::Identity(nx, nx);
  for (int i = 1; i <= N; ++i) Apow[i] = sys.A * Apow[i - 1];

  for (int i = 0; i < N; ++i) {
    lp.Abar.middleRows(i * nx, nx) = Apow[i + 1];
    for (int j = 0; j <= i; ++j) {
      lp.Bbar.block(i * nx, j * nu, nx, nu) = Apow[i - j] * sys.B;
      lp.Dbar.block(i * nx, j * nw, nx, nw) = Apow[i - j] * sys.D;
    }
  }

  lp.F = MatrixXd::Zero(N * nc, N * nx);
  lp.G = VectorXd::Zero(N * nc);
  for (int i = 0; i < N; ++i) {
    lp.F.block(i * nc, i * nx, nc, nx) = F0;
    lp.G.segment(i * nc, nc) = G0;
  }

  lp.C_AB = MatrixXd::Zero(nx, N * nu);
  for (int j = 0; j < N; ++j)
    lp.C_AB.middleCols(j * nu, nu) = Apow[N - 1 - j] * sys.B;
  lp.A_pow_N = Apow[N];

  lp.B1 = lp.F * lp.Bbar;
  lp.FDbar = lp.F * lp.Dbar;
  lp.FAbar = lp.F * lp.Abar;
  return lp;
}

CostWeights make_cost_weights(const MatrixXd& Q, const MatrixXd& R,
                              const MatrixXd& P, int N) {
  const int nx = static_cast<int>(Q.rows());
  const int nu = static_cast<int>(R.rows());
  CostWeights w;
  w.Q = Q;
  w.R = R;
  w.P = P;
  w.Qbar = MatrixXd::Zero(N * nx, N * nx);
  w.Rbar = MatrixXd::Zero(N * nu, N * nu);
  for (int i = 0; i < N; ++i) {
    w.Qbar.block(i * nx, i * nx, nx, nx) = (i == N - 1) ? P : Q;
    w.Rbar.block(i * nu, i * nu, nu, nu) = R;
  }
  return w;
}

RiccatiResult solve_riccati(const MatrixXd& A, const MatrixXd& B,
                            const MatrixXd& Q, const MatrixXd& R, double tol,
                            int max_iter) {
  const int nx = static_cast<int>(A.rows());
  MatrixXd P = Q;
  double residual = 0.0;
  int it = 0;
  for (; it < max_iter; ++it) {
    MatrixXd BtPB = B.transpose() * P * B;
    MatrixXd gain = (R + BtPB).ldlt().solve(B.transpose() * P * A);
    MatrixXd Pn = A.transpose() * P * A + Q - A.transpose() * P * B * gain;
    Pn = 0.5 * (Pn + Pn.transpose());
    residual = (Pn - P).cwiseAbs().maxCoeff();
    P = Pn;
    if (residual < tol) break;
  }
  MatrixXd BtPB = B.transpose() * P * B;
  MatrixXd K = -(R + BtPB).ldlt().solve(B.transpose() * P * A);

  // Residual of the stated equation form.
  MatrixXd res = A.transpose() * P * A - P + Q +
                 A.transpose() * P * B * K;
  double eq_residual = res.cwiseAbs().maxCoeff();
  if (eq_residual > 1e-9) {
    std::ostringstream msg;
    msg << "Riccati iteration did not converge, residual " << eq_residual;
    throw std::runtime_error(msg.str());
  }
  double rho = (A + B * K).eigenvalues().cwiseAbs().maxCoeff();
  if (rho >= 1.0)
    throw std::runtime_error("Riccati gain does not stabilize the plant");
  (void)nx;
  return RiccatiResult{P, K, eq_residual, it + 1};
}

LtiSystem prestabilize(const LtiSystem& sys, const MatrixXd& K) {
  if (K.rows() != sys.nu() || K.cols() != sys.nx())
    throw std::invalid_argument("gain dimension mismatch");
  LtiSystem out = sys;
  out.A = sys.A + sys.B * K;
  out.prestab_gain = K;
  return out;
}

ObservabilityResult disturbance_observability(const MatrixXd& F0,
                                              const MatrixXd& A,
                                              const MatrixXd& D, int N) {
  const int nc = static_cast<int>(F0.rows());
  const int nw = static_cast<int>(D.cols());
  ObservabilityResult res;
  res.O_D = MatrixXd::Zero(N * nc, nw);
  MatrixXd Apow = MatrixXd::Identity(A.rows(), A.cols());
  for (int i = 0; i < N; ++i) {
    res.O_D.middleRows(i * nc, nc) = F0 * Apow * D;
    Apow = A * Apow;
  }
  Eigen::JacobiSVD<MatrixXd> svd(res.O_D);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) {
    res.rank = 0;
    return res;
  }
  double thresh = 1e-10 * sv(0);
  res.rank = static_cast<int>((sv.array() > thresh).count());
  return res;
}

double lc_threshold(const MatrixXd& A, const MatrixXd& B, const MatrixXd& K,
                    int N) {
  MatrixXd AK = A + B * K;
  MatrixXd AKN = matrix_power(AK, N);
  MatrixXd M = AKN.transpose() * AKN;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (M + M.transpose()));
  return es.eigenvalues().maxCoeff();
}

bool check_lc(const MatrixXd& A, const MatrixXd& B, const MatrixXd& K, int N,
              double l_c, double tol) {
  return lc_threshold(A, B, K, N) <= l_c + tol;
}

NormBounds norm_bounds(const LtiSystem& sys, const VectorXd& u_min,
                       const VectorXd& u_max, int N) {
  NormBounds nb;
  nb.L_A = spectral_norm(sys.A);
  nb.L_B = spectral_norm(sys.B);
  nb.L_D = spectral_norm(sys.D);
  nb.u_u = std::sqrt(static_cast<double>(N)) * (u_max - u_min).norm();
  nb.contraction_ok = nb.L_A < 1.0;
  return nb;
}

}  // namespace tsdr
