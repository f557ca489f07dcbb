#include <random>

#include "doctest.h"
#include "tsdr/system_model.hpp"

using namespace tsdr;

namespace {

LtiSystem double_integrator() {
  LtiSystem sys;
  sys.A = MatrixXd{{1.0, 1.0}, {0.0, 1.0}};
  sys.B = MatrixXd{{0.5}, {1.0}};
  sys.D = MatrixXd::Identity(2, 2);
  return sys;
}

MatrixXd random_matrix(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = dist(rng);
  return m;
}

}  // namespace

TEST_CASE("lifting: N=1 reduces to the plain plant matrices") {
  LtiSystem sys = double_integrator();
  MatrixXd F0 = MatrixXd::Identity(3, 2).topRows(3);
  VectorXd G0 = VectorXd::Constant(3, -1.0);
  LiftedProblem lp = build_lifted(sys, F0, G0, 1);
  CHECK((lp.Abar - sys.A).norm() == doctest::Approx(0.0));
  CHECK((lp.Bbar - sys.B).norm() == doctest::Approx(0.0));
  CHECK((lp.Dbar - sys.D).norm() == doctest::Approx(0.0));
  CHECK((lp.F - F0).norm() == doctest::Approx(0.0));
  CHECK((lp.G - G0).norm() == doctest::Approx(0.0));
}

TEST_CASE("lifting: benchmark N=3 bottom-left input block is A^2 B") {
  LtiSystem sys = double_integrator();
  MatrixXd F0 = MatrixXd::Zero(1, 2);
  F0(0, 0) = 1.0;
  VectorXd G0 = VectorXd::Zero(1);
  LiftedProblem lp = build_lifted(sys, F0, G0, 3);
  MatrixXd block = lp.Bbar.block(4, 0, 2, 1);
  CHECK(block(0, 0) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(block(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lifting: stacked prediction equals the step recursion") {
  std::mt19937_64 rng(7);
  const int N = 4, nx = 3, nu = 2, nw = 2;
  LtiSystem sys;
  sys.A = 0.3 * random_matrix(nx, nx, rng);
  sys.B = random_matrix(nx, nu, rng);
  sys.D = random_matrix(nx, nw, rng);
  MatrixXd F0 = random_matrix(2, nx, rng);
  VectorXd G0 = random_matrix(2, 1, rng);
  LiftedProblem lp = build_lifted(sys, F0, G0, N);
  for (int trial = 0; trial < 200; ++trial) {
    VectorXd x = random_matrix(nx, 1, rng);
    VectorXd ubar = random_matrix(N * nu, 1, rng);
    VectorXd wbar = random_matrix(N * nw, 1, rng);
    VectorXd xbar = lp.Abar * x + lp.Bbar * ubar + lp.Dbar * wbar;
    VectorXd xi = x;
    for (int i = 0; i < N; ++i) {
      xi = sys.A * xi + sys.B * ubar.segment(i * nu, nu) +
           sys.D * wbar.segment(i * nw, nw);
      CHECK((xbar.segment(i * nx, nx) - xi).lpNorm<Eigen::Infinity>() <
            1e-12);
    }
    // Constraint stack matches F0 applied per predicted state.
    VectorXd cons = lp.F * xbar + lp.G;
    for (int i = 0; i < N; ++i) {
      VectorXd expect = F0 * xbar.segment(i * nx, nx) + G0;
      CHECK((cons.segment(i * 2, 2) - expect).lpNorm<Eigen::Infinity>() <
            1e-12);
    }
  }
  // Terminal map: z_N = A^N x + C_AB ubar (nominal).
  VectorXd x = random_matrix(nx, 1, rng);
  VectorXd ubar = random_matrix(N * nu, 1, rng);
  VectorXd zN = lp.A_pow_N * x + lp.C_AB * ubar;
  VectorXd xi = x;
  for (int i = 0; i < N; ++i) xi = sys.A * xi + sys.B * ubar.segment(i * nu, nu);
  CHECK((zN - xi).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("riccati: benchmark values") {
  LtiSystem sys = double_integrator();
  MatrixXd Q = MatrixXd::Identity(2, 2);
  MatrixXd R = MatrixXd::Constant(1, 1, 0.1);
  RiccatiResult rr = solve_riccati(sys.A, sys.B, Q, R);
  MatrixXd P_ref{{2.0599, 0.5916}, {0.5916, 1.4228}};
  MatrixXd K_ref{{-0.6167, -1.2703}};
  CHECK((rr.P - P_ref).lpNorm<Eigen::Infinity>() < 5e-4);
  CHECK((rr.K - K_ref).lpNorm<Eigen::Infinity>() < 5e-4);
  // Residual of the fixed-point equation.
  MatrixXd res = sys.A.transpose() * rr.P * sys.A - rr.P + Q -
                 sys.A.transpose() * rr.P * sys.B *
                     (R + sys.B.transpose() * rr.P * sys.B).inverse() *
                     sys.B.transpose() * rr.P * sys.A;
  CHECK(res.lpNorm<Eigen::Infinity>() < 1e-9);
  Eigen::EigenSolver<MatrixXd> es(sys.A + sys.B * rr.K);
  CHECK(es.eigenvalues().cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("riccati: A=0 collapses to P=Q, K=0") {
  MatrixXd A = MatrixXd::Zero(2, 2), B = MatrixXd::Identity(2, 2);
  MatrixXd Q = MatrixXd::Identity(2, 2), R = MatrixXd::Identity(2, 2);
  RiccatiResult rr = solve_riccati(A, B, Q, R);
  CHECK((rr.P - Q).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK(rr.K.lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("riccati: scalar solution matches the quadratic root") {
  // a^2 p - p + q - a^2 b^2 p^2 / (r + b^2 p) = 0 rearranges to
  // b^2 p^2 + (r - a^2 r - b^2 q) p - q r = 0 (taking the positive root).
  const double a = 0.8, b = 1.3, q = 2.0, r = 0.7;
  const double A2 = b * b;
  const double B2 = r - a * a * r - b * b * q;
  const double C2 = -q * r;
  const double p_ref = (-B2 + std::sqrt(B2 * B2 - 4 * A2 * C2)) / (2 * A2);
  RiccatiResult rr = solve_riccati(MatrixXd::Constant(1, 1, a),
                                   MatrixXd::Constant(1, 1, b),
                                   MatrixXd::Constant(1, 1, q),
                                   MatrixXd::Constant(1, 1, r));
  CHECK(rr.P(0, 0) == doctest::Approx(p_ref).epsilon(1e-10));
}

TEST_CASE("prestabilize: K=0 is the identity transform") {
  LtiSystem sys = double_integrator();
  LtiSystem ps = prestabilize(sys, MatrixXd::Zero(1, 2));
  CHECK((ps.A - sys.A).norm() == doctest::Approx(0.0));
  CHECK((ps.B - sys.B).norm() == doctest::Approx(0.0));
  REQUIRE(ps.prestab_gain.has_value());
}

TEST_CASE("prestabilize: benchmark closed-loop matrix and step identity") {
  LtiSystem sys = double_integrator();
  MatrixXd K{{-0.6167, -1.2703}};
  LtiSystem ps = prestabilize(sys, K);
  MatrixXd A_K_ref{{0.69165, 0.36485}, {-0.6167, -0.2703}};
  CHECK((ps.A - A_K_ref).lpNorm<Eigen::Infinity>() < 1e-12);
  // x+ under (A_K, v) equals x+ under (A, Kx+v).
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    VectorXd x = random_matrix(2, 1, rng), v = random_matrix(1, 1, rng);
    VectorXd w = random_matrix(2, 1, rng);
    VectorXd lhs = ps.A * x + ps.B * v + ps.D * w;
    VectorXd rhs = sys.A * x + sys.B * (K * x + v) + sys.D * w;
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("observability stack: rank cases") {
  LtiSystem sys = double_integrator();
  MatrixXd F0{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  ObservabilityResult od = disturbance_observability(F0, sys.A, sys.D, 3);
  CHECK(od.rank == 2);
  CHECK(od.O_D.rows() == 12);

  CHECK(disturbance_observability(MatrixXd::Zero(4, 2), sys.A, sys.D, 3)
            .rank == 0);

  MatrixXd F0s = MatrixXd::Constant(1, 1, 2.0);
  MatrixXd A1 = MatrixXd::Constant(1, 1, 0.5);
  MatrixXd D1 = MatrixXd::Constant(1, 1, 1.0);
  CHECK(disturbance_observability(F0s, A1, D1, 1).rank == 1);

  // Rank is invariant under row permutations of F0.
  MatrixXd F0p(4, 2);
  F0p << F0.row(3), F0.row(1), F0.row(0), F0.row(2);
  CHECK(disturbance_observability(F0p, sys.A, sys.D, 3).rank == 2);
}

TEST_CASE("terminal parameter gate") {
  LtiSystem sys = double_integrator();
  // Zero closed loop admits any nonnegative l_c.
  MatrixXd Kz = MatrixXd::Zero(2, 2);
  CHECK(check_lc(MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2), Kz, 3, 0.0));

  MatrixXd Q = MatrixXd::Identity(2, 2), R = MatrixXd::Constant(1, 1, 0.1);
  RiccatiResult rr = solve_riccati(sys.A, sys.B, Q, R);
  CHECK(check_lc(sys.A, sys.B, rr.K, 3, 2.0));
  double thr = lc_threshold(sys.A, sys.B, rr.K, 3);
  CHECK(thr < 2.0);
  CHECK_FALSE(check_lc(sys.A, sys.B, rr.K, 3, thr - 1e-6));

  // Scalar: a_K = 0.5, N=2 gives 0.5^4 = 0.0625 > 0.06.
  MatrixXd a = MatrixXd::Constant(1, 1, 0.5), b = MatrixXd::Zero(1, 1);
  CHECK_FALSE(check_lc(a, b, MatrixXd::Zero(1, 1), 2, 0.06));
  CHECK(check_lc(a, b, MatrixXd::Zero(1, 1), 2, 0.0625));
  // Monotone in l_c.
  CHECK(check_lc(a, b, MatrixXd::Zero(1, 1), 2, 0.07));
}

TEST_CASE("norm bounds") {
  LtiSystem half;
  half.A = 0.5 * MatrixXd::Identity(2, 2);
  half.B = MatrixXd::Identity(2, 2);
  half.D = MatrixXd::Identity(2, 2);
  VectorXd lo = VectorXd::Constant(2, -1.0), hi = VectorXd::Constant(2, 1.0);
  NormBounds nb = norm_bounds(half, lo, hi, 3);
  CHECK(nb.L_A == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(nb.contraction_ok);

  LtiSystem sys = double_integrator();
  VectorXd lo1 = VectorXd::Constant(1, -1.0), hi1 = VectorXd::Constant(1, 1.0);
  NormBounds nb1 = norm_bounds(sys, lo1, hi1, 3);
  CHECK(nb1.u_u == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-12));

  // The benchmark pre-stabilized matrix is Schur stable but its spectral
  // norm sits slightly above one; the flag records that honestly.
  MatrixXd Q = MatrixXd::Identity(2, 2), R = MatrixXd::Constant(1, 1, 0.1);
  RiccatiResult rr = solve_riccati(sys.A, sys.B, Q, R);
  LtiSystem ps = prestabilize(sys, rr.K);
  NormBounds nbk = norm_bounds(ps, lo1, hi1, 3);
  CHECK(nbk.L_A == doctest::Approx(1.0313).epsilon(1e-3));
  CHECK_FALSE(nbk.contraction_ok);
  Eigen::EigenSolver<MatrixXd> es(ps.A);
  CHECK(es.eigenvalues().cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("fixed-gain descent and finite-horizon cost bound") {
  LtiSystem sys = double_integrator();
  MatrixXd Q = MatrixXd::Identity(2, 2), R = MatrixXd::Constant(1, 1, 0.1);
  RiccatiResult rr = solve_riccati(sys.A, sys.B, Q, R);
  MatrixXd A_K = sys.A + sys.B * rr.K;
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    VectorXd z = random_matrix(2, 1, rng);
    double vf = z.dot(rr.P * z);
    VectorXd zn = A_K * z;
    VectorXd u = rr.K * z;
    double stage = z.dot(Q * z) + u.dot(R * u);
    CHECK(zn.dot(rr.P * zn) <= vf - stage + 1e-9);
    // Telescoping over N steps stays below the initial value function.
    double total = 0.0;
    VectorXd zi = z;
    for (int i = 0; i < 3; ++i) {
      VectorXd ui = rr.K * zi;
      total += zi.dot(Q * zi) + ui.dot(R * ui);
      zi = A_K * zi;
    }
    CHECK(total + zi.dot(rr.P * zi) <= vf + 1e-9);
  }
}
