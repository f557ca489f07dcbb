#include <cmath>

#include "doctest.h"
#include "tsdr/analysis.hpp"
#include "tsdr/config.hpp"

using namespace tsdr;

namespace {

const ControllerContext& benchmark_context() {
  static ControllerContext ctx = paper_sv_config().make_context();
  return ctx;
}

}  // namespace

TEST_CASE("horizon-aggregation constants match direct loop summation") {
  const ControllerContext& ctx = benchmark_context();
  StabilityConstants c = compute_constants(ctx, 0.01);
  const double LA = c.L_A;
  const int N = c.N;
  REQUIRE(N == 3);

  double s1 = 0.0;
  for (int j = 0; j <= N - 2; ++j) s1 += std::pow(LA, j);
  CHECK(c.cA1 == doctest::Approx(std::sqrt(s1)).epsilon(1e-10));

  double s2 = 0.0;
  for (int i = 0; i <= N - 2; ++i) s2 += std::pow(LA, 2 * i);
  CHECK(c.cA2 == doctest::Approx(std::sqrt(s2)).epsilon(1e-10));

  double s3 = 0.0;
  for (int i = 0; i <= N - 2; ++i) {
    double t = (1.0 - std::pow(LA, i)) / (1.0 - LA);
    s3 += t * t;
  }
  CHECK(c.cA3 == doctest::Approx(std::sqrt(s3)).epsilon(1e-10));

  double s4 = 0.0;
  for (int i = 1; i <= N; ++i) s4 += std::pow(LA, 2 * i);
  CHECK(c.cA4 == doctest::Approx(std::sqrt(s4)).epsilon(1e-10));

  double s5 = 0.0;
  for (int i = 1; i <= N; ++i)
    for (int j = 0; j <= i - 1; ++j) s5 += std::pow(LA, 2 * j);
  CHECK(c.cA5 == doctest::Approx(std::sqrt(s5)).epsilon(1e-10));

  double sC = 0.0;
  for (int i = 1; i <= N; ++i) sC += std::pow(LA, 2 * i);
  CHECK(c.Cw2 ==
        doctest::Approx(c.lambda_max_F0 * c.L_D * c.L_D * sC).epsilon(1e-10));
  CHECK(c.Cw1 == doctest::Approx(c.lambda_max_F0 * c.L_D * c.L_D * c.cA5 *
                                 c.cA5)
                     .epsilon(1e-10));
}

TEST_CASE("drift coefficients match their defining expressions") {
  const ControllerContext& ctx = benchmark_context();
  const double eps_drift = 0.01;
  StabilityConstants c = compute_constants(ctx, eps_drift);
  const double lP = c.lambda_max_P, lQmin = c.lambda_min_Q;
  const double lQ = c.lambda_max_Q, LD = c.L_D, LA = c.L_A, LB = c.L_B;
  const double A1 = c.cA1, A2 = c.cA2, A3 = c.cA3, A4 = c.cA4, A5 = c.cA5;
  const double lc = ctx.l_c;
  const double LAN1 = std::pow(LA, c.N - 1);

  CHECK(c.eps_c1 == 1.0);
  CHECK(c.eps_c2 == eps_drift);
  CHECK(c.k0 == doctest::Approx(0.25 * lQmin).epsilon(1e-12));

  double k1 = 12 * lc * lP * lP / lQmin * LD * LD * LAN1 * LAN1 +
              lP * LD * LD * LAN1 * LAN1 +
              lP * LD * LD * LAN1 * (1 + A1 * A1) + 2 * lQ * LD * LD * A2 * A2;
  CHECK(c.k1 == doctest::Approx(k1).epsilon(1e-10));

  double k2 = 12 * lc * lP * lP / lQmin * LD * LD * (A1 * A1 + 1) *
                  (A1 * A1 + 1) +
              2 * lQ * LD * LD * A3 * A3 +
              lP * LD * LD * (1 + 2 * A1 + A1 * A1 * A1 * A1) +
              lP * LD * LD * LAN1 * (1 + A1 * A1) +
              c.Cw1 / (4 * c.eps_c2);
  CHECK(c.k2 == doctest::Approx(k2).epsilon(1e-10));

  double k31 = lP * lQmin * LD * A4 * c.u_u * LB * A5;
  CHECK(c.k31 == doctest::Approx(k31).epsilon(1e-10));

  double k32 = lP * LD * LD * A5 * A5 + c.Cw1 / (4 * c.eps_c1) +
               12 * lP * lP / lQmin * LD * LD * A4 * A4 * A4 * A4;
  CHECK(c.k32 == doctest::Approx(k32).epsilon(1e-10));

  double k4 = lQ * LD * LD * A3 * A3 + lP * LD * LD * A2 * A2 +
              c.Cw1 / (4 * c.eps_c2) + lP * LD * LD * (1 + 2 * A1);
  CHECK(c.k4 == doctest::Approx(k4).epsilon(1e-10));

  double k5 = lP * LD * LD * A5 * A5 + c.Cw1 / (4 * c.eps_c1);
  CHECK(c.k5 == doctest::Approx(k5).epsilon(1e-10));

  // Control-deviation constant by direct loop.
  double c1 = 0.0;
  for (int i = 0; i <= c.N - 1; ++i) {
    double inner = 0.0;
    for (int j = 1; j <= i; ++j) inner += std::pow(LA, i - j) * LB * c.u_u;
    c1 += 2 * (lQ * inner * inner + c.lambda_max_R * c.u_u * c.u_u);
  }
  double innerN = 0.0;
  for (int j = 1; j <= c.N; ++j) innerN += std::pow(LA, c.N - j) * LB * c.u_u;
  c1 += 2 * lP * innerN * innerN;
  CHECK(c.c1 == doctest::Approx(c1).epsilon(1e-10));
  CHECK(c.c1 > 0.0);

  double hnorm2 = ctx.h.squaredNorm();
  CHECK(c.c2 == doctest::Approx(c.c1 + 4 * hnorm2 +
                                0.25 * c.L_B1 * c.L_B1 * c.u_u * c.u_u)
                    .epsilon(1e-10));
  CHECK(c.c_l == doctest::Approx(2 * lP / lQmin).epsilon(1e-12));
  CHECK(c.c_sN == doctest::Approx(std::sqrt(c.lambda_max_Cs * c.N /
                                            c.lambda_min_Cs))
                      .epsilon(1e-12));
}

TEST_CASE("constants require a contraction") {
  LtiSystem sys;
  sys.A = MatrixXd::Identity(2, 2);
  sys.B = MatrixXd::Identity(2, 2);
  sys.D = MatrixXd::Identity(2, 2);
  ControllerContext ctx = benchmark_context();
  ctx.bounds.L_A = 1.0;
  CHECK_THROWS_AS(compute_constants(ctx, 0.01), std::invalid_argument);
}

TEST_CASE("performance bound: degeneracy and monotonicity") {
  StabilityConstants c = compute_constants(benchmark_context(), 0.01);

  PerformanceBound zero = theorem3_bound(c, 0.0, 0.0, 0.0);
  CHECK(zero.total == 0.0);
  CHECK(zero.sigma1 == 0.0);
  CHECK(zero.sigma2 == 0.0);
  CHECK(zero.sigma3 == 0.0);

  // Radius and mean at zero leaves only the covariance envelope.
  PerformanceBound cov_only = theorem3_bound(c, 0.0, 0.0, 0.02);
  CHECK(cov_only.sigma1 == 0.0);
  CHECK(cov_only.sigma2 == 0.0);
  CHECK(cov_only.sigma3 > 0.0);
  CHECK(cov_only.total == doctest::Approx(cov_only.sigma3).epsilon(1e-12));

  double prev = -1.0;
  for (double e : {0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    double b = theorem3_bound(c, e, 0.1, 0.01).total;
    CHECK(b > prev);
    prev = b;
  }
  prev = -1.0;
  for (double mu : {0.0, 0.01, 0.1, 0.5, 1.0}) {
    double b = theorem3_bound(c, 0.01, mu, 0.01).total;
    CHECK(b > prev);
    prev = b;
  }
  prev = -1.0;
  for (double tr : {0.0, 1e-3, 1e-2, 1e-1, 1.0}) {
    double b = theorem3_bound(c, 0.01, 0.1, tr).total;
    CHECK(b > prev);
    prev = b;
  }
}

TEST_CASE("cost helpers: direct quadratic identity") {
  const ControllerContext& ctx = benchmark_context();
  VectorXd x(2), ubar(3), wbar(6);
  x << 1.0, -0.5;
  ubar << 0.2, -0.1, 0.05;
  wbar << 0.1, -0.2, 0.0, 0.05, -0.05, 0.1;
  VectorXd xbar = ctx.lifted.Abar * x + ctx.lifted.Bbar * ubar +
                  ctx.lifted.Dbar * wbar;
  double ref = x.dot(ctx.weights.Q * x) + xbar.dot(ctx.weights.Qbar * xbar) +
               ubar.dot(ctx.weights.Rbar * ubar);
  CHECK(quadratic_cost(ctx, x, ubar, wbar) ==
        doctest::Approx(ref).epsilon(1e-12));

  // g1 is the disturbance-coupled remainder of the quadratic expansion.
  double vq0 = quadratic_cost(ctx, x, ubar, VectorXd::Zero(6));
  double dterm = (ctx.lifted.Dbar * wbar)
                     .dot(ctx.weights.Qbar * ctx.lifted.Dbar * wbar);
  CHECK(quadratic_cost(ctx, x, ubar, wbar) ==
        doctest::Approx(vq0 + g1_term(ctx, x, ubar, wbar)).epsilon(1e-10));
  CHECK(g1_term(ctx, x, ubar, wbar) >= dterm +
        2 * (ctx.lifted.Abar * x + ctx.lifted.Bbar * ubar)
                .dot(ctx.weights.Qbar * ctx.lifted.Dbar * wbar) -
        1e-10);
}

TEST_CASE("audit: nominal closed-loop run passes every inequality") {
  RunConfig cfg = paper_sv_config();
  ControllerContext ctx = cfg.make_context();
  StabilityConstants c = compute_constants(ctx, 0.01);

  ScenarioConfig scen;
  scen.name = "nominal";
  scen.mu_bar0 = 0.0;
  scen.sigma_bar0 = 0.0;
  scen.steps = 20;
  TrajectoryLog log = run_closed_loop(ctx, cfg.A, cfg.B, cfg.x0, scen, 1);
  REQUIRE_FALSE(log.failed);

  // The nominal empirical set stays all-zero, so re-solving at each logged
  // state recovers the first-stage sequence the simulator used.
  std::vector<VectorXd> zero_samples(
      ctx.ambiguity.n, VectorXd::Zero(ctx.lifted.N * ctx.lifted.nw));
  std::vector<VectorXd> ubars;
  std::vector<double> J_values;
  for (const auto& rec : log.steps) {
    Algorithm1Result res = run_algorithm1(ctx, rec.x, zero_samples);
    REQUIRE(res.solution.status == SolveStatus::optimal);
    CHECK(res.solution.J == doctest::Approx(rec.J).epsilon(1e-6));
    ubars.push_back(res.solution.ubar);
    J_values.push_back(res.solution.J);
  }

  std::vector<AuditRow> rows = audit_run(ctx, c, log, ubars, J_values);
  REQUIRE(rows.size() == log.steps.size());
  for (const auto& row : rows) {
    CHECK(row.prop1 >= -1e-6);
    CHECK(row.prop3 >= -1e-6);
    CHECK(row.lemma4 >= -1e-6);
    CHECK(row.terminal >= -1e-6);
    if (row.prop2_evaluated) CHECK(row.prop2 >= -1e-6);
  }

  std::string csv = audit_csv(rows);
  CHECK(csv.find("min") != std::string::npos);
}

TEST_CASE("recourse-penalty bound holds across Young parameters") {
  const ControllerContext& ctx = benchmark_context();
  StabilityConstants c = compute_constants(ctx, 0.01);
  VectorXd x(2), ubar(3), wbar(6), wprev(2);
  x << -3.0, 1.0;
  ubar << 0.5, -0.2, 0.1;
  wbar << 0.1, -0.1, 0.2, 0.0, -0.1, 0.1;
  wprev << 0.1, -0.2;
  for (double eps_c1 : {0.1, 1.0, 10.0}) {
    CHECK(check_prop3(ctx, c, x, ubar, wbar, wprev, eps_c1) >= -1e-6);
  }
}
