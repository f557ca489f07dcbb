#include <random>

#include "doctest.h"
#include "tsdr/penalty.hpp"
#include "tsdr/simplex.hpp"

using namespace tsdr;

namespace {

// Recourse LP in standard form: min [h' 0']y s.t. [I -I]y = s, y >= 0.
double recourse_via_simplex(const VectorXd& h, const VectorXd& s) {
  const int m = static_cast<int>(s.size());
  Eigen::MatrixXd A(m, 2 * m);
  A << Eigen::MatrixXd::Identity(m, m), -Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd c(2 * m);
  c << h, Eigen::VectorXd::Zero(m);
  LpResult r = solve_lp_standard_form(A, s, c);
  REQUIRE(r.optimal);
  return r.value;
}

}  // namespace

TEST_CASE("recourse LP: closed form, simplex, and dual vertex agree") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> us(-3.0, 3.0);
  std::uniform_real_distribution<double> uh(0.1, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 8);
    VectorXd h(m), s(m);
    for (int i = 0; i < m; ++i) {
      h(i) = uh(rng);
      s(i) = us(rng);
    }
    double closed = penalty_closed_form(h, s);
    SecondStageSolution lp = second_stage_lp(h, s);
    VectorXd pi = dual_vertex(h, s);
    CHECK(lp.value == doctest::Approx(closed).epsilon(1e-12));
    CHECK(recourse_via_simplex(h, s) == doctest::Approx(closed).epsilon(1e-8));
    CHECK(pi.dot(s) == doctest::Approx(closed).epsilon(1e-12));
    // Dual vertex lives on the box {0, h_i} and follows the sign of s.
    for (int i = 0; i < m; ++i) {
      if (s(i) > 0) CHECK(pi(i) == h(i));
      else CHECK(pi(i) == 0.0);
    }
    // Primal split reconstructs the slack.
    CHECK((lp.q_plus - lp.q_minus - s).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(lp.q_plus.minCoeff() >= 0.0);
    CHECK(lp.q_minus.minCoeff() >= 0.0);
  }
}

TEST_CASE("recourse LP: all-slack-negative gives zero") {
  VectorXd h = VectorXd::Constant(3, 2.0);
  VectorXd s = VectorXd::Constant(3, -1.0);
  CHECK(penalty_closed_form(h, s) == 0.0);
  CHECK(dual_vertex(h, s).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("slack assembly matches the lifted matrices") {
  LtiSystem sys;
  sys.A = MatrixXd{{1.0, 1.0}, {0.0, 1.0}};
  sys.B = MatrixXd{{0.5}, {1.0}};
  sys.D = MatrixXd::Identity(2, 2);
  MatrixXd F0{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  VectorXd G0(4);
  G0 << -2, -10, -2, -2;
  LiftedProblem lp = build_lifted(sys, F0, G0, 3);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  VectorXd x(2), ubar(3), wbar(6), h = VectorXd::Constant(12, 1000.0);
  for (int t = 0; t < 20; ++t) {
    for (int i = 0; i < 2; ++i) x(i) = nd(rng);
    for (int i = 0; i < 3; ++i) ubar(i) = nd(rng);
    for (int i = 0; i < 6; ++i) wbar(i) = nd(rng);
    VectorXd s = recourse_slack(lp, ubar, x, wbar);
    VectorXd s_ref = lp.F * (lp.Abar * x + lp.Bbar * ubar + lp.Dbar * wbar) +
                     lp.G;
    CHECK((s - s_ref).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(dual_value_representation(h, ubar, x, wbar, lp) ==
          doctest::Approx(penalty_closed_form(h, s)).epsilon(1e-12));
  }
}
