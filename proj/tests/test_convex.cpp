#include <random>

#include "doctest.h"
#include "tsdr/convex.hpp"

using namespace tsdr;

TEST_CASE("unconstrained QP hits the stationary point") {
  ConvexProgram p = ConvexProgram::make(2);
  p.H = MatrixXd{{2.0, 0.0}, {0.0, 4.0}};
  p.g = VectorXd::Constant(2, -2.0);
  Solution s = solve(p);
  REQUIRE(s.status == SolveStatus::optimal);
  CHECK(s.z(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(s.z(1) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("separable box QP clamps coordinatewise") {
  // min 1/2 |z - c|^2 in a box: solution is the projection of c.
  ConvexProgram p = ConvexProgram::make(3);
  p.H = MatrixXd::Identity(3, 3);
  VectorXd c(3);
  c << 5.0, -3.0, 0.25;
  p.g = -c;
  p.lower = VectorXd::Constant(3, -1.0);
  p.upper = VectorXd::Constant(3, 1.0);
  Solution s = solve(p);
  REQUIRE(s.status == SolveStatus::optimal);
  CHECK(s.z(0) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(s.z(1) == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(s.z(2) == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("norm-ball projection via the quadratic constraint") {
  ConvexProgram p = ConvexProgram::make(2);
  p.H = MatrixXd::Identity(2, 2);
  VectorXd c(2);
  c << 3.0, 4.0;  // |c| = 5, project onto radius 2
  p.g = -c;
  p.norm_constraint = ConvexProgram::NormConstraint{
      MatrixXd::Identity(2, 2), VectorXd::Zero(2), 2.0};
  Solution s = solve(p);
  REQUIRE(s.status == SolveStatus::optimal);
  CHECK(s.z(0) == doctest::Approx(1.2).epsilon(1e-6));
  CHECK(s.z(1) == doctest::Approx(1.6).epsilon(1e-6));
}

TEST_CASE("linear program corner via vanishing Hessian") {
  // min -z1 - z2 s.t. z1 + z2 <= 1, z >= 0: optimum value -1 on the facet.
  ConvexProgram p = ConvexProgram::make(2);
  p.g = VectorXd::Constant(2, -1.0);
  p.add_row(VectorXd::Constant(2, 1.0), 1.0);
  p.lower = VectorXd::Zero(2);
  Solution s = solve(p);
  REQUIRE(s.status == SolveStatus::optimal);
  CHECK(s.objective == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(s.z.sum() == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("random inequality QPs satisfy the KKT conditions") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    MatrixXd Mr(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) Mr(i, j) = nd(rng);
    ConvexProgram p = ConvexProgram::make(n);
    p.H = Mr.transpose() * Mr + 0.1 * MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) p.g(i) = nd(rng);
    // A handful of random halfspaces that keep the origin feasible.
    for (int r = 0; r < n; ++r) {
      VectorXd a(n);
      for (int i = 0; i < n; ++i) a(i) = nd(rng);
      p.add_row(a, 0.5 + std::abs(nd(rng)));
    }
    Solution s = solve(p);
    REQUIRE(s.status == SolveStatus::optimal);
    CHECK(s.primal_residual <= 1e-7);
    CHECK(s.kkt_residual <= 1e-6);
    // The solution cannot beat the unconstrained minimum.
    VectorXd z_free = p.H.ldlt().solve(-p.g);
    double free_obj = 0.5 * z_free.dot(p.H * z_free) + p.g.dot(z_free);
    CHECK(s.objective >= free_obj - 1e-7);
  }
}

TEST_CASE("empty-interior detection") {
  ConvexProgram p = ConvexProgram::make(1);
  p.H = MatrixXd::Identity(1, 1);
  p.add_row(VectorXd::Constant(1, 1.0), -1.0);   // z <= -1
  p.add_row(VectorXd::Constant(1, -1.0), -1.0);  // z >= 1
  Solution s = solve(p);
  CHECK(s.status != SolveStatus::optimal);
}

TEST_CASE("determinism: identical inputs give identical iterates") {
  ConvexProgram p = ConvexProgram::make(3);
  p.H = MatrixXd::Identity(3, 3);
  p.g = VectorXd::Constant(3, -1.0);
  p.add_row(VectorXd::Constant(3, 1.0), 1.0);
  Solution a = solve(p), b = solve(p);
  CHECK((a.z - b.z).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.iterations == b.iterations);
}
