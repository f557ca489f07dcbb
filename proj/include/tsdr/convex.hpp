#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace tsdr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Quadratic program with linear inequalities, box bounds, and at most one
/// Euclidean-norm constraint |M z + m0| <= r. Small and dense by design.
struct ConvexProgram {
  int num_vars = 0;

  // Objective 1/2 z'Hz + g'z + constant; H must be PSD.
  MatrixXd H;
  VectorXd g;
  double constant = 0.0;

  // Rows a'z <= b.
  MatrixXd A_ineq;  // 0 x n allowed
  VectorXd b_ineq;

  // Box bounds; +-inf for free coordinates.
  VectorXd lower;
  VectorXd upper;

  struct NormConstraint {
    MatrixXd M;
    VectorXd m0;
    double radius = 0.0;
  };
  std::optional<NormConstraint> norm_constraint;

  std::optional<VectorXd> warm_start;

  static ConvexProgram make(int n);
  void add_row(const VectorXd& a, double b);

  /// Plain-text standard-form dump for debugging.
  std::string dump() const;
};

enum class SolveStatus { optimal, infeasible, iteration_limit };

struct Solution {
  VectorXd z;
  double objective = 0.0;
  SolveStatus status = SolveStatus::iteration_limit;
  double primal_residual = 0.0;  // max constraint violation
  double kkt_residual = 0.0;     // relative stationarity residual
  int iterations = 0;
};

/// Primal-dual interior-point solve; deterministic given identical inputs.
/// status == optimal guarantees primal feasibility <= 1e-7 and relative
/// KKT residual <= 1e-6.
Solution solve(const ConvexProgram& program);

const char* to_string(SolveStatus s);

}  // namespace tsdr
