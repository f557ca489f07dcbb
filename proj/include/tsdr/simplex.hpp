#pragma once

#include <Eigen/Dense>

namespace tsdr {

struct LpResult {
  double value = 0.0;
  Eigen::VectorXd y;
  bool optimal = false;
};

/// Dense primal simplex for min c'y s.t. A y = b, y >= 0 (Bland's rule).
/// Intended for small cross-validation problems (recourse LP, discrete
/// transport); not a production-scale LP code.
LpResult solve_lp_standard_form(const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& b,
                                const Eigen::VectorXd& c,
                                int max_pivots = 100000);

}  // namespace tsdr
