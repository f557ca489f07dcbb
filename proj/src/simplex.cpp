#include "tsdr/simplex.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace tsdr {

// Two-phase tableau simplex with Bland's rule. Equalities are normalized to
// b >= 0, phase 1 adds artificial variables.
LpResult solve_lp_standard_form(const Eigen::MatrixXd& A_in,
                                const Eigen::VectorXd& b_in,
                                const Eigen::VectorXd& c_in, int max_pivots) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  const int m = static_cast<int>(A_in.rows());
  const int n = static_cast<int>(A_in.cols());
  if (b_in.size() != m || c_in.size() != n)
    throw std::invalid_argument("LP dimension mismatch");

  MatrixXd A = A_in;
  VectorXd b = b_in;
  for (int i = 0; i < m; ++i) {
    if (b(i) < 0) {
      A.row(i) = -A.row(i);
      b(i) = -b(i);
    }
  }

  const int total = n + m;  // original + artificial
  MatrixXd T(m + 1, total + 1);
  T.setZero();
  T.block(0, 0, m, n) = A;
  T.block(0, n, m, m) = MatrixXd::Identity(m, m);
  T.block(0, total, m, 1) = b;

  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  auto price_out = [&](const VectorXd& cost) {
    // Objective row = cost reduced by the basic rows.
    T.row(m).setZero();
    for (int j = 0; j < total; ++j) T(m, j) = j < (int)cost.size() ? cost(j) : 0.0;
    for (int i = 0; i < m; ++i) {
      double cb = basis[i] < (int)cost.size() ? cost(basis[i]) : 0.0;
      if (cb != 0.0) T.row(m) -= cb * T.row(i);
    }
  };

  auto pivot = [&](int row, int col) {
    T.row(row) /= T(row, col);
    for (int i = 0; i <= m; ++i) {
      if (i != row && T(i, col) != 0.0) T.row(i) -= T(i, col) * T.row(row);
    }
    basis[row] = col;
  };

  auto run = [&](bool phase1) -> bool {
    const double eps = 1e-10;
    for (int iter = 0; iter < max_pivots; ++iter) {
      int col = -1;
      int limit = phase1 ? total : n;
      for (int j = 0; j < limit; ++j) {
        if (!phase1 && j >= n) break;
        if (T(m, j) < -eps) {
          col = j;
          break;  // Bland: smallest index
        }
      }
      if (col < 0) return true;
      int row = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        if (T(i, col) > eps) {
          double ratio = T(i, total) / T(i, col);
          if (ratio < best - eps ||
              (ratio < best + eps && (row < 0 || basis[i] < basis[row]))) {
            best = ratio;
            row = i;
          }
        }
      }
      if (row < 0) return false;  // unbounded
      pivot(row, col);
    }
    return false;
  };

  // Phase 1: minimize sum of artificials.
  VectorXd c1 = VectorXd::Zero(total);
  c1.segment(n, m).setOnes();
  price_out(c1);
  if (!run(true)) return {};
  double infeas = -T(m, total);
  if (infeas > 1e-7) return {};  // infeasible

  // Drive any artificial out of the basis if possible.
  for (int i = 0; i < m; ++i) {
    if (basis[i] >= n) {
      for (int j = 0; j < n; ++j) {
        if (std::abs(T(i, j)) > 1e-9) {
          pivot(i, j);
          break;
        }
      }
    }
  }

  // Phase 2.
  VectorXd c2 = VectorXd::Zero(total);
  c2.head(n) = c_in;
  price_out(c2);
  if (!run(false)) return {};

  LpResult res;
  res.y = VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) res.y(basis[i]) = T(i, total);
  }
  res.value = c_in.dot(res.y);
  res.optimal = true;
  return res;
}

}  // namespace tsdr
