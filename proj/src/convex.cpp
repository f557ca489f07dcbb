#include "tsdr/convex.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <chrono>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tsdr {

ConvexProgram ConvexProgram::make(int n) {
  ConvexProgram p;
  p.num_vars = n;
  p.H = MatrixXd::Zero(n, n);
  p.g = VectorXd::Zero(n);
  p.A_ineq = MatrixXd::Zero(0, n);
  p.b_ineq = VectorXd::Zero(0);
  p.lower = VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
  p.upper = VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  return p;
}

void ConvexProgram::add_row(const VectorXd& a, double b) {
  if (a.size() != num_vars) throw std::invalid_argument("row size mismatch");
  A_ineq.conservativeResize(A_ineq.rows() + 1, num_vars);
  A_ineq.row(A_ineq.rows() - 1) = a.transpose();
  b_ineq.conservativeResize(b_ineq.size() + 1);
  b_ineq(b_ineq.size() - 1) = b;
}

std::string ConvexProgram::dump() const {
  std::ostringstream os;
  os << "vars " << num_vars << "\n";
  os << "H\n" << H << "\ng\n" << g.transpose() << "\nconstant " << constant
     << "\n";
  os << "A (<= b)\n" << A_ineq << "\nb\n" << b_ineq.transpose() << "\n";
  os << "lower\n" << lower.transpose() << "\nupper\n" << upper.transpose()
     << "\n";
  if (norm_constraint) {
    os << "norm |M z + m0| <= " << norm_constraint->radius << "\nM\n"
       << norm_constraint->M << "\nm0\n" << norm_constraint->m0.transpose()
       << "\n";
  }
  return os.str();
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::iteration_limit: return "iteration-limit";
  }
  return "?";
}

namespace {

// Internal form: min 1/2 z'Hz + g'z s.t. g_i(z) <= 0, where the first m
// constraints are linear rows A z - b and the optional last one is the
// squared norm constraint |Mz+m0|^2 - r^2.
struct Internal {
  MatrixXd A;  // all linear rows, box folded in
  VectorXd b;
  bool has_quad = false;
  MatrixXd M;
  VectorXd m0;
  double r2 = 0.0;
  MatrixXd MtM2;  // 2 M'M, Hessian of the quadratic constraint
};

Internal expand(const ConvexProgram& p) {
  Internal in;
  const int n = p.num_vars;
  int box_rows = 0;
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(p.lower(i))) ++box_rows;
    if (std::isfinite(p.upper(i))) ++box_rows;
  }
  const int m_lin = static_cast<int>(p.A_ineq.rows());
  in.A = MatrixXd::Zero(m_lin + box_rows, n);
  in.b = VectorXd::Zero(m_lin + box_rows);
  in.A.topRows(m_lin) = p.A_ineq;
  in.b.head(m_lin) = p.b_ineq;
  int row = m_lin;
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(p.upper(i))) {
      in.A(row, i) = 1.0;
      in.b(row) = p.upper(i);
      ++row;
    }
    if (std::isfinite(p.lower(i))) {
      in.A(row, i) = -1.0;
      in.b(row) = -p.lower(i);
      ++row;
    }
  }
  // Row equilibration: cutting planes can carry coefficients many orders of
  // magnitude apart, which stalls the interior-point iteration.
  for (int i = 0; i < in.A.rows(); ++i) {
    double scale = in.A.row(i).lpNorm<Eigen::Infinity>();
    if (scale > 0.0) {
      in.A.row(i) /= scale;
      in.b(i) /= scale;
    }
  }
  if (p.norm_constraint) {
    in.has_quad = true;
    in.M = p.norm_constraint->M;
    in.m0 = p.norm_constraint->m0;
    in.r2 = p.norm_constraint->radius * p.norm_constraint->radius;
    double qscale = std::max(1.0, in.r2);
    in.M /= std::sqrt(qscale);
    in.m0 /= std::sqrt(qscale);
    in.r2 /= qscale;
    in.MtM2 = 2.0 * in.M.transpose() * in.M;
  }
  return in;
}

}  // namespace

namespace {
struct IpmStats {
  long solves = 0, iters = 0, polish_passes = 0, newton = 0, cod_fb = 0;
  long p1 = 0, p2 = 0, p3 = 0, p10 = 0, p30 = 0, unclean = 0, quadact = 0;
  double t_factor = 0, t_total = 0, t_polish = 0;
  ~IpmStats() {
    if (std::getenv("TSDR_IPM_STATS"))
      std::fprintf(stderr,
                   "ipm stats: solves %ld iters %ld (%.1f/solve) polish passes "
                   "%ld newton %ld cod_fb %ld t_total %.2fs t_factor %.2fs t_polish %.2fs\n"
                   "  pass hist 1:%ld 2:%ld 3-9:%ld 10-29:%ld 30:%ld unclean %ld quadact %ld\n",
                   solves, iters, solves ? (double)iters / solves : 0.0,
                   polish_passes, newton, cod_fb, t_total, t_factor, t_polish,
                   p1, p2, p3, p10, p30, unclean, quadact);
  }
} g_ipm_stats;
}  // namespace

Solution solve(const ConvexProgram& p) {
  auto t_start = std::chrono::steady_clock::now();
  auto secs = [](auto a, auto b) {
    return std::chrono::duration<double>(b - a).count();
  };
  ++g_ipm_stats.solves;
  const int n = p.num_vars;
  Internal in = expand(p);
  const int m_lin = static_cast<int>(in.A.rows());
  const int m = m_lin + (in.has_quad ? 1 : 0);

  Solution sol;
  VectorXd z = p.warm_start && p.warm_start->size() == n
                   ? *p.warm_start
                   : VectorXd::Zero(n);
  // Clamp a warm start into the box interior.
  for (int i = 0; i < n; ++i) {
    double lo = p.lower(i), hi = p.upper(i);
    if (std::isfinite(lo) && z(i) < lo) z(i) = lo;
    if (std::isfinite(hi) && z(i) > hi) z(i) = hi;
  }

  auto constraint_values = [&](const VectorXd& zz) {
    VectorXd gval(m);
    gval.head(m_lin) = in.A * zz - in.b;
    if (in.has_quad) {
      VectorXd t = in.M * zz + in.m0;
      gval(m_lin) = t.squaredNorm() - in.r2;
    }
    return gval;
  };

  if (m == 0) {
    // Unconstrained QP.
    Eigen::LDLT<MatrixXd> ldlt(p.H + 1e-12 * MatrixXd::Identity(n, n));
    sol.z = ldlt.solve(-p.g);
    sol.objective = 0.5 * sol.z.dot(p.H * sol.z) + p.g.dot(sol.z) + p.constant;
    sol.status = SolveStatus::optimal;
    return sol;
  }

  VectorXd gval = constraint_values(z);
  VectorXd s(m), lam(m);
  for (int i = 0; i < m; ++i) {
    s(i) = std::max(1.0, -gval(i) + 1.0);
    lam(i) = 1.0;
  }

  const int max_iter = 500;
  const double tol = 1e-10;
  double obj_scale = 1.0 + p.g.lpNorm<Eigen::Infinity>() +
                     p.H.lpNorm<Eigen::Infinity>();

  // Cutting-plane rows touch only a handful of variables, so the normal
  // equations are formed through a sparse view of the linear rows instead of
  // the dense triple product.
  Eigen::SparseMatrix<double> As = in.A.sparseView();
  Eigen::SparseMatrix<double> AsT = As.transpose();

  // Stop once the iteration stops making progress; the active-set polish
  // below finishes the last digits from any point close enough to identify
  // the active constraints.
  double best_merit = std::numeric_limits<double>::infinity();
  int stalled = 0;
  // Driving the complementarity products below machine precision wrecks the
  // scaling matrix and the dual residual blows back up, so the best iterate
  // seen is kept and restored afterwards.
  double merit_star = std::numeric_limits<double>::infinity();
  VectorXd z_best = z, s_best = s, lam_best = lam;

  // The aggressive Mehrotra step can fall into a short limit cycle where the
  // same few iterates repeat and complementarity stops shrinking.  When that
  // happens a heavily centered, damped step pulls the iterate back toward
  // the central path and breaks the cycle.
  double mu_best = std::numeric_limits<double>::infinity();
  int mu_stall = 0;
  bool force_center = false;

  // The normal-equations matrix inherits an arrow pattern (the per-support
  // epigraph variables never meet each other in a row), so a sparse
  // factorization with fill-reducing ordering is far cheaper than a dense one.
  Eigen::SparseMatrix<double> Hs = p.H.sparseView();
  Eigen::SparseMatrix<double> MtM2s;
  if (in.has_quad) MtM2s = in.MtM2.sparseView();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> sldlt;

  for (int iter = 0; iter < max_iter; ++iter) {
    ++g_ipm_stats.iters;
    gval = constraint_values(z);

    // Quadratic-constraint gradient row; the linear rows live in As.
    VectorXd jq;
    if (in.has_quad) jq = 2.0 * in.M.transpose() * (in.M * z + in.m0);

    VectorXd r_dual = p.H * z + p.g + AsT * lam.head(m_lin);
    if (in.has_quad) r_dual += lam(m_lin) * jq;
    VectorXd r_prim = gval + s;
    double mu = s.dot(lam) / m;

    double rd = r_dual.lpNorm<Eigen::Infinity>() / obj_scale;
    double rp = r_prim.lpNorm<Eigen::Infinity>() /
                (1.0 + in.b.lpNorm<Eigen::Infinity>());
    sol.iterations = iter;
    if (rd < tol && rp < tol && mu < tol) break;
    if (std::max(rd, rp) < 1e-9 && mu < 1e-11) break;
    if (std::getenv("TSDR_IPM_TRACE"))
      std::fprintf(stderr, "it %d rd %.3e rp %.3e mu %.3e lam_max %.3e\n",
                   iter, rd, rp, mu, lam.lpNorm<Eigen::Infinity>());
    double merit = std::max({rd, rp, mu});
    if (merit < merit_star) {
      merit_star = merit;
      z_best = z;
      s_best = s;
      lam_best = lam;
    }
    if (mu < 0.9 * mu_best) {
      mu_best = mu;
      mu_stall = 0;
    } else if (++mu_stall >= 8) {
      force_center = true;
      mu_stall = 0;
    }
    if (merit < 0.9 * best_merit) {
      best_merit = merit;
      stalled = 0;
    } else if (best_merit < 1e-8 && ++stalled >= 10) {
      break;
    }

    // Condensed normal equations, factored once per iteration and reused
    // for the predictor and corrector solves.
    VectorXd d = lam.cwiseQuotient(s);
    Eigen::SparseMatrix<double> K =
        Hs + Eigen::SparseMatrix<double>(
                 AsT * d.head(m_lin).asDiagonal() * As);
    if (in.has_quad) {
      K += lam(m_lin) * MtM2s;
      K += Eigen::SparseMatrix<double>(
          (d(m_lin) * jq * jq.transpose()).sparseView());
    }
    {
      Eigen::SparseMatrix<double> reg(n, n);
      reg.setIdentity();
      K += 1e-12 * reg;
    }
    auto t_f0 = std::chrono::steady_clock::now();
    sldlt.compute(K);
    g_ipm_stats.t_factor += secs(t_f0, std::chrono::steady_clock::now());
    if (sldlt.info() != Eigen::Success) break;

    auto step_for = [&](const VectorXd& r_cent, VectorXd& dz, VectorXd& ds,
                        VectorXd& dlam) {
      VectorXd w = d.cwiseProduct(r_prim) - r_cent.cwiseQuotient(s);
      VectorXd rhs = -r_dual - AsT * w.head(m_lin);
      if (in.has_quad) rhs -= w(m_lin) * jq;
      dz = sldlt.solve(rhs);
      ds = -r_prim;
      ds.head(m_lin) -= As * dz;
      if (in.has_quad) ds(m_lin) -= jq.dot(dz);
      dlam = (-r_cent - lam.cwiseProduct(ds)).cwiseQuotient(s);
    };
    auto max_step = [&](const VectorXd& ds, const VectorXd& dlam) {
      double alpha = 1.0;
      for (int i = 0; i < m; ++i) {
        if (ds(i) < 0) alpha = std::min(alpha, -s(i) / ds(i));
        if (dlam(i) < 0) alpha = std::min(alpha, -lam(i) / dlam(i));
      }
      return alpha;
    };

    // Mehrotra predictor-corrector: affine direction sets the centering
    // weight, corrector compensates the second-order complementarity term.
    VectorXd dz_aff, ds_aff, dlam_aff;
    VectorXd r_cent_aff = s.cwiseProduct(lam);
    step_for(r_cent_aff, dz_aff, ds_aff, dlam_aff);
    double alpha_aff = max_step(ds_aff, dlam_aff);
    double mu_aff =
        (s + alpha_aff * ds_aff).dot(lam + alpha_aff * dlam_aff) / m;
    double sigma = std::pow(std::max(0.0, mu_aff / std::max(mu, 1e-300)), 3);
    sigma = std::min(0.99, std::max(1e-8, sigma));
    double step_frac = 0.995;
    if (force_center) {
      sigma = std::max(sigma, 0.9);
      step_frac = 0.7;
      force_center = false;
    }

    VectorXd r_cent = (s.cwiseProduct(lam) + ds_aff.cwiseProduct(dlam_aff))
                          .array() -
                      sigma * mu;
    VectorXd dz, ds, dlam;
    step_for(r_cent, dz, ds, dlam);

    double alpha = std::min(1.0, step_frac * max_step(ds, dlam));
    z += alpha * dz;
    s += alpha * ds;
    lam += alpha * dlam;
  }

  {
    // Fall back to the best evaluated iterate if the final one regressed.
    VectorXd gf = constraint_values(z);
    MatrixXd Jf(m, n);
    Jf.topRows(m_lin) = in.A;
    if (in.has_quad)
      Jf.row(m_lin) = 2.0 * (in.M * z + in.m0).transpose() * in.M;
    double rd = (p.H * z + p.g + Jf.transpose() * lam).lpNorm<Eigen::Infinity>() /
                obj_scale;
    double rp = (gf + s).lpNorm<Eigen::Infinity>() /
                (1.0 + in.b.lpNorm<Eigen::Infinity>());
    if (std::max({rd, rp, s.dot(lam) / m}) > merit_star) {
      z = z_best;
      s = s_best;
      lam = lam_best;
    }
  }

  // Active-set polish: the interior-point iterate identifies the active
  // constraints; an exact KKT solve on that set removes the O(mu) bias of
  // the barrier, which matters because consecutive master objectives are
  // compared at 1e-8. The polished point is accepted only when it is
  // feasible with nonnegative multipliers.
  {
    std::vector<int> act;
    for (int i = 0; i < m_lin; ++i)
      if (s(i) < lam(i)) act.push_back(i);
    bool quad_act = in.has_quad && s(m_lin) < lam(m_lin);

    VectorXd zp = z;
    double lq = quad_act ? lam(m_lin) : 0.0;
    VectorXd yp;
    bool clean = false;
    // A row dropped once stays out for the rest of the polish; re-adding
    // near-parallel rows leads to add/drop cycling on degenerate vertices.
    std::vector<char> banned(m, 0);

    // Add/drop loop: nearly-active constraints that the interior-point
    // classification misses get picked up here, and wrongly included ones
    // (negative multiplier) get dropped.
    auto t_p0 = std::chrono::steady_clock::now();
    int passes_here = 0;
    for (int pass = 0; pass < 30; ++pass) {
      ++passes_here;
      ++g_ipm_stats.polish_passes;
      // Identical rows make the KKT system singular and their multipliers
      // ambiguous; keep the first copy only.
      {
        std::vector<int> uniq;
        for (int i : act) {
          bool dup = false;
          for (int j : uniq)
            if (in.b(i) == in.b(j) && in.A.row(i) == in.A.row(j)) {
              dup = true;
              break;
            }
          if (!dup) uniq.push_back(i);
        }
        act = uniq;
      }
      const int k = static_cast<int>(act.size());
      MatrixXd A_act(k, n);
      VectorXd b_act(k);
      for (int i = 0; i < k; ++i) {
        A_act.row(i) = in.A.row(act[i]);
        b_act(i) = in.b(act[i]);
      }
      yp = VectorXd::Zero(k);

      bool solved = true;
      bool pruned = false;
      // Newton on the stationarity + active-constraint system; one step is
      // exact when the quadratic constraint is inactive.
      const int newton_steps = quad_act ? 20 : 1;
      for (int it = 0; it < newton_steps; ++it) {
        ++g_ipm_stats.newton;
        VectorXd t = in.has_quad ? VectorXd(in.M * zp + in.m0) : VectorXd();
        const int dim = n + k + (quad_act ? 1 : 0);
        MatrixXd Kkt = MatrixXd::Zero(dim, dim);
        VectorXd rhs(dim);
        Kkt.topLeftCorner(n, n) = p.H;
        VectorXd r0 = p.H * zp + p.g;
        if (quad_act) {
          Kkt.topLeftCorner(n, n) += lq * in.MtM2;
          VectorXd gq = 2.0 * in.M.transpose() * t;
          Kkt.block(0, n + k, n, 1) = gq;
          Kkt.block(n + k, 0, 1, n) = gq.transpose();
          rhs(n + k) = -(t.squaredNorm() - in.r2);
          r0 += lq * gq;
        }
        if (k > 0) {
          Kkt.block(0, n, n, k) = A_act.transpose();
          Kkt.block(n, 0, k, n) = A_act;
          rhs.segment(n, k) = -(A_act * zp - b_act);
          r0 += A_act.transpose() * yp;
        }
        rhs.head(n) = -r0;
        double rhs_norm = rhs.lpNorm<Eigen::Infinity>();
        if (rhs_norm <= 1e-12 * obj_scale) break;

        // Cheap sparse factorization first; fall back to the rank-revealing
        // dense solve when the active rows are linearly dependent. The tiny
        // negative dual-block shift keeps the sparse path nonsingular under
        // duplicate cuts.
        VectorXd step;
        bool step_ok = false;
        {
          // The unregularized system is structurally singular whenever an
          // epigraph variable has no active row, so a quasi-definite shift
          // (positive primal diagonal, negative dual diagonal) makes the
          // sparse factorization well posed; iterative refinement against
          // the unshifted matrix removes the bias.
          Eigen::SparseMatrix<double> Ks = Kkt.sparseView();
          for (int i = 0; i < n; ++i) Ks.coeffRef(i, i) += 1e-10;
          for (int i = n; i < dim; ++i) Ks.coeffRef(i, i) -= 1e-10;
          Eigen::SparseLU<Eigen::SparseMatrix<double>> slu;
          slu.compute(Ks);
          if (slu.info() == Eigen::Success) {
            step = slu.solve(rhs);
            for (int ref = 0; ref < 5 && step.allFinite(); ++ref)
              step += slu.solve(rhs - Kkt * step);
            step_ok = step.allFinite() &&
                      (Kkt * step - rhs).lpNorm<Eigen::Infinity>() <=
                          1e-9 * (1.0 + rhs_norm);
          }
        }
        if (!step_ok) {
          // Refinement cannot converge when the active rows are linearly
          // dependent with inconsistent right-hand sides; keep a maximal
          // independent subset and restart the pass.
          ++g_ipm_stats.cod_fb;
          Eigen::ColPivHouseholderQR<MatrixXd> qr(A_act.transpose());
          int r = static_cast<int>(qr.rank());
          if (r >= k) {
            // Rows independent but the system is too ill conditioned for
            // refinement; take one rank-revealing dense solve instead.
            Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(Kkt);
            step = cod.solve(rhs);
            if (!step.allFinite()) {
              solved = false;
              break;
            }
            zp += step.head(n);
            yp += step.segment(n, k);
            if (quad_act) lq += step(n + k);
            continue;
          }
          std::vector<char> keep(k, 0);
          for (int i = 0; i < r; ++i)
            keep[qr.colsPermutation().indices()(i)] = 1;
          for (int i = k - 1; i >= 0; --i)
            if (!keep[i]) {
              banned[act[i]] = 1;
              act.erase(act.begin() + i);
            }
          pruned = true;
          break;
        }
        zp += step.head(n);
        yp += step.segment(n, k);
        if (quad_act) lq += step(n + k);
        // Newton converges quadratically here; a step below rounding noise
        // means the next residual evaluation cannot improve.
        if (step.lpNorm<Eigen::Infinity>() <=
            1e-14 * (1.0 + zp.lpNorm<Eigen::Infinity>()))
          break;
      }
      if (pruned) continue;
      if (!solved) break;

      // Drop every constraint with a negative multiplier, then add every
      // violated constraint outside the working set; bulk updates keep the
      // number of refactorizations low.
      bool changed = false;
      if (quad_act && lq < -1e-9) {
        quad_act = false;
        lq = 0.0;
        banned[m_lin] = 1;
        changed = true;
      }
      for (int i = k - 1; i >= 0; --i)
        if (yp(i) < -1e-9) {
          banned[act[i]] = 1;
          act.erase(act.begin() + i);
          changed = true;
        }
      if (changed) continue;

      VectorXd gp = constraint_values(zp);
      std::vector<char> in_set(m, 0);
      for (int i : act) in_set[i] = 1;
      if (in.has_quad && quad_act) in_set[m_lin] = 1;
      for (int i = 0; i < m; ++i) {
        if (in_set[i] || banned[i] || gp(i) <= 1e-11) continue;
        if (in.has_quad && i == m_lin) {
          quad_act = true;
          lq = std::max(lq, 1e-8);
        } else {
          act.push_back(i);
        }
        changed = true;
      }
      if (changed) continue;
      clean = true;
      break;
    }

    if (clean) {
      VectorXd gp = constraint_values(zp);
      VectorXd lam_p = VectorXd::Zero(m);
      for (size_t i = 0; i < act.size(); ++i) lam_p(act[i]) = yp(i);
      if (quad_act) lam_p(m_lin) = lq;
      MatrixXd Jp(m, n);
      Jp.topRows(m_lin) = in.A;
      if (in.has_quad)
        Jp.row(m_lin) = 2.0 * (in.M * zp + in.m0).transpose() * in.M;
      double pres = gp.maxCoeff();
      double dres = (p.H * zp + p.g + Jp.transpose() * lam_p)
                        .lpNorm<Eigen::Infinity>() /
                    obj_scale;
      if (std::getenv("TSDR_IPM_TRACE"))
        std::fprintf(stderr,
                     "polish clean k=%zu quad=%d pres %.3e dres %.3e minlam %.3e\n",
                     act.size(), (int)quad_act, pres, dres, lam_p.minCoeff());
      if (pres <= 1e-9 && dres <= 1e-9 && lam_p.minCoeff() >= -1e-9) {
        z = zp;
        lam = lam_p.cwiseMax(0.0);
        s = (-gp).cwiseMax(0.0);
      }
    } else if (std::getenv("TSDR_IPM_TRACE")) {
      std::fprintf(stderr, "polish not clean (k=%zu)\n", act.size());
    }
    g_ipm_stats.t_polish += secs(t_p0, std::chrono::steady_clock::now());
    if (passes_here <= 1) ++g_ipm_stats.p1;
    else if (passes_here == 2) ++g_ipm_stats.p2;
    else if (passes_here < 10) ++g_ipm_stats.p3;
    else if (passes_here < 30) ++g_ipm_stats.p10;
    else ++g_ipm_stats.p30;
    if (!clean) ++g_ipm_stats.unclean;
    if (quad_act) ++g_ipm_stats.quadact;
  }

  gval = constraint_values(z);
  MatrixXd J(m, n);
  J.topRows(m_lin) = in.A;
  if (in.has_quad) J.row(m_lin) = 2.0 * (in.M * z + in.m0).transpose() * in.M;
  VectorXd r_dual = p.H * z + p.g + J.transpose() * lam;

  sol.z = z;
  sol.objective = 0.5 * z.dot(p.H * z) + p.g.dot(z) + p.constant;
  sol.primal_residual = std::max(0.0, gval.maxCoeff());
  sol.kkt_residual = r_dual.lpNorm<Eigen::Infinity>() / obj_scale;

  if (sol.primal_residual <= 1e-7 && sol.kkt_residual <= 1e-6 &&
      s.dot(lam) / m <= 1e-7) {
    sol.status = SolveStatus::optimal;
  } else if (sol.primal_residual > 1e-6 &&
             lam.lpNorm<Eigen::Infinity>() > 1e6) {
    sol.status = SolveStatus::infeasible;
  } else {
    sol.status = SolveStatus::iteration_limit;
  }
  if (sol.status != SolveStatus::optimal) {
    if (const char* path = std::getenv("TSDR_IPM_DUMP")) {
      std::ofstream out(path);
      out << p.dump();
      out << "pres " << sol.primal_residual << " kkt " << sol.kkt_residual
          << " compl " << s.dot(lam) / m << " iters " << sol.iterations << "\n";
      if (p.warm_start) out << "warm\n" << p.warm_start->transpose() << "\n";
    }
  }
  g_ipm_stats.t_total += secs(t_start, std::chrono::steady_clock::now());
  return sol;
}

}  // namespace tsdr
