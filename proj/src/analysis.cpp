#include "tsdr/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tsdr/penalty.hpp"
#include "tsdr/reformulation.hpp"

namespace tsdr {

namespace {

double lambda_max_sym(const MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (M + M.transpose()));
  return es.eigenvalues().maxCoeff();
}

double lambda_min_sym(const MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (M + M.transpose()));
  return es.eigenvalues().minCoeff();
}

}  // namespace

StabilityConstants compute_constants(const ControllerContext& ctx,
                                     double eps_drift) {
  // The asymptotic theory needs |A|_2 < 1; the sums below are finite for any
  // L_A != 1 and finite N, so evaluation is allowed as long as the geometric
  // ratio is well defined.
  if (std::abs(1.0 - ctx.bounds.L_A) < 1e-12)
    throw std::invalid_argument(
        "stability constants are singular at spectral norm exactly 1");
  if (eps_drift <= 0.0)
    throw std::invalid_argument("drift epsilon must be positive");

  StabilityConstants c;
  c.N = ctx.lifted.N;
  c.L_A = ctx.bounds.L_A;
  c.L_B = ctx.bounds.L_B;
  c.L_D = ctx.bounds.L_D;
  c.u_u = ctx.bounds.u_u;
  c.eps_c1 = 1.0;
  c.eps_c2 = eps_drift;

  c.lambda_max_P = lambda_max_sym(ctx.weights.P);
  c.lambda_min_Q = lambda_min_sym(ctx.weights.Q);
  c.lambda_max_Q = lambda_max_sym(ctx.weights.Q);
  c.lambda_max_R = lambda_max_sym(ctx.weights.R);
  c.lambda_max_F0 =
      lambda_max_sym(ctx.lifted.F0.transpose() * ctx.lifted.F0);
  c.lambda_min_Cs = lambda_min_sym(ctx.ambiguity.C_s);
  c.lambda_max_Cs = lambda_max_sym(ctx.ambiguity.C_s);

  const int N = c.N;
  const double LA = c.L_A;
  double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0, s5 = 0.0;
  for (int j = 0; j <= N - 2; ++j) s1 += std::pow(LA, j);
  for (int i = 0; i <= N - 2; ++i) s2 += std::pow(LA, 2 * i);
  for (int i = 0; i <= N - 2; ++i) {
    double g = (1.0 - std::pow(LA, i)) / (1.0 - LA);
    s3 += g * g;
  }
  for (int i = 1; i <= N; ++i) s4 += std::pow(LA, 2 * i);
  for (int i = 1; i <= N; ++i)
    for (int j = 0; j <= i - 1; ++j) s5 += std::pow(LA, 2 * j);
  c.cA1 = std::sqrt(s1);
  c.cA2 = std::sqrt(s2);
  c.cA3 = std::sqrt(s3);
  c.cA4 = std::sqrt(s4);
  c.cA5 = std::sqrt(s5);

  c.Cw1 = c.lambda_max_F0 * c.L_D * c.L_D * s5;
  c.Cw2 = c.lambda_max_F0 * c.L_D * c.L_D * s4;
  c.L_B1 = ctx.lifted.B1.operatorNorm();

  // Control-deviation constant of the quadratic-cost upper bound.
  double c1 = 0.0;
  for (int i = 0; i <= N - 1; ++i) {
    double dev = 0.0;
    for (int j = 1; j <= i; ++j) dev += std::pow(LA, i - j) * c.L_B * c.u_u;
    c1 += 2.0 * (c.lambda_max_Q * dev * dev + c.lambda_max_R * c.u_u * c.u_u);
  }
  double dev_N = 0.0;
  for (int j = 1; j <= N; ++j) dev_N += std::pow(LA, N - j) * c.L_B * c.u_u;
  c1 += 2.0 * c.lambda_max_P * dev_N * dev_N;
  c.c1 = c1;

  double h2 = ctx.h.squaredNorm();
  c.c2 = c.c1 + 4.0 * h2 + 0.25 * c.L_B1 * c.L_B1 * c.u_u * c.u_u;
  c.c_l = 2.0 * c.lambda_max_P / c.lambda_min_Q;
  c.c_sN = std::sqrt(c.lambda_max_Cs * N / c.lambda_min_Cs);

  const double lP = c.lambda_max_P, lQmin = c.lambda_min_Q,
               lQmax = c.lambda_max_Q, LD2 = c.L_D * c.L_D;
  const double ratio = 12.0 * ctx.l_c * lP * lP / lQmin;
  const double LA_N1 = std::pow(LA, N - 1);
  const double cA1_2 = c.cA1 * c.cA1;

  c.k0 = 0.25 * lQmin;
  c.k1 = ratio * LD2 * LA_N1 * LA_N1 + lP * LD2 * LA_N1 * LA_N1 +
         lP * LD2 * LA_N1 * (1.0 + cA1_2) + 2.0 * lQmax * LD2 * c.cA2 * c.cA2;
  c.k2 = ratio * LD2 * (cA1_2 + 1.0) * (cA1_2 + 1.0) +
         2.0 * lQmax * LD2 * c.cA3 * c.cA3 +
         lP * LD2 * (1.0 + 2.0 * c.cA1 + cA1_2 * cA1_2) +
         lP * LD2 * LA_N1 * (1.0 + cA1_2) + c.Cw1 / (4.0 * c.eps_c2);
  c.k31 = lP * lQmin * c.L_D * c.cA4 * c.u_u * c.L_B * c.cA5;
  c.k32 = lP * LD2 * c.cA5 * c.cA5 + c.Cw1 / (4.0 * c.eps_c1) +
          12.0 * lP * lP / lQmin * LD2 * c.cA4 * c.cA4 * c.cA4 * c.cA4;
  c.k4 = lQmax * LD2 * c.cA3 * c.cA3 + lP * LD2 * c.cA2 * c.cA2 +
         c.Cw1 / (4.0 * c.eps_c2) + lP * LD2 * (1.0 + 2.0 * c.cA1);
  c.k5 = lP * LD2 * c.cA5 * c.cA5 + c.Cw1 / (4.0 * c.eps_c1);
  return c;
}

PerformanceBound theorem3_bound(const StabilityConstants& c, double eps_w,
                                double mu_bar, double tr_Sigma) {
  if (eps_w < 0.0 || mu_bar < 0.0 || tr_Sigma < 0.0)
    throw std::invalid_argument("bound arguments must be nonnegative");
  PerformanceBound b;
  if (eps_w == 0.0 && mu_bar == 0.0 && tr_Sigma == 0.0) return b;

  double eps = std::min(1.0 / (4.0 * c.c_l),
                        std::max({std::cbrt(eps_w), std::sqrt(mu_bar),
                                  std::sqrt(tr_Sigma)}));
  b.eps_young = eps;

  // Constraint-related constants with the Young parameter of the proof
  // (eps_c2 = eps, eps_c1 = 1).
  double k2 = c.k2 - c.Cw1 / (4.0 * c.eps_c2) + c.Cw1 / (4.0 * eps);
  double k4 = c.k4 - c.Cw1 / (4.0 * c.eps_c2) + c.Cw1 / (4.0 * eps);
  const double lmin = c.lambda_min_Cs;
  const double fc = 4.0 * c.c_l;

  b.sigma1 =
      2.0 * (32.0 * (k2 + c.k32 + k4 + c.k5) / lmin *
                 std::max(std::pow(eps_w, 2.0 / 3.0), fc * eps_w) +
             4.0 * std::sqrt(2.0) * c.k31 / std::sqrt(lmin) *
                 std::max(std::pow(eps_w, 1.0 / 6.0), fc * std::sqrt(eps_w)) +
             c.c2 * std::sqrt(eps_w));
  b.sigma2 =
      2.0 * (0.25 * c.Cw2 * mu_bar * mu_bar +
             2.0 * (c.k1 + 2.0 * (k2 + c.k32) * c.c_sN * c.c_sN) *
                 std::max(std::pow(mu_bar, 1.5), fc * mu_bar * mu_bar) +
             2.0 * c.k31 * c.c_sN * std::max(std::sqrt(mu_bar), fc * mu_bar) +
             c.c2 * std::sqrt(mu_bar));
  b.sigma3 =
      2.0 * ((2.0 * c.k1 + 4.0 * (k4 + c.k5) * c.c_sN * c.c_sN) *
                 std::max(std::sqrt(tr_Sigma), fc * tr_Sigma) +
             0.25 * c.Cw2 * tr_Sigma + c.c2 * std::cbrt(tr_Sigma));
  b.total = b.sigma1 + b.sigma2 + b.sigma3;
  return b;
}

WorstCaseMomentBounds gelbrich_report(const AmbiguityModel& ambiguity, int N,
                                      double mu_bar,
                                      const MatrixXd& Sigma_bar) {
  WorstCaseMomentBounds b;
  b.mean_bound = gelbrich_mean_bound(ambiguity.epsilon, ambiguity.C_s, N,
                                     mu_bar);
  b.trace_bound = gelbrich_trace_bound(ambiguity.epsilon, ambiguity.C_s, N,
                                       Sigma_bar);
  return b;
}

double quadratic_cost(const ControllerContext& ctx, const VectorXd& x,
                      const VectorXd& ubar, const VectorXd& wbar) {
  VectorXd traj = ctx.lifted.Abar * x + ctx.lifted.Bbar * ubar +
                  ctx.lifted.Dbar * wbar;
  return x.dot(ctx.weights.Q * x) + traj.dot(ctx.weights.Qbar * traj) +
         ubar.dot(ctx.weights.Rbar * ubar);
}

double g1_term(const ControllerContext& ctx, const VectorXd& x,
               const VectorXd& ubar, const VectorXd& wbar) {
  VectorXd Dw = ctx.lifted.Dbar * wbar;
  return Dw.dot(ctx.weights.Qbar * Dw) +
         2.0 * (ctx.lifted.Abar * x + ctx.lifted.Bbar * ubar)
                   .dot(ctx.weights.Qbar * Dw);
}

double check_prop1(const ControllerContext& ctx, const StabilityConstants& c,
                   const VectorXd& x, const VectorXd& ubar,
                   const VectorXd& u_applied, const VectorXd& wbar) {
  double lhs = quadratic_cost(ctx, x, ubar, wbar);
  double stage = x.dot(ctx.weights.Q * x) +
                 u_applied.dot(ctx.weights.R * u_applied);
  double rhs = 2.0 * c.lambda_max_P / c.lambda_min_Q * stage +
               g1_term(ctx, x, ubar, wbar) + c.c1;
  return rhs - lhs;
}

double check_prop2(const ControllerContext& ctx, const VectorXd& x_k,
                   const VectorXd& ubar_k, const VectorXd& u_applied_k,
                   const VectorXd& x_k1, const VectorXd& wbar_k1, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("eps must be positive");
  const MatrixXd& A = ctx.plant.A;
  const MatrixXd& B = ctx.plant.B;
  const MatrixXd& D = ctx.plant.D;
  const MatrixXd& P = ctx.weights.P;
  const MatrixXd& Q = ctx.weights.Q;
  const MatrixXd& R = ctx.weights.R;
  const int N = ctx.lifted.N;
  const int nu = ctx.plant.nu();
  const int nw = ctx.plant.nw();

  // Nominal trajectory of the optimal sequence at step k.
  std::vector<VectorXd> z(N + 1);
  z[0] = x_k;
  for (int i = 0; i < N; ++i)
    z[i + 1] = A * z[i] + B * ubar_k.segment(i * nu, nu);

  // Candidate sequence: shift and append the terminal law.
  std::vector<VectorXd> xc(N + 1), uc(N);
  xc[0] = x_k1;
  for (int i = 0; i < N; ++i) {
    uc[i] = (i < N - 1) ? VectorXd(ubar_k.segment((i + 1) * nu, nu))
                        : VectorXd(ctx.K_f * xc[i]);
    xc[i + 1] = A * xc[i] + B * uc[i] + D * wbar_k1.segment(i * nw, nw);
  }

  double vq_c = 0.0;
  for (int i = 0; i < N; ++i)
    vq_c += xc[i].dot(Q * xc[i]) + uc[i].dot(R * uc[i]);
  vq_c += xc[N].dot(P * xc[N]);
  double lhs = vq_c / (1.0 + eps);

  VectorXd zero_w = VectorXd::Zero(N * nw);
  double vq_star = quadratic_cost(ctx, x_k, ubar_k, zero_w);
  double stage = x_k.dot(Q * x_k) + u_applied_k.dot(R * u_applied_k);

  double dev_sum = 0.0;
  for (int i = 0; i <= N - 2; ++i) {
    VectorXd delta = xc[i] - z[i + 1];
    dev_sum += delta.dot(Q * delta);
  }
  VectorXd delta_Nm1 = xc[N - 1] - z[N];
  double g2 = delta_Nm1.dot(P * delta_Nm1) + 2.0 * z[N].dot(P * delta_Nm1);

  // Disturbance carry-over of the terminal step; uses the nominal image of
  // the candidate terminal state, xc[N] - D w_{N-1}.
  VectorXd Dw_last = D * wbar_k1.segment((N - 1) * nw, nw);
  VectorXd f_nom = xc[N] - Dw_last;
  double delta_f = Dw_last.dot(P * Dw_last) + 2.0 * f_nom.dot(P * Dw_last);

  double rhs = vq_star - stage + dev_sum / eps + (g2 + delta_f) / (1.0 + eps);
  return rhs - lhs;
}

double check_prop3(const ControllerContext& ctx, const StabilityConstants& c,
                   const VectorXd& x, const VectorXd& ubar,
                   const VectorXd& wbar, const VectorXd& w_prev,
                   double eps_c1) {
  if (eps_c1 <= 0.0) throw std::invalid_argument("eps_c1 must be positive");
  double lhs =
      penalty_closed_form(ctx.h, recourse_slack(ctx.lifted, ubar, x, wbar));
  VectorXd FDw = ctx.lifted.FDbar * wbar;
  VectorXd FADw = ctx.lifted.FAbar * (ctx.plant.D * w_prev);
  double rhs = 3.0 * eps_c1 * ctx.h.squaredNorm() +
               (c.L_B1 * c.L_B1 * c.u_u * c.u_u + FDw.squaredNorm() +
                FADw.squaredNorm()) /
                   (4.0 * eps_c1);
  return rhs - lhs;
}

double check_lemma4(const ControllerContext& ctx, const VectorXd& x,
                    const VectorXd& ubar, double J) {
  VectorXd zero_w = VectorXd::Zero(ctx.lifted.N * ctx.plant.nw());
  double nominal =
      quadratic_cost(ctx, x, ubar, zero_w) +
      penalty_closed_form(ctx.h, recourse_slack(ctx.lifted, ubar, x, zero_w));
  return J - nominal;
}

CostReport average_cost_vs_bound(const RunStats& stats,
                                 const PerformanceBound& bound) {
  CostReport r;
  r.empirical_average = stats.average_cost;
  r.bound = bound.total;
  r.within_bound = stats.average_cost <= bound.total + 1e-9;
  return r;
}

std::vector<AuditRow> audit_run(const ControllerContext& ctx,
                                const StabilityConstants& c,
                                const TrajectoryLog& log,
                                const std::vector<VectorXd>& ubars,
                                const std::vector<double>& J_values) {
  const int N = ctx.lifted.N;
  const int nw = ctx.plant.nw();
  const int T = static_cast<int>(log.steps.size());
  if (static_cast<int>(ubars.size()) != T ||
      static_cast<int>(J_values.size()) != T)
    throw std::invalid_argument("audit inputs must match the log length");

  std::vector<AuditRow> rows;
  rows.reserve(T);
  for (int k = 0; k < T; ++k) {
    const StepRecord& rec = log.steps[k];
    AuditRow row;
    row.k = rec.k;

    // Realized horizon disturbances from step k, when available.
    bool full_window = (k + N <= T);
    VectorXd wbar = VectorXd::Zero(N * nw);
    if (full_window)
      for (int i = 0; i < N; ++i) wbar.segment(i * nw, nw) = log.steps[k + i].w;

    if (full_window) {
      row.prop1 = check_prop1(ctx, c, rec.x, ubars[k], rec.v, wbar);
      if (k >= 1) {
        VectorXd w_prev = log.steps[k - 1].w;
        row.prop3 = check_prop3(ctx, c, rec.x, ubars[k], wbar, w_prev, 1.0);
      } else {
        row.prop3 = check_prop3(ctx, c, rec.x, ubars[k], wbar,
                                VectorXd::Zero(nw), 1.0);
      }
    }
    if (k + 1 + N <= T) {
      VectorXd wbar_k1(N * nw);
      for (int i = 0; i < N; ++i)
        wbar_k1.segment(i * nw, nw) = log.steps[k + 1 + i].w;
      row.prop2 = check_prop2(ctx, rec.x, ubars[k], rec.v,
                              log.steps[k + 1].x, wbar_k1, 0.5);
      row.prop2_evaluated = true;
    }
    row.lemma4 = check_lemma4(ctx, rec.x, ubars[k], J_values[k]);

    VectorXd z_N = ctx.lifted.A_pow_N * rec.x + ctx.lifted.C_AB * ubars[k];
    row.terminal = ctx.l_c * rec.x.squaredNorm() - z_N.squaredNorm();
    rows.push_back(row);
  }
  return rows;
}

std::string audit_csv(const std::vector<AuditRow>& rows) {
  std::ostringstream os;
  os.precision(12);
  os << "k,prop1,prop2,prop2_evaluated,prop3,lemma4,terminal\n";
  AuditRow mins;
  bool first = true;
  for (const auto& r : rows) {
    os << r.k << "," << r.prop1 << "," << r.prop2 << ","
       << (r.prop2_evaluated ? 1 : 0) << "," << r.prop3 << "," << r.lemma4
       << "," << r.terminal << "\n";
    if (first) {
      mins = r;
      first = false;
    } else {
      mins.prop1 = std::min(mins.prop1, r.prop1);
      if (r.prop2_evaluated)
        mins.prop2 = mins.prop2_evaluated ? std::min(mins.prop2, r.prop2)
                                          : r.prop2;
      mins.prop2_evaluated = mins.prop2_evaluated || r.prop2_evaluated;
      mins.prop3 = std::min(mins.prop3, r.prop3);
      mins.lemma4 = std::min(mins.lemma4, r.lemma4);
      mins.terminal = std::min(mins.terminal, r.terminal);
    }
  }
  os << "min," << mins.prop1 << "," << mins.prop2 << ","
     << (mins.prop2_evaluated ? 1 : 0) << "," << mins.prop3 << ","
     << mins.lemma4 << "," << mins.terminal << "\n";
  return os.str();
}

}  // namespace tsdr
