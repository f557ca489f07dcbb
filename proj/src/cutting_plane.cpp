#include "tsdr/cutting_plane.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "tsdr/penalty.hpp"

namespace tsdr {

namespace {

double cut_weight(const ControllerContext& ctx, const VectorXd& xi_omega,
                  const VectorXd& xi_sigma) {
  switch (ctx.options.cut_form) {
    case CutForm::gamma_scaled:
    case CutForm::plain:
      return output_transport_cost(xi_omega, xi_sigma, ctx.ambiguity.C);
    case CutForm::gamma_norm:
      return (xi_omega - xi_sigma).norm();
  }
  return 0.0;
}

bool cut_uses_gamma(CutForm f) { return f != CutForm::plain; }

}  // namespace

ControllerGates check_gates(const ControllerContext& ctx) {
  ControllerGates g;
  g.contraction_ok = ctx.bounds.contraction_ok;
  auto obs = disturbance_observability(ctx.lifted.F0, ctx.plant.A, ctx.plant.D,
                                       ctx.lifted.N);
  g.rank = obs.rank;
  g.rank_ok = obs.rank == ctx.plant.nw();
  g.lc_threshold =
      lc_threshold(ctx.plant.A, ctx.plant.B, ctx.K_f, ctx.lifted.N);
  g.lc_ok = ctx.l_c >= g.lc_threshold - 1e-10;
  return g;
}

ConvexProgram assemble_master(const ControllerContext& ctx, const VectorXd& x,
                              const std::vector<VectorXd>& xi_samples,
                              const std::vector<SupportPoint>& supports,
                              double terminal_radius_extra) {
  if (supports.empty())
    throw std::logic_error("master assembled with empty support set");
  const auto& lifted = ctx.lifted;
  const int nu_bar = lifted.N * lifted.nu;
  const int n = static_cast<int>(xi_samples.size());
  const int n_omega = static_cast<int>(supports.size());
  const int idx_gamma = nu_bar;
  const int idx_nu = nu_bar + 1;
  const int idx_theta = idx_nu + n;
  const int nvars = idx_theta + n_omega;

  ConvexProgram prog = ConvexProgram::make(nvars);

  // Preallocate the constraint block; appending row by row copies the whole
  // matrix each time and dominates the solve once the support set is large.
  int vertex_rows = 0;
  for (const auto& sp : supports)
    vertex_rows += static_cast<int>(sp.vertices.size());
  const int total_rows = n_omega * n + vertex_rows +
                         (ctx.plant.prestab_gain ? 2 * lifted.N * lifted.nu : 0);
  prog.A_ineq = MatrixXd::Zero(total_rows, nvars);
  prog.b_ineq = VectorXd::Zero(total_rows);
  int next_row = 0;
  auto put_row = [&](const VectorXd& row, double rhs) {
    prog.A_ineq.row(next_row) = row.transpose();
    prog.b_ineq(next_row) = rhs;
    ++next_row;
  };

  // Objective f1 + (1/n) sum nu.
  MatrixXd Huu = lifted.Bbar.transpose() * ctx.weights.Qbar * lifted.Bbar +
                 ctx.weights.Rbar;
  prog.H.topLeftCorner(nu_bar, nu_bar) = 2.0 * Huu;
  prog.g.head(nu_bar) =
      2.0 * lifted.Bbar.transpose() * ctx.weights.Qbar * (lifted.Abar * x);
  prog.g(idx_gamma) = ctx.ambiguity.epsilon;
  for (int s = 0; s < n; ++s) prog.g(idx_nu + s) = 1.0 / n;

  // gamma strictly above its lower bound; theta >= 0.
  // Keep gamma strictly separated from its lower bound so the inner
  // maximization stays bounded and well conditioned even when the optimum
  // pins gamma at the constraint (e.g. near the origin).
  prog.lower(idx_gamma) = ctx.gamma_low * (1.0 + 1e-4);
  for (int w = 0; w < n_omega; ++w) prog.lower(idx_theta + w) = 0.0;

  // Ambiguity cuts. The second-stage integrand at a fixed disturbance w_omega
  // is affine in (ubar, gamma):
  //   theta_omega + |D w|^2_Qbar + 2 (Abar x + Bbar ubar)' Qbar D w
  //               - gamma * c(xi_sigma, xi_omega),
  // so each cut carries the disturbance-cost terms of the support in addition
  // to the recourse value theta_omega and the transport term.
  for (int w = 0; w < n_omega; ++w) {
    VectorXd QDw = ctx.weights.Qbar * (lifted.Dbar * supports[w].w);
    double d_const = supports[w].w.dot(lifted.Dbar.transpose() * QDw) +
                     2.0 * (lifted.Abar * x).dot(QDw);
    VectorXd d_lin = 2.0 * lifted.Bbar.transpose() * QDw;
    for (int s = 0; s < n; ++s) {
      VectorXd row = VectorXd::Zero(nvars);
      row(idx_theta + w) = 1.0;
      row(idx_nu + s) = -1.0;
      row.head(nu_bar) += d_lin;
      double c = cut_weight(ctx, supports[w].xi, xi_samples[s]);
      double rhs = -d_const;
      if (cut_uses_gamma(ctx.options.cut_form))
        row(idx_gamma) = -c;
      else
        rhs += c;
      put_row(row, rhs);
    }
  }

  // Vertex cuts theta_omega >= pi' (B1 ubar + xi_omega).
  for (int w = 0; w < n_omega; ++w) {
    for (const auto& pi : supports[w].vertices) {
      VectorXd row = VectorXd::Zero(nvars);
      row.head(nu_bar) = lifted.B1.transpose() * pi;
      row(idx_theta + w) = -1.0;
      put_row(row, -pi.dot(supports[w].xi));
    }
  }

  // Physical input box. With pre-stabilization u_i = K z_i + v_i along the
  // nominal predicted trajectory z (linear in the decision vbar).
  const int nu = lifted.nu;
  if (ctx.plant.prestab_gain) {
    const MatrixXd& K = *ctx.plant.prestab_gain;
    for (int i = 0; i < lifted.N; ++i) {
      // z_0 = x; z_i (i>=1) is block row i-1 of Abar x + Bbar vbar.
      MatrixXd coef = MatrixXd::Zero(nu, nu_bar);
      VectorXd offset;
      if (i == 0) {
        offset = K * x;
      } else {
        coef = K * lifted.Bbar.middleRows((i - 1) * lifted.nx, lifted.nx);
        offset = K * (lifted.Abar.middleRows((i - 1) * lifted.nx, lifted.nx) * x);
      }
      coef.block(0, i * nu, nu, nu) += MatrixXd::Identity(nu, nu);
      for (int r = 0; r < nu; ++r) {
        VectorXd row = VectorXd::Zero(nvars);
        row.head(nu_bar) = coef.row(r).transpose();
        put_row(row, ctx.u_max(r) - offset(r));
        row.head(nu_bar) = -coef.row(r).transpose();
        put_row(row, offset(r) - ctx.u_min(r));
      }
    }
  } else {
    for (int i = 0; i < lifted.N; ++i) {
      for (int r = 0; r < nu; ++r) {
        prog.lower(i * nu + r) = ctx.u_min(r);
        prog.upper(i * nu + r) = ctx.u_max(r);
      }
    }
  }

  // Terminal constraint |A^N x + C_AB ubar| <= sqrt(l_c) |x|.
  ConvexProgram::NormConstraint soc;
  soc.M = MatrixXd::Zero(lifted.nx, nvars);
  soc.M.leftCols(nu_bar) = lifted.C_AB;
  soc.m0 = lifted.A_pow_N * x;
  soc.radius = std::sqrt(ctx.l_c) * x.norm() + terminal_radius_extra;
  prog.norm_constraint = soc;

  return prog;
}

namespace {

MasterState solve_master(const ControllerContext& ctx, const VectorXd& x,
                         const std::vector<VectorXd>& xi_samples,
                         const std::vector<SupportPoint>& supports,
                         const VectorXd* warm, double radius_extra) {
  ConvexProgram prog =
      assemble_master(ctx, x, xi_samples, supports, radius_extra);
  if (warm && warm->size() <= prog.num_vars) {
    VectorXd w0 = VectorXd::Zero(prog.num_vars);
    w0.head(warm->size()) = *warm;
    prog.warm_start = w0;
  }
  Solution sol = solve(prog);

  const int nu_bar = ctx.lifted.N * ctx.lifted.nu;
  const int n = static_cast<int>(xi_samples.size());
  MasterState ms;
  ms.status = sol.status;
  if (sol.z.size() == prog.num_vars) {
    ms.ubar = sol.z.head(nu_bar);
    ms.gamma = sol.z(nu_bar);
    ms.nu = sol.z.segment(nu_bar + 1, n);
    ms.theta = sol.z.tail(prog.num_vars - nu_bar - 1 - n);
  }
  ms.objective = sol.objective;
  ms.J = sol.objective + cost_constant(x, ctx.lifted, ctx.weights);
  return ms;
}

bool vertex_known(const SupportPoint& sp, const VectorXd& pi) {
  for (const auto& v : sp.vertices)
    if ((v - pi).lpNorm<Eigen::Infinity>() == 0.0) return true;
  return false;
}

}  // namespace

int dual_step(const ControllerContext& ctx, const MasterState& master,
              std::vector<SupportPoint>& supports) {
  int appended = 0;
  for (size_t w = 0; w < supports.size(); ++w) {
    VectorXd s = ctx.lifted.B1 * master.ubar + supports[w].xi;
    VectorXd pi = dual_vertex(ctx.h, s);
    double dual_value = pi.dot(s);
    if (dual_value > master.theta(static_cast<int>(w)) + ctx.options.tol_cut &&
        !vertex_known(supports[w], pi)) {
      supports[w].vertices.push_back(pi);
      ++appended;
    }
  }
  return appended;
}

int separation_step(const ControllerContext& ctx, const VectorXd& x,
                    const std::vector<VectorXd>& wbar_samples,
                    const std::vector<VectorXd>& xi_samples,
                    const MasterState& master,
                    std::vector<SupportPoint>& supports) {
  int added = 0;
  // Guard against interior-point roundoff leaving gamma marginally inside
  // the master's strict bound.
  double gamma_eval = std::max(master.gamma, ctx.gamma_low * (1.0 + 1e-4));
  // The implied ambiguity cut of a candidate disturbance w with vertex pi:
  // theta + disturbance-cost terms - transport must exceed some nu_sigma.
  auto cut_violated = [&](const VectorXd& w, const VectorXd& pi,
                          const VectorXd& xi) {
    double theta_new = pi.dot(ctx.lifted.B1 * master.ubar + xi);
    VectorXd QDw = ctx.weights.Qbar * (ctx.lifted.Dbar * w);
    double d_val =
        w.dot(ctx.lifted.Dbar.transpose() * QDw) +
        2.0 * (ctx.lifted.Abar * x + ctx.lifted.Bbar * master.ubar).dot(QDw);
    for (size_t q = 0; q < xi_samples.size(); ++q) {
      double c = cut_weight(ctx, xi, xi_samples[q]);
      double rhs = cut_uses_gamma(ctx.options.cut_form) ? master.gamma * c : c;
      if (theta_new + d_val - rhs >
          master.nu(static_cast<int>(q)) + ctx.options.tol_cut)
        return true;
    }
    return false;
  };

  for (size_t s = 0; s < wbar_samples.size(); ++s) {
    InnerResult inner =
        eval_V(master.ubar, gamma_eval, wbar_samples[s], x, ctx.lifted,
               ctx.weights, ctx.ambiguity, ctx.h);

    // Convergence is decided at the true maximizer.
    if (!cut_violated(inner.w_star, inner.pi_hat, inner.xi_hat)) continue;

    // When gamma sits near its lower bound the maximizer can be
    // astronomically far out, which would put badly scaled rows into the
    // master. Any violated cut drives the algorithm, so add the closest
    // point toward the sample whose cut is still violated; near the optimum
    // the maximizer itself is moderate and kept as is.
    double wcap =
        ctx.options.sep_radius * (1.0 + wbar_samples[s].norm() + x.norm());
    VectorXd dir = inner.w_star - wbar_samples[s];
    if (dir.norm() > wcap) {
      for (double t = wcap / dir.norm(); t < 1.0; t = std::min(1.0, 2.0 * t)) {
        VectorXd wc = wbar_samples[s] + t * dir;
        VectorXd pic =
            dual_vertex(ctx.h, recourse_slack(ctx.lifted, master.ubar, x, wc));
        VectorXd xic =
            ctx.lifted.FDbar * wc + ctx.lifted.FAbar * x + ctx.lifted.G;
        if (cut_violated(wc, pic, xic)) {
          inner.w_star = wc;
          inner.pi_hat = pic;
          inner.xi_hat = xic;
          break;
        }
      }
    }

    // Dedup against existing supports in the C-weighted norm.
    bool duplicate = false;
    for (const auto& sp : supports) {
      double d = std::sqrt(2.0 * output_transport_cost(inner.xi_hat, sp.xi,
                                                       ctx.ambiguity.C));
      if (d <= ctx.options.tol_sep_rel * (1.0 + inner.xi_hat.norm())) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;

    SupportPoint sp;
    sp.xi = inner.xi_hat;
    sp.w = inner.w_star;
    sp.vertices.push_back(inner.pi_hat);
    supports.push_back(std::move(sp));
    ++added;
  }
  return added;
}

Algorithm1Result run_algorithm1(const ControllerContext& ctx, const VectorXd& x,
                                const std::vector<VectorXd>& wbar_samples) {
  Algorithm1Result out;
  auto& diag = out.diagnostics;

  std::vector<VectorXd> xi_samples;
  xi_samples.reserve(wbar_samples.size());
  for (const auto& w : wbar_samples)
    xi_samples.push_back(ctx.lifted.FDbar * w + ctx.lifted.FAbar * x +
                         ctx.lifted.G);

  // Initialize the support set with the (deduplicated) sample outputs.
  auto& supports = out.supports;
  for (size_t i = 0; i < xi_samples.size(); ++i) {
    const VectorXd& xi = xi_samples[i];
    bool dup = false;
    for (const auto& sp : supports) {
      if ((sp.xi - xi).lpNorm<Eigen::Infinity>() <=
          ctx.options.tol_sep_rel * (1.0 + xi.norm())) {
        dup = true;
        break;
      }
    }
    if (!dup) supports.push_back(SupportPoint{xi, wbar_samples[i], {}});
  }

  MasterState master;
  VectorXd warm;
  double radius_extra = 0.0;
  double last_obj = -std::numeric_limits<double>::infinity();

  for (int outer = 0; outer < ctx.options.max_outer; ++outer) {
    diag.outer_iterations = outer + 1;
    // Inner loop: master + dual step until no vertex is appended.
    while (true) {
      if (diag.master_solves >= ctx.options.max_master_solves) {
        diag.termination = "iteration-cap";
        out.solution = master;
        return out;
      }
      master = solve_master(ctx, x, xi_samples, supports,
                            warm.size() ? &warm : nullptr, radius_extra);
      ++diag.master_solves;

      if (master.status == SolveStatus::infeasible && ctx.options.relax_terminal) {
        radius_extra = std::max(1e-6, 2.0 * radius_extra + 0.1 * x.norm());
        diag.terminal_slack = radius_extra;
        continue;
      }
      if (master.status != SolveStatus::optimal) {
        std::ostringstream msg;
        msg << "master problem failed: " << to_string(master.status);
        throw std::runtime_error(msg.str());
      }
      diag.master_objectives.push_back(master.objective);
      last_obj = master.objective;
      warm = master.ubar;
      VectorXd full(master.ubar.size() + 1 + master.nu.size() +
                    master.theta.size());
      full << master.ubar, master.gamma, master.nu, master.theta;
      warm = full;

      int appended = dual_step(ctx, master, supports);
      diag.dual_cuts += appended;
      if (appended == 0) break;
    }

    int added = separation_step(ctx, x, wbar_samples, xi_samples, master,
                                supports);
    if (added == 0) {
      diag.termination = "converged";
      diag.support_points = static_cast<int>(supports.size());
      out.solution = master;
      return out;
    }
  }
  diag.termination = "iteration-cap";
  diag.support_points = static_cast<int>(supports.size());
  out.solution = master;
  (void)last_obj;
  return out;
}

ControllerContext make_controller(const LtiSystem& raw_plant,
                                  const MatrixXd& F0, const VectorXd& G0,
                                  const MatrixXd& Q, const MatrixXd& R, int N,
                                  double epsilon, const MatrixXd& C, int n,
                                  const VectorXd& h, double l_c,
                                  const VectorXd& u_min, const VectorXd& u_max,
                                  bool prestabilize_plant,
                                  const SolverOptions& options) {
  ControllerContext ctx;
  ctx.options = options;

  LtiSystem plant = raw_plant;
  if (prestabilize_plant) {
    RiccatiResult lqr = solve_riccati(raw_plant.A, raw_plant.B, Q, R);
    plant = prestabilize(raw_plant, lqr.K);
  }
  ctx.plant = plant;
  ctx.lifted = build_lifted(plant, F0, G0, N);

  RiccatiResult terminal = solve_riccati(plant.A, plant.B, Q, R);
  ctx.K_f = terminal.K;
  ctx.weights = make_cost_weights(Q, R, terminal.P, N);

  ctx.ambiguity = AmbiguityModel::build(epsilon, C, n, ctx.lifted);
  ctx.h = h;
  ctx.l_c = l_c;
  ctx.u_min = u_min;
  ctx.u_max = u_max;
  ctx.bounds = norm_bounds(plant, u_min, u_max, N);
  ctx.gamma_low = gamma_lower_bound(ctx.lifted, ctx.weights, ctx.ambiguity.C_s);
  return ctx;
}

}  // namespace tsdr
