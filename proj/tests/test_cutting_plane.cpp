#include "doctest.h"
#include "tsdr/config.hpp"
#include "tsdr/cutting_plane.hpp"
#include "tsdr/reformulation.hpp"

using namespace tsdr;

namespace {

const ControllerContext& benchmark_context() {
  static ControllerContext ctx = paper_sv_config().make_context();
  return ctx;
}

std::vector<VectorXd> zero_samples(const ControllerContext& ctx) {
  return std::vector<VectorXd>(
      ctx.ambiguity.n, VectorXd::Zero(ctx.lifted.N * ctx.lifted.nw));
}

}  // namespace

TEST_CASE("structural gates on the benchmark plant") {
  ControllerGates gates = check_gates(benchmark_context());
  CHECK(gates.rank_ok);
  CHECK(gates.rank == 2);
  CHECK(gates.lc_ok);
  CHECK(gates.lc_threshold < 2.0);
  CHECK(gates.all_ok());
  // Known quirk of this benchmark: the pre-stabilized A is Schur stable but
  // not a spectral-norm contraction, so the advisory flag is off.
  CHECK_FALSE(gates.contraction_ok);
}

TEST_CASE("origin solve collapses to the radius term") {
  const ControllerContext& ctx = benchmark_context();
  Algorithm1Result res = run_algorithm1(ctx, VectorXd::Zero(2),
                                        zero_samples(ctx));
  REQUIRE(res.solution.status == SolveStatus::optimal);
  CHECK(res.diagnostics.termination == "converged");
  CHECK(res.solution.ubar.lpNorm<Eigen::Infinity>() < 1e-5);
  CHECK(res.solution.J ==
        doctest::Approx(ctx.ambiguity.epsilon * res.solution.gamma)
            .epsilon(1e-4));
  CHECK(res.solution.gamma ==
        doctest::Approx(ctx.gamma_low).epsilon(1e-3));
}

TEST_CASE("benchmark initial state: convergence and input admissibility") {
  const ControllerContext& ctx = benchmark_context();
  VectorXd x(2);
  x << -5.0, -2.0;
  Algorithm1Result res = run_algorithm1(ctx, x, zero_samples(ctx));
  REQUIRE(res.solution.status == SolveStatus::optimal);
  CHECK(res.diagnostics.termination == "converged");
  CHECK(std::isfinite(res.solution.J));
  CHECK(res.solution.J > 0.0);

  // Master objectives are nondecreasing as cuts accumulate.
  const auto& objs = res.diagnostics.master_objectives;
  REQUIRE(objs.size() >= 1);
  for (size_t i = 1; i < objs.size(); ++i)
    CHECK(objs[i] >= objs[i - 1] - 1e-8);

  // Physical input at the first step respects the box.
  REQUIRE(ctx.plant.prestab_gain.has_value());
  double u0 = (*ctx.plant.prestab_gain * x)(0) + res.solution.ubar(0);
  CHECK(u0 <= ctx.u_max(0) + 1e-7);
  CHECK(u0 >= ctx.u_min(0) - 1e-7);

  // Terminal constraint holds at the optimum.
  VectorXd zN = ctx.lifted.A_pow_N * x + ctx.lifted.C_AB * res.solution.ubar;
  CHECK(zN.squaredNorm() <= ctx.l_c * x.squaredNorm() + 1e-6);
}

TEST_CASE("converged master value equals the exact worst-case objective") {
  // At termination the cutting-plane relaxation is tight: re-evaluating the
  // inner maximization at (ubar*, gamma*) reproduces the master value.
  const ControllerContext& ctx = benchmark_context();
  VectorXd x(2);
  x << 2.0, -1.0;
  std::vector<VectorXd> samples = zero_samples(ctx);
  // Perturb the samples so several support points are in play.
  for (int s = 0; s < ctx.ambiguity.n; ++s)
    samples[s] = VectorXd::Constant(6, 0.05 * (s - 4));
  Algorithm1Result res = run_algorithm1(ctx, x, samples);
  REQUIRE(res.solution.status == SolveStatus::optimal);
  REQUIRE(res.diagnostics.termination == "converged");

  double gamma_eval = std::max(res.solution.gamma,
                               ctx.gamma_low * (1.0 + 1e-4));
  double avg = 0.0;
  for (const auto& w : samples)
    avg += eval_V(res.solution.ubar, gamma_eval, w, x, ctx.lifted,
                  ctx.weights, ctx.ambiguity, ctx.h)
               .value;
  avg /= samples.size();
  double exact = first_stage_cost(res.solution.ubar, res.solution.gamma, x,
                                  ctx.lifted, ctx.weights,
                                  ctx.ambiguity.epsilon) +
                 avg;
  CHECK(res.solution.objective ==
        doctest::Approx(exact).epsilon(1e-4));
  CHECK(res.solution.J == doctest::Approx(exact + cost_constant(
                                                      x, ctx.lifted,
                                                      ctx.weights))
                              .epsilon(1e-4));
}

TEST_CASE("dual step is idempotent at a fixed candidate") {
  const ControllerContext& ctx = benchmark_context();
  VectorXd x(2);
  x << -1.0, 0.5;
  Algorithm1Result res = run_algorithm1(ctx, x, zero_samples(ctx));
  REQUIRE(res.solution.status == SolveStatus::optimal);
  std::vector<SupportPoint> supports = res.supports;
  CHECK(dual_step(ctx, res.solution, supports) == 0);
}

TEST_CASE("support points grow with the ambiguity radius") {
  // A larger radius weights the transport multiplier more heavily and the
  // optimizer still terminates finitely.
  RunConfig cfg = paper_sv_config();
  cfg.epsilon = 0.5;
  ControllerContext ctx = cfg.make_context();
  VectorXd x(2);
  x << -5.0, -2.0;
  Algorithm1Result res = run_algorithm1(ctx, x, zero_samples(ctx));
  REQUIRE(res.solution.status == SolveStatus::optimal);
  CHECK(res.diagnostics.termination == "converged");
  CHECK(res.diagnostics.master_solves <= ctx.options.max_master_solves);
}
