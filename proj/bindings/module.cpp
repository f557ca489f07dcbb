#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tsdr/analysis.hpp"
#include "tsdr/config.hpp"
#include "tsdr/cutting_plane.hpp"
#include "tsdr/penalty.hpp"
#include "tsdr/simulator.hpp"

namespace py = pybind11;
using namespace tsdr;

namespace {

py::dict solve_step(const ControllerContext& ctx, const VectorXd& x,
                    const std::vector<VectorXd>& samples) {
  std::vector<VectorXd> wbar = samples;
  if (wbar.empty())
    wbar.assign(ctx.ambiguity.n,
                VectorXd::Zero(ctx.lifted.N * ctx.lifted.nw));
  Algorithm1Result res = run_algorithm1(ctx, x, wbar);
  py::dict out;
  out["ubar"] = res.solution.ubar;
  out["gamma"] = res.solution.gamma;
  out["J"] = res.solution.J;
  out["objective"] = res.solution.objective;
  out["status"] = std::string(to_string(res.solution.status));
  out["master_solves"] = res.diagnostics.master_solves;
  out["support_points"] = res.diagnostics.support_points;
  out["termination"] = res.diagnostics.termination;
  return out;
}

py::dict gates_dict(const ControllerContext& ctx) {
  ControllerGates g = check_gates(ctx);
  py::dict out;
  out["contraction_ok"] = g.contraction_ok;
  out["rank_ok"] = g.rank_ok;
  out["rank"] = g.rank;
  out["lc_ok"] = g.lc_ok;
  out["lc_threshold"] = g.lc_threshold;
  out["all_ok"] = g.all_ok();
  return out;
}

py::dict simulate(const RunConfig& cfg, const std::string& scenario_name,
                  double mu_bar0, double sigma_bar0, int runs, int steps,
                  unsigned int seed) {
  ControllerContext ctx = cfg.make_context();
  ScenarioConfig scen;
  scen.name = scenario_name;
  scen.mu_bar0 = mu_bar0;
  scen.sigma_bar0 = sigma_bar0;
  scen.runs = runs;
  scen.steps = steps;
  scen.seed = seed;
  std::vector<TrajectoryLog> logs =
      run_scenario(ctx, cfg.A, cfg.B, cfg.x0, scen);
  RunStats st = summarize(logs, cfg.Q, cfg.R);
  py::dict out;
  out["runs"] = st.runs;
  out["total_steps"] = st.total_steps;
  out["violation_rate"] = st.violation_rate;
  out["max_state_norm"] = st.max_state_norm;
  out["max_violation_margin"] = st.max_violation_margin;
  out["average_cost"] = st.average_cost;
  out["failed_runs"] = st.failed_runs;
  py::list trajectories;
  for (const auto& log : logs) {
    MatrixXd states(log.steps.size(), cfg.A.rows());
    VectorXd inputs(log.steps.size());
    for (size_t k = 0; k < log.steps.size(); ++k) {
      states.row(k) = log.steps[k].x.transpose();
      inputs(k) = log.steps[k].u(0);
    }
    py::dict t;
    t["x"] = states;
    t["u"] = inputs;
    t["failed"] = log.failed;
    trajectories.append(t);
  }
  out["trajectories"] = trajectories;
  return out;
}

py::dict constants_dict(const ControllerContext& ctx, double eps_drift) {
  StabilityConstants c = compute_constants(ctx, eps_drift);
  py::dict out;
  out["L_A"] = c.L_A;
  out["L_B"] = c.L_B;
  out["L_D"] = c.L_D;
  out["u_u"] = c.u_u;
  out["c1"] = c.c1;
  out["c2"] = c.c2;
  out["c_l"] = c.c_l;
  out["c_sN"] = c.c_sN;
  out["Cw1"] = c.Cw1;
  out["Cw2"] = c.Cw2;
  out["k0"] = c.k0;
  out["k1"] = c.k1;
  out["k2"] = c.k2;
  out["k31"] = c.k31;
  out["k32"] = c.k32;
  out["k4"] = c.k4;
  out["k5"] = c.k5;
  return out;
}

py::dict bound_dict(const ControllerContext& ctx, double eps_drift,
                    double eps_w, double mu_bar, double tr_Sigma) {
  StabilityConstants c = compute_constants(ctx, eps_drift);
  PerformanceBound b = theorem3_bound(c, eps_w, mu_bar, tr_Sigma);
  py::dict out;
  out["sigma1"] = b.sigma1;
  out["sigma2"] = b.sigma2;
  out["sigma3"] = b.sigma3;
  out["total"] = b.total;
  out["eps_young"] = b.eps_young;
  return out;
}

}  // namespace

PYBIND11_MODULE(_tsdr, m) {
  m.doc() =
      "Distributionally robust MPC over Wasserstein ambiguity sets: "
      "cutting-plane solver, closed-loop simulator and stability-bound "
      "calculators";

  py::class_<RunConfig>(m, "RunConfig")
      .def_readwrite("N", &RunConfig::N)
      .def_readwrite("epsilon", &RunConfig::epsilon)
      .def_readwrite("n", &RunConfig::n)
      .def_readwrite("l_c", &RunConfig::l_c)
      .def_readwrite("A", &RunConfig::A)
      .def_readwrite("B", &RunConfig::B)
      .def_readwrite("D", &RunConfig::D)
      .def_readwrite("Q", &RunConfig::Q)
      .def_readwrite("R", &RunConfig::R)
      .def_readwrite("x0", &RunConfig::x0)
      .def("make_context", &RunConfig::make_context);

  py::class_<ControllerContext>(m, "ControllerContext")
      .def_property_readonly("gamma_low",
                             [](const ControllerContext& c) {
                               return c.gamma_low;
                             })
      .def_property_readonly("horizon", [](const ControllerContext& c) {
        return c.lifted.N;
      });

  m.def("benchmark_config", &paper_sv_config,
        "Double-integrator benchmark configuration");
  m.def("load_config", &load_config, py::arg("path"));
  m.def("config_echo", &config_echo, py::arg("config"));

  m.def(
      "riccati",
      [](const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
         const MatrixXd& R) {
        RiccatiResult rr = solve_riccati(A, B, Q, R);
        return py::make_tuple(rr.P, rr.K);
      },
      py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"));

  m.def("check_gates", &gates_dict, py::arg("context"));
  m.def("solve_step", &solve_step, py::arg("context"), py::arg("x"),
        py::arg("samples") = std::vector<VectorXd>{},
        "One cutting-plane solve from the given state");
  m.def("simulate", &simulate, py::arg("config"), py::arg("scenario") = "a",
        py::arg("mu_bar0") = 0.0, py::arg("sigma_bar0") = 0.1,
        py::arg("runs") = 20, py::arg("steps") = 100, py::arg("seed") = 1);
  m.def("stability_constants", &constants_dict, py::arg("context"),
        py::arg("eps_drift"));
  m.def("performance_bound", &bound_dict, py::arg("context"),
        py::arg("eps_drift"), py::arg("eps_w"), py::arg("mu_bar"),
        py::arg("tr_Sigma"));

  m.def("penalty_value", &penalty_closed_form, py::arg("h"), py::arg("s"),
        "Exact-penalty recourse value h' max(0, s)");
  m.def("gelbrich_mean_bound", &gelbrich_mean_bound, py::arg("epsilon"),
        py::arg("C_s"), py::arg("N"), py::arg("mu_bar"));
  m.def("gelbrich_trace_bound", &gelbrich_trace_bound, py::arg("epsilon"),
        py::arg("C_s"), py::arg("N"), py::arg("Sigma_bar"));
}
