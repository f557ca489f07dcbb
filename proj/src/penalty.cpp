#include "tsdr/penalty.hpp"

#include <stdexcept>

namespace tsdr {

namespace {
void check_h(const VectorXd& h, const VectorXd& s) {
  if (h.size() != s.size())
    throw std::invalid_argument("penalty weight / slack dimension mismatch");
  if ((h.array() <= 0).any())
    throw std::invalid_argument("penalty weights must be positive");
}
}  // namespace

SecondStageSolution second_stage_lp(const VectorXd& h, const VectorXd& s) {
  check_h(h, s);
  SecondStageSolution sol;
  sol.q_plus = s.cwiseMax(0.0);
  sol.q_minus = (-s).cwiseMax(0.0);
  sol.value = h.dot(sol.q_plus);
  return sol;
}

double penalty_closed_form(const VectorXd& h, const VectorXd& s) {
  check_h(h, s);
  return h.dot(s.cwiseMax(0.0));
}

VectorXd dual_vertex(const VectorXd& h, const VectorXd& s) {
  check_h(h, s);
  VectorXd pi = VectorXd::Zero(h.size());
  for (int i = 0; i < h.size(); ++i)
    if (s(i) > 0) pi(i) = h(i);
  return pi;
}

VectorXd recourse_slack(const LiftedProblem& lifted, const VectorXd& ubar,
                        const VectorXd& x, const VectorXd& wbar) {
  if (ubar.size() != lifted.N * lifted.nu || x.size() != lifted.nx ||
      wbar.size() != lifted.N * lifted.nw)
    throw std::invalid_argument("recourse_slack dimension mismatch");
  return lifted.B1 * ubar + lifted.FDbar * wbar + lifted.FAbar * x + lifted.G;
}

double dual_value_representation(const VectorXd& h, const VectorXd& ubar,
                                 const VectorXd& x, const VectorXd& wbar,
                                 const LiftedProblem& lifted) {
  return penalty_closed_form(h, recourse_slack(lifted, ubar, x, wbar));
}

}  // namespace tsdr
