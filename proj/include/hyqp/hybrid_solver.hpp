// Two-phase solver: dual fast gradient until the dual switching test
// ||[g(z)]_+||_2 <= eta_d holds, then pure Newton steps of the primal-dual
// interior-point method from the hand-off point.
#pragma once

#include <vector>

#include "hyqp/dfg_solver.hpp"
#include "hyqp/pdip_solver.hpp"
#include "hyqp/qp_core.hpp"

namespace hyqp {

bool SwitchCondition(const QpInstance& inst, const VectorXd& z, double eta_d);

// Bookkeeping of the hand-off duality gap s0'lambda0, split into the part
// carried by violated constraints, the part carried by satisfied ones and
// what the positivity floors added.
struct HandoffGap {
  double total = 0;          // s0' lambda0
  double positive_part = 0;  // [g]_+' lambda0
  double negative_part = 0;  // -[g]_-' lambda0, zero under exact complementarity
  double floor_correction = 0;
};

struct Handoff {
  PrimalDualPoint point;
  int lambda_floors = 0;  // components of lambda raised to the floor
  int s_floors = 0;       // components of s raised to the floor
  double lambda_floor = 0;
  double s_floor = 0;
  HandoffGap gap;
};

// z0 = z_dfg, s0 = |g(z_dfg)| = -[g]_- + [g]_+, lambda0 = lambda_dfg, with
// s0 floored at 1e-8 max(1, ||g||_inf) and lambda0 at 1e-8 max(1, ||lambda||_inf).
Handoff MakeHandoff(const QpInstance& inst, const VectorXd& z_dfg, const VectorXd& lambda_dfg);

struct SwitchCertificate {
  int k_switch = 0;
  double violation_at_switch = 0;
  double eta_d = 0;
  PrimalDualPoint handoff;
  double mu_at_handoff = 0;
  int lambda_floors = 0;
  int s_floors = 0;
  HandoffGap gap;
};

struct SolveReport {
  int phase1_iters = 0;
  int phase2_iters = 0;
  int damped_iters = 0;
  int pure_iters = 0;
  std::vector<DfgTraceRow> phase1_trace;
  std::vector<PdipTraceRow> phase2_trace;
  Termination termination = Termination::kConverged;
  double final_obj = 0;
  double final_gap = 0;
  // (1 / (2 m_d)) ||[g(z)]_+||^2 at the final iterate.
  double suboptimality_bound = 0;
  double infeasibility = 0;
  std::string message;
};

struct HybridCaps {
  int dfg_max_iters = 50000;
  bool record_trace = true;
};

struct HybridResult {
  VectorXd z;
  VectorXd lambda;
  SolveReport report;
  SwitchCertificate certificate;
};

// Throws std::invalid_argument unless cfg.epsilon < consts.eta_d.
HybridResult HybridSolve(const QpInstance& inst, const DualConstants& consts,
                         const PdipConfig& cfg, const HybridCaps& caps = {});

// Report for a plain interior-point run, for comparison with HybridSolve.
SolveReport MakeReport(const QpInstance& inst, const DualConstants* consts,
                       const PdipResult& pdip);
// Report for a standalone dual fast gradient run.
SolveReport MakeReport(const QpInstance& inst, const DualConstants& consts,
                       const DfgResult& dfg);

}  // namespace hyqp
