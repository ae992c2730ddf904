#include "hyqp/hybrid_solver.hpp"

#include <algorithm>
#include <stdexcept>

namespace hyqp {

namespace {

constexpr double kFloorScale = 1e-8;

void FillFinal(const QpInstance& inst, const DualConstants* consts, const VectorXd& z,
               SolveReport* report) {
  report->final_obj = EvalObjective(inst, z);
  report->infeasibility = PositiveViolation(inst, z);
  if (consts != nullptr && consts->m_d > 0) {
    report->suboptimality_bound =
        report->infeasibility * report->infeasibility / (2 * consts->m_d);
  }
}

}  // namespace

bool SwitchCondition(const QpInstance& inst, const VectorXd& z, double eta_d) {
  return PositiveViolation(inst, z) <= eta_d;
}

Handoff MakeHandoff(const QpInstance& inst, const VectorXd& z_dfg, const VectorXd& lambda_dfg) {
  if (lambda_dfg.size() != inst.m()) {
    throw std::invalid_argument("lambda has wrong dimension");
  }
  const VectorXd gz = EvalConstraints(inst, z_dfg);
  const VectorXd abs_g = gz.cwiseAbs();

  Handoff h;
  h.s_floor = kFloorScale * std::max(1.0, abs_g.maxCoeff());
  h.lambda_floor = kFloorScale * std::max(1.0, lambda_dfg.cwiseAbs().maxCoeff());
  h.point.z = z_dfg;
  h.point.s = abs_g;
  h.point.lambda = lambda_dfg;
  for (Index i = 0; i < inst.m(); ++i) {
    if (h.point.s[i] < h.s_floor) {
      h.point.s[i] = h.s_floor;
      ++h.s_floors;
    }
    if (h.point.lambda[i] < h.lambda_floor) {
      h.point.lambda[i] = h.lambda_floor;
      ++h.lambda_floors;
    }
  }

  const VectorXd& lam = h.point.lambda;
  h.gap.total = h.point.s.dot(lam);
  h.gap.positive_part = ProjectNonneg(gz).dot(lam);
  h.gap.negative_part = ProjectNonneg(-gz).dot(lam);
  h.gap.floor_correction = (h.point.s - abs_g).dot(lam);
  return h;
}

HybridResult HybridSolve(const QpInstance& inst, const DualConstants& consts,
                         const PdipConfig& cfg, const HybridCaps& caps) {
  ValidatePdipConfig(cfg);
  if (!(cfg.epsilon < consts.eta_d)) {
    throw std::invalid_argument("hybrid solve requires epsilon < eta_d");
  }

  HybridResult out;
  SolveReport& report = out.report;

  const DfgStopRule rule{DfgStopKind::kSwitch, consts.eta_d, caps.dfg_max_iters};
  DfgResult dfg =
      RunDfg(inst, consts, VectorXd::Zero(inst.m()), rule, DfgOptions{caps.record_trace});
  report.phase1_iters = dfg.iterations;
  report.phase1_trace = std::move(dfg.trace);
  out.certificate.eta_d = consts.eta_d;
  out.certificate.k_switch = dfg.iterations;
  out.certificate.violation_at_switch = dfg.violation;

  if (dfg.status == DfgStatus::kCapExceeded) {
    out.z = dfg.z;
    out.lambda = dfg.lambda_hat;
    report.termination = Termination::kCap;
    report.message = "dual fast gradient reached its cap before the switch";
    FillFinal(inst, &consts, out.z, &report);
    return out;
  }

  const Handoff handoff = MakeHandoff(inst, dfg.z, dfg.lambda_hat);
  out.certificate.handoff = handoff.point;
  out.certificate.mu_at_handoff =
      handoff.point.s.dot(handoff.point.lambda) / static_cast<double>(inst.m());
  out.certificate.lambda_floors = handoff.lambda_floors;
  out.certificate.s_floors = handoff.s_floors;
  out.certificate.gap = handoff.gap;

  PdipResult pdip =
      RunPdip(inst, handoff.point, cfg, PdipOptions{/*pure_newton=*/true, caps.record_trace});
  out.z = pdip.point.z;
  out.lambda = pdip.point.lambda;
  report.phase2_iters = pdip.iterations;
  report.damped_iters = pdip.damped_iters;
  report.pure_iters = pdip.pure_iters;
  report.phase2_trace = std::move(pdip.trace);
  report.termination = pdip.termination;
  report.final_gap = pdip.final_mu;
  report.message = pdip.message;
  FillFinal(inst, &consts, out.z, &report);
  return out;
}

SolveReport MakeReport(const QpInstance& inst, const DualConstants* consts,
                       const PdipResult& pdip) {
  SolveReport report;
  report.phase2_iters = pdip.iterations;
  report.damped_iters = pdip.damped_iters;
  report.pure_iters = pdip.pure_iters;
  report.phase2_trace = pdip.trace;
  report.termination = pdip.termination;
  report.final_gap = pdip.final_mu;
  report.message = pdip.message;
  FillFinal(inst, consts, pdip.point.z, &report);
  return report;
}

SolveReport MakeReport(const QpInstance& inst, const DualConstants& consts,
                       const DfgResult& dfg) {
  SolveReport report;
  report.phase1_iters = dfg.iterations;
  report.phase1_trace = dfg.trace;
  report.termination =
      dfg.status == DfgStatus::kConverged ? Termination::kConverged : Termination::kCap;
  // No slacks in the dual method: the gap is f0(z) - d(lambda_hat).
  report.final_gap = dfg.gap;
  FillFinal(inst, &consts, dfg.z, &report);
  return report;
}

}  // namespace hyqp
