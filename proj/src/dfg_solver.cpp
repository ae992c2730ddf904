#include "hyqp/dfg_solver.hpp"

#include <chrono>
#include <stdexcept>

namespace hyqp {

VectorXd InnerMinimize(const QpInstance& inst, const VectorXd& lambda) {
  return inst.unconstrained_minimizer() - inst.problem().hinv_gt() * lambda;
}

VectorXd DualGradient(const QpInstance& inst, const VectorXd& z) {
  return EvalConstraints(inst, z);
}

double DualValue(const QpInstance& inst, const VectorXd& lambda) {
  const VectorXd z = InnerMinimize(inst, lambda);
  return EvalObjective(inst, z) + lambda.dot(EvalConstraints(inst, z));
}

DfgState InitialDfgState(const QpInstance& inst, const VectorXd& lambda0) {
  if (lambda0.size() != inst.m()) {
    throw std::invalid_argument("lambda0 has wrong dimension");
  }
  if ((lambda0.array() < 0).any()) {
    throw std::invalid_argument("lambda0 must be nonnegative");
  }
  DfgState s;
  s.lambda = lambda0;
  s.lambda_hat = lambda0;
  s.grad_accum = VectorXd::Zero(inst.m());
  s.z = InnerMinimize(inst, lambda0);
  s.grad = DualGradient(inst, s.z);
  s.k = 0;
  return s;
}

DfgState DfgStep(const DfgState& state, const QpInstance& inst, double l_d) {
  DfgState next;
  const double k = state.k;
  next.z = InnerMinimize(inst, state.lambda);
  next.grad = DualGradient(inst, next.z);
  next.lambda_hat = ProjectNonneg(state.lambda + next.grad / l_d);
  next.grad_accum = state.grad_accum + 0.5 * (k + 1) * next.grad;
  next.lambda = ((k + 1) / (k + 3)) * next.lambda_hat +
                (2.0 / (l_d * (k + 3))) * ProjectNonneg(next.grad_accum);
  next.k = state.k + 1;
  return next;
}

DfgResult RunDfg(const QpInstance& inst, const DualConstants& consts, const VectorXd& lambda0,
                 const DfgStopRule& stop, const DfgOptions& options) {
  if (!(consts.L_d > 0)) {
    throw std::invalid_argument("L_d must be positive");
  }
  if (stop.max_iters < 1) {
    throw std::invalid_argument("max_iters must be at least 1");
  }
  const auto start = std::chrono::steady_clock::now();
  const bool need_gap = stop.kind == DfgStopKind::kGap || options.record_trace;

  DfgResult result;
  DfgState state = InitialDfgState(inst, lambda0);
  for (int k = 0; k < stop.max_iters; ++k) {
    state = DfgStep(state, inst, consts.L_d);
    const double violation = ProjectNonneg(state.grad).norm();
    double primal = 0;
    double dual = 0;
    if (need_gap) {
      primal = EvalObjective(inst, state.z);
      dual = DualValue(inst, state.lambda_hat);
    }
    if (options.record_trace) {
      const auto now = std::chrono::steady_clock::now();
      result.trace.push_back(DfgTraceRow{
          k, dual, primal, violation,
          std::chrono::duration_cast<std::chrono::nanoseconds>(now - start).count()});
    }

    bool done = violation <= stop.threshold;
    if (stop.kind == DfgStopKind::kGap) {
      done = done && primal - dual <= stop.threshold;
    }
    result.z = state.z;
    result.lambda_hat = state.lambda_hat;
    result.iterations = k;
    result.violation = violation;
    result.gap = primal - dual;
    if (done) {
      result.status = DfgStatus::kConverged;
      return result;
    }
  }
  result.status = DfgStatus::kCapExceeded;
  result.iterations = stop.max_iters;
  return result;
}

}  // namespace hyqp
