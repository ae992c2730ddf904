// Dual fast gradient method. Runs Nesterov's accelerated projected gradient
// ascent on the dual function
//
//   d(lambda) = min_z 1/2 z'Hz + (h x)'z + lambda'(G z + E x + g),
//
// whose gradient is g(z(lambda)) and whose gradient Lipschitz constant is
// L_d = ||G H^{-1} G'||_2. The inner minimization is solved exactly.
#pragma once

#include <cstdint>
#include <vector>

#include "hyqp/qp_core.hpp"

namespace hyqp {

// z(lambda) = -H^{-1}(h x + G' lambda)
VectorXd InnerMinimize(const QpInstance& inst, const VectorXd& lambda);
// grad d(lambda) = g(z(lambda)); takes the inner minimizer.
VectorXd DualGradient(const QpInstance& inst, const VectorXd& z);
// d(lambda), evaluated through the inner minimizer.
double DualValue(const QpInstance& inst, const VectorXd& lambda);

struct DfgState {
  VectorXd lambda;      // lambda_k, the point the next gradient is taken at
  VectorXd lambda_hat;  // projected ascent point from the last step
  VectorXd grad_accum;  // sum_j (j+1)/2 grad d(lambda_j)
  VectorXd z;           // inner minimizer at the last gradient point
  VectorXd grad;        // gradient at the last gradient point
  int k = 0;
};

// lambda_0 = lambda_hat_0 = lambda0, empty accumulator.
DfgState InitialDfgState(const QpInstance& inst, const VectorXd& lambda0);

// One iteration:
//   z_k         = z(lambda_k)
//   lambda_hat  = [lambda_k + grad/L_d]_+
//   lambda_k+1  = (k+1)/(k+3) lambda_hat + 2/(L_d (k+3)) [sum_j (j+1)/2 grad_j]_+
DfgState DfgStep(const DfgState& state, const QpInstance& inst, double l_d);

enum class DfgStopKind {
  kSwitch,  // ||[g(z_k)]_+||_2 <= threshold
  kGap,     // f0(z_k) - d(lambda_hat_k) <= threshold and ||[g(z_k)]_+||_2 <= threshold
};

struct DfgStopRule {
  DfgStopKind kind = DfgStopKind::kSwitch;
  double threshold = 0;
  int max_iters = 50000;
};

struct DfgTraceRow {
  int k = 0;
  double d_lambda_hat = 0;
  double primal_obj = 0;
  double pos_violation_norm = 0;
  std::int64_t wall_ns = 0;
};

enum class DfgStatus { kConverged, kCapExceeded };

struct DfgResult {
  DfgStatus status = DfgStatus::kConverged;
  VectorXd z;           // z_k at termination
  VectorXd lambda_hat;  // lambda_hat_k, paired with z_k
  int iterations = 0;   // k at which the rule fired (or the cap)
  double violation = 0;
  double gap = 0;       // f0(z) - d(lambda_hat); only filled when computed
  std::vector<DfgTraceRow> trace;
};

struct DfgOptions {
  bool record_trace = true;
};

// Iterates DfgStep until the stop rule holds at z_k. On the cap the last
// iterate is returned with kCapExceeded.
DfgResult RunDfg(const QpInstance& inst, const DualConstants& consts, const VectorXd& lambda0,
                 const DfgStopRule& stop, const DfgOptions& options = {});

}  // namespace hyqp
