// Infeasible-start primal-dual interior-point method. Newton steps on the
// relaxed KKT residual
//
//   r_dual = H z + h x + G' lambda
//   r_pri  = G z + E x + g + s
//   r_cent = S lambda - tau 1
//
// with tau = kappa * mu and mu = s'lambda / m.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyqp/qp_core.hpp"

namespace hyqp {

enum class MeritRule {
  kResidualNorm,  // ||r_tau(zeta + rho dzeta)|| <= (1 - alpha rho) ||r_tau(zeta)||
  kObjective,     // f0(z + rho dz) <= f0(z) + alpha rho grad f0(z)'dz
};

struct PdipConfig {
  double kappa = 0.1;
  double alpha = 1.0 / 3.0;
  double beta = 0.5;
  double epsilon = 1e-6;   // stop once mu <= epsilon ...
  double feas_tol = 1e-6;  // ... and ||r_dual||, ||r_pri|| <= feas_tol
  int max_iters = 200;
  double fraction_to_boundary = 0.99;
  MeritRule merit = MeritRule::kResidualNorm;
};

// Throws std::invalid_argument when a parameter is out of range.
void ValidatePdipConfig(const PdipConfig& cfg);

struct KktResidual {
  VectorXd r_dual;
  VectorXd r_pri;
  VectorXd r_cent;
  double tau = 0;
  double mu = 0;

  double Norm() const;
};

KktResidual Residual(const QpInstance& inst, const PrimalDualPoint& pt, double tau);

struct NewtonDirection {
  VectorXd dz;
  VectorXd dlambda;
  VectorXd ds;
};

// Solves the linearized residual by block elimination:
//   (H + G' S^{-1} Lambda G) dz = -(r_dual + G' S^{-1}(Lambda r_pri - r_cent))
// then back-substitutes for dlambda and ds. Throws std::runtime_error if the
// reduced matrix cannot be factorized.
NewtonDirection SolveNewton(const QpInstance& inst, const PrimalDualPoint& pt,
                            const KktResidual& res);

// Largest step in (0, inf) keeping s + a ds >= 0 and lambda + a dlambda >= 0;
// infinity when no component decreases.
double MaxPositiveStep(const PrimalDualPoint& pt, const NewtonDirection& dir);

struct LineSearchResult {
  bool ok = true;
  double rho = 1;
  double rho_max = 1;
};

// Backtracks from rho_max = min(1, fraction_to_boundary * MaxPositiveStep)
// by factors of beta until the merit test holds. Fails below 1e-12.
LineSearchResult Backtrack(const QpInstance& inst, const PrimalDualPoint& pt,
                           const NewtonDirection& dir, const KktResidual& res,
                           const PdipConfig& cfg);

enum class StepPhase { kDamped, kPure };
const char* ToString(StepPhase phase);

struct PdipTraceRow {
  int k = 0;
  StepPhase phase = StepPhase::kPure;
  double rho = 0;
  double mu = 0;  // at the iterate the step starts from
  double tau = 0;
  double r_dual_norm = 0;
  double r_pri_norm = 0;
  double r_cent_norm = 0;
  double obj = 0;
  std::int64_t wall_ns = 0;
  // ||r_tau(zeta_{k+1})|| with the same tau; not part of the CSV.
  double residual_after = 0;
};

enum class Termination {
  kConverged,
  kCap,
  kSwitchPremature,
  kLineSearchFail,
  kFactorizationFail,
};
const char* ToString(Termination t);

struct PdipResult {
  PrimalDualPoint point;
  Termination termination = Termination::kConverged;
  int iterations = 0;
  int damped_iters = 0;
  int pure_iters = 0;
  double final_mu = 0;
  double r_dual_norm = 0;
  double r_pri_norm = 0;
  std::string message;
  std::vector<PdipTraceRow> trace;
};

struct PdipOptions {
  bool pure_newton = false;
  bool record_trace = true;
};

// Path-following loop. With pure_newton the step is always 1, cut only by the
// fraction-to-boundary rule; three consecutive cuts below 0.5 flag the run
// as kSwitchPremature (it still runs to completion).
PdipResult RunPdip(const QpInstance& inst, const PrimalDualPoint& init, const PdipConfig& cfg,
                   const PdipOptions& options = {});

}  // namespace hyqp
