#include "hyqp/pdip_solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hyqp {

namespace {

constexpr double kMinStep = 1e-12;

PrimalDualPoint Advance(const PrimalDualPoint& pt, const NewtonDirection& dir, double rho) {
  return PrimalDualPoint{pt.z + rho * dir.dz, pt.lambda + rho * dir.dlambda, pt.s + rho * dir.ds};
}

bool StrictlyPositive(const PrimalDualPoint& pt) {
  return (pt.s.array() > 0).all() && (pt.lambda.array() > 0).all();
}

}  // namespace

void ValidatePdipConfig(const PdipConfig& cfg) {
  if (!(cfg.kappa > 0 && cfg.kappa < 1)) {
    throw std::invalid_argument("kappa must lie in (0, 1)");
  }
  if (!(cfg.alpha > 0 && cfg.alpha < 0.5)) {
    throw std::invalid_argument("alpha must lie in (0, 0.5)");
  }
  if (!(cfg.beta > 0 && cfg.beta < 1)) {
    throw std::invalid_argument("beta must lie in (0, 1)");
  }
  if (!(cfg.epsilon > 0) || !(cfg.feas_tol > 0)) {
    throw std::invalid_argument("tolerances must be positive");
  }
  if (!(cfg.fraction_to_boundary > 0 && cfg.fraction_to_boundary < 1)) {
    throw std::invalid_argument("fraction_to_boundary must lie in (0, 1)");
  }
  if (cfg.max_iters < 1) {
    throw std::invalid_argument("max_iters must be at least 1");
  }
}

double KktResidual::Norm() const {
  return std::sqrt(r_dual.squaredNorm() + r_pri.squaredNorm() + r_cent.squaredNorm());
}

KktResidual Residual(const QpInstance& inst, const PrimalDualPoint& pt, double tau) {
  const CondensedQp& qp = inst.data();
  KktResidual r;
  r.r_dual = qp.H * pt.z + inst.linear_term() + qp.G.transpose() * pt.lambda;
  r.r_pri = EvalConstraints(inst, pt.z) + pt.s;
  r.r_cent = pt.s.cwiseProduct(pt.lambda).array() - tau;
  r.tau = tau;
  r.mu = pt.s.dot(pt.lambda) / static_cast<double>(inst.m());
  return r;
}

NewtonDirection SolveNewton(const QpInstance& inst, const PrimalDualPoint& pt,
                            const KktResidual& res) {
  const CondensedQp& qp = inst.data();
  const VectorXd w = pt.lambda.cwiseQuotient(pt.s);  // S^{-1} Lambda
  MatrixXd reduced = qp.H;
  reduced.noalias() += qp.G.transpose() * w.asDiagonal() * qp.G;
  const Eigen::LLT<MatrixXd> llt(reduced);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("reduced Newton matrix is not positive definite");
  }
  const VectorXd t = (pt.lambda.cwiseProduct(res.r_pri) - res.r_cent).cwiseQuotient(pt.s);
  NewtonDirection d;
  d.dz = llt.solve(-(res.r_dual + qp.G.transpose() * t));
  // Second block row: G dz + ds = -r_pri.
  d.ds = -res.r_pri - qp.G * d.dz;
  // Third block row: S dlambda + Lambda ds = -r_cent.
  d.dlambda = -(res.r_cent + pt.lambda.cwiseProduct(d.ds)).cwiseQuotient(pt.s);
  return d;
}

double MaxPositiveStep(const PrimalDualPoint& pt, const NewtonDirection& dir) {
  double step = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < pt.s.size(); ++i) {
    if (dir.ds[i] < 0) {
      step = std::min(step, -pt.s[i] / dir.ds[i]);
    }
    if (dir.dlambda[i] < 0) {
      step = std::min(step, -pt.lambda[i] / dir.dlambda[i]);
    }
  }
  return step;
}

LineSearchResult Backtrack(const QpInstance& inst, const PrimalDualPoint& pt,
                           const NewtonDirection& dir, const KktResidual& res,
                           const PdipConfig& cfg) {
  LineSearchResult out;
  out.rho_max = std::min(1.0, cfg.fraction_to_boundary * MaxPositiveStep(pt, dir));
  double rho = out.rho_max;

  const double r0 = res.Norm();
  const double f0 = EvalObjective(inst, pt.z);
  const double slope =
      (inst.data().H * pt.z + inst.linear_term()).dot(dir.dz);  // grad f0(z)'dz

  while (rho >= kMinStep) {
    const PrimalDualPoint trial = Advance(pt, dir, rho);
    if (StrictlyPositive(trial)) {
      bool accept = false;
      if (cfg.merit == MeritRule::kResidualNorm) {
        accept = Residual(inst, trial, res.tau).Norm() <= (1 - cfg.alpha * rho) * r0;
      } else {
        accept = EvalObjective(inst, trial.z) <= f0 + cfg.alpha * rho * slope;
      }
      if (accept) {
        out.rho = rho;
        return out;
      }
    }
    rho *= cfg.beta;
  }
  out.ok = false;
  out.rho = rho;
  return out;
}

const char* ToString(StepPhase phase) { return phase == StepPhase::kPure ? "pure" : "damped"; }

const char* ToString(Termination t) {
  switch (t) {
    case Termination::kConverged:
      return "converged";
    case Termination::kCap:
      return "cap";
    case Termination::kSwitchPremature:
      return "switch_premature";
    case Termination::kLineSearchFail:
      return "linesearch_fail";
    case Termination::kFactorizationFail:
      return "factorization_fail";
  }
  return "unknown";
}

PdipResult RunPdip(const QpInstance& inst, const PrimalDualPoint& init, const PdipConfig& cfg,
                   const PdipOptions& options) {
  ValidatePdipConfig(cfg);
  if (init.z.size() != inst.n() || init.lambda.size() != inst.m() || init.s.size() != inst.m()) {
    throw std::invalid_argument("initial point has wrong dimensions");
  }
  if (!StrictlyPositive(init)) {
    throw std::invalid_argument("initial point needs s > 0 and lambda > 0");
  }

  const auto start = std::chrono::steady_clock::now();
  PdipResult result;
  PrimalDualPoint pt = init;
  int consecutive_cuts = 0;
  bool premature = false;

  auto finish = [&](Termination t) {
    const KktResidual r = Residual(inst, pt, 0.0);
    result.point = pt;
    result.final_mu = r.mu;
    result.r_dual_norm = r.r_dual.norm();
    result.r_pri_norm = r.r_pri.norm();
    if (premature && t == Termination::kConverged) {
      t = Termination::kSwitchPremature;
    }
    result.termination = t;
    return result;
  };

  for (int k = 0;; ++k) {
    const double mu = pt.s.dot(pt.lambda) / static_cast<double>(inst.m());
    const KktResidual res = Residual(inst, pt, cfg.kappa * mu);
    if (mu <= cfg.epsilon && res.r_dual.norm() <= cfg.feas_tol &&
        res.r_pri.norm() <= cfg.feas_tol) {
      return finish(Termination::kConverged);
    }
    if (k >= cfg.max_iters) {
      return finish(Termination::kCap);
    }

    NewtonDirection dir;
    try {
      dir = SolveNewton(inst, pt, res);
    } catch (const std::runtime_error& e) {
      result.message = e.what();
      return finish(Termination::kFactorizationFail);
    }

    double rho = 1;
    if (options.pure_newton) {
      rho = std::min(1.0, cfg.fraction_to_boundary * MaxPositiveStep(pt, dir));
      consecutive_cuts = rho < 0.5 ? consecutive_cuts + 1 : 0;
      if (consecutive_cuts >= 3) {
        premature = true;
      }
    } else {
      const LineSearchResult ls = Backtrack(inst, pt, dir, res, cfg);
      if (!ls.ok) {
        result.message = "step size underflow in backtracking";
        return finish(Termination::kLineSearchFail);
      }
      rho = ls.rho;
    }

    PdipTraceRow row;
    row.k = k;
    row.phase = rho < 1.0 ? StepPhase::kDamped : StepPhase::kPure;
    row.rho = rho;
    row.mu = mu;
    row.tau = res.tau;
    row.r_dual_norm = res.r_dual.norm();
    row.r_pri_norm = res.r_pri.norm();
    row.r_cent_norm = res.r_cent.norm();
    row.obj = EvalObjective(inst, pt.z);

    pt = Advance(pt, dir, rho);
    ++result.iterations;
    if (row.phase == StepPhase::kDamped) {
      ++result.damped_iters;
    } else {
      ++result.pure_iters;
    }
    if (options.record_trace) {
      row.residual_after = Residual(inst, pt, res.tau).Norm();
      row.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
      result.trace.push_back(row);
    }
  }
}

}  // namespace hyqp
