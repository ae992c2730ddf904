#include "hyqp/reference_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hyqp/pdip_solver.hpp"

namespace hyqp {

namespace {

constexpr double kRcondTol = 1e-13;

double Binomial(Index n, Index k) {
  double r = 1;
  for (Index i = 1; i <= k; ++i) {
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return r;
}

double FeasTol(const QpInstance& inst) {
  return 1e-9 * (1 + inst.constraint_offset().cwiseAbs().maxCoeff());
}

bool Acceptable(const QpInstance& inst, const KktPoint& p) {
  const double lam_tol = 1e-10 * (1 + p.lambda.cwiseAbs().maxCoeff());
  if (p.lambda.minCoeff() < -lam_tol) {
    return false;
  }
  return EvalConstraints(inst, p.z).maxCoeff() <= FeasTol(inst);
}

// Advances idx to the next k-combination of {0..m-1} in lexicographic order.
bool NextCombination(std::vector<Index>& idx, Index m) {
  const Index k = static_cast<Index>(idx.size());
  for (Index i = k - 1; i >= 0; --i) {
    if (idx[i] < m - k + i) {
      ++idx[i];
      for (Index j = i + 1; j < k; ++j) {
        idx[j] = idx[j - 1] + 1;
      }
      return true;
    }
  }
  return false;
}

OracleResult Finish(const QpInstance& inst, const KktPoint& p, std::vector<Index> active,
                    const char* method, double tol) {
  OracleResult r;
  r.z = p.z;
  r.lambda = p.lambda;
  r.active = std::move(active);
  r.method = method;
  r.kkt_error = KktError(inst, p.z, p.lambda);
  r.status = r.kkt_error <= tol ? OracleStatus::kOptimal : OracleStatus::kFailed;
  return r;
}

OracleResult Enumerate(const QpInstance& inst, const OracleOptions& options) {
  const Index m = inst.m();
  const Index max_k = std::min(inst.n(), m);
  for (Index k = 0; k <= max_k; ++k) {
    std::vector<Index> idx(k);
    std::iota(idx.begin(), idx.end(), Index{0});
    do {
      const std::optional<KktPoint> p = SolveActiveSet(inst, idx);
      if (p && Acceptable(inst, *p)) {
        return Finish(inst, *p, idx, "enumeration", options.kkt_tol);
      }
    } while (k > 0 && NextCombination(idx, m));
  }
  OracleResult r;
  r.status = OracleStatus::kInfeasible;
  r.method = "enumeration";
  return r;
}

// Greedily keeps a linearly independent subset, in the given order.
std::vector<Index> IndependentSubset(const QpInstance& inst, const std::vector<Index>& order) {
  std::vector<Index> kept;
  for (Index i : order) {
    kept.push_back(i);
    if (!SolveActiveSet(inst, kept)) {
      kept.pop_back();
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

OracleResult InteriorPointThenActiveSet(const QpInstance& inst, const OracleOptions& options) {
  const Index m = inst.m();
  PdipConfig cfg;
  cfg.epsilon = 1e-12;
  cfg.feas_tol = 1e-10 * (1 + inst.linear_term().norm() + inst.constraint_offset().norm());
  cfg.max_iters = 500;
  PrimalDualPoint start;
  start.z = inst.unconstrained_minimizer();
  start.lambda = VectorXd::Ones(m);
  start.s = EvalConstraints(inst, start.z).cwiseAbs().cwiseMax(1.0);
  const PdipResult ip = RunPdip(inst, start, cfg, PdipOptions{false, false});

  std::vector<Index> order;
  for (Index i = 0; i < m; ++i) {
    if (ip.point.lambda[i] > ip.point.s[i]) {
      order.push_back(i);
    }
  }
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return ip.point.lambda[a] > ip.point.lambda[b]; });
  std::vector<Index> active = IndependentSubset(inst, order);

  // Primal-dual active-set repair for misidentified rows near degeneracy.
  for (int round = 0; round < 4 * static_cast<int>(m) + 10; ++round) {
    const std::optional<KktPoint> p = SolveActiveSet(inst, active);
    if (!p) {
      break;
    }
    Index worst_lambda = -1;
    double min_lambda = -1e-10 * (1 + p->lambda.cwiseAbs().maxCoeff());
    for (Index i : active) {
      if (p->lambda[i] < min_lambda) {
        min_lambda = p->lambda[i];
        worst_lambda = i;
      }
    }
    if (worst_lambda >= 0) {
      active.erase(std::find(active.begin(), active.end(), worst_lambda));
      continue;
    }
    const VectorXd gz = EvalConstraints(inst, p->z);
    Index worst_g = -1;
    double max_g = FeasTol(inst);
    for (Index i = 0; i < m; ++i) {
      if (gz[i] > max_g && std::find(active.begin(), active.end(), i) == active.end()) {
        max_g = gz[i];
        worst_g = i;
      }
    }
    if (worst_g < 0) {
      return Finish(inst, *p, active, "interior_point+active_set", options.kkt_tol);
    }
    active.push_back(worst_g);
    std::sort(active.begin(), active.end());
    if (!SolveActiveSet(inst, active)) {
      break;
    }
  }

  OracleResult r;
  r.status = OracleStatus::kFailed;
  r.method = "interior_point+active_set";
  r.z = ip.point.z;
  r.lambda = ip.point.lambda;
  r.kkt_error = KktError(inst, r.z, r.lambda);
  return r;
}

}  // namespace

const char* ToString(OracleStatus status) {
  switch (status) {
    case OracleStatus::kOptimal:
      return "optimal";
    case OracleStatus::kInfeasible:
      return "infeasible";
    case OracleStatus::kFailed:
      return "failed";
  }
  return "unknown";
}

std::optional<KktPoint> SolveActiveSet(const QpInstance& inst, const std::vector<Index>& active) {
  const Index m = inst.m();
  KktPoint p;
  p.lambda = VectorXd::Zero(m);
  if (active.empty()) {
    p.z = inst.unconstrained_minimizer();
    return p;
  }
  const Index k = static_cast<Index>(active.size());
  const MatrixXd& hinv_gt = inst.problem().hinv_gt();
  const MatrixXd& G = inst.data().G;
  MatrixXd ga(k, inst.n());
  MatrixXd hga(inst.n(), k);
  VectorXd rhs(k);
  for (Index j = 0; j < k; ++j) {
    ga.row(j) = G.row(active[j]);
    hga.col(j) = hinv_gt.col(active[j]);
    rhs[j] = inst.constraint_offset()[active[j]];
  }
  // G_A z + c_A = 0 with z = z_ls - H^{-1} G_A' lambda_A.
  rhs += ga * inst.unconstrained_minimizer();
  MatrixXd schur = ga * hga;
  schur = 0.5 * (schur + schur.transpose()).eval();
  const Eigen::LLT<MatrixXd> llt(schur);
  if (llt.info() != Eigen::Success || llt.rcond() < kRcondTol) {
    return std::nullopt;
  }
  const VectorXd lam = llt.solve(rhs);
  p.z = inst.unconstrained_minimizer() - hga * lam;
  for (Index j = 0; j < k; ++j) {
    p.lambda[active[j]] = lam[j];
  }
  return p;
}

double KktError(const QpInstance& inst, const VectorXd& z, const VectorXd& lambda) {
  const CondensedQp& qp = inst.data();
  const VectorXd grad = qp.H * z + inst.linear_term();
  const VectorXd gz = EvalConstraints(inst, z);
  const double lam_scale = 1 + lambda.cwiseAbs().maxCoeff();
  const double stat = (grad + qp.G.transpose() * lambda).cwiseAbs().maxCoeff() /
                      (1 + inst.linear_term().cwiseAbs().maxCoeff() +
                       (qp.G.transpose() * lambda).cwiseAbs().maxCoeff());
  const double g_scale = 1 + inst.constraint_offset().cwiseAbs().maxCoeff();
  const double primal = std::max(0.0, gz.maxCoeff()) / g_scale;
  const double dual = std::max(0.0, -lambda.minCoeff()) / lam_scale;
  const double comp = lambda.cwiseProduct(gz).cwiseAbs().maxCoeff() / (lam_scale * g_scale);
  return std::max({stat, primal, dual, comp});
}

OracleResult SolveReference(const QpInstance& inst, const OracleOptions& options) {
  const Index max_k = std::min(inst.n(), inst.m());
  double subsets = 0;
  for (Index k = 0; k <= max_k; ++k) {
    subsets += Binomial(inst.m(), k);
  }
  if (inst.m() <= options.max_enumeration_m && subsets <= options.max_subsets) {
    return Enumerate(inst, options);
  }
  return InteriorPointThenActiveSet(inst, options);
}

}  // namespace hyqp
