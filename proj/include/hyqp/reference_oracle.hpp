// Exact reference solutions used to check the iterative solvers.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hyqp/qp_core.hpp"

namespace hyqp {

enum class OracleStatus { kOptimal, kInfeasible, kFailed };
const char* ToString(OracleStatus status);

struct OracleResult {
  OracleStatus status = OracleStatus::kFailed;
  VectorXd z;
  VectorXd lambda;
  std::vector<Index> active;
  std::string method;  // "enumeration" or "interior_point+active_set"
  double kkt_error = 0;
};

struct KktPoint {
  VectorXd z;
  VectorXd lambda;  // full length m, zero off the active set
};

// Solves the equality-constrained problem with the given rows held active:
// min f0 s.t. G_A z + c_A = 0. Returns nullopt if G_A is rank deficient.
std::optional<KktPoint> SolveActiveSet(const QpInstance& inst, const std::vector<Index>& active);

// Largest violation of the KKT conditions (stationarity, primal and dual
// feasibility, complementarity), each scaled by 1 + the size of its data.
double KktError(const QpInstance& inst, const VectorXd& z, const VectorXd& lambda);

struct OracleOptions {
  // Enumerate when m <= this and the number of subsets of size <= n stays
  // below max_subsets.
  Index max_enumeration_m = 24;
  double max_subsets = 2e6;
  double kkt_tol = 1e-8;
};

// Small problems: enumerate candidate active sets of size <= min(n, m) and
// return the first KKT point. Larger problems: a tight interior-point run
// identifies the active set, which is then solved exactly and KKT-checked.
OracleResult SolveReference(const QpInstance& inst, const OracleOptions& options = {});

}  // namespace hyqp
