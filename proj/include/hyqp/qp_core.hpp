// Problem data for inequality-constrained QPs in condensed MPC form:
//
//   minimize    1/2 z'Hz + (h x)'z
//   subject to  G z + E x + g <= 0
//
// where x is the measured state that parameterizes the problem.
#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace hyqp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Raw problem data. Dimensions are implied by the matrices.
struct CondensedQp {
  MatrixXd H;  // n x n
  MatrixXd h;  // n x n_x
  MatrixXd G;  // m x n
  MatrixXd E;  // m x n_x
  VectorXd g;  // m

  Index n() const { return H.rows(); }
  Index m() const { return G.rows(); }
  Index n_x() const { return h.cols(); }
};

enum class ValidationErrorKind {
  kDimensionMismatch,
  kEmpty,
  kNonFinite,
  kAsymmetric,
  kNotPositiveDefinite,
};

const char* ToString(ValidationErrorKind kind);

struct ValidationResult {
  bool ok = true;
  ValidationErrorKind kind = ValidationErrorKind::kDimensionMismatch;
  std::string message;

  explicit operator bool() const { return ok; }
};

class ValidationError : public std::runtime_error {
 public:
  ValidationError(ValidationErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ValidationErrorKind kind() const { return kind_; }

 private:
  ValidationErrorKind kind_;
};

// Checks the invariants of a CondensedQp and reports the first one violated.
// H must be symmetric to 1e-12 (relative, elementwise) and positive definite.
ValidationResult Validate(const CondensedQp& qp);

// A validated problem with the factorizations every solver shares. H and G do
// not depend on the state, so this is built once per controller and reused.
class Problem {
 public:
  // Throws ValidationError if the data is invalid.
  explicit Problem(CondensedQp data);

  const CondensedQp& data() const { return data_; }
  const Eigen::LLT<MatrixXd>& cholesky() const { return llt_; }
  // H^{-1} G', n x m.
  const MatrixXd& hinv_gt() const { return hinv_gt_; }

  Index n() const { return data_.n(); }
  Index m() const { return data_.m(); }
  Index n_x() const { return data_.n_x(); }

 private:
  CondensedQp data_;
  Eigen::LLT<MatrixXd> llt_;
  MatrixXd hinv_gt_;
};

// A problem bound to a concrete state. Caches the state-dependent terms.
class QpInstance {
 public:
  // Throws std::invalid_argument on a state of the wrong size.
  QpInstance(std::shared_ptr<const Problem> problem, VectorXd x_t);

  const Problem& problem() const { return *problem_; }
  const std::shared_ptr<const Problem>& problem_ptr() const { return problem_; }
  const CondensedQp& data() const { return problem_->data(); }
  const VectorXd& x_t() const { return x_t_; }

  // h x_t
  const VectorXd& linear_term() const { return linear_term_; }
  // E x_t + g
  const VectorXd& constraint_offset() const { return constraint_offset_; }
  // Minimizer of the unconstrained problem, -H^{-1} h x_t.
  const VectorXd& unconstrained_minimizer() const { return z_ls_; }

  Index n() const { return problem_->n(); }
  Index m() const { return problem_->m(); }

 private:
  std::shared_ptr<const Problem> problem_;
  VectorXd x_t_;
  VectorXd linear_term_;
  VectorXd constraint_offset_;
  VectorXd z_ls_;
};

struct DualConstants {
  double L_d = 0;   // ||G H^{-1} G'||_2, Lipschitz constant of the dual gradient
  double m_d = 0;   // ||G||_2^2 / sigma_max(H)
  double M_d = 0;   // ||G||_2^2 / sigma_min(H)
  double L_dH = 0;  // user-chosen Lipschitz constant of the dual Hessian
  double eta_d = 0; // switch threshold m_d^2 / L_dH
};

// Power iteration on G H^{-1} G' (applied implicitly) for L_d; symmetric
// eigendecomposition of H for the curvature bounds. Throws std::runtime_error
// if the power iteration does not converge, which happens for G = 0.
DualConstants ComputeDualConstants(const Problem& problem, double l_dh);

// Iterate of the primal-dual method: z, multipliers and slacks.
struct PrimalDualPoint {
  VectorXd z;
  VectorXd lambda;
  VectorXd s;
};

// G z + E x_t + g
VectorXd EvalConstraints(const QpInstance& inst, const VectorXd& z);
// 1/2 z'Hz + (h x_t)'z
double EvalObjective(const QpInstance& inst, const VectorXd& z);
// Elementwise max(v, 0).
VectorXd ProjectNonneg(const VectorXd& v);
// ||[G z + E x_t + g]_+||_2
double PositiveViolation(const QpInstance& inst, const VectorXd& z);

}  // namespace hyqp
