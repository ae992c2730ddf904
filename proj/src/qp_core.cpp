#include "hyqp/qp_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <utility>

#include <Eigen/Eigenvalues>

namespace hyqp {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPowerTol = 1e-10;
constexpr int kPowerMaxIters = 10000;

ValidationResult Fail(ValidationErrorKind kind, std::string message) {
  return ValidationResult{false, kind, std::move(message)};
}

std::string Shape(const MatrixXd& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

}  // namespace

const char* ToString(ValidationErrorKind kind) {
  switch (kind) {
    case ValidationErrorKind::kDimensionMismatch:
      return "dimension_mismatch";
    case ValidationErrorKind::kEmpty:
      return "empty";
    case ValidationErrorKind::kNonFinite:
      return "non_finite";
    case ValidationErrorKind::kAsymmetric:
      return "asymmetric";
    case ValidationErrorKind::kNotPositiveDefinite:
      return "not_positive_definite";
  }
  return "unknown";
}

ValidationResult Validate(const CondensedQp& qp) {
  const Index n = qp.H.rows();
  const Index m = qp.G.rows();
  const Index nx = qp.h.cols();
  if (n < 1 || m < 1) {
    return Fail(ValidationErrorKind::kEmpty, "need n >= 1 and m >= 1, got H " + Shape(qp.H) +
                                                 " and G " + Shape(qp.G));
  }
  if (qp.H.cols() != n) {
    return Fail(ValidationErrorKind::kDimensionMismatch, "H must be square, got " + Shape(qp.H));
  }
  if (qp.h.rows() != n) {
    return Fail(ValidationErrorKind::kDimensionMismatch,
                "h must have " + std::to_string(n) + " rows, got " + Shape(qp.h));
  }
  if (qp.G.cols() != n) {
    return Fail(ValidationErrorKind::kDimensionMismatch,
                "G must have " + std::to_string(n) + " columns, got " + Shape(qp.G));
  }
  if (qp.E.rows() != m || qp.E.cols() != nx) {
    return Fail(ValidationErrorKind::kDimensionMismatch,
                "E must be " + std::to_string(m) + "x" + std::to_string(nx) + ", got " +
                    Shape(qp.E));
  }
  if (qp.g.size() != m) {
    return Fail(ValidationErrorKind::kDimensionMismatch,
                "g must have " + std::to_string(m) + " entries, got " +
                    std::to_string(qp.g.size()));
  }
  if (!qp.H.allFinite() || !qp.h.allFinite() || !qp.G.allFinite() || !qp.E.allFinite() ||
      !qp.g.allFinite()) {
    return Fail(ValidationErrorKind::kNonFinite, "problem data contains inf or nan");
  }

  const double scale = qp.H.cwiseAbs().maxCoeff();
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      const double a = qp.H(i, j);
      const double b = qp.H(j, i);
      const double tol = kSymmetryTol * std::max({std::abs(a), std::abs(b), 1e-3 * scale});
      if (std::abs(a - b) > tol) {
        std::ostringstream os;
        os << "H is not symmetric: H(" << i << "," << j << ") = " << a << " but H(" << j << ","
           << i << ") = " << b;
        return Fail(ValidationErrorKind::kAsymmetric, os.str());
      }
    }
  }

  const Eigen::LLT<MatrixXd> llt(qp.H);
  if (llt.info() != Eigen::Success) {
    return Fail(ValidationErrorKind::kNotPositiveDefinite,
                "Cholesky factorization of H failed (H is not positive definite)");
  }
  return {};
}

Problem::Problem(CondensedQp data) : data_(std::move(data)) {
  const ValidationResult result = Validate(data_);
  if (!result) {
    throw ValidationError(result.kind, result.message);
  }
  llt_.compute(data_.H);
  hinv_gt_ = llt_.solve(data_.G.transpose());
}

QpInstance::QpInstance(std::shared_ptr<const Problem> problem, VectorXd x_t)
    : problem_(std::move(problem)), x_t_(std::move(x_t)) {
  if (!problem_) {
    throw std::invalid_argument("QpInstance needs a problem");
  }
  if (x_t_.size() != problem_->n_x()) {
    throw std::invalid_argument("state has " + std::to_string(x_t_.size()) +
                                " entries, problem expects " + std::to_string(problem_->n_x()));
  }
  const CondensedQp& qp = problem_->data();
  linear_term_ = qp.h * x_t_;
  constraint_offset_ = qp.E * x_t_ + qp.g;
  z_ls_ = -problem_->cholesky().solve(linear_term_);
}

DualConstants ComputeDualConstants(const Problem& problem, double l_dh) {
  if (!(l_dh > 0) || !std::isfinite(l_dh)) {
    throw std::invalid_argument("L_dH must be a positive finite scalar");
  }
  const CondensedQp& qp = problem.data();
  const Index m = problem.m();

  // Fixed-seed start so that repeated runs are bit-identical.
  std::mt19937 gen(12345u);
  VectorXd v(m);
  for (Index i = 0; i < m; ++i) {
    v[i] = 0.5 + static_cast<double>(gen()) / static_cast<double>(std::mt19937::max());
  }
  v.normalize();

  // Rayleigh quotients of the power iterates increase monotonically towards
  // the top eigenvalue. The ratio of successive increments estimates the
  // contraction factor, which bounds the remaining error geometrically.
  auto apply = [&](const VectorXd& x) -> VectorXd {
    return qp.G * problem.cholesky().solve(qp.G.transpose() * x);
  };
  double theta = 0;
  double prev_delta = -1;
  bool converged = false;
  for (int it = 0; it < kPowerMaxIters; ++it) {
    const VectorXd w = apply(v);
    const double next = v.dot(w);
    const double wn = w.norm();
    if (!(wn > 0) || !std::isfinite(wn)) {
      throw std::runtime_error("power iteration on G H^-1 G' degenerated (is G zero?)");
    }
    v = w / wn;
    const double delta = std::abs(next - theta);
    theta = next;
    if (it > 0) {
      double remaining = delta;
      if (prev_delta > 0) {
        const double q = std::min(delta / prev_delta, 0.999999);
        remaining = delta * q / (1 - q);
      }
      if (delta == 0 || (delta <= kPowerTol * theta && remaining <= kPowerTol * theta)) {
        converged = true;
        break;
      }
    }
    prev_delta = delta;
  }
  if (!converged || !(theta > 0)) {
    throw std::runtime_error("power iteration on G H^-1 G' did not converge");
  }

  const Eigen::SelfAdjointEigenSolver<MatrixXd> h_eig(qp.H, Eigen::EigenvaluesOnly);
  const double sigma_min = h_eig.eigenvalues().minCoeff();
  const double sigma_max = h_eig.eigenvalues().maxCoeff();
  const MatrixXd gtg = qp.G.transpose() * qp.G;
  const Eigen::SelfAdjointEigenSolver<MatrixXd> g_eig(gtg, Eigen::EigenvaluesOnly);
  const double g_norm_sq = g_eig.eigenvalues().maxCoeff();

  DualConstants c;
  c.L_d = theta;
  c.m_d = g_norm_sq / sigma_max;
  c.M_d = g_norm_sq / sigma_min;
  c.L_dH = l_dh;
  c.eta_d = c.m_d * c.m_d / l_dh;
  return c;
}

VectorXd EvalConstraints(const QpInstance& inst, const VectorXd& z) {
  if (z.size() != inst.n()) {
    throw std::invalid_argument("z has wrong dimension");
  }
  return inst.data().G * z + inst.constraint_offset();
}

double EvalObjective(const QpInstance& inst, const VectorXd& z) {
  if (z.size() != inst.n()) {
    throw std::invalid_argument("z has wrong dimension");
  }
  return 0.5 * z.dot(inst.data().H * z) + inst.linear_term().dot(z);
}

VectorXd ProjectNonneg(const VectorXd& v) { return v.cwiseMax(0.0); }

double PositiveViolation(const QpInstance& inst, const VectorXd& z) {
  return ProjectNonneg(EvalConstraints(inst, z)).norm();
}

}  // namespace hyqp
