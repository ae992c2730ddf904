#include "hyqp/mpc_condense.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace hyqp {

namespace {

// Rows of G this small relative to the block they came from are treated as
// independent of z.
constexpr double kZeroRowTol = 1e-13;

void RequireShape(const MatrixXd& m, Index rows, Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw std::invalid_argument(std::string(name) + " must be " + std::to_string(rows) + "x" +
                                std::to_string(cols) + ", got " + std::to_string(m.rows()) +
                                "x" + std::to_string(m.cols()));
  }
}

void ValidateBox(const std::optional<Box>& box, Index dim, const char* name) {
  if (!box) {
    return;
  }
  if (box->lower.size() != dim || box->upper.size() != dim) {
    throw std::invalid_argument(std::string(name) + " bounds must have " + std::to_string(dim) +
                                " entries");
  }
  for (Index i = 0; i < dim; ++i) {
    if (std::isnan(box->lower[i]) || std::isnan(box->upper[i]) || !(box->lower[i] < 0) ||
        !(box->upper[i] > 0)) {
      throw std::invalid_argument(std::string(name) +
                                  " bounds must satisfy lower < 0 < upper componentwise");
    }
  }
}

bool IsSymmetric(const MatrixXd& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

// Appends the two one-sided rows of l <= map_z z + map_x x0 <= u for every
// finite bound. Upper rows of the whole signal come first, then lower rows.
struct RowBuilder {
  std::vector<VectorXd> g_rows;
  std::vector<VectorXd> e_rows;
  std::vector<double> offsets;
  std::vector<RowTag> tags;
  std::vector<ConstantRow> constant_rows;

  void AddSignal(BoundSignal signal, const MatrixXd& map_z, const MatrixXd& map_x,
                 const Box& box, int first_stage) {
    const Index dim = box.lower.size();
    const Index stages = map_z.rows() / dim;
    const double scale = std::max(1.0, map_z.cwiseAbs().maxCoeff());
    for (BoundSide side : {BoundSide::kUpper, BoundSide::kLower}) {
      const double sign = side == BoundSide::kUpper ? 1.0 : -1.0;
      for (Index k = 0; k < stages; ++k) {
        for (Index c = 0; c < dim; ++c) {
          const double bound = side == BoundSide::kUpper ? box.upper[c] : box.lower[c];
          if (!std::isfinite(bound)) {
            continue;
          }
          const Index r = k * dim + c;
          const RowTag tag{signal, static_cast<int>(k) + first_stage, static_cast<int>(c), side};
          VectorXd gz = sign * map_z.row(r).transpose();
          VectorXd ex = sign * map_x.row(r).transpose();
          const double off = -sign * bound;
          if (gz.cwiseAbs().maxCoeff() <= kZeroRowTol * scale) {
            constant_rows.push_back(ConstantRow{tag, std::move(ex), off});
            continue;
          }
          g_rows.push_back(std::move(gz));
          e_rows.push_back(std::move(ex));
          offsets.push_back(off);
          tags.push_back(tag);
        }
      }
    }
  }
};

}  // namespace

const char* ToString(BoundSignal signal) {
  switch (signal) {
    case BoundSignal::kInput:
      return "u";
    case BoundSignal::kState:
      return "x";
    case BoundSignal::kOutput:
      return "y";
    case BoundSignal::kInputRate:
      return "du";
  }
  return "?";
}

const char* ToString(BoundSide side) { return side == BoundSide::kUpper ? "upper" : "lower"; }

void ValidateModel(const LtiModel& model) {
  const Index nx = model.A.rows();
  if (nx < 1) {
    throw std::invalid_argument("A must be non-empty");
  }
  RequireShape(model.A, nx, nx, "A");
  if (model.B.rows() != nx || model.B.cols() < 1) {
    throw std::invalid_argument("B must have n_x rows and at least one column");
  }
  if (model.C.cols() != nx || model.C.rows() < 1) {
    throw std::invalid_argument("C must have n_x columns and at least one row");
  }
  RequireShape(model.D, model.C.rows(), model.B.cols(), "D");
}

void ValidateConfig(const LtiModel& model, const MpcConfig& cfg) {
  ValidateModel(model);
  if (cfg.horizon < 1) {
    throw std::invalid_argument("horizon must be at least 1");
  }
  RequireShape(cfg.Q, model.n_x(), model.n_x(), "Q");
  RequireShape(cfg.R, model.n_u(), model.n_u(), "R");
  if (!IsSymmetric(cfg.Q) || !IsSymmetric(cfg.R)) {
    throw std::invalid_argument("Q and R must be symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<MatrixXd> q_eig(cfg.Q, Eigen::EigenvaluesOnly);
  if (q_eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, q_eig.eigenvalues().maxCoeff())) {
    throw std::invalid_argument("Q must be positive semidefinite");
  }
  const Eigen::LLT<MatrixXd> r_llt(cfg.R);
  if (r_llt.info() != Eigen::Success) {
    throw std::invalid_argument("R must be positive definite");
  }
  ValidateBox(cfg.u_bounds, model.n_u(), "u");
  ValidateBox(cfg.x_bounds, model.n_x(), "x");
  ValidateBox(cfg.y_bounds, model.n_y(), "y");
  ValidateBox(cfg.du_bounds, model.n_u(), "du");
}

Index ControllabilityRank(const LtiModel& model) {
  ValidateModel(model);
  const Index nx = model.n_x();
  const Index nu = model.n_u();
  MatrixXd ctrb(nx, nx * nu);
  MatrixXd block = model.B;
  for (Index i = 0; i < nx; ++i) {
    ctrb.middleCols(i * nu, nu) = block;
    block = model.A * block;
  }
  Eigen::FullPivLU<MatrixXd> lu(ctrb);
  return lu.rank();
}

PredictionMatrices BuildPrediction(const LtiModel& model, int horizon) {
  ValidateModel(model);
  if (horizon < 1) {
    throw std::invalid_argument("horizon must be at least 1");
  }
  const Index N = horizon;
  const Index nx = model.n_x();
  const Index nu = model.n_u();
  const Index ny = model.n_y();

  // powers[i] = A^i
  std::vector<MatrixXd> powers(N + 1);
  powers[0] = MatrixXd::Identity(nx, nx);
  for (Index i = 1; i <= N; ++i) {
    powers[i] = model.A * powers[i - 1];
  }

  PredictionMatrices p;
  p.A_N.resize((N + 1) * nx, nx);
  p.B_N = MatrixXd::Zero((N + 1) * nx, N * nu);
  p.C_N.resize((N + 1) * ny, nx);
  p.D_N = MatrixXd::Zero((N + 1) * ny, N * nu);
  for (Index i = 0; i <= N; ++i) {
    p.A_N.middleRows(i * nx, nx) = powers[i];
    p.C_N.middleRows(i * ny, ny) = model.C * powers[i];
    for (Index j = 0; j < i; ++j) {
      const MatrixXd blk = powers[i - j - 1] * model.B;
      p.B_N.block(i * nx, j * nu, nx, nu) = blk;
      p.D_N.block(i * ny, j * nu, ny, nu) = model.C * blk;
    }
    if (i < N) {
      p.D_N.block(i * ny, i * nu, ny, nu) = model.D;
    }
  }
  return p;
}

double CondensedMpc::ObjectiveConstant(const VectorXd& x0) const {
  return 0.5 * x0.dot(cost_constant * x0);
}

std::optional<RowTag> CondensedMpc::ViolatedConstantRow(const VectorXd& x0) const {
  for (const ConstantRow& row : constant_rows) {
    if (row.e.dot(x0) + row.g > 0) {
      return row.tag;
    }
  }
  return std::nullopt;
}

CondensedMpc Condense(const LtiModel& model, const MpcConfig& cfg) {
  ValidateConfig(model, cfg);
  const Index N = cfg.horizon;
  const Index nx = model.n_x();
  const Index nu = model.n_u();

  CondensedMpc out;
  out.prediction = BuildPrediction(model, cfg.horizon);
  const PredictionMatrices& p = out.prediction;

  MatrixXd q_bar = MatrixXd::Zero((N + 1) * nx, (N + 1) * nx);
  for (Index i = 0; i <= N; ++i) {
    q_bar.block(i * nx, i * nx, nx, nx) = cfg.Q;
  }
  MatrixXd r_bar = MatrixXd::Zero(N * nu, N * nu);
  for (Index i = 0; i < N; ++i) {
    r_bar.block(i * nu, i * nu, nu, nu) = cfg.R;
  }

  const MatrixXd qb = q_bar * p.B_N;
  MatrixXd H = p.B_N.transpose() * qb + r_bar;
  H = 0.5 * (H + H.transpose()).eval();
  out.qp.H = H;
  out.qp.h = qb.transpose() * p.A_N;
  out.cost_constant = p.A_N.transpose() * q_bar * p.A_N;

  RowBuilder rows;
  if (cfg.u_bounds) {
    rows.AddSignal(BoundSignal::kInput, MatrixXd::Identity(N * nu, N * nu),
                   MatrixXd::Zero(N * nu, nx), *cfg.u_bounds, 0);
  }
  if (cfg.du_bounds && N > 1) {
    MatrixXd diff = MatrixXd::Zero((N - 1) * nu, N * nu);
    for (Index k = 0; k + 1 < N; ++k) {
      diff.block(k * nu, (k + 1) * nu, nu, nu) = MatrixXd::Identity(nu, nu);
      diff.block(k * nu, k * nu, nu, nu) = -MatrixXd::Identity(nu, nu);
    }
    rows.AddSignal(BoundSignal::kInputRate, diff, MatrixXd::Zero((N - 1) * nu, nx),
                   *cfg.du_bounds, 0);
  }
  if (cfg.x_bounds) {
    rows.AddSignal(BoundSignal::kState, p.B_N, p.A_N, *cfg.x_bounds, 0);
  }
  if (cfg.y_bounds) {
    rows.AddSignal(BoundSignal::kOutput, p.D_N, p.C_N, *cfg.y_bounds, 0);
  }

  const Index m = static_cast<Index>(rows.g_rows.size());
  out.qp.G.resize(m, N * nu);
  out.qp.E.resize(m, nx);
  out.qp.g.resize(m);
  for (Index r = 0; r < m; ++r) {
    out.qp.G.row(r) = rows.g_rows[r].transpose();
    out.qp.E.row(r) = rows.e_rows[r].transpose();
    out.qp.g[r] = rows.offsets[r];
  }
  out.rows = std::move(rows.tags);
  out.constant_rows = std::move(rows.constant_rows);

  // An unconstrained MPC problem still condenses; it just cannot be handed to
  // the constrained solvers.
  if (m == 0) {
    if (Eigen::LLT<MatrixXd>(out.qp.H).info() != Eigen::Success) {
      throw ValidationError(ValidationErrorKind::kNotPositiveDefinite,
                            "condensed QP rejected: H is not positive definite");
    }
    return out;
  }
  const ValidationResult result = Validate(out.qp);
  if (!result) {
    throw ValidationError(result.kind, "condensed QP rejected: " + result.message);
  }
  return out;
}

}  // namespace hyqp
