// Condensed formulation of linear MPC: the predicted states are eliminated
// through the plant recursion so the decision vector is the input sequence
// z = (u_0, ..., u_{N-1}).
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hyqp/qp_core.hpp"

namespace hyqp {

// x(t+1) = A x(t) + B u(t),  y(t) = C x(t) + D u(t)
struct LtiModel {
  MatrixXd A;
  MatrixXd B;
  MatrixXd C;
  MatrixXd D;

  Index n_x() const { return A.rows(); }
  Index n_u() const { return B.cols(); }
  Index n_y() const { return C.rows(); }
};

// Elementwise box. Infinite entries mean the component is unbounded.
struct Box {
  VectorXd lower;
  VectorXd upper;
};

struct MpcConfig {
  int horizon = 1;
  MatrixXd Q;  // state weight, also used as the terminal weight
  MatrixXd R;  // input weight
  std::optional<Box> u_bounds;
  std::optional<Box> x_bounds;
  std::optional<Box> y_bounds;
  // Bounds on u_{k+1} - u_k inside the horizon.
  std::optional<Box> du_bounds;
};

// Throws std::invalid_argument if dimensions disagree.
void ValidateModel(const LtiModel& model);
// Throws std::invalid_argument on Q not symmetric PSD, R not symmetric PD,
// a bound that does not strictly contain the origin, or bad dimensions.
void ValidateConfig(const LtiModel& model, const MpcConfig& cfg);

// Rank of [B, AB, ..., A^{n_x-1}B]; diagnostic only.
Index ControllabilityRank(const LtiModel& model);

// Stacked predictions x = A_N x_0 + B_N z and y = C_N x_0 + D_N z over
// stages k = 0..N. The terminal output carries no feedthrough term since
// u_N is not a decision variable.
struct PredictionMatrices {
  MatrixXd A_N;  // (N+1) n_x x n_x
  MatrixXd B_N;  // (N+1) n_x x N n_u
  MatrixXd C_N;  // (N+1) n_y x n_x
  MatrixXd D_N;  // (N+1) n_y x N n_u
};

PredictionMatrices BuildPrediction(const LtiModel& model, int horizon);

enum class BoundSignal { kInput, kState, kOutput, kInputRate };
enum class BoundSide { kUpper, kLower };

const char* ToString(BoundSignal signal);
const char* ToString(BoundSide side);

// Which scalar bound a constraint row encodes.
struct RowTag {
  BoundSignal signal;
  int stage;
  int component;
  BoundSide side;

  bool operator==(const RowTag&) const = default;
};

// A bound whose row in G is zero: it only depends on the initial state and
// is checked when the state is known instead of being handed to the solver.
struct ConstantRow {
  RowTag tag;
  VectorXd e;  // row of E
  double g;
};

struct CondensedMpc {
  CondensedQp qp;
  std::vector<RowTag> rows;             // one per row of qp.G
  std::vector<ConstantRow> constant_rows;
  MatrixXd cost_constant;               // A_N' Qbar A_N, so const(x0) = 1/2 x0' P x0
  PredictionMatrices prediction;

  // 1/2 x0' (A_N' Qbar A_N) x0, the part of the MPC cost the QP drops.
  double ObjectiveConstant(const VectorXd& x0) const;
  // First constant bound violated at x0, if any.
  std::optional<RowTag> ViolatedConstantRow(const VectorXd& x0) const;
};

// Builds H = B_N' Qbar B_N + Rbar, h = B_N' Qbar A_N and the stacked box
// constraints. Each bound l <= v <= u becomes the pair v - u <= 0 and
// -v + l <= 0; rows with no dependence on z are moved to constant_rows.
// Throws ValidationError if the resulting H is not positive definite.
CondensedMpc Condense(const LtiModel& model, const MpcConfig& cfg);

}  // namespace hyqp
