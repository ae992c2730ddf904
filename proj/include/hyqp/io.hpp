// File formats: JSON problem and model files, CSV traces, JSON reports.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyqp/hybrid_solver.hpp"
#include "hyqp/mpc_condense.hpp"

namespace hyqp::io {

using Json = nlohmann::json;

// Matrices are nested row-major arrays; vectors are flat arrays. A matrix
// with zero columns may be written as an array of empty rows.
MatrixXd MatrixFromJson(const Json& j, const char* name);
VectorXd VectorFromJson(const Json& j, const char* name);
Json ToJson(const MatrixXd& m);
Json ToJson(const VectorXd& v);

// Problem file: H, h, G, E, g, n, m, n_x, and optionally x_t.
struct QpFile {
  CondensedQp qp;
  std::optional<VectorXd> x_t;
};
QpFile QpFromJson(const Json& j);
Json QpToJson(const CondensedQp& qp, const std::optional<VectorXd>& x_t = std::nullopt);

// Model file: A, B, C, D, N, Q, R and optional u_min/u_max, x_min/x_max,
// y_min/y_max, du_min/du_max. Scalars are accepted for 1x1 matrices; a
// missing side of a pair is unbounded.
struct ModelFile {
  LtiModel model;
  MpcConfig config;
};
ModelFile ModelFromJson(const Json& j);

// State file: a flat array, or an object with an "x" array.
VectorXd StateFromJson(const Json& j);

Json ReadJsonFile(const std::string& path);
void WriteJsonFile(const std::string& path, const Json& j);

// Traces. Doubles are printed with 17 significant digits so that equal runs
// give byte-identical files.
void WriteDfgTrace(std::ostream& os, const std::vector<DfgTraceRow>& rows);
void WritePdipTrace(std::ostream& os, const std::vector<PdipTraceRow>& rows);
std::string FormatDouble(double v);

Json ReportToJson(const SolveReport& report);
Json CertificateToJson(const SwitchCertificate& cert);
Json ConstantsToJson(const DualConstants& c);

}  // namespace hyqp::io
