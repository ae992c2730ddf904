#include "hyqp/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace hyqp::io {

namespace {

const Json& Require(const Json& j, const char* key) {
  if (!j.contains(key)) {
    throw std::runtime_error(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

double NumberOrInf(const Json& v) {
  if (v.is_null()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-Infinity") return -std::numeric_limits<double>::infinity();
    throw std::runtime_error("unexpected string '" + s + "' where a number was expected");
  }
  return v.get<double>();
}

Json NumberToJson(double v) {
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  return v;
}

std::optional<Box> BoxFromJson(const Json& j, const char* lo, const char* hi, Index dim) {
  if (!j.contains(lo) && !j.contains(hi)) {
    return std::nullopt;
  }
  Box b;
  b.lower = VectorXd::Constant(dim, -std::numeric_limits<double>::infinity());
  b.upper = VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
  if (j.contains(lo)) b.lower = VectorFromJson(j.at(lo), lo);
  if (j.contains(hi)) b.upper = VectorFromJson(j.at(hi), hi);
  return b;
}

}  // namespace

MatrixXd MatrixFromJson(const Json& j, const char* name) {
  if (j.is_number()) {
    return MatrixXd::Constant(1, 1, j.get<double>());
  }
  if (!j.is_array()) {
    throw std::runtime_error(std::string(name) + " must be a nested array");
  }
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) {
    return MatrixXd(0, 0);
  }
  if (!j[0].is_array()) {
    throw std::runtime_error(std::string(name) + " must be an array of rows");
  }
  const Index cols = static_cast<Index>(j[0].size());
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const Json& row = j[r];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw std::runtime_error(std::string(name) + " has ragged rows");
    }
    for (Index c = 0; c < cols; ++c) {
      m(r, c) = NumberOrInf(row[c]);
    }
  }
  return m;
}

VectorXd VectorFromJson(const Json& j, const char* name) {
  if (j.is_number() || j.is_string()) {
    return VectorXd::Constant(1, NumberOrInf(j));
  }
  if (!j.is_array()) {
    throw std::runtime_error(std::string(name) + " must be an array");
  }
  VectorXd v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) {
    if (j[i].is_array()) {
      throw std::runtime_error(std::string(name) + " must be a flat array");
    }
    v[i] = NumberOrInf(j[i]);
  }
  return v;
}

Json ToJson(const MatrixXd& m) {
  Json out = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) {
      row.push_back(NumberToJson(m(r, c)));
    }
    out.push_back(std::move(row));
  }
  return out;
}

Json ToJson(const VectorXd& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) {
    out.push_back(NumberToJson(v[i]));
  }
  return out;
}

QpFile QpFromJson(const Json& j) {
  QpFile f;
  f.qp.H = MatrixFromJson(Require(j, "H"), "H");
  f.qp.G = MatrixFromJson(Require(j, "G"), "G");
  f.qp.g = VectorFromJson(Require(j, "g"), "g");
  const Index n = Require(j, "n").get<Index>();
  const Index m = Require(j, "m").get<Index>();
  const Index nx = Require(j, "n_x").get<Index>();
  // Zero-column matrices serialize as arrays of empty rows, which lose
  // their row count when empty; rebuild them from the declared sizes.
  f.qp.h = MatrixFromJson(Require(j, "h"), "h");
  f.qp.E = MatrixFromJson(Require(j, "E"), "E");
  if (nx == 0) {
    f.qp.h.resize(n, 0);
    f.qp.E.resize(m, 0);
  }
  if (f.qp.n() != n || f.qp.m() != m || f.qp.n_x() != nx) {
    throw std::runtime_error("declared n, m, n_x disagree with the matrices");
  }
  if (j.contains("x_t")) {
    f.x_t = VectorFromJson(j.at("x_t"), "x_t");
  }
  return f;
}

Json QpToJson(const CondensedQp& qp, const std::optional<VectorXd>& x_t) {
  Json j;
  j["n"] = qp.n();
  j["m"] = qp.m();
  j["n_x"] = qp.n_x();
  j["H"] = ToJson(qp.H);
  j["h"] = ToJson(qp.h);
  j["G"] = ToJson(qp.G);
  j["E"] = ToJson(qp.E);
  j["g"] = ToJson(qp.g);
  if (x_t) {
    j["x_t"] = ToJson(*x_t);
  }
  return j;
}

ModelFile ModelFromJson(const Json& j) {
  ModelFile f;
  f.model.A = MatrixFromJson(Require(j, "A"), "A");
  // A flat array for a single-input B is read as a column.
  const Json& b = Require(j, "B");
  if (b.is_array() && !b.empty() && !b[0].is_array()) {
    f.model.B = VectorFromJson(b, "B");
  } else {
    f.model.B = MatrixFromJson(b, "B");
  }
  f.model.C = MatrixFromJson(Require(j, "C"), "C");
  f.model.D = MatrixFromJson(Require(j, "D"), "D");
  f.config.horizon = Require(j, "N").get<int>();
  f.config.Q = MatrixFromJson(Require(j, "Q"), "Q");
  f.config.R = MatrixFromJson(Require(j, "R"), "R");
  f.config.u_bounds = BoxFromJson(j, "u_min", "u_max", f.model.n_u());
  f.config.x_bounds = BoxFromJson(j, "x_min", "x_max", f.model.n_x());
  f.config.y_bounds = BoxFromJson(j, "y_min", "y_max", f.model.n_y());
  f.config.du_bounds = BoxFromJson(j, "du_min", "du_max", f.model.n_u());
  return f;
}

VectorXd StateFromJson(const Json& j) {
  if (j.is_object()) {
    return VectorFromJson(Require(j, "x"), "x");
  }
  return VectorFromJson(j, "state");
}

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  return Json::parse(in);
}

void WriteJsonFile(const std::string& path, const Json& j) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << j.dump(2) << "\n";
}

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void WriteDfgTrace(std::ostream& os, const std::vector<DfgTraceRow>& rows) {
  os << "k,d_lambda_hat,primal_obj,pos_violation_norm,wall_ns\n";
  for (const DfgTraceRow& r : rows) {
    os << r.k << ',' << FormatDouble(r.d_lambda_hat) << ',' << FormatDouble(r.primal_obj) << ','
       << FormatDouble(r.pos_violation_norm) << ',' << r.wall_ns << '\n';
  }
}

void WritePdipTrace(std::ostream& os, const std::vector<PdipTraceRow>& rows) {
  os << "k,phase,rho,mu,tau,r_dual_norm,r_pri_norm,r_cent_norm,obj,wall_ns\n";
  for (const PdipTraceRow& r : rows) {
    os << r.k << ',' << ToString(r.phase) << ',' << FormatDouble(r.rho) << ','
       << FormatDouble(r.mu) << ',' << FormatDouble(r.tau) << ',' << FormatDouble(r.r_dual_norm)
       << ',' << FormatDouble(r.r_pri_norm) << ',' << FormatDouble(r.r_cent_norm) << ','
       << FormatDouble(r.obj) << ',' << r.wall_ns << '\n';
  }
}

Json ReportToJson(const SolveReport& report) {
  Json j;
  j["phase1_iters"] = report.phase1_iters;
  j["phase2_iters"] = report.phase2_iters;
  j["damped_iters"] = report.damped_iters;
  j["pure_iters"] = report.pure_iters;
  Json p1 = Json::array();
  for (const DfgTraceRow& r : report.phase1_trace) {
    p1.push_back({{"k", r.k},
                  {"d_lambda_hat", r.d_lambda_hat},
                  {"primal_obj", r.primal_obj},
                  {"pos_violation_norm", r.pos_violation_norm},
                  {"wall_ns", r.wall_ns}});
  }
  Json p2 = Json::array();
  for (const PdipTraceRow& r : report.phase2_trace) {
    p2.push_back({{"k", r.k},
                  {"phase", ToString(r.phase)},
                  {"rho", r.rho},
                  {"mu", r.mu},
                  {"tau", r.tau},
                  {"r_dual_norm", r.r_dual_norm},
                  {"r_pri_norm", r.r_pri_norm},
                  {"r_cent_norm", r.r_cent_norm},
                  {"obj", r.obj},
                  {"wall_ns", r.wall_ns}});
  }
  j["phase1_trace"] = std::move(p1);
  j["phase2_trace"] = std::move(p2);
  j["termination"] = ToString(report.termination);
  j["final_obj"] = report.final_obj;
  j["final_gap"] = report.final_gap;
  j["suboptimality_bound"] = report.suboptimality_bound;
  j["infeasibility"] = report.infeasibility;
  if (!report.message.empty()) {
    j["message"] = report.message;
  }
  return j;
}

Json CertificateToJson(const SwitchCertificate& cert) {
  Json j;
  j["k_switch"] = cert.k_switch;
  j["violation_at_switch"] = cert.violation_at_switch;
  j["eta_d"] = cert.eta_d;
  j["mu_at_handoff"] = cert.mu_at_handoff;
  j["lambda_floors"] = cert.lambda_floors;
  j["s_floors"] = cert.s_floors;
  j["handoff"] = {{"z", ToJson(cert.handoff.z)},
                  {"lambda", ToJson(cert.handoff.lambda)},
                  {"s", ToJson(cert.handoff.s)}};
  j["gap"] = {{"total", cert.gap.total},
              {"positive_part", cert.gap.positive_part},
              {"negative_part", cert.gap.negative_part},
              {"floor_correction", cert.gap.floor_correction}};
  return j;
}

Json ConstantsToJson(const DualConstants& c) {
  return {{"L_d", c.L_d}, {"m_d", c.m_d}, {"M_d", c.M_d}, {"L_dH", c.L_dH}, {"eta_d", c.eta_d}};
}

}  // namespace hyqp::io
