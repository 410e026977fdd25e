#pragma once

#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "ipdd/adi.hpp"
#include "ipdd/oracle.hpp"
#include "ipdd/path_following.hpp"
#include "ipdd/problem_io.hpp"

namespace ipdd {

namespace detail {

inline SolveStatus status_from_string(const std::string& s) {
  if (s == "success") return SolveStatus::kSuccess;
  if (s == "max_outer") return SolveStatus::kMaxOuter;
  if (s == "max_inner") return SolveStatus::kMaxInner;
  if (s == "stalled") return SolveStatus::kStalled;
  throw ParseError("unknown status '" + s + "'");
}

inline TracePhase phase_from_string(const std::string& s) {
  if (s == "init") return TracePhase::kInit;
  if (s == "inner") return TracePhase::kInner;
  if (s == "polish") return TracePhase::kPolish;
  throw ParseError("unknown trace phase '" + s + "'");
}

}  // namespace detail

template <typename Scalar>
nlohmann::json report_to_json(const SolveReport<Scalar>& rep) {
  nlohmann::json j;
  j["method"] = "dip";
  j["status"] = to_string(rep.status);
  j["t_final"] = double(rep.t_final);
  j["gap_bound"] = double(rep.gap_bound);
  j["primal_residual"] = double(rep.primal_residual);
  j["objective"] = double(rep.objective);
  j["outer_iters"] = rep.outer_iters;
  j["inner_iters_total"] = rep.inner_iters_total;
  j["fct_evals"] = rep.fct_evals;
  j["wall_time_s"] = rep.wall_time_s;
  j["lambda_final"] = detail::vector_to_json(rep.lambda_final);
  j["x_final"] = nlohmann::json::array();
  for (const auto& x : rep.x_final)
    j["x_final"].push_back(detail::vector_to_json(x));
  j["trace"] = nlohmann::json::array();
  for (const auto& r : rep.trace) {
    j["trace"].push_back({{"k", r.outer_k},
                          {"phase", to_string(r.phase)},
                          {"t", double(r.t)},
                          {"delta", double(r.delta)},
                          {"value", double(r.value)},
                          {"grad_norm", double(r.grad_norm)},
                          {"sigma", double(r.sigma)},
                          {"stepped", r.stepped}});
  }
  return j;
}

template <typename Scalar = double>
SolveReport<Scalar> report_from_json(const nlohmann::json& j) {
  detail::expect_keys(
      j,
      {"method", "status", "t_final", "gap_bound", "primal_residual",
       "objective", "outer_iters", "inner_iters_total", "fct_evals",
       "wall_time_s", "lambda_final", "x_final", "trace"},
      {"method", "status", "t_final", "gap_bound", "primal_residual",
       "objective", "outer_iters", "inner_iters_total", "fct_evals",
       "wall_time_s", "lambda_final", "x_final", "trace"},
      "report");
  if (j["method"].get<std::string>() != "dip")
    throw ParseError("report: expected method 'dip'");
  SolveReport<Scalar> rep;
  rep.status = detail::status_from_string(j["status"].get<std::string>());
  rep.t_final = Scalar(j["t_final"].get<double>());
  rep.gap_bound = Scalar(j["gap_bound"].get<double>());
  rep.primal_residual = Scalar(j["primal_residual"].get<double>());
  rep.objective = Scalar(j["objective"].get<double>());
  rep.outer_iters = j["outer_iters"].get<long>();
  rep.inner_iters_total = j["inner_iters_total"].get<long>();
  rep.fct_evals = j["fct_evals"].get<long>();
  rep.wall_time_s = j["wall_time_s"].get<double>();
  rep.lambda_final =
      detail::vector_from_json<Scalar>(j["lambda_final"], "report.lambda_final");
  for (const auto& x : j["x_final"])
    rep.x_final.push_back(detail::vector_from_json<Scalar>(x, "report.x_final"));
  for (const auto& r : j["trace"]) {
    detail::expect_keys(r,
                        {"k", "phase", "t", "delta", "value", "grad_norm",
                         "sigma", "stepped"},
                        {"k", "phase", "t", "delta", "value", "grad_norm",
                         "sigma", "stepped"},
                        "report.trace");
    rep.trace.push_back({r["k"].get<long>(),
                         detail::phase_from_string(r["phase"].get<std::string>()),
                         Scalar(r["t"].get<double>()),
                         Scalar(r["delta"].get<double>()),
                         Scalar(r["value"].get<double>()),
                         Scalar(r["grad_norm"].get<double>()),
                         Scalar(r["sigma"].get<double>()),
                         r["stepped"].get<bool>()});
  }
  return rep;
}

template <typename Scalar>
nlohmann::json adi_report_to_json(const AdiReport<Scalar>& rep) {
  nlohmann::json j;
  j["method"] = "adi";
  j["status"] = to_string(rep.status);
  j["objective"] = double(rep.objective);
  j["primal_residual"] = double(rep.primal_residual);
  j["sweeps"] = rep.sweeps;
  j["fct_evals"] = rep.fct_evals;
  j["wall_time_s"] = rep.wall_time_s;
  j["lambda_final"] = detail::vector_to_json(rep.lambda_final);
  j["x_final"] = nlohmann::json::array();
  for (const auto& x : rep.x_final)
    j["x_final"].push_back(detail::vector_to_json(x));
  j["residual_trace"] = rep.residual_trace;
  j["objective_trace"] = rep.objective_trace;
  return j;
}

template <typename Scalar = double>
AdiReport<Scalar> adi_report_from_json(const nlohmann::json& j) {
  detail::expect_keys(j,
                      {"method", "status", "objective", "primal_residual",
                       "sweeps", "fct_evals", "wall_time_s", "lambda_final",
                       "x_final", "residual_trace", "objective_trace"},
                      {"method", "status", "objective", "primal_residual",
                       "sweeps", "fct_evals", "wall_time_s", "lambda_final",
                       "x_final", "residual_trace", "objective_trace"},
                      "adi report");
  if (j["method"].get<std::string>() != "adi")
    throw ParseError("adi report: expected method 'adi'");
  AdiReport<Scalar> rep;
  rep.status = detail::status_from_string(j["status"].get<std::string>());
  rep.objective = Scalar(j["objective"].get<double>());
  rep.primal_residual = Scalar(j["primal_residual"].get<double>());
  rep.sweeps = j["sweeps"].get<long>();
  rep.fct_evals = j["fct_evals"].get<long>();
  rep.wall_time_s = j["wall_time_s"].get<double>();
  rep.lambda_final =
      detail::vector_from_json<Scalar>(j["lambda_final"], "adi.lambda_final");
  for (const auto& x : j["x_final"])
    rep.x_final.push_back(detail::vector_from_json<Scalar>(x, "adi.x_final"));
  for (const auto& v : j["residual_trace"]) rep.residual_trace.push_back(Scalar(v.get<double>()));
  for (const auto& v : j["objective_trace"]) rep.objective_trace.push_back(Scalar(v.get<double>()));
  return rep;
}

template <typename Scalar>
nlohmann::json oracle_result_to_json(const OracleResult<Scalar>& res) {
  nlohmann::json j;
  j["method"] = "oracle";
  j["f_star"] = double(res.f_star);
  j["x_star"] = detail::vector_to_json(res.x_star);
  j["t_grid"] = nlohmann::json::array();
  for (Scalar t : res.t_grid) j["t_grid"].push_back(double(t));
  j["kkt_residuals"] = nlohmann::json::array();
  for (Scalar r : res.kkt_residuals) j["kkt_residuals"].push_back(double(r));
  j["central_points"] = nlohmann::json::array();
  for (const auto& x : res.central_points)
    j["central_points"].push_back(detail::vector_to_json(x));
  return j;
}

template <typename Scalar = double>
OracleResult<Scalar> oracle_result_from_json(const nlohmann::json& j) {
  detail::expect_keys(j,
                      {"method", "f_star", "x_star", "t_grid", "kkt_residuals",
                       "central_points"},
                      {"method", "f_star", "x_star", "t_grid", "kkt_residuals",
                       "central_points"},
                      "oracle result");
  if (j["method"].get<std::string>() != "oracle")
    throw ParseError("oracle result: expected method 'oracle'");
  OracleResult<Scalar> res;
  res.f_star = Scalar(j["f_star"].get<double>());
  res.x_star = detail::vector_from_json<Scalar>(j["x_star"], "oracle.x_star");
  for (const auto& t : j["t_grid"]) res.t_grid.push_back(Scalar(t.get<double>()));
  for (const auto& r : j["kkt_residuals"])
    res.kkt_residuals.push_back(Scalar(r.get<double>()));
  for (const auto& x : j["central_points"])
    res.central_points.push_back(
        detail::vector_from_json<Scalar>(x, "oracle.central_points"));
  return res;
}

/// One benchmark result line. gap_bound is NaN for methods without a
/// certificate (adi).
struct BenchRow {
  long m1 = -1;
  long n1 = -1;
  long N = -1;
  std::string method;
  long fct_evals = 0;
  long outer_iters = 0;
  double wall_time_s = 0;
  double gap_bound = 0;
  double primal_residual = 0;
  std::string status = "success";
};

inline constexpr const char* kBenchCsvHeader =
    "m1,n1,N,method,fct_evals,outer_iters,wall_time_s,gap_bound,"
    "primal_residual,status";

inline std::string to_csv(const BenchRow& row) {
  std::ostringstream os;
  os.precision(10);
  os << row.m1 << "," << row.n1 << "," << row.N << "," << row.method << ","
     << row.fct_evals << "," << row.outer_iters << "," << row.wall_time_s
     << "," << row.gap_bound << "," << row.primal_residual << ","
     << row.status;
  return os.str();
}

/// Appends rows, writing the header first when the file does not yet exist
/// or is empty.
inline void append_bench_csv(const std::string& path,
                             const std::vector<BenchRow>& rows) {
  bool need_header = true;
  {
    std::ifstream probe(path);
    if (probe && probe.peek() != std::ifstream::traits_type::eof())
      need_header = false;
  }
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open " + path + " for writing");
  if (need_header) out << kBenchCsvHeader << "\n";
  for (const auto& row : rows) out << to_csv(row) << "\n";
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace ipdd
