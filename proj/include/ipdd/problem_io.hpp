#pragma once

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>

#include "ipdd/generators.hpp"
#include "ipdd/problem.hpp"

namespace ipdd {

/// Shape tag written by the generators; carried through problem files so
/// benchmark rows can name the instance class.
struct ProblemMeta {
  std::string family;
  long m1 = -1;
  long n1 = -1;
  long N = -1;
  std::uint64_t seed = 0;
};

namespace detail {

using nlohmann::json;

inline bool key_in(const std::string& key,
                   std::initializer_list<const char*> keys) {
  for (const char* k : keys)
    if (key == k) return true;
  return false;
}

// Strict field policy: every object is checked against its schema, and any
// unknown field is an error rather than silently ignored.
inline void expect_keys(const json& j,
                        std::initializer_list<const char*> allowed,
                        std::initializer_list<const char*> required,
                        const std::string& ctx) {
  if (!j.is_object()) throw ParseError(ctx + ": expected an object");
  for (const auto& item : j.items())
    if (!key_in(item.key(), allowed))
      throw ParseError(ctx + ": unknown field '" + item.key() + "'");
  for (const char* k : required)
    if (!j.contains(k))
      throw ParseError(ctx + ": missing field '" + std::string(k) + "'");
}

template <typename Scalar>
Vector<Scalar> vector_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array()) throw ParseError(ctx + ": expected an array");
  Vector<Scalar> v(Index(j.size()));
  for (Index i = 0; i < v.size(); ++i) {
    const auto& x = j[size_t(i)];
    if (!x.is_number()) throw ParseError(ctx + ": expected numbers");
    v[i] = Scalar(x.template get<double>());
  }
  return v;
}

template <typename Scalar>
json vector_to_json(const Vector<Scalar>& v) {
  json j = json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(double(v[i]));
  return j;
}

template <typename Scalar>
Matrix<Scalar> matrix_from_json(const json& j, const std::string& ctx) {
  expect_keys(j, {"shape", "rows"}, {"shape", "rows"}, ctx);
  const auto& shape = j["shape"];
  if (!shape.is_array() || shape.size() != 2 ||
      !shape[0].is_number_integer() || !shape[1].is_number_integer())
    throw ParseError(ctx + ": shape must be [rows, cols]");
  const Index r = shape[0].get<Index>();
  const Index c = shape[1].get<Index>();
  if (r < 0 || c < 0) throw ParseError(ctx + ": negative shape");
  const auto& rows = j["rows"];
  if (!rows.is_array() || Index(rows.size()) != r)
    throw ParseError(ctx + ": row count does not match shape");
  Matrix<Scalar> M(r, c);
  for (Index i = 0; i < r; ++i) {
    Vector<Scalar> row = vector_from_json<Scalar>(
        rows[size_t(i)], ctx + " row " + std::to_string(i));
    if (row.size() != c)
      throw ParseError(ctx + ": row length does not match shape");
    M.row(i) = row.transpose();
  }
  return M;
}

template <typename Scalar>
json matrix_to_json(const Matrix<Scalar>& M) {
  json j;
  j["shape"] = {M.rows(), M.cols()};
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i)
    rows.push_back(vector_to_json(Vector<Scalar>(M.row(i).transpose())));
  j["rows"] = rows;
  return j;
}

template <typename Scalar>
ObjectiveFn<Scalar> objective_from_json(const json& j, const std::string& ctx) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ParseError(ctx + ": objective needs a string 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "linear") {
    expect_keys(j, {"kind", "c"}, {"kind", "c"}, ctx);
    return ObjectiveFn<Scalar>::linear(
        vector_from_json<Scalar>(j["c"], ctx + ".c"));
  }
  if (kind == "quadratic") {
    expect_keys(j, {"kind", "Q", "c"}, {"kind", "Q", "c"}, ctx);
    return ObjectiveFn<Scalar>::quadratic(
        matrix_from_json<Scalar>(j["Q"], ctx + ".Q"),
        vector_from_json<Scalar>(j["c"], ctx + ".c"));
  }
  if (kind == "total_delay") {
    expect_keys(j, {"kind", "capacities"}, {"kind", "capacities"}, ctx);
    return ObjectiveFn<Scalar>::total_delay(
        vector_from_json<Scalar>(j["capacities"], ctx + ".capacities"));
  }
  throw ParseError(ctx + ": unknown objective kind '" + kind + "'");
}

template <typename Scalar>
json objective_to_json(const ObjectiveFn<Scalar>& f) {
  json j;
  j["kind"] = to_string(f.kind());
  switch (f.kind()) {
    case ObjectiveKind::kLinear:
      j["c"] = vector_to_json(f.linear_term());
      break;
    case ObjectiveKind::kQuadratic:
      j["Q"] = matrix_to_json(f.hessian_matrix());
      j["c"] = vector_to_json(f.linear_term());
      break;
    case ObjectiveKind::kTotalDelay:
      j["capacities"] = vector_to_json(f.capacities());
      break;
  }
  return j;
}

template <typename Scalar>
Block<Scalar> block_from_json(const json& j, const std::string& ctx) {
  expect_keys(j, {"objective", "box", "A", "a", "B"},
              {"objective", "box", "B"}, ctx);
  ObjectiveFn<Scalar> obj =
      objective_from_json<Scalar>(j["objective"], ctx + ".objective");
  expect_keys(j["box"], {"lower", "upper"}, {"lower", "upper"}, ctx + ".box");
  Box<Scalar> box{vector_from_json<Scalar>(j["box"]["lower"], ctx + ".box.lower"),
                  vector_from_json<Scalar>(j["box"]["upper"], ctx + ".box.upper")};
  if (j.contains("A") != j.contains("a"))
    throw ParseError(ctx + ": A and a must appear together");
  Matrix<Scalar> A(0, box.dim());
  Vector<Scalar> a(0);
  if (j.contains("A")) {
    A = matrix_from_json<Scalar>(j["A"], ctx + ".A");
    a = vector_from_json<Scalar>(j["a"], ctx + ".a");
  }
  Matrix<Scalar> B = matrix_from_json<Scalar>(j["B"], ctx + ".B");
  return Block<Scalar>{std::move(obj), std::move(box), std::move(A),
                       std::move(a), std::move(B)};
}

inline ProblemMeta meta_from_json(const json& j) {
  expect_keys(j, {"family", "m1", "n1", "N", "seed"},
              {"family", "m1", "n1", "N", "seed"}, "meta");
  ProblemMeta meta;
  if (!j["family"].is_string()) throw ParseError("meta.family must be a string");
  meta.family = j["family"].get<std::string>();
  meta.m1 = j["m1"].get<long>();
  meta.n1 = j["n1"].get<long>();
  meta.N = j["N"].get<long>();
  meta.seed = j["seed"].get<std::uint64_t>();
  return meta;
}

}  // namespace detail

template <typename Scalar = double>
SeparableProblem<Scalar> problem_from_json(const nlohmann::json& j,
                                           std::optional<ProblemMeta>* meta_out
                                           = nullptr) {
  try {
    detail::expect_keys(j, {"meta", "blocks", "b"}, {"blocks", "b"}, "problem");
    // meta is validated whenever present, not only when the caller wants it
    std::optional<ProblemMeta> meta =
        j.contains("meta")
            ? std::optional<ProblemMeta>(detail::meta_from_json(j["meta"]))
            : std::nullopt;
    if (meta_out) *meta_out = std::move(meta);
    SeparableProblem<Scalar> p;
    if (!j["blocks"].is_array() || j["blocks"].empty())
      throw ParseError("problem: blocks must be a nonempty array");
    for (size_t i = 0; i < j["blocks"].size(); ++i)
      p.blocks.push_back(detail::block_from_json<Scalar>(
          j["blocks"][i], "block " + std::to_string(i)));
    p.b = detail::vector_from_json<Scalar>(j["b"], "problem.b");
    p.validate();
    return p;
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("problem: ") + e.what());
  }
}

template <typename Scalar>
nlohmann::json problem_to_json(const SeparableProblem<Scalar>& p,
                               const ProblemMeta* meta = nullptr) {
  nlohmann::json j;
  if (meta) {
    j["meta"] = {{"family", meta->family}, {"m1", meta->m1},  {"n1", meta->n1},
                 {"N", meta->N},           {"seed", meta->seed}};
  }
  j["blocks"] = nlohmann::json::array();
  for (const auto& blk : p.blocks) {
    nlohmann::json bj;
    bj["objective"] = detail::objective_to_json(blk.objective);
    bj["box"] = {{"lower", detail::vector_to_json(blk.box.lower)},
                 {"upper", detail::vector_to_json(blk.box.upper)}};
    if (blk.local_rows() > 0) {
      bj["A"] = detail::matrix_to_json(blk.A);
      bj["a"] = detail::vector_to_json(blk.a);
    }
    bj["B"] = detail::matrix_to_json(blk.B);
    j["blocks"].push_back(std::move(bj));
  }
  j["b"] = detail::vector_to_json(p.b);
  return j;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(1) << "\n";
  if (!out) throw IoError("write failed for " + path);
}

template <typename Scalar = double>
SeparableProblem<Scalar> load_problem(const std::string& path,
                                      std::optional<ProblemMeta>* meta_out
                                      = nullptr) {
  return problem_from_json<Scalar>(read_json_file(path), meta_out);
}

template <typename Scalar>
void save_problem(const std::string& path, const SeparableProblem<Scalar>& p,
                  const ProblemMeta* meta = nullptr) {
  write_json_file(path, problem_to_json(p, meta));
}

}  // namespace ipdd
