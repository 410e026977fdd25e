#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "ipdd/bench_io.hpp"
#include "ipdd/generators.hpp"
#include "ipdd/problem_io.hpp"

using ipdd::Block;
using ipdd::Box;
using ipdd::Matrix;
using ipdd::ParseError;
using ipdd::SeparableProblem;
using ipdd::Vector;
using nlohmann::json;

namespace {

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "ipdd_io_test";
  std::filesystem::create_directories(dir);
  return dir;
}

SeparableProblem<double> tiny_problem() {
  SeparableProblem<double> p;
  for (double c : {-1.0, -0.5}) {
    Vector<double> cv(1);
    cv << c;
    p.blocks.push_back(Block<double>{
        ipdd::ObjectiveFn<double>::quadratic(Matrix<double>::Identity(1, 1),
                                             cv),
        Box<double>{Vector<double>::Zero(1), Vector<double>::Constant(1, 2.0)},
        Matrix<double>(0, 1), Vector<double>(0),
        Matrix<double>::Identity(1, 1).eval()});
  }
  p.b = Vector<double>::Constant(1, 1.2);
  return p;
}

bool same_matrix(const Matrix<double>& a, const Matrix<double>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.rows() == 0 || (a - b).norm() == 0.0);
}

}  // namespace

TEST_CASE("problem files round-trip exactly") {
  for (auto fam : {ipdd::Family::kQuadratic, ipdd::Family::kNetwork}) {
    ipdd::GenSpec spec{fam, 2, 5, 2, 13};
    SeparableProblem<double> p = ipdd::generate(spec);
    ipdd::ProblemMeta meta{std::string(ipdd::to_string(fam)), 2, 5, 2, 13};
    const auto path =
        scratch_dir() / (std::string("roundtrip_") + ipdd::to_string(fam) +
                         ".json");
    ipdd::save_problem(path.string(), p, &meta);

    std::optional<ipdd::ProblemMeta> meta2;
    SeparableProblem<double> q = ipdd::load_problem<double>(path.string(),
                                                            &meta2);
    REQUIRE(meta2.has_value());
    CHECK(meta2->family == meta.family);
    CHECK(meta2->m1 == meta.m1);
    CHECK(meta2->n1 == meta.n1);
    CHECK(meta2->N == meta.N);
    CHECK(meta2->seed == meta.seed);

    REQUIRE(q.num_blocks() == p.num_blocks());
    CHECK((q.b - p.b).norm() == 0.0);
    for (ipdd::Index i = 0; i < p.num_blocks(); ++i) {
      const auto& b0 = p.blocks[size_t(i)];
      const auto& b1 = q.blocks[size_t(i)];
      CHECK(b1.objective.kind() == b0.objective.kind());
      CHECK(same_matrix(b1.A, b0.A));
      CHECK((b1.a - b0.a).norm() == 0.0);
      CHECK(same_matrix(b1.B, b0.B));
      CHECK((b1.box.lower - b0.box.lower).norm() == 0.0);
      CHECK((b1.box.upper - b0.box.upper).norm() == 0.0);
      switch (b0.objective.kind()) {
        case ipdd::ObjectiveKind::kQuadratic:
          CHECK(same_matrix(b1.objective.hessian_matrix(),
                            b0.objective.hessian_matrix()));
          [[fallthrough]];
        case ipdd::ObjectiveKind::kLinear:
          CHECK((b1.objective.linear_term() - b0.objective.linear_term())
                    .norm() == 0.0);
          break;
        case ipdd::ObjectiveKind::kTotalDelay:
          CHECK((b1.objective.capacities() - b0.objective.capacities())
                    .norm() == 0.0);
          break;
      }
    }
  }
}

TEST_CASE("loader enforces the schema strictly") {
  const char* minimal = R"({
    "blocks": [{"objective": {"kind": "linear", "c": [1.0]},
                "box": {"lower": [0.0], "upper": [2.0]},
                "B": {"shape": [1, 1], "rows": [[1.0]]}}],
    "b": [0.5]})";
  CHECK_NOTHROW(ipdd::problem_from_json(json::parse(minimal)));

  auto reject = [&](json j) {
    CHECK_THROWS_AS(ipdd::problem_from_json(j), ParseError);
  };

  json base = json::parse(minimal);

  json j = base;
  j["surprise"] = 1;
  reject(j);

  j = base;
  j["blocks"][0]["extra"] = 1;
  reject(j);

  j = base;
  j["blocks"][0]["objective"]["kind"] = "cubic";
  reject(j);

  j = base;
  j["blocks"][0]["objective"]["Q"] = 1;  // linear kind must not carry Q
  reject(j);

  j = base;
  j["blocks"][0]["box"]["middle"] = 1;
  reject(j);

  j = base;
  j["blocks"][0]["B"]["stride"] = 1;
  reject(j);

  j = base;
  j["blocks"][0]["A"] = {{"shape", {1, 1}}, {"rows", {{1.0}}}};
  reject(j);  // A without a

  j = base;
  j["blocks"] = json::array();
  reject(j);

  j = base;
  j["b"] = {"x"};
  reject(j);

  j = base;
  j["blocks"][0]["B"]["shape"] = {2, 1};
  reject(j);  // row count disagrees with shape

  j = base;
  j["meta"] = {{"family", "quadratic"}, {"m1", 1}, {"n1", 1}, {"N", 1}};
  reject(j);  // missing seed

  // parses but violates the model: degenerate box
  j = base;
  j["blocks"][0]["box"]["upper"] = {0.0};
  reject(j);
}

TEST_CASE("solver reports round-trip") {
  SeparableProblem<double> p = tiny_problem();
  ipdd::PathConfig<double> cfg;
  cfg.eps = 1e-2;
  ipdd::SolveReport<double> rep = ipdd::try_solve(p, cfg);
  REQUIRE(rep.status == ipdd::SolveStatus::kSuccess);

  json j = ipdd::report_to_json(rep);
  ipdd::SolveReport<double> back = ipdd::report_from_json<double>(j);
  CHECK(back.status == rep.status);
  CHECK(back.t_final == rep.t_final);
  CHECK(back.gap_bound == rep.gap_bound);
  CHECK(back.objective == rep.objective);
  CHECK(back.outer_iters == rep.outer_iters);
  CHECK(back.inner_iters_total == rep.inner_iters_total);
  CHECK(back.fct_evals == rep.fct_evals);
  CHECK((back.lambda_final - rep.lambda_final).norm() == 0.0);
  REQUIRE(back.x_final.size() == rep.x_final.size());
  for (size_t i = 0; i < rep.x_final.size(); ++i)
    CHECK((back.x_final[i] - rep.x_final[i]).norm() == 0.0);
  REQUIRE(back.trace.size() == rep.trace.size());
  for (size_t i = 0; i < rep.trace.size(); ++i) {
    CHECK(back.trace[i].t == rep.trace[i].t);
    CHECK(back.trace[i].delta == rep.trace[i].delta);
    CHECK(back.trace[i].value == rep.trace[i].value);
    CHECK(back.trace[i].sigma == rep.trace[i].sigma);
    CHECK(back.trace[i].stepped == rep.trace[i].stepped);
    CHECK(back.trace[i].phase == rep.trace[i].phase);
  }

  json oj = j;
  oj["method"] = "oracle";
  CHECK_THROWS_AS(ipdd::report_from_json<double>(oj), ParseError);
}

TEST_CASE("baseline reports round-trip") {
  SeparableProblem<double> p = tiny_problem();

  ipdd::AdiConfig<double> acfg;
  acfg.tol = 1e-3;
  ipdd::AdiReport<double> arep = ipdd::try_adi_solve(p, acfg);
  json aj = ipdd::adi_report_to_json(arep);
  ipdd::AdiReport<double> aback = ipdd::adi_report_from_json<double>(aj);
  CHECK(aback.status == arep.status);
  CHECK(aback.objective == arep.objective);
  CHECK(aback.primal_residual == arep.primal_residual);
  CHECK(aback.sweeps == arep.sweeps);
  CHECK(aback.fct_evals == arep.fct_evals);
  CHECK(aback.residual_trace == arep.residual_trace);
  CHECK(aback.objective_trace == arep.objective_trace);
  CHECK((aback.lambda_final - arep.lambda_final).norm() == 0.0);

  ipdd::OracleResult<double> ores = ipdd::oracle_optimum(p);
  json ojn = ipdd::oracle_result_to_json(ores);
  ipdd::OracleResult<double> oback = ipdd::oracle_result_from_json<double>(ojn);
  CHECK(oback.f_star == ores.f_star);
  CHECK((oback.x_star - ores.x_star).norm() == 0.0);
  CHECK(oback.t_grid == ores.t_grid);
  CHECK(oback.kkt_residuals == ores.kkt_residuals);
  REQUIRE(oback.central_points.size() == ores.central_points.size());
}

TEST_CASE("benchmark csv rows") {
  ipdd::BenchRow row;
  row.m1 = 5;
  row.n1 = 10;
  row.N = 3;
  row.method = "dip";
  row.fct_evals = 12;
  row.outer_iters = 3;
  row.wall_time_s = 0.5;
  row.gap_bound = 0.25;
  row.primal_residual = 0.125;
  CHECK(ipdd::to_csv(row) == "5,10,3,dip,12,3,0.5,0.25,0.125,success");

  const auto path = scratch_dir() / "rows.csv";
  std::filesystem::remove(path);
  ipdd::append_bench_csv(path.string(), {row});
  ipdd::append_bench_csv(path.string(), {row});

  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == ipdd::kBenchCsvHeader);
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("file errors carry distinct types") {
  CHECK_THROWS_AS(ipdd::load_problem<double>("/nonexistent/p.json"),
                  ipdd::IoError);
  CHECK_THROWS_AS(ipdd::write_json_file("/nonexistent/dir/out.json", json{}),
                  ipdd::IoError);

  const auto path = scratch_dir() / "broken.json";
  std::ofstream(path) << "nope{";
  CHECK_THROWS_AS(ipdd::read_json_file(path.string()), ParseError);
}
