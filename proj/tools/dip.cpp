// Command-line front end: generate instances, run solvers, emit benchmark
// rows. Exit codes: 0 success, 2 validation/usage failure, 3 budget
// exhaustion, 4 IO error.

#include <CLI11.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ipdd/adi.hpp"
#include "ipdd/bench_io.hpp"
#include "ipdd/generators.hpp"
#include "ipdd/oracle.hpp"
#include "ipdd/path_following.hpp"
#include "ipdd/problem_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitBudget = 3;
constexpr int kExitIo = 4;

ipdd::Family parse_family(const std::string& s) {
  if (s == "quadratic") return ipdd::Family::kQuadratic;
  if (s == "network") return ipdd::Family::kNetwork;
  throw ipdd::ParseError("unknown family '" + s + "'");
}

struct SolveFlags {
  double t0 = 1.0;
  double eps = 1e-4;
  double eps_v = -1;  // <= 0: keep method default
  double eps_x = 1e-8;
  double tau = 0.85;
  std::string mode = "long";
  long max_outer = -1;  // < 0: keep method default
  long max_inner = -1;
  int threads = 0;
  bool eps_given = false;
};

void add_solver_flags(CLI::App* cmd, SolveFlags& f) {
  cmd->add_option("--t0", f.t0, "initial barrier parameter");
  cmd->add_option("--eps", f.eps,
                  "target gap bound (dip), stop tolerance (adi/oracle)");
  cmd->add_option("--eps-v", f.eps_v, "centering decrement threshold");
  cmd->add_option("--eps-x", f.eps_x, "block subproblem tolerance");
  cmd->add_option("--tau", f.tau, "barrier reduction factor (long mode)");
  cmd->add_option("--mode", f.mode, "t-schedule: short or long")
      ->check(CLI::IsMember({"short", "long"}));
  cmd->add_option("--max-outer", f.max_outer, "outer stage budget");
  cmd->add_option("--max-inner", f.max_inner, "per-stage Newton budget");
  cmd->add_option("--threads", f.threads,
                  "worker pool size (0 = hardware concurrency)");
}

ipdd::PathConfig<double> make_path_config(const SolveFlags& f) {
  ipdd::PathConfig<double> cfg;
  cfg.t0 = f.t0;
  cfg.eps = f.eps;
  if (f.eps_v > 0) cfg.eps_V = f.eps_v;
  cfg.tau = f.tau;
  cfg.mode = f.mode == "short" ? ipdd::StepMode::kShortStep
                               : ipdd::StepMode::kLongStep;
  if (f.max_outer >= 0) cfg.max_outer = f.max_outer;
  if (f.max_inner >= 0) cfg.max_inner = f.max_inner;
  cfg.block.eps_x = f.eps_x;
  cfg.threads = f.threads;
  return cfg;
}

ipdd::AdiConfig<double> make_adi_config(const SolveFlags& f) {
  ipdd::AdiConfig<double> cfg;
  cfg.tol = f.eps;
  if (f.max_outer >= 0) cfg.max_sweeps = f.max_outer;
  cfg.block.eps_x = f.eps_x;
  return cfg;
}

ipdd::OracleOptions<double> make_oracle_options(const SolveFlags& f) {
  ipdd::OracleOptions<double> opts;
  opts.t0 = f.t0;
  if (f.eps_given) opts.gap_tol = f.eps;
  return opts;
}

std::string default_report_path(const std::string& problem_path) {
  const std::string suffix = ".json";
  if (problem_path.size() > suffix.size() &&
      problem_path.compare(problem_path.size() - suffix.size(), suffix.size(),
                           suffix) == 0)
    return problem_path.substr(0, problem_path.size() - suffix.size()) +
           ".report.json";
  return problem_path + ".report.json";
}

ipdd::BenchRow make_row(const std::optional<ipdd::ProblemMeta>& meta) {
  ipdd::BenchRow row;
  if (meta) {
    row.m1 = meta->m1;
    row.n1 = meta->n1;
    row.N = meta->N;
  }
  return row;
}

int run_gen(const ipdd::GenSpec& spec, const std::string& family,
            const std::string& out_path) {
  ipdd::SeparableProblem<double> p = ipdd::generate(spec);
  ipdd::ProblemMeta meta{family, spec.m1, spec.n1, spec.N, spec.seed};
  ipdd::save_problem(out_path, p, &meta);
  std::cout << "wrote " << out_path << " (family=" << family
            << " m1=" << spec.m1 << " n1=" << spec.n1 << " N=" << spec.N
            << " seed=" << spec.seed << ", blocks=" << p.num_blocks()
            << ", coupling_rows=" << p.coupling_rows() << ")\n";
  return kExitOk;
}

int run_solve(const std::string& problem_path, const std::string& method,
              const SolveFlags& flags, std::string report_path,
              const std::string& csv_path) {
  std::optional<ipdd::ProblemMeta> meta;
  ipdd::SeparableProblem<double> p =
      ipdd::load_problem<double>(problem_path, &meta);
  if (report_path.empty()) report_path = default_report_path(problem_path);

  ipdd::BenchRow row = make_row(meta);
  row.method = method;
  int exit_code = kExitOk;

  if (method == "dip") {
    ipdd::SolveReport<double> rep = ipdd::try_solve(p, make_path_config(flags));
    ipdd::write_json_file(report_path, ipdd::report_to_json(rep));
    row.fct_evals = rep.fct_evals;
    row.outer_iters = rep.outer_iters;
    row.wall_time_s = rep.wall_time_s;
    row.gap_bound = double(rep.gap_bound);
    row.primal_residual = double(rep.primal_residual);
    row.status = ipdd::to_string(rep.status);
    std::cout << "method=dip status=" << row.status
              << " objective=" << rep.objective
              << " gap_bound=" << rep.gap_bound
              << " primal_residual=" << rep.primal_residual
              << " outer_iters=" << rep.outer_iters
              << " inner_iters=" << rep.inner_iters_total
              << " fct_evals=" << rep.fct_evals
              << " wall_s=" << rep.wall_time_s << "\n";
    if (rep.status != ipdd::SolveStatus::kSuccess) exit_code = kExitBudget;
  } else if (method == "adi") {
    ipdd::AdiReport<double> rep = ipdd::try_adi_solve(p, make_adi_config(flags));
    ipdd::write_json_file(report_path, ipdd::adi_report_to_json(rep));
    row.fct_evals = rep.fct_evals;
    row.outer_iters = rep.sweeps;
    row.wall_time_s = rep.wall_time_s;
    row.gap_bound = std::nan("");
    row.primal_residual = double(rep.primal_residual);
    row.status = ipdd::to_string(rep.status);
    std::cout << "method=adi status=" << row.status
              << " objective=" << rep.objective
              << " primal_residual=" << rep.primal_residual
              << " sweeps=" << rep.sweeps << " fct_evals=" << rep.fct_evals
              << " wall_s=" << rep.wall_time_s << "\n";
    if (rep.status != ipdd::SolveStatus::kSuccess) exit_code = kExitBudget;
  } else {
    auto t_start = std::chrono::steady_clock::now();
    ipdd::OracleResult<double> res =
        ipdd::oracle_optimum(p, make_oracle_options(flags));
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
    ipdd::write_json_file(report_path, ipdd::oracle_result_to_json(res));
    row.outer_iters = long(res.t_grid.size());
    row.gap_bound = res.t_grid.empty()
                        ? 0.0
                        : double(res.t_grid.back()) *
                              double(ipdd::barrier_complexity(p));
    row.primal_residual = 0;
    std::cout << "method=oracle f_star=" << res.f_star
              << " stages=" << res.t_grid.size()
              << " t_final=" << (res.t_grid.empty() ? 0.0 : res.t_grid.back())
              << " wall_s=" << row.wall_time_s << "\n";
  }

  ipdd::append_bench_csv(csv_path, {row});
  std::cout << "report: " << report_path << "\ncsv: " << csv_path << "\n";
  return exit_code;
}

std::vector<std::array<long, 3>> parse_shapes(const std::string& spec) {
  std::vector<std::array<long, 3>> shapes;
  size_t pos = 0;
  while (pos < spec.size()) {
    size_t end = spec.find(',', pos);
    if (end == std::string::npos) end = spec.size();
    std::string tok = spec.substr(pos, end - pos);
    long m1 = 0, n1 = 0, N = 0;
    char tail = 0;
    if (std::sscanf(tok.c_str(), "%ldx%ldx%ld%c", &m1, &n1, &N, &tail) != 3)
      throw ipdd::ParseError("bad shape '" + tok + "', want m1xn1xN");
    shapes.push_back({m1, n1, N});
    pos = end + 1;
  }
  if (shapes.empty()) throw ipdd::ParseError("no shapes given");
  return shapes;
}

int run_bench(const std::string& shapes_spec,
              const std::vector<std::string>& methods,
              const std::string& family, std::uint64_t seed,
              const SolveFlags& flags, const std::string& csv_path) {
  std::vector<std::array<long, 3>> shapes = parse_shapes(shapes_spec);
  ipdd::Family fam = parse_family(family);
  std::cout << ipdd::kBenchCsvHeader << "\n";
  bool all_ok = true;
  for (size_t si = 0; si < shapes.size(); ++si) {
    ipdd::GenSpec gspec{fam, shapes[si][0], shapes[si][1], shapes[si][2],
                        seed + si};
    ipdd::SeparableProblem<double> p = ipdd::generate(gspec);
    for (const std::string& method : methods) {
      ipdd::BenchRow row;
      row.m1 = gspec.m1;
      row.n1 = gspec.n1;
      row.N = gspec.N;
      row.method = method;
      try {
        if (method == "dip") {
          ipdd::SolveReport<double> rep =
              ipdd::try_solve(p, make_path_config(flags));
          row.fct_evals = rep.fct_evals;
          row.outer_iters = rep.outer_iters;
          row.wall_time_s = rep.wall_time_s;
          row.gap_bound = double(rep.gap_bound);
          row.primal_residual = double(rep.primal_residual);
          row.status = ipdd::to_string(rep.status);
        } else if (method == "adi") {
          ipdd::AdiReport<double> rep =
              ipdd::try_adi_solve(p, make_adi_config(flags));
          row.fct_evals = rep.fct_evals;
          row.outer_iters = rep.sweeps;
          row.wall_time_s = rep.wall_time_s;
          row.gap_bound = std::nan("");
          row.primal_residual = double(rep.primal_residual);
          row.status = ipdd::to_string(rep.status);
        } else {
          auto t_start = std::chrono::steady_clock::now();
          ipdd::OracleResult<double> res =
              ipdd::oracle_optimum(p, make_oracle_options(flags));
          row.wall_time_s =
              std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t_start)
                  .count();
          row.outer_iters = long(res.t_grid.size());
          row.gap_bound = res.t_grid.empty()
                              ? 0.0
                              : double(res.t_grid.back()) *
                                    double(ipdd::barrier_complexity(p));
        }
      } catch (const ipdd::Error& e) {
        row.status = "error";
        std::cerr << "bench " << family << " " << gspec.m1 << "x" << gspec.n1
                  << "x" << gspec.N << " " << method << ": " << e.what()
                  << "\n";
      }
      if (row.status != "success") all_ok = false;
      ipdd::append_bench_csv(csv_path, {row});
      std::cout << ipdd::to_csv(row) << "\n";
    }
  }
  std::cout << "csv: " << csv_path << "\n";
  return all_ok ? kExitOk : kExitBudget;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parallel interior-point solver for separable convex programs"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a random instance file");
  std::string gen_family = "quadratic";
  long gen_m1 = 0, gen_n1 = 0, gen_N = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--family", gen_family, "instance family")
      ->check(CLI::IsMember({"quadratic", "network"}));
  gen->add_option("--m1", gen_m1, "local equality rows per block")->required();
  gen->add_option("--n1", gen_n1, "variables per block")->required();
  gen->add_option("--N", gen_N, "number of blocks")->required();
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("-o,--out", gen_out, "output problem file")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "run one method on a problem file");
  std::string solve_problem, solve_method = "dip";
  std::string solve_report, solve_csv = "runs.csv";
  SolveFlags solve_flags;
  solve->add_option("problem", solve_problem, "problem file")->required();
  solve->add_option("--method", solve_method, "dip, adi, or oracle")
      ->check(CLI::IsMember({"dip", "adi", "oracle"}));
  add_solver_flags(solve, solve_flags);
  solve->add_option("--report", solve_report,
                    "report file (default: <problem>.report.json)");
  solve->add_option("--csv", solve_csv, "CSV file to append the run row to");

  // bench
  auto* bench =
      app.add_subcommand("bench", "run a shape x method grid, append CSV rows");
  std::string bench_shapes = "5x10x3,10x20x5,20x50x10";
  std::vector<std::string> bench_methods{"dip", "adi"};
  std::string bench_family = "network";
  std::uint64_t bench_seed = 1;
  std::string bench_csv = "bench.csv";
  SolveFlags bench_flags;
  bench->add_option("--shapes", bench_shapes,
                    "comma-separated m1xn1xN shape list");
  bench->add_option("--methods", bench_methods, "methods to run per shape")
      ->delimiter(',')
      ->check(CLI::IsMember({"dip", "adi", "oracle"}));
  bench->add_option("--family", bench_family, "instance family")
      ->check(CLI::IsMember({"quadratic", "network"}));
  bench->add_option("--seed", bench_seed, "base RNG seed (shape i adds i)");
  add_solver_flags(bench, bench_flags);
  bench->add_option("--csv", bench_csv, "CSV file to append rows to");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (gen->parsed()) {
      ipdd::GenSpec spec{parse_family(gen_family), gen_m1, gen_n1, gen_N,
                         gen_seed};
      return run_gen(spec, gen_family, gen_out);
    }
    if (solve->parsed()) {
      solve_flags.eps_given = solve->count("--eps") > 0;
      return run_solve(solve_problem, solve_method, solve_flags, solve_report,
                       solve_csv);
    }
    bench_flags.eps_given = bench->count("--eps") > 0;
    return run_bench(bench_shapes, bench_methods, bench_family, bench_seed,
                     bench_flags, bench_csv);
  } catch (const ipdd::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ipdd::MaxIterExceeded& e) {
    std::cerr << "budget exhausted: " << e.what() << "\n";
    return kExitBudget;
  } catch (const ipdd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}
