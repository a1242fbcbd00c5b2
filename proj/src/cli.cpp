#include "rvopt/cli.hpp"

#include "rvopt/benchmark.hpp"
#include "rvopt/io.hpp"
#include "rvopt/minlp_oracle.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <stdexcept>

namespace rvopt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 1;
constexpr int kExitUsage = 2;

struct SmoothingFlags {
  std::string method = "lp";
  SmoothingConfig cfg;

  void attach(CLI::App* app) {
    app->add_option("--method", method, "Softmin surrogate: lp or lse")
        ->check(CLI::IsMember({"lp", "lse"}))
        ->capture_default_str();
    app->add_option("--p-exp", cfg.p_exp, "lp exponent")->capture_default_str();
    app->add_option("--eps", cfg.epsilon, "lp regularizer")->capture_default_str();
    app->add_option("--tau", cfg.tau, "log-sum-exp scale")->capture_default_str();
    app->add_option("--delta", cfg.delta, "hinge knee")->capture_default_str();
  }

  SmoothingConfig resolve() const {
    SmoothingConfig c = cfg;
    c.method = parse_softmin_method(method);
    c.validate();
    return c;
  }
};

struct AlmFlags {
  AlmConfig cfg;
  double budget_s = 0.0;

  void attach(CLI::App* app, double default_budget) {
    budget_s = default_budget;
    app->add_option("--budget-s", budget_s, "wall-clock budget per solve (<= 0: none)")->capture_default_str();
    app->add_option("--rho0", cfg.rho0, "initial penalty")->capture_default_str();
    app->add_option("--max-outer", cfg.max_outer, "outer iteration cap")->capture_default_str();
    app->add_option("--target", cfg.target_violation, "exact violation target")->capture_default_str();
  }

  AlmConfig resolve() const {
    AlmConfig c = cfg;
    c.time_budget_s = budget_s > 0.0 ? budget_s : std::numeric_limits<double>::infinity();
    c.validate();
    return c;
  }
};

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
  static const std::regex range(R"(^\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, range)) throw std::invalid_argument("seed range must look like A..B");
  const std::uint64_t a = std::stoull(m[1].str());
  const std::uint64_t b = m[2].matched ? std::stoull(m[2].str()) : a;
  if (b < a) throw std::invalid_argument("seed range is empty");
  return {a, b};
}

json solve_summary(const SolveReport& r) {
  return {{"status", std::string(to_string(r.status))},
          {"objective_h", r.objective},
          {"violation", breakdown_to_json(r.breakdown)},
          {"target_violation", r.target_violation},
          {"wall_s", r.wall_s},
          {"outer_iterations", r.trace.empty() ? 0 : r.trace.back().outer}};
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// --- solve ---------------------------------------------------------------

struct SolveArgs {
  std::string instance;
  std::string out;
  SmoothingFlags smoothing;
  AlmFlags alm;
};

int cmd_solve(const SolveArgs& a) {
  ProblemInstance inst = read_instance(a.instance);
  const SmoothingConfig sc = a.smoothing.resolve();
  const AlmConfig ac = a.alm.resolve();
  const DecisionVector x0 = warm_start(inst);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  RunManifest manifest(dir / "manifest.json", "solve",
                       {{"instance", fs::absolute(a.instance).string()},
                        {"smoothing", to_json(sc)},
                        {"alm", to_json(ac)},
                        {"warm_start", "arm-sweep"}});
  for (const char* f : {"solution.json", "solution.csv", "trace.csv", "report.json"}) manifest.add_artifact(dir / f);
  manifest.write_started();

  const SolveReport rep = solve(inst, sc, ac, x0);
  write_solution(rep.x_final, inst, dir / "solution.json", dir / "solution.csv");
  write_trace_csv(rep.trace, dir / "trace.csv");
  write_json(solve_summary(rep), dir / "report.json");

  const int code = rep.status == SolveStatus::Converged ? kExitOk : kExitNotConverged;
  manifest.write_finished(code);
  std::cout << to_string(rep.status) << " objective=" << format_double(rep.objective)
            << " violation=" << format_double(rep.breakdown.total) << " wall_s=" << format_double(rep.wall_s)
            << '\n';
  return code;
}

// --- benchmark -----------------------------------------------------------

struct BenchmarkArgs {
  std::string seeds = "1..20";
  int m_A = 10;
  std::string map_id = "fig1";
  int threads = 0;
  std::string out;
  SmoothingFlags smoothing;
  AlmFlags alm;
};

int cmd_benchmark(const BenchmarkArgs& a) {
  BenchmarkConfig cfg;
  std::tie(cfg.seed_first, cfg.seed_last) = parse_seed_range(a.seeds);
  cfg.m_A = a.m_A;
  cfg.map_id = a.map_id;
  cfg.smoothing = a.smoothing.resolve();
  cfg.alm = a.alm.resolve();
  cfg.threads = worker_count(a.threads);
  if (!std::isfinite(cfg.alm.time_budget_s) || cfg.alm.time_budget_s <= 0.01) {
    throw std::invalid_argument("benchmark needs a budget above 0.01 s");
  }
  cfg.validate();
  fixture_map(cfg.map_id);  // unknown map ids fail before any work starts

  const fs::path dir(a.out);
  fs::create_directories(dir / "traces");
  GeneratorConfig g;
  g.m_A = cfg.m_A;
  g.map_id = cfg.map_id;
  json gen = to_json(g);
  gen.erase("seed");
  RunManifest manifest(dir / "manifest.json", "benchmark",
                       {{"seeds", {cfg.seed_first, cfg.seed_last}},
                        {"generator", gen},
                        {"smoothing", to_json(cfg.smoothing)},
                        {"alm", to_json(cfg.alm)},
                        {"warm_start", "arm-sweep"},
                        {"threads", cfg.threads},
                        {"time_grid", {{"t0_s", 0.01}, {"t1_s", cfg.alm.time_budget_s}, {"per_decade", 50}}}});
  auto trace_path = [&](std::uint64_t seed) { return dir / "traces" / ("seed_" + std::to_string(seed) + ".csv"); };
  for (std::uint64_t s = cfg.seed_first; s <= cfg.seed_last; ++s) manifest.add_artifact(trace_path(s));
  manifest.add_artifact(dir / "aggregate.csv");
  manifest.add_artifact(dir / "quantiles.csv");
  manifest.write_started();

  const auto runs = run_benchmark(cfg, [&](const RunRecord& r) {
    if (r.completed) write_trace_csv(r.trace, trace_path(r.seed));
    std::cout << "seed " << r.seed << ": "
              << (r.completed ? std::string(to_string(r.status)) : "error: " + r.error)
              << " objective=" << format_double(r.objective) << " violation=" << format_double(r.violation)
              << " wall_s=" << format_double(r.wall_s) << '\n';
  });
  write_aggregate_csv(runs, dir / "aggregate.csv");
  write_quantiles_csv(aggregate_quantiles(runs, log_time_grid(0.01, cfg.alm.time_budget_s)),
                      dir / "quantiles.csv");

  std::size_t completed = 0;
  for (const auto& r : runs) completed += r.completed ? 1 : 0;
  const int code = 10 * completed >= 9 * runs.size() ? kExitOk : kExitNotConverged;
  manifest.write_finished(code);
  return code;
}

// --- oracle --------------------------------------------------------------

struct OracleArgs {
  std::string instance;
  std::string out;
  OracleLimits limits;
};

int cmd_oracle(const OracleArgs& a) {
  ProblemInstance inst = read_instance(a.instance);
  const std::size_t m_A = inst.task_count();
  const std::size_t m_G = inst.arm_count();
  if (inst.N > a.limits.max_N || m_A > static_cast<std::size_t>(a.limits.max_mA) ||
      m_G > static_cast<std::size_t>(a.limits.max_mG)) {
    throw OracleLimitError("instance exceeds the oracle limits");
  }
  const SmoothingConfig sc;
  const AlmConfig ac;
  const OracleOptions oo;

  const fs::path dir(a.out);
  fs::create_directories(dir);
  RunManifest manifest(dir / "manifest.json", "oracle",
                       {{"instance", fs::absolute(a.instance).string()},
                        {"limits", {{"max_N", a.limits.max_N}, {"max_mA", a.limits.max_mA}, {"max_mG", a.limits.max_mG}}},
                        {"oracle",
                         {{"alm", to_json(oo.alm)}, {"starts", oo.starts}, {"feasibility_tol", oo.feasibility_tol},
                          {"mu", MinlpModel::default_mu(inst)}}},
                        {"nlp", {{"smoothing", to_json(sc)}, {"alm", to_json(ac)}, {"warm_start", "arm-sweep"}}}});
  for (const char* f : {"oracle.json", "nlp_solution.json", "nlp_solution.csv", "nlp_trace.csv", "comparison.csv"}) {
    manifest.add_artifact(dir / f);
  }
  manifest.write_started();

  const OracleResult orc = solve_exact(inst, a.limits, oo);
  write_json(oracle_to_json(orc, inst), dir / "oracle.json");

  std::optional<SolveReport> nlp;
  std::string nlp_error;
  try {
    nlp = solve_from_warm_start(inst, sc, ac);
  } catch (const std::invalid_argument& e) {
    nlp_error = e.what();
  }
  if (nlp) {
    write_solution(nlp->x_final, inst, dir / "nlp_solution.json", dir / "nlp_solution.csv");
    write_trace_csv(nlp->trace, dir / "nlp_trace.csv");
  }

  {
    std::ofstream out(dir / "comparison.csv");
    if (!out) throw std::runtime_error("cannot write comparison.csv");
    auto num = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
    out << "instance,oracle_feasible,oracle_objective_h,oracle_violation,oracle_wall_s,patterns,subproblems,"
           "nlp_status,nlp_objective_h,nlp_violation,nlp_wall_s\n";
    out << fs::path(a.instance).filename().string() << ',' << (orc.feasible ? 1 : 0) << ','
        << num(orc.objective) << ',' << num(orc.violation) << ',' << format_double(orc.wall_s) << ','
        << orc.patterns << ',' << orc.subproblems << ',';
    if (nlp) {
      out << to_string(nlp->status) << ',' << format_double(nlp->objective) << ','
          << format_double(nlp->breakdown.total) << ',' << format_double(nlp->wall_s) << '\n';
    } else {
      out << "Error,,,\n";
    }
  }

  std::cout << "oracle: " << (orc.feasible ? "optimum " + format_double(orc.objective) : std::string("infeasible"))
            << " patterns=" << orc.patterns << " wall_s=" << format_double(orc.wall_s) << '\n';
  if (nlp) {
    std::cout << "nlp: " << to_string(nlp->status) << " objective=" << format_double(nlp->objective)
              << " violation=" << format_double(nlp->breakdown.total) << " wall_s=" << format_double(nlp->wall_s)
              << '\n';
  } else {
    std::cout << "nlp: no initial guess (" << nlp_error << ")\n";
  }
  const bool agree = orc.feasible && nlp && nlp->status == SolveStatus::Converged;
  const int code = agree ? kExitOk : kExitNotConverged;
  manifest.write_finished(code);
  return code;
}

// --- generate ------------------------------------------------------------

struct GenerateArgs {
  GeneratorConfig cfg;
  int N = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  GeneratorConfig g = a.cfg;
  if (a.N > 0) g.N = a.N;
  write_instance(generate(g), a.out);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Rendezvous trajectory optimization for UAV-UGV energy sharing"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one instance file");
  solve_cmd->add_option("--instance", solve_args.instance, "instance JSON")->required();
  solve_cmd->add_option("--out", solve_args.out, "output directory")->required();
  solve_args.smoothing.attach(solve_cmd);
  solve_args.alm.attach(solve_cmd, 0.0);

  BenchmarkArgs bench_args;
  auto* bench_cmd = app.add_subcommand("benchmark", "Solve generated instances over a seed range");
  bench_cmd->add_option("--seeds", bench_args.seeds, "seed range A..B")->capture_default_str();
  bench_cmd->add_option("--m-a", bench_args.m_A, "number of UAV tasks")->capture_default_str();
  bench_cmd->add_option("--map", bench_args.map_id, "fixture map id")->capture_default_str();
  bench_cmd->add_option("--threads", bench_args.threads, "workers (0: all cores; RVOPT_THREADS caps)");
  bench_cmd->add_option("--out", bench_args.out, "output directory")->required();
  bench_args.smoothing.attach(bench_cmd);
  bench_args.alm.attach(bench_cmd, 100.0);

  OracleArgs oracle_args;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exact MINLP optimum next to the NLP solution");
  oracle_cmd->add_option("--instance", oracle_args.instance, "instance JSON")->required();
  oracle_cmd->add_option("--max-n", oracle_args.limits.max_N, "largest N accepted")->capture_default_str();
  oracle_cmd->add_option("--max-ma", oracle_args.limits.max_mA, "largest task count accepted")->capture_default_str();
  oracle_cmd->add_option("--max-mg", oracle_args.limits.max_mG, "largest arm count accepted")->capture_default_str();
  oracle_cmd->add_option("--out", oracle_args.out, "output directory")->required();

  GenerateArgs gen_args;
  auto* gen_cmd = app.add_subcommand("generate", "Write a seeded random instance");
  gen_cmd->add_option("--seed", gen_args.cfg.seed, "generator seed")->capture_default_str();
  gen_cmd->add_option("--m-a", gen_args.cfg.m_A, "number of UAV tasks")->capture_default_str();
  gen_cmd->add_option("--map", gen_args.cfg.map_id, "fixture map id")->capture_default_str();
  gen_cmd->add_option("--n", gen_args.N, "number of stamps (0: default)");
  gen_cmd->add_option("--out", gen_args.out, "instance JSON to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve_args);
    if (*bench_cmd) return cmd_benchmark(bench_args);
    if (*oracle_cmd) return cmd_oracle(oracle_args);
    if (*gen_cmd) return cmd_generate(gen_args);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const OracleLimitError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNotConverged;
  }
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("rvopt");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace rvopt
