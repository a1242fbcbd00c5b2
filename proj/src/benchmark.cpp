#include "rvopt/benchmark.hpp"

#include "rvopt/io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace rvopt {

using nlohmann::json;

SolveReport solve_from_warm_start(const ProblemInstance& inst, const SmoothingConfig& smoothing,
                                  const AlmConfig& alm, const WarmStartOptions& warm) {
  return solve(inst, smoothing, alm, warm_start(inst, warm));
}

void BenchmarkConfig::validate() const {
  if (seed_last < seed_first) throw std::invalid_argument("empty seed range");
  if (m_A < 0) throw std::invalid_argument("m_A must be nonnegative");
  smoothing.validate();
  alm.validate();
}

int worker_count(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(n, 1);
  if (const char* env = std::getenv("RVOPT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return n;
}

std::vector<RunRecord> run_benchmark(const BenchmarkConfig& cfg,
                                     const std::function<void(const RunRecord&)>& on_done) {
  cfg.validate();
  const std::size_t count = static_cast<std::size_t>(cfg.seed_last - cfg.seed_first) + 1;
  std::vector<RunRecord> out(count);
  std::atomic<std::size_t> next{0};
  std::mutex done_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      RunRecord& r = out[i];
      r.seed = cfg.seed_first + i;
      const auto start = std::chrono::steady_clock::now();
      try {
        GeneratorConfig g;
        g.seed = r.seed;
        g.m_A = cfg.m_A;
        g.map_id = cfg.map_id;
        const ProblemInstance inst = generate(g);
        SolveReport rep = solve_from_warm_start(inst, cfg.smoothing, cfg.alm, cfg.warm);
        r.completed = true;
        r.status = rep.status;
        r.objective = rep.objective;
        r.violation = rep.breakdown.total;
        r.wall_s = rep.wall_s;
        r.trace = std::move(rep.trace);
        r.x_final = std::move(rep.x_final);
      } catch (const std::exception& e) {
        r.error = e.what();
        r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
      if (on_done) {
        std::lock_guard lock(done_mutex);
        on_done(r);
      }
    }
  };

  const int n = std::min<int>(worker_count(cfg.threads), static_cast<int>(count));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

std::vector<double> log_time_grid(double t0, double t1, int per_decade) {
  if (!(t0 > 0.0 && t1 >= t0) || per_decade < 1) throw std::invalid_argument("bad time grid");
  const double decades = std::log10(t1 / t0);
  const int steps = std::max(1, static_cast<int>(std::ceil(decades * per_decade - 1e-9)));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) grid.push_back(t0 * std::pow(10.0, decades * i / steps));
  grid.back() = t1;
  return grid;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

const TracePoint* trace_at(const std::vector<TracePoint>& trace, double t) {
  auto it = std::upper_bound(trace.begin(), trace.end(), t,
                             [](double v, const TracePoint& p) { return v < p.wall_s; });
  if (it == trace.begin()) return nullptr;
  return &*(it - 1);
}

std::vector<QuantileRow> aggregate_quantiles(const std::vector<RunRecord>& runs,
                                             const std::vector<double>& grid) {
  static constexpr double kLevels[3] = {0.25, 0.5, 0.75};
  std::vector<QuantileRow> rows;
  rows.reserve(grid.size());
  for (double t : grid) {
    std::vector<double> obj;
    std::vector<double> viol;
    for (const RunRecord& r : runs) {
      if (!r.completed) continue;
      if (const TracePoint* p = trace_at(r.trace, t)) {
        obj.push_back(p->objective);
        viol.push_back(p->violation);
      }
    }
    QuantileRow row;
    row.t = t;
    row.runs = static_cast<int>(obj.size());
    for (int q = 0; q < 3; ++q) {
      row.objective[q] = quantile(obj, kLevels[q]);
      row.violation[q] = quantile(viol, kLevels[q]);
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string csv_text(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '"') c = ' ';
  }
  return s;
}

std::string iso_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void write_aggregate_csv(const std::vector<RunRecord>& runs, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "seed,objective_h,violation,wall_s,status\n";
  for (const RunRecord& r : runs) {
    out << r.seed << ',';
    if (r.completed) {
      out << format_double(r.objective) << ',' << format_double(r.violation) << ','
          << format_double(r.wall_s) << ',' << to_string(r.status) << '\n';
    } else {
      out << ",," << format_double(r.wall_s) << ",Error: " << csv_text(r.error) << '\n';
    }
  }
}

void write_quantiles_csv(const std::vector<QuantileRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "t_s,runs,objective_q25,objective_q50,objective_q75,violation_q25,violation_q50,violation_q75\n";
  for (const QuantileRow& r : rows) {
    out << format_double(r.t) << ',' << r.runs;
    for (double v : r.objective) out << ',' << format_double(v);
    for (double v : r.violation) out << ',' << format_double(v);
    out << '\n';
  }
}

namespace {

// JSON has no infinity; unbounded values are written as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const SmoothingConfig& c) {
  return {{"method", std::string(to_string(c.method))},
          {"delta", c.delta},
          {"epsilon", c.epsilon},
          {"p_exp", c.p_exp},
          {"tau", c.tau}};
}

json to_json(const AlmConfig& c) {
  return {{"rho0", c.rho0},
          {"gamma", c.gamma},
          {"theta", c.theta},
          {"rho_max", c.rho_max},
          {"max_outer", c.max_outer},
          {"inner_tol_initial", c.inner_tol_initial},
          {"inner_tol_final", c.inner_tol_final},
          {"inner_tol_decay", c.inner_tol_decay},
          {"inner_max_iters", c.inner_max_iters},
          {"memory", c.memory},
          {"time_budget_s", number(c.time_budget_s)},
          {"target_violation", c.target_violation},
          {"stationarity_tol", c.stationarity_tol},
          {"target_includes_bias", c.target_includes_bias},
          {"use_equality_floor", c.use_equality_floor}};
}

json to_json(const GeneratorConfig& c) {
  json box = nullptr;
  if (c.box) box = {{"lo", {c.box->lo.x(), c.box->lo.y()}}, {"hi", {c.box->hi.x(), c.box->hi.y()}}};
  const PhysicalParams& p = c.params;
  return {{"seed", c.seed},
          {"m_A", c.m_A},
          {"box", box},
          {"map_id", c.map_id},
          {"N", c.N ? json(*c.N) : json(nullptr)},
          {"params",
           {{"v_max_A", p.v_max_A}, {"v_max_G", p.v_max_G}, {"kappa", p.kappa}, {"e_min", p.e_min},
            {"e_max", p.e_max}, {"s_min", p.s_min}, {"s_max", p.s_max}}}};
}

std::string tool_version() { return "rvopt 1.0.0"; }

RunManifest::RunManifest(std::filesystem::path path, std::string command, json config)
    : path_(std::move(path)) {
  doc_ = {{"command", std::move(command)},
          {"config", std::move(config)},
          {"artifacts", json::array({path_.filename().string()})},
          {"tool_version", tool_version()},
          {"start_time", iso_now()},
          {"end_time", nullptr},
          {"exit_code", nullptr}};
}

void RunManifest::add_artifact(const std::filesystem::path& p) {
  const std::string name = p.lexically_relative(path_.parent_path()).generic_string();
  for (const auto& a : doc_["artifacts"]) {
    if (a == name) return;
  }
  doc_["artifacts"].push_back(name);
}

void RunManifest::write_started() const { write(); }

void RunManifest::write_finished(int exit_code) {
  doc_["end_time"] = iso_now();
  doc_["exit_code"] = exit_code;
  write();
}

void RunManifest::write() const {
  auto out = open_out(path_);
  out << doc_.dump(2) << '\n';
}

}  // namespace rvopt
