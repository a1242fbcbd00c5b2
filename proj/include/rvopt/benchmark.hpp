// Seeded batch runs, trace resampling and run manifests.
#pragma once

#include "rvopt/alm.hpp"
#include "rvopt/instances.hpp"
#include "rvopt/smoothing.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace rvopt {

/// Warm start followed by the ALM solve.
SolveReport solve_from_warm_start(const ProblemInstance& inst, const SmoothingConfig& smoothing,
                                  const AlmConfig& alm, const WarmStartOptions& warm = {});

struct RunRecord {
  std::uint64_t seed = 0;
  bool completed = false;  // false if the run threw; `error` holds the message
  std::string error;
  SolveStatus status = SolveStatus::MaxOuter;
  double objective = 0.0;
  double violation = 0.0;
  double wall_s = 0.0;
  std::vector<TracePoint> trace;
  DecisionVector x_final;
};

struct BenchmarkConfig {
  std::uint64_t seed_first = 1;
  std::uint64_t seed_last = 20;
  int m_A = 10;
  std::string map_id = "fig1";
  SmoothingConfig smoothing;
  AlmConfig alm;
  WarmStartOptions warm;
  int threads = 1;

  void validate() const;
};

/// One solve per seed, fanned out over `threads` workers. `on_done` is called
/// from the worker thread after each run, serialized by a mutex.
std::vector<RunRecord> run_benchmark(const BenchmarkConfig& cfg,
                                     const std::function<void(const RunRecord&)>& on_done = {});

/// Worker count: `requested` (or the hardware concurrency when <= 0), capped by RVOPT_THREADS.
int worker_count(int requested);

/// `per_decade` log-spaced points from t0 to t1, both ends included.
std::vector<double> log_time_grid(double t0, double t1, int per_decade = 50);

/// Linear interpolation between order statistics; NaN for an empty sample.
double quantile(std::vector<double> values, double q);

/// Last trace point at or before t; nullptr if t precedes the trace.
const TracePoint* trace_at(const std::vector<TracePoint>& trace, double t);

struct QuantileRow {
  double t = 0.0;
  int runs = 0;
  double objective[3] = {0.0, 0.0, 0.0};  // 0.25, 0.5, 0.75
  double violation[3] = {0.0, 0.0, 0.0};
};

/// Quantiles across runs of each trace resampled onto the grid. A finished run
/// keeps its final value for later grid points.
std::vector<QuantileRow> aggregate_quantiles(const std::vector<RunRecord>& runs,
                                             const std::vector<double>& grid);

/// Columns: seed, objective_h, violation, wall_s, status (error text for failed runs).
void write_aggregate_csv(const std::vector<RunRecord>& runs, const std::filesystem::path& path);
/// Columns: t_s, runs, objective_q25/q50/q75, violation_q25/q50/q75.
void write_quantiles_csv(const std::vector<QuantileRow>& rows, const std::filesystem::path& path);

nlohmann::json to_json(const SmoothingConfig& c);
nlohmann::json to_json(const AlmConfig& c);
nlohmann::json to_json(const GeneratorConfig& c);

/// Written once before the work starts (end_time null) and again when it ends.
class RunManifest {
 public:
  RunManifest(std::filesystem::path path, std::string command, nlohmann::json config);

  void add_artifact(const std::filesystem::path& p);
  void write_started() const;
  void write_finished(int exit_code);

  const nlohmann::json& document() const { return doc_; }

 private:
  void write() const;

  std::filesystem::path path_;
  nlohmann::json doc_;
};

std::string tool_version();

}  // namespace rvopt
