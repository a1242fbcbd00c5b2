// Powell-Hestenes-Rockafellar augmented Lagrangian outer loop.
#pragma once

#include "rvopt/lbfgs.hpp"
#include "rvopt/model.hpp"
#include "rvopt/problem.hpp"
#include "rvopt/smoothing.hpp"
#include "rvopt/transcription.hpp"

#include <limits>
#include <string_view>
#include <vector>

namespace rvopt {

struct AlmConfig {
  double rho0 = 10.0;
  double gamma = 10.0;   // penalty growth
  double theta = 0.25;   // required violation ratio to keep rho
  double rho_max = 1e8;
  int max_outer = 30;
  // Inner tolerance at outer iteration k: max(final, initial * decay^k).
  double inner_tol_initial = 1e-2;
  double inner_tol_final = 1e-8;
  double inner_tol_decay = 0.1;
  int inner_max_iters = 2000;
  int memory = 10;
  double time_budget_s = std::numeric_limits<double>::infinity();
  double target_violation = 1e-6;
  /// Converged also needs the inner tolerance schedule to have reached this level.
  double stationarity_tol = 1e-6;
  /// Add the smoothing feasibility bias of the worst disjunction to the target.
  bool target_includes_bias = false;
  /// Skip multiplier growth for equality residuals inside their smoothing floor.
  /// Off by default: the plain update lambda += rho h.
  bool use_equality_floor = false;

  void validate() const;
  double inner_tolerance(int outer) const;
};

enum class SolveStatus { Converged, TimeBudget, MaxOuter, InnerFailure };
std::string_view to_string(SolveStatus status);

struct TracePoint {
  double wall_s = 0.0;
  double objective = 0.0;
  double violation = 0.0;
  double rho = 0.0;
  int outer = 0;
  int inner_iters = 0;
};

struct AlmResult {
  Vector x;
  double objective = 0.0;
  double violation = 0.0;
  SolveStatus status = SolveStatus::MaxOuter;
  std::vector<TracePoint> trace;
  Vector eq_multipliers;
  Vector ineq_multipliers;
  int inner_failures = 0;
  double target = 0.0;
};

/// Generic PHR loop. Trace point 0 is the starting point; one point follows
/// every outer iteration.
AlmResult minimize_alm(const ConstrainedProblem& problem, const Vector& x0, const AlmConfig& cfg);

struct SolveReport {
  DecisionVector x_final;
  double objective = 0.0;
  ViolationBreakdown breakdown;
  std::vector<TracePoint> trace;
  SolveStatus status = SolveStatus::MaxOuter;
  double wall_s = 0.0;
  double target_violation = 0.0;
};

/// Solves the smoothed NLP from x0.
SolveReport solve(const ProblemInstance& inst, const SmoothingConfig& smoothing,
                  const AlmConfig& alm, const DecisionVector& x0);

}  // namespace rvopt
