// Objective, smooth constraint group, smoothed disjunctions and the exact
// violation metric for the UAV-UGV trajectory problem.
#pragma once

#include "rvopt/model.hpp"
#include "rvopt/problem.hpp"
#include "rvopt/smoothing.hpp"

#include <string>
#include <vector>

namespace rvopt {

/// Regularizer for every norm / absolute value inside a constraint.
inline constexpr double kNormRegularizer = 1e-9;

struct ResidualBundle {
  Vector eq;
  Vector ineq;
  std::vector<std::string> eq_labels;
  std::vector<std::string> ineq_labels;
};

struct ViolationBreakdown {
  double smooth_eq = 0.0;
  double smooth_ineq = 0.0;
  double task_visit = 0.0;
  double arm_visit = 0.0;
  double battery = 0.0;
  double total = 0.0;
};

/// Total mission time, sum of s_k.
double objective(const DecisionVector& x);

ResidualBundle smooth_residuals(const DecisionVector& x, const ProblemInstance& inst);
ResidualBundle disjunctive_residuals(const DecisionVector& x, const ProblemInstance& inst,
                                     const SmoothingConfig& cfg);

/// Exact, unsmoothed violation: |h| for equalities, max(0, g) for inequalities,
/// exact branch minimum for each disjunction.
ViolationBreakdown violation_report(const DecisionVector& x, const ProblemInstance& inst);

/// Per-stamp-pair exact violations of the two battery branches.
struct BatteryBranches {
  double charge = 0.0;     // stacked norm of (max(0, e'-e-kappa s), r^A - r^G at both stamps)
  double discharge = 0.0;  // |e' - e + s|
};
std::vector<BatteryBranches> battery_branches(const DecisionVector& x, const ProblemInstance& inst);

/// Weights for a combination  w_f f + sum w_eq h + sum w_ineq g.  The equality
/// weights cover the smooth equalities followed by the disjunctive ones.
struct ResidualWeights {
  double objective = 0.0;
  Vector eq;
  Vector ineq;
};

Vector full_gradient(const DecisionVector& x, const ProblemInstance& inst,
                     const SmoothingConfig& cfg, const ResidualWeights& weights);

/// Counts of the residual groups for an instance.
struct ResidualCounts {
  int smooth_eq = 0;
  int disjunctive_eq = 0;
  int smooth_ineq = 0;
};
ResidualCounts residual_counts(const ProblemInstance& inst);

/// Evaluates the smooth group (and optionally the smoothed disjunctions) with
/// analytic Jacobians. Equalities: smooth then disjunctive; inequalities: smooth.
class Transcription {
 public:
  Transcription(const ProblemInstance& inst, const SmoothingConfig& cfg,
                bool include_disjunctions = true);

  const ProblemInstance& instance() const { return inst_; }
  const DecisionLayout& layout() const { return layout_; }

  void evaluate(const Vector& x, ResidualEval& out, bool with_jacobian,
                std::vector<std::string>* eq_labels = nullptr,
                std::vector<std::string>* ineq_labels = nullptr) const;

 private:
  const ProblemInstance& inst_;
  SmoothingConfig cfg_;
  DecisionLayout layout_;
  bool disjunctions_;
};

/// The smoothed nonlinear program as a ConstrainedProblem.
class NlpProblem final : public ConstrainedProblem {
 public:
  NlpProblem(const ProblemInstance& inst, const SmoothingConfig& cfg);

  int dimension() const override { return transcription_.layout().size(); }
  double objective(const Vector& x, Vector* grad) const override;
  void residuals(const Vector& x, ResidualEval& out, bool with_jacobian) const override;
  double exact_violation(const Vector& x) const override;
  std::vector<double> equality_floor() const override;

 private:
  Transcription transcription_;
  SmoothingConfig cfg_;
};

/// Planar UGV position for possibly out-of-box coordinates (arms extended
/// linearly past both ends). Used inside the solver where bounds are soft.
Vec2 graph_position_extended(const StarGraph& graph, const Eigen::Ref<const Vector>& p);
Eigen::Matrix2Xd graph_position_jacobian_extended(const StarGraph& graph,
                                                  const Eigen::Ref<const Vector>& p);

}  // namespace rvopt
