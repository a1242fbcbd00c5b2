// Generic constrained-problem interface consumed by the augmented Lagrangian solver.
#pragma once

#include <Eigen/Core>

#include <vector>

namespace rvopt {

using Vector = Eigen::VectorXd;

/// Row-compressed sparse Jacobian. Duplicate column entries within a row are
/// allowed and are summed by every consumer.
struct SparseRows {
  std::vector<int> row_start{0};
  std::vector<int> col;
  std::vector<double> val;

  void clear() {
    row_start.assign(1, 0);
    col.clear();
    val.clear();
  }
  void add(int c, double v) {
    col.push_back(c);
    val.push_back(v);
  }
  void end_row() { row_start.push_back(static_cast<int>(col.size())); }
  int rows() const { return static_cast<int>(row_start.size()) - 1; }

  /// out += J^T w
  void accumulate_transpose(const Vector& w, Vector& out) const;
  /// Dense copy (tests and diagnostics).
  Eigen::MatrixXd dense(int cols) const;
};

/// Equality (target 0) and inequality (target <= 0) residuals, optionally with
/// their Jacobians.
struct ResidualEval {
  std::vector<double> eq;
  std::vector<double> ineq;
  SparseRows jac_eq;
  SparseRows jac_ineq;

  void clear() {
    eq.clear();
    ineq.clear();
    jac_eq.clear();
    jac_ineq.clear();
  }
};

/// minimize f(x) subject to h(x) = 0, g(x) <= 0.
class ConstrainedProblem {
 public:
  virtual ~ConstrainedProblem() = default;

  virtual int dimension() const = 0;
  /// Objective value; writes the gradient when `grad` is non-null.
  virtual double objective(const Vector& x, Vector* grad) const = 0;
  virtual void residuals(const Vector& x, ResidualEval& out, bool with_jacobian) const = 0;
  /// Unsmoothed feasibility metric used for stopping and reporting.
  virtual double exact_violation(const Vector& x) const = 0;
  /// Per-equality magnitude below which a residual counts as satisfied when
  /// updating multipliers. Empty means all zeros.
  virtual std::vector<double> equality_floor() const { return {}; }
};

}  // namespace rvopt
