// Big-M mixed-integer encoding of the disjunctions and an exact enumeration
// solver for micro instances.
#pragma once

#include "rvopt/alm.hpp"
#include "rvopt/model.hpp"
#include "rvopt/transcription.hpp"

#include <Eigen/Core>

#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace rvopt {

/// U(k, i) = 1: task i is visited at stamp k.  V(k, j) = 1: the end of arm j is
/// reached at stamp k.  W[k] = 1 selects the discharge branch on step k and
/// W[k] = 0 the charge branch (UAV docked at both ends of the step).
struct BinaryAssignment {
  Eigen::MatrixXi U;
  Eigen::MatrixXi V;
  std::vector<int> W;

  static BinaryAssignment from_stamps(int N, const std::vector<int>& task_stamp,
                                      const std::vector<int>& arm_stamp, std::vector<int> W);
  /// Throws std::invalid_argument on wrong shapes, non-binary entries or
  /// column sums different from one.
  void validate(int N, int m_A, int m_G) const;
};

class MinlpModel {
 public:
  /// Throws std::invalid_argument if mu does not dominate the instance scale.
  explicit MinlpModel(const ProblemInstance& inst, std::optional<double> mu = std::nullopt);

  const ProblemInstance& instance() const { return inst_; }
  double mu() const { return mu_; }

  /// 10 * max(bounding-box diagonal, e_max + kappa * s_max * (N - 1)).
  static double default_mu(const ProblemInstance& inst);
  /// Smallest admissible mu: instance diameter and e_max + kappa * s_max * N.
  static double minimum_mu(const ProblemInstance& inst);

 private:
  const ProblemInstance& inst_;
  double mu_;
};

/// All gated inequalities (each <= 0) with the binaries fixed: task gates
/// (4 rows per (k, i)), arm gates (2 per (k, j)), then per step the discharge
/// pair, the charge-rate row and 8 position-match rows.
ResidualBundle bigM_residuals(const DecisionVector& x, const BinaryAssignment& assign,
                              const MinlpModel& model);

struct OracleLimits {
  int max_N = 6;
  int max_mA = 2;
  int max_mG = 2;
};

class OracleLimitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct OracleOptions {
  AlmConfig alm = default_alm();
  int starts = 3;
  double feasibility_tol = 1e-6;
  double time_limit_s = std::numeric_limits<double>::infinity();
  std::optional<double> mu;

  static AlmConfig default_alm();
};

struct OracleResult {
  bool feasible = false;
  bool timed_out = false;
  double objective = std::numeric_limits<double>::infinity();
  double violation = std::numeric_limits<double>::infinity();
  DecisionVector x;
  BinaryAssignment assignment;
  double lower_bound = 0.0;    // bound on the optimum; +inf when proven infeasible
  long long patterns = 0;      // complete (W, U, V) assignments enumerated
  long long infeasible = 0;    // rejected by the combinatorial checks
  long long bound_pruned = 0;  // skipped because their bound reached the incumbent
  int subproblems = 0;         // continuous solves
  double wall_s = 0.0;
};

/// Exact optimum by enumeration of the binaries with lower-bound pruning.
/// Throws OracleLimitError when the instance exceeds `limits`.
OracleResult solve_exact(const ProblemInstance& inst, const OracleLimits& limits = {},
                         const OracleOptions& options = {});

}  // namespace rvopt
