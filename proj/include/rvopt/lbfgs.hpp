// Limited-memory BFGS with a strong-Wolfe line search.
#pragma once

#include <Eigen/Core>

#include <functional>

namespace rvopt {

using Vector = Eigen::VectorXd;

/// Returns f(x) and writes the gradient into `grad` (already sized).
using SmoothFunction = std::function<double(const Vector& x, Vector& grad)>;

struct InnerOptions {
  double tolerance = 1e-6;  // on ||grad||_inf
  int max_iterations = 2000;
  int memory = 10;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 40;
  /// Polled once per iteration; returning true stops with the current iterate.
  std::function<bool()> should_stop;
};

struct InnerResult {
  Vector x;
  double value = 0.0;
  double grad_norm = 0.0;  // infinity norm
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;     // grad_norm <= tolerance
  bool line_search_failed = false;
  bool interrupted = false;
};

/// Minimizes f from x0. Throws std::invalid_argument if f or its gradient is
/// not finite at x0.
InnerResult inner_minimize(const SmoothFunction& f, const Vector& x0, const InnerOptions& options);

}  // namespace rvopt
