#include "rvopt/alm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace rvopt {

void AlmConfig::validate() const {
  if (!(rho0 > 0.0)) throw std::invalid_argument("rho0 must be positive");
  if (!(gamma > 1.0)) throw std::invalid_argument("gamma must exceed 1");
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0, 1)");
  if (!(rho_max >= rho0)) throw std::invalid_argument("rho_max must be at least rho0");
  if (max_outer < 1) throw std::invalid_argument("max_outer must be positive");
  if (!(inner_tol_initial >= inner_tol_final && inner_tol_final > 0.0)) {
    throw std::invalid_argument("inner tolerance schedule must be positive and nonincreasing");
  }
  if (!(inner_tol_decay > 0.0 && inner_tol_decay <= 1.0)) {
    throw std::invalid_argument("inner tolerance decay must lie in (0, 1]");
  }
  if (inner_max_iters < 1 || memory < 1) throw std::invalid_argument("inner limits must be positive");
  if (!(time_budget_s > 0.0)) throw std::invalid_argument("time budget must be positive");
  if (!(target_violation >= 0.0)) throw std::invalid_argument("target violation must be >= 0");
  if (!(stationarity_tol > 0.0)) throw std::invalid_argument("stationarity tolerance must be positive");
}

double AlmConfig::inner_tolerance(int outer) const {
  return std::max(inner_tol_final, inner_tol_initial * std::pow(inner_tol_decay, outer));
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::TimeBudget: return "TimeBudget";
    case SolveStatus::MaxOuter: return "MaxOuter";
    case SolveStatus::InnerFailure: return "InnerFailure";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

AlmResult minimize_alm(const ConstrainedProblem& problem, const Vector& x0, const AlmConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  if (x0.size() != problem.dimension()) {
    throw std::invalid_argument("starting point has the wrong dimension");
  }

  AlmResult out;
  out.x = x0;
  out.target = cfg.target_violation;

  ResidualEval ev;
  problem.residuals(x0, ev, false);
  const auto n_eq = static_cast<Eigen::Index>(ev.eq.size());
  const auto n_in = static_cast<Eigen::Index>(ev.ineq.size());
  Vector lambda = Vector::Zero(n_eq);
  Vector mu = Vector::Zero(n_in);
  out.eq_multipliers = lambda;
  out.ineq_multipliers = mu;

  std::vector<double> floor = cfg.use_equality_floor ? problem.equality_floor() : std::vector<double>{};
  floor.resize(static_cast<std::size_t>(n_eq), 0.0);

  auto push_trace = [&](double obj, double viol, double rho, int outer, int inner) {
    double t = seconds_since(start);
    if (!out.trace.empty() && t <= out.trace.back().wall_s) t = std::nextafter(out.trace.back().wall_s, 1e300);
    out.trace.push_back({t, obj, viol, rho, outer, inner});
  };

  const double f0 = problem.objective(x0, nullptr);
  bool finite = std::isfinite(f0);
  for (double v : ev.eq) finite = finite && std::isfinite(v);
  for (double v : ev.ineq) finite = finite && std::isfinite(v);
  double violation = finite ? problem.exact_violation(x0) : std::numeric_limits<double>::infinity();
  out.objective = f0;
  out.violation = violation;
  push_trace(f0, violation, cfg.rho0, 0, 0);
  if (!finite || !std::isfinite(violation)) {
    out.status = SolveStatus::InnerFailure;
    return out;
  }
  double rho = cfg.rho0;
  Vector x = x0;
  Vector obj_grad(x0.size());
  Vector w_eq(n_eq);
  Vector w_in(n_in);
  ResidualEval work;

  // L(x) = f + sum[lambda h + rho/2 h^2] + 1/(2 rho) sum[max(0, mu + rho g)^2 - mu^2]
  const SmoothFunction lagrangian = [&](const Vector& xv, Vector& grad) {
    double value = problem.objective(xv, &obj_grad);
    problem.residuals(xv, work, true);
    for (Eigen::Index i = 0; i < n_eq; ++i) {
      const double h = work.eq[static_cast<std::size_t>(i)];
      value += lambda[i] * h + 0.5 * rho * h * h;
      w_eq[i] = lambda[i] + rho * h;
    }
    for (Eigen::Index j = 0; j < n_in; ++j) {
      const double g = work.ineq[static_cast<std::size_t>(j)];
      const double t = std::max(0.0, mu[j] + rho * g);
      value += (t * t - mu[j] * mu[j]) / (2.0 * rho);
      w_in[j] = t;
    }
    grad = obj_grad;
    work.jac_eq.accumulate_transpose(w_eq, grad);
    work.jac_ineq.accumulate_transpose(w_in, grad);
    return value;
  };

  bool out_of_time = false;
  InnerOptions inner;
  inner.max_iterations = cfg.inner_max_iters;
  inner.memory = cfg.memory;
  inner.should_stop = [&] {
    if (seconds_since(start) >= cfg.time_budget_s) out_of_time = true;
    return out_of_time;
  };

  const double stationary_level = std::max(cfg.stationarity_tol, cfg.inner_tol_final) * (1.0 + 1e-12);
  out.status = SolveStatus::MaxOuter;
  for (int outer = 1; outer <= cfg.max_outer; ++outer) {
    inner.tolerance = cfg.inner_tolerance(outer - 1);
    InnerResult r;
    try {
      r = inner_minimize(lagrangian, x, inner);
    } catch (const std::invalid_argument&) {
      out.status = SolveStatus::InnerFailure;
      break;
    }
    if (r.line_search_failed) ++out.inner_failures;
    x = r.x;

    problem.residuals(x, ev, false);
    for (Eigen::Index i = 0; i < n_eq; ++i) {
      const double h = ev.eq[static_cast<std::size_t>(i)];
      const double fl = floor[static_cast<std::size_t>(i)];
      const double h_eff = std::abs(h) <= fl ? 0.0 : h - std::copysign(fl, h);
      lambda[i] += rho * h_eff;
    }
    for (Eigen::Index j = 0; j < n_in; ++j) {
      mu[j] = std::max(0.0, mu[j] + rho * ev.ineq[static_cast<std::size_t>(j)]);
    }

    const double prev_violation = violation;
    violation = problem.exact_violation(x);
    const double obj = problem.objective(x, nullptr);
    push_trace(obj, violation, rho, outer, r.iterations);
    out.x = x;
    out.objective = obj;
    out.violation = violation;

    if (violation <= out.target && inner.tolerance <= stationary_level) {
      out.status = SolveStatus::Converged;
      break;
    }
    if (out_of_time || seconds_since(start) >= cfg.time_budget_s) {
      out.status = SolveStatus::TimeBudget;
      break;
    }
    if (violation > cfg.theta * prev_violation) rho = std::min(cfg.gamma * rho, cfg.rho_max);
  }
  out.eq_multipliers = lambda;
  out.ineq_multipliers = mu;
  return out;
}

SolveReport solve(const ProblemInstance& inst, const SmoothingConfig& smoothing,
                  const AlmConfig& alm, const DecisionVector& x0) {
  const auto start = Clock::now();
  inst.validate();
  smoothing.validate();
  const DecisionLayout layout(inst.N, static_cast<int>(inst.arm_count()));
  if (x0.layout() != layout) throw std::invalid_argument("initial guess layout does not match the instance");

  AlmConfig cfg = alm;
  if (cfg.target_includes_bias) {
    cfg.target_violation += std::max(smoothing.feasibility_bias(static_cast<std::size_t>(inst.N)),
                                      smoothing.feasibility_bias(2));
  }
  NlpProblem problem(inst, smoothing);
  AlmResult r = minimize_alm(problem, x0.flat(), cfg);

  SolveReport rep;
  rep.x_final = DecisionVector(layout, r.x);
  rep.objective = objective(rep.x_final);
  rep.breakdown = violation_report(rep.x_final, inst);
  rep.trace = std::move(r.trace);
  rep.status = r.status;
  rep.target_violation = r.target;
  rep.wall_s = seconds_since(start);
  return rep;
}

}  // namespace rvopt
