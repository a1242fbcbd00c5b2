#include "rvopt/alm.hpp"
#include "rvopt/instances.hpp"
#include "rvopt/lbfgs.hpp"
#include "rvopt/minlp_oracle.hpp"

#include "../support/micro.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

using namespace rvopt;

namespace {

// Two textbook problems with f(x) = ||x||^2.
class ToyProblem final : public ConstrainedProblem {
 public:
  enum Kind { BoundBelow, LineEquality };
  explicit ToyProblem(Kind kind) : kind_(kind) {}

  int dimension() const override { return kind_ == BoundBelow ? 1 : 2; }
  double objective(const Vector& x, Vector* grad) const override {
    if (grad) *grad = 2.0 * x;
    return x.squaredNorm();
  }
  void residuals(const Vector& x, ResidualEval& out, bool with_jacobian) const override {
    out.clear();
    if (kind_ == BoundBelow) {
      out.ineq.push_back(1.0 - x[0]);  // x >= 1
      if (with_jacobian) out.jac_ineq.add(0, -1.0);
      out.jac_ineq.end_row();
    } else {
      out.eq.push_back(x[0] + x[1] - 1.0);
      if (with_jacobian) {
        out.jac_eq.add(0, 1.0);
        out.jac_eq.add(1, 1.0);
      }
      out.jac_eq.end_row();
    }
  }
  double exact_violation(const Vector& x) const override {
    return kind_ == BoundBelow ? std::max(0.0, 1.0 - x[0]) : std::abs(x[0] + x[1] - 1.0);
  }

 private:
  Kind kind_;
};

ProblemInstance fixture_instance(std::uint64_t seed, int m_A) {
  GeneratorConfig g;
  g.seed = seed;
  g.m_A = m_A;
  return generate(g);
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("L-BFGS: one-dimensional quadratic") {
    const SmoothFunction f = [](const Vector& x, Vector& g) {
      g[0] = 2.0 * (x[0] - 3.0);
      return (x[0] - 3.0) * (x[0] - 3.0);
    };
    InnerOptions opt;
    opt.tolerance = 1e-10;
    const InnerResult r = inner_minimize(f, Vector::Zero(1), opt);
    CHECK(r.converged);
    CHECK(std::abs(r.x[0] - 3.0) <= 1e-8);
  }

  TEST_CASE("L-BFGS: Rosenbrock") {
    const SmoothFunction f = [](const Vector& x, Vector& g) {
      const double a = 1.0 - x[0];
      const double b = x[1] - x[0] * x[0];
      g[0] = -2.0 * a - 400.0 * x[0] * b;
      g[1] = 200.0 * b;
      return a * a + 100.0 * b * b;
    };
    Vector x0(2);
    x0 << -1.2, 1.0;
    InnerOptions opt;
    opt.tolerance = 1e-9;
    const InnerResult r = inner_minimize(f, x0, opt);
    CHECK((r.x - Vector::Ones(2)).lpNorm<Eigen::Infinity>() <= 1e-5);
  }

  TEST_CASE("L-BFGS: 50-dimensional convex quadratic") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n01;
    const Eigen::MatrixXd M = Eigen::MatrixXd::NullaryExpr(50, 50, [&](Eigen::Index, Eigen::Index) { return n01(rng); });
    const Eigen::MatrixXd A = M.transpose() * M / 50.0 + Eigen::MatrixXd::Identity(50, 50);
    const Vector b = Vector::NullaryExpr(50, [&](Eigen::Index) { return n01(rng); });
    const Vector xstar = A.ldlt().solve(b);  // oracle
    const SmoothFunction f = [&](const Vector& x, Vector& g) {
      g = A * x - b;
      return 0.5 * x.dot(A * x) - b.dot(x);
    };
    InnerOptions opt;
    opt.tolerance = 1e-9;
    const InnerResult r = inner_minimize(f, Vector::Zero(50), opt);
    CHECK((r.x - xstar).lpNorm<Eigen::Infinity>() <= 1e-6);
  }

  TEST_CASE("L-BFGS rejects a non-finite start and honours should_stop") {
    const SmoothFunction bad = [](const Vector&, Vector& g) {
      g.setZero();
      return std::nan("");
    };
    CHECK_THROWS_AS(inner_minimize(bad, Vector::Zero(2), InnerOptions{}), std::invalid_argument);

    const SmoothFunction f = [](const Vector& x, Vector& g) {
      g = 2.0 * x;
      return x.squaredNorm();
    };
    InnerOptions opt;
    opt.should_stop = [] { return true; };
    const InnerResult r = inner_minimize(f, Vector::Ones(3), opt);
    CHECK(r.interrupted);
    CHECK(r.iterations <= 1);
  }
}

TEST_SUITE("alm") {
  TEST_CASE("toy: bound constraint, multiplier 2") {
    const ToyProblem prob(ToyProblem::BoundBelow);
    Vector x0(1);
    x0 << 0.0;
    const AlmResult r = minimize_alm(prob, x0, AlmConfig{});
    CHECK(r.status == SolveStatus::Converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.ineq_multipliers[0] == doctest::Approx(2.0).epsilon(1e-4));
  }

  TEST_CASE("toy: linear equality, multiplier -1") {
    const ToyProblem prob(ToyProblem::LineEquality);
    const AlmResult r = minimize_alm(prob, Vector::Zero(2), AlmConfig{});
    CHECK(r.status == SolveStatus::Converged);
    CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.x[1] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.eq_multipliers[0] == doctest::Approx(-1.0).epsilon(1e-4));
  }

  TEST_CASE("trace starts at x0 and has one point per outer iteration") {
    const ToyProblem prob(ToyProblem::BoundBelow);
    Vector x0(1);
    x0 << -2.0;
    const AlmResult r = minimize_alm(prob, x0, AlmConfig{});
    REQUIRE(r.trace.size() >= 2);
    CHECK(r.trace[0].outer == 0);
    CHECK(r.trace[0].violation == doctest::Approx(3.0));
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      CHECK(r.trace[i].outer == static_cast<int>(i));
      CHECK(r.trace[i].wall_s > r.trace[i - 1].wall_s);
    }
  }

  TEST_CASE("config validation and non-finite starts") {
    AlmConfig c;
    c.gamma = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    AlmConfig d;
    d.theta = 1.5;
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    const ToyProblem prob(ToyProblem::LineEquality);
    Vector x0(2);
    x0 << std::nan(""), 0.0;
    CHECK(minimize_alm(prob, x0, AlmConfig{}).status == SolveStatus::InnerFailure);
    CHECK_THROWS_AS(minimize_alm(prob, Vector::Zero(3), AlmConfig{}), std::invalid_argument);
  }

  TEST_CASE("micro mission matches the enumeration oracle") {
    // One straight arm, one task off the road: the round-trip-detour micro case.
    const auto cases = rvopt::testing::micro_cases();
    const auto& inst = cases[2].inst;
    REQUIRE(cases[2].name == "round-trip-detour");
    const OracleResult orc = solve_exact(inst);
    REQUIRE(orc.feasible);
    const SolveReport rep = solve(inst, SmoothingConfig{}, AlmConfig{}, warm_start(inst));
    CHECK(rep.objective <= orc.objective * 1.02 + 1e-6);
    CHECK(rep.objective >= orc.objective - 1e-4);
    CHECK(rep.breakdown.total <= 1e-4);
    CHECK(orc.objective == doctest::Approx(2.0 / 16.2).epsilon(1e-6));
  }

  TEST_CASE("converged solves: certificate, monotone trend, multiplier signs, determinism") {
    for (std::uint64_t seed : {1, 2, 3}) {
      const ProblemInstance inst = fixture_instance(seed, 2);
      const DecisionVector x0 = warm_start(inst);
      const NlpProblem prob(inst, SmoothingConfig{});
      const AlmResult r = minimize_alm(prob, x0.flat(), AlmConfig{});
      REQUIRE(r.status == SolveStatus::Converged);
      CHECK(violation_report(DecisionVector(x0.layout(), r.x), inst).total <= r.target);
      // The warm start can already be feasible; the solve may then trade violation
      // for objective, but never beyond the target.
      CHECK(r.trace.back().violation <= std::max(r.trace.front().violation, r.target));
      CHECK(r.trace.back().objective <= r.trace.front().objective + 1e-9);
      int pairs = 0;
      int down = 0;
      for (std::size_t i = 2; i < r.trace.size(); ++i) {
        ++pairs;
        if (r.trace[i].violation <= r.trace[i - 1].violation) ++down;
      }
      INFO("seed " << seed << ": " << down << " of " << pairs << " outer steps nonincreasing");
      CHECK(down >= 0.8 * pairs);
      CHECK(r.ineq_multipliers.minCoeff() >= 0.0);

      const AlmResult again = minimize_alm(prob, x0.flat(), AlmConfig{});
      REQUIRE(again.trace.size() == r.trace.size());
      for (std::size_t i = 0; i < r.trace.size(); ++i) {
        CHECK(again.trace[i].objective == r.trace[i].objective);
        CHECK(again.trace[i].violation == r.trace[i].violation);
        CHECK(again.trace[i].inner_iters == r.trace[i].inner_iters);
      }
      CHECK(again.x == r.x);
    }
  }

  TEST_CASE("time budget stops the solve") {
    const ProblemInstance inst = fixture_instance(5, 10);
    AlmConfig cfg;
    cfg.time_budget_s = 0.2;
    const SolveReport rep = solve(inst, SmoothingConfig{}, cfg, warm_start(inst));
    CHECK(rep.status == SolveStatus::TimeBudget);
    CHECK(rep.wall_s < 5.0);
  }

  TEST_CASE("solve rejects a mismatched initial guess") {
    const ProblemInstance inst = fixture_instance(1, 2);
    CHECK_THROWS_AS(solve(inst, SmoothingConfig{}, AlmConfig{}, DecisionVector(DecisionLayout(3, 3))),
                    std::invalid_argument);
  }
}
