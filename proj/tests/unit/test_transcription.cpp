#include "rvopt/instances.hpp"
#include "rvopt/transcription.hpp"

#include "../support/numeric.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace rvopt;
using rvopt::testing::central_gradient;
using rvopt::testing::relative_error;

namespace {

ProblemInstance hover_instance() {
  const Vec2 o(0, 0);
  // Parked at the tip of the only arm, so the arm-visit disjunction holds too.
  const Vec2 tip(1, 0);
  return ProblemInstance{StarGraph(o, {Arm::straight(o, {1, 0}, 1.0)}), {}, tip, tip, PhysicalParams{}, 2};
}

DecisionVector hover_point(const ProblemInstance& inst) {
  DecisionVector x(DecisionLayout(inst.N, static_cast<int>(inst.arm_count())));
  for (int k = 0; k < inst.N; ++k) {
    x.set_ra(k, inst.r0);
    x.p(k) = inst.graph.p_max();
    x.e(k) = inst.params.e_max;
  }
  return x;
}

ProblemInstance three_arm_instance(int N, std::vector<Vec2> tasks = {}) {
  const Vec2 o(0, 0);
  StarGraph g(o, {Arm::straight(o, {1, 0}, 4.0), Arm::straight(o, {0, 1}, 3.0),
                  Arm::polyline(o, std::vector<Vec2>{{-1.0, -0.5}, {-2.0, -0.4}, {-2.8, -1.5}})});
  return ProblemInstance{std::move(g), std::move(tasks), o, Vec2(2, 0), PhysicalParams{}, N};
}

int label_index(const std::vector<std::string>& labels, const std::string& name) {
  const auto it = std::find(labels.begin(), labels.end(), name);
  REQUIRE(it != labels.end());
  return static_cast<int>(it - labels.begin());
}

DecisionVector random_point(const ProblemInstance& inst, std::mt19937_64& rng) {
  const DecisionLayout L(inst.N, static_cast<int>(inst.arm_count()));
  DecisionVector x(L);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Box2 box = network_bounding_box(inst.graph);
  for (int k = 0; k < L.N; ++k) {
    x.set_ra(k, Vec2(box.lo.x() + u(rng) * (box.hi.x() - box.lo.x()), box.lo.y() + u(rng) * (box.hi.y() - box.lo.y())));
    x.e(k) = inst.params.e_max * u(rng);
    for (int j = 0; j < L.arms; ++j) x.p(k)[j] = (0.05 + 0.9 * u(rng)) * inst.graph.p_max()[j];
    if (k + 1 < L.N) x.s(k) = 0.01 + u(rng);
  }
  return x;
}

// Nonsmooth branch minima, computed directly from the geometry.
struct Branches {
  std::vector<double> task, arm, battery;
};

Branches nonsmooth_minima(const DecisionVector& x, const ProblemInstance& inst, double delta) {
  Branches b;
  const int N = x.N();
  for (const Vec2& a : inst.uav_tasks) {
    double m = 1e300;
    for (int k = 0; k < N; ++k) m = std::min(m, (x.ra(k) - a).norm());
    b.task.push_back(m);
  }
  for (std::size_t j = 0; j < inst.arm_count(); ++j) {
    double m = 1e300;
    const double L = inst.graph.p_max()[static_cast<Eigen::Index>(j)];
    for (int k = 0; k < N; ++k) m = std::min(m, std::abs(x.p(k)[static_cast<Eigen::Index>(j)] - L));
    b.arm.push_back(m);
  }
  for (int k = 0; k + 1 < N; ++k) {
    const double alpha = x.e(k + 1) - x.e(k) - inst.params.kappa * x.s(k);
    const double sig = alpha <= 0 ? 0.0 : alpha <= delta ? 0.5 * alpha * alpha : delta * alpha - 0.5 * delta * delta;
    const Vec2 d0 = x.ra(k) - graph_position(inst.graph, x.p(k));
    const Vec2 d1 = x.ra(k + 1) - graph_position(inst.graph, x.p(k + 1));
    const double charge = std::sqrt(sig * sig + d0.squaredNorm() + d1.squaredNorm());
    const double discharge = std::abs(x.e(k + 1) - x.e(k) + x.s(k));
    b.battery.push_back(std::min(charge, discharge));
  }
  return b;
}

}  // namespace

TEST_SUITE("transcription") {
  TEST_CASE("objective examples") {
    const ProblemInstance inst = three_arm_instance(4);
    DecisionVector x(DecisionLayout(4, 3));
    CHECK(objective(x) == 0.0);
    x.s(0) = 0.5;
    x.s(1) = 0.5;
    x.s(2) = 1.0;
    CHECK(objective(x) == doctest::Approx(2.0));
  }

  TEST_CASE("hover point satisfies the smooth group") {
    const ProblemInstance inst = hover_instance();
    const DecisionVector x = hover_point(inst);
    const ResidualBundle b = smooth_residuals(x, inst);
    CHECK(b.eq.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(b.ineq.maxCoeff() <= kNormRegularizer);
    const ViolationBreakdown v = violation_report(x, inst);
    CHECK(v.smooth_eq == 0.0);
    CHECK(v.smooth_ineq == 0.0);
    CHECK(v.total == 0.0);
  }

  TEST_CASE("complementarity and speed residual examples") {
    const ProblemInstance inst = three_arm_instance(3);
    DecisionVector x(DecisionLayout(3, 3));
    x.p(1) << 1, 1, 0;
    x.set_ra(0, Vec2(0, 0));
    x.set_ra(1, Vec2(3.6, 0));
    x.s(0) = 0.1;
    const ResidualBundle b = smooth_residuals(x, inst);
    CHECK(b.eq[label_index(b.eq_labels, "complementarity[1]")] == doctest::Approx(2.0));
    CHECK(b.eq[label_index(b.eq_labels, "complementarity[0]")] == 0.0);
    CHECK(std::abs(b.ineq[label_index(b.ineq_labels, "uav_speed[0]")]) <= 1e-12);
  }

  TEST_CASE("discharge stamp: battery residual within the smoothing bias") {
    for (SoftminMethod method : {SoftminMethod::LpNorm, SoftminMethod::LogSumExp}) {
      SmoothingConfig cfg;
      cfg.method = method;
      const ProblemInstance inst = three_arm_instance(2);
      DecisionVector x(DecisionLayout(2, 3));
      x.set_ra(0, Vec2(0, 2));  // away from the UGV so only the discharge branch holds
      x.set_ra(1, Vec2(1, 2));
      x.e(0) = 0.4;
      x.e(1) = 0.3;
      x.s(0) = 0.1;
      const ResidualBundle b = disjunctive_residuals(x, inst, cfg);
      const double r = b.eq[label_index(b.eq_labels, "battery_mode[0]")];
      CHECK(r <= cfg.feasibility_bias(2) + 1e-12);
      CHECK(r >= -cfg.feasibility_bias(2) - 1e-12);
      CHECK(violation_report(x, inst).battery <= 1e-15);
    }
  }

  TEST_CASE("stamp at a task: visit residual within the smoothing bias") {
    for (SoftminMethod method : {SoftminMethod::LpNorm, SoftminMethod::LogSumExp}) {
      SmoothingConfig cfg;
      cfg.method = method;
      const ProblemInstance inst = three_arm_instance(6, {Vec2(1.0, 1.5)});
      std::mt19937_64 rng(1);
      DecisionVector x = random_point(inst, rng);
      x.set_ra(3, inst.uav_tasks[0]);
      const ResidualBundle b = disjunctive_residuals(x, inst, cfg);
      const double r = b.eq[label_index(b.eq_labels, "task_visit[0]")];
      CHECK(std::abs(r) <= cfg.feasibility_bias(6) + 1e-9);
    }
  }

  TEST_CASE("both battery branches violated: residual near the branch minimum") {
    const ProblemInstance inst = three_arm_instance(2);
    DecisionVector x(DecisionLayout(2, 3));
    x.set_ra(0, Vec2(0, -1));
    x.set_ra(1, Vec2(0, -1));
    x.e(0) = 0.1;
    x.e(1) = 0.3;
    x.s(0) = 0.0;
    const auto exact = battery_branches(x, inst);
    const double m = std::min(exact[0].charge, exact[0].discharge);
    CHECK(m == doctest::Approx(0.2));

    SmoothingConfig lse;
    lse.method = SoftminMethod::LogSumExp;
    const ResidualBundle b_lse = disjunctive_residuals(x, inst, lse);
    const double r_lse = b_lse.eq[label_index(b_lse.eq_labels, "battery_mode[0]")];
    CHECK(r_lse <= m + 1e-9);
    CHECK(r_lse >= m - std::log(2.0) / lse.tau - 1e-9);

    SmoothingConfig lp;
    const ResidualBundle b_lp = disjunctive_residuals(x, inst, lp);
    const double r_lp = b_lp.eq[label_index(b_lp.eq_labels, "battery_mode[0]")];
    CHECK(r_lp >= m - lp.epsilon - 1e-9);
    CHECK(r_lp <= std::pow(2.0, 1.0 / 6.0) * std::sqrt(m * m + 1e-6) - lp.epsilon + 1e-9);
  }

  TEST_CASE("relaxed charging: undercharge while docked is feasible") {
    const ProblemInstance inst = three_arm_instance(2);
    DecisionVector x(DecisionLayout(2, 3));
    x.p(0) << 1.0, 0, 0;
    x.p(1) << 1.5, 0, 0;
    x.set_ra(0, Vec2(1.0, 0));
    x.set_ra(1, Vec2(1.5, 0));
    x.s(0) = 0.1;
    x.e(0) = 0.2;
    x.e(1) = 0.2 + 0.5 * inst.params.kappa * 0.1;
    const auto exact = battery_branches(x, inst);
    CHECK(exact[0].charge <= 1e-12);
    CHECK(violation_report(x, inst).battery <= 1e-12);
    SmoothingConfig cfg;
    const ResidualBundle b = disjunctive_residuals(x, inst, cfg);
    CHECK(b.eq[label_index(b.eq_labels, "battery_mode[0]")] <= cfg.feasibility_bias(2) + 1e-12);

    // Overcharging is a violation of the charge branch.
    x.e(1) = 0.2 + 2.0 * inst.params.kappa * 0.1;
    CHECK(battery_branches(x, inst)[0].charge == doctest::Approx(inst.params.kappa * 0.1));
  }

  TEST_CASE("violation report examples") {
    const ProblemInstance inst = three_arm_instance(4, {Vec2(1.0, 2.0)});
    DecisionVector x(DecisionLayout(4, 3));
    for (int k = 0; k < 4; ++k) x.set_ra(k, Vec2(1.0, 2.7 + 0.1 * k));
    CHECK(violation_report(x, inst).task_visit == doctest::Approx(0.7));

    for (int k = 0; k < 3; ++k) {
      x.e(k) = 0.4 - 0.1 * k;
      x.s(k) = 0.1;
    }
    x.e(3) = 0.1;
    CHECK(violation_report(x, inst).battery <= 1e-15);
  }

  TEST_CASE("violation report is zero exactly at feasible points and positive elsewhere") {
    const ProblemInstance inst = hover_instance();
    DecisionVector x = hover_point(inst);
    CHECK(violation_report(x, inst).total == 0.0);
    x.e(1) = inst.params.e_max - 1e-3;  // undercharge while docked is allowed
    CHECK(violation_report(x, inst).total == 0.0);
    x.e(0) = inst.params.e_max - 1e-3;
    x.e(1) = inst.params.e_max - 2e-3;
    CHECK(violation_report(x, inst).total > 1e-9);

    const ProblemInstance big = three_arm_instance(8, {Vec2(1, 1), Vec2(-2, 1)});
    std::mt19937_64 rng(8);
    for (int i = 0; i < 100; ++i) CHECK(violation_report(random_point(big, rng), big).total > 1e-9);
  }

  TEST_CASE("smoothed residuals stay close to the nonsmooth minima (LSE)") {
    SmoothingConfig cfg;
    cfg.method = SoftminMethod::LogSumExp;
    const ProblemInstance inst = three_arm_instance(7, {Vec2(1, 1), Vec2(-2, 1), Vec2(3, -1)});
    std::mt19937_64 rng(13);
    for (int i = 0; i < 500; ++i) {
      const DecisionVector x = random_point(inst, rng);
      const Branches ref = nonsmooth_minima(x, inst, cfg.delta);
      const ResidualBundle b = disjunctive_residuals(x, inst, cfg);
      Eigen::Index row = 0;
      for (double m : ref.task) CHECK(std::abs(b.eq[row++] - m) <= std::log(7.0) / cfg.tau + 1e-8);
      for (double m : ref.arm) CHECK(std::abs(b.eq[row++] - m) <= std::log(7.0) / cfg.tau + 1e-8);
      for (double m : ref.battery) CHECK(std::abs(b.eq[row++] - m) <= std::log(2.0) / cfg.tau + 1e-8);
    }
  }

  TEST_CASE("smoothed residuals stay close to the nonsmooth minima (lp)") {
    // Bound as stated: eps + n^(1/2p) eps. The 1/n-normalized power mean exceeds the
    // minimum m by up to (n^(1/2p) - 1) m, so this only holds near feasibility.
    SmoothingConfig cfg;
    const ProblemInstance inst = three_arm_instance(7, {Vec2(1, 1), Vec2(-2, 1), Vec2(3, -1)});
    std::mt19937_64 rng(13);
    int over = 0;
    int total = 0;
    for (int i = 0; i < 500; ++i) {
      const DecisionVector x = random_point(inst, rng);
      const Branches ref = nonsmooth_minima(x, inst, cfg.delta);
      const ResidualBundle b = disjunctive_residuals(x, inst, cfg);
      Eigen::Index row = 0;
      auto check = [&](double m, double n) {
        ++total;
        if (std::abs(b.eq[row++] - m) > cfg.epsilon + std::pow(n, 1.0 / (2 * cfg.p_exp)) * cfg.epsilon + 1e-8) ++over;
      };
      for (double m : ref.task) check(m, 7);
      for (double m : ref.arm) check(m, 7);
      for (double m : ref.battery) check(m, 2);
    }
    INFO("residuals outside the bound: " << over << " of " << total);
    CHECK(over == 0);
  }

  TEST_CASE("full_gradient: structured weights") {
    const ProblemInstance inst = three_arm_instance(5, {Vec2(1, 1)});
    std::mt19937_64 rng(2);
    const DecisionVector x = random_point(inst, rng);
    SmoothingConfig cfg;
    const ResidualCounts counts = residual_counts(inst);
    ResidualWeights w;
    w.eq = Vector::Zero(counts.smooth_eq + counts.disjunctive_eq);
    w.ineq = Vector::Zero(counts.smooth_ineq);
    w.objective = 1.0;
    const Vector g = full_gradient(x, inst, cfg, w);
    const DecisionLayout& L = x.layout();
    CHECK(g.segment(L.s_begin(), L.N - 1).isApprox(Vector::Ones(L.N - 1)));
    CHECK(g.head(L.s_begin()).lpNorm<Eigen::Infinity>() == 0.0);

    // uav_start.x / uav_start.y are r^A_1 - r0.
    const ResidualBundle sb = smooth_residuals(x, inst);
    for (int c = 0; c < 2; ++c) {
      ResidualWeights one = w;
      one.objective = 0.0;
      one.eq[label_index(sb.eq_labels, c == 0 ? "uav_start.x" : "uav_start.y")] = 1.0;
      const Vector gc = full_gradient(x, inst, cfg, one);
      Vector expect = Vector::Zero(L.size());
      expect[L.ra(0) + c] = 1.0;
      CHECK((gc - expect).lpNorm<Eigen::Infinity>() == 0.0);
    }
    ResidualWeights bad = w;
    bad.eq = Vector::Zero(1);
    CHECK_THROWS_AS(full_gradient(x, inst, cfg, bad), std::invalid_argument);
  }

  TEST_CASE("full_gradient matches central differences") {
    std::mt19937_64 rng(17);
    for (SoftminMethod method : {SoftminMethod::LpNorm, SoftminMethod::LogSumExp}) {
      SmoothingConfig cfg;
      cfg.method = method;
      GeneratorConfig gen;
      gen.seed = 3;
      gen.m_A = 3;
      gen.N = 10;
      const ProblemInstance inst = generate(gen);
      const ResidualCounts counts = residual_counts(inst);
      for (int trial = 0; trial < 5; ++trial) {
        const DecisionVector x = random_point(inst, rng);
        ResidualWeights w;
        std::normal_distribution<double> n01;
        w.objective = n01(rng);
        w.eq = Vector::NullaryExpr(counts.smooth_eq + counts.disjunctive_eq, [&](Eigen::Index) { return n01(rng); });
        w.ineq = Vector::NullaryExpr(counts.smooth_ineq, [&](Eigen::Index) { return n01(rng); });
        const Vector g = full_gradient(x, inst, cfg, w);
        auto combo = [&](const Vector& y) {
          const DecisionVector yv(x.layout(), y);
          const ResidualBundle s = smooth_residuals(yv, inst);
          const ResidualBundle d = disjunctive_residuals(yv, inst, cfg);
          return w.objective * objective(yv) + w.eq.head(counts.smooth_eq).dot(s.eq) +
                 w.eq.tail(counts.disjunctive_eq).dot(d.eq) + w.ineq.dot(s.ineq);
        };
        CHECK(relative_error(g, central_gradient(combo, x.flat(), 1e-6)) <= 1e-5);
      }
    }
  }

  TEST_CASE("counts, labels and determinism") {
    const ProblemInstance inst = three_arm_instance(6, {Vec2(1, 1), Vec2(-2, 1)});
    const ResidualCounts c = residual_counts(inst);
    std::mt19937_64 rng(4);
    const DecisionVector x = random_point(inst, rng);
    const ResidualBundle s = smooth_residuals(x, inst);
    const ResidualBundle d = disjunctive_residuals(x, inst, SmoothingConfig{});
    CHECK(s.eq.size() == c.smooth_eq);
    CHECK(s.ineq.size() == c.smooth_ineq);
    CHECK(d.eq.size() == c.disjunctive_eq);
    CHECK(c.disjunctive_eq == 2 + 3 + 5);
    CHECK(d.eq_labels.front() == "task_visit[0]");
    CHECK(d.eq_labels.back() == "battery_mode[4]");

    const ResidualBundle d2 = disjunctive_residuals(x, inst, SmoothingConfig{});
    CHECK(d.eq == d2.eq);
    SmoothingConfig cfg;
    ResidualWeights w{1.0, Vector::Ones(c.smooth_eq + c.disjunctive_eq), Vector::Ones(c.smooth_ineq)};
    CHECK(full_gradient(x, inst, cfg, w) == full_gradient(x, inst, cfg, w));
  }

  TEST_CASE("extended graph position continues the arms linearly") {
    const ProblemInstance inst = three_arm_instance(2);
    Vector p(3);
    p << 4.5, 0, 0;
    CHECK((graph_position_extended(inst.graph, p) - Vec2(4.5, 0)).norm() < 1e-12);
    p << -0.5, 0, 0;
    CHECK((graph_position_extended(inst.graph, p) - Vec2(-0.5, 0)).norm() < 1e-12);
    p << 0, 1.2, 0;
    CHECK((graph_position_extended(inst.graph, p) - graph_position(inst.graph, p)).norm() < 1e-15);
    CHECK(graph_position_jacobian_extended(inst.graph, p).isApprox(graph_position_jacobian(inst.graph, p)));
  }
}
