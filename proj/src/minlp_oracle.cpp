#include "rvopt/minlp_oracle.hpp"

#include "rvopt/instances.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace rvopt {

BinaryAssignment BinaryAssignment::from_stamps(int N, const std::vector<int>& task_stamp,
                                               const std::vector<int>& arm_stamp, std::vector<int> W) {
  BinaryAssignment a;
  a.U = Eigen::MatrixXi::Zero(N, static_cast<Eigen::Index>(task_stamp.size()));
  a.V = Eigen::MatrixXi::Zero(N, static_cast<Eigen::Index>(arm_stamp.size()));
  for (std::size_t i = 0; i < task_stamp.size(); ++i) {
    if (task_stamp[i] < 0 || task_stamp[i] >= N) throw std::invalid_argument("task stamp out of range");
    a.U(task_stamp[i], static_cast<Eigen::Index>(i)) = 1;
  }
  for (std::size_t j = 0; j < arm_stamp.size(); ++j) {
    if (arm_stamp[j] < 0 || arm_stamp[j] >= N) throw std::invalid_argument("arm stamp out of range");
    a.V(arm_stamp[j], static_cast<Eigen::Index>(j)) = 1;
  }
  a.W = std::move(W);
  return a;
}

void BinaryAssignment::validate(int N, int m_A, int m_G) const {
  if (U.rows() != N || U.cols() != m_A || V.rows() != N || V.cols() != m_G ||
      static_cast<int>(W.size()) != N - 1) {
    throw std::invalid_argument("assignment has the wrong shape");
  }
  auto check = [](const Eigen::MatrixXi& M, const char* name) {
    if ((M.array() != 0 && M.array() != 1).any()) {
      throw std::invalid_argument(std::string(name) + " must be binary");
    }
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      if (M.col(c).sum() != 1) {
        throw std::invalid_argument(std::string(name) + " column " + std::to_string(c) + " must sum to 1");
      }
    }
  };
  check(U, "U");
  check(V, "V");
  for (int w : W) {
    if (w != 0 && w != 1) throw std::invalid_argument("W must be binary");
  }
}

namespace {

double instance_diameter(const ProblemInstance& inst) {
  Box2 box = network_bounding_box(inst.graph);
  auto grow = [&](const Vec2& q) {
    box.lo = box.lo.cwiseMin(q);
    box.hi = box.hi.cwiseMax(q);
  };
  for (const Vec2& a : inst.uav_tasks) grow(a);
  grow(inst.r0);
  grow(inst.rf);
  return (box.hi - box.lo).norm();
}

}  // namespace

double MinlpModel::minimum_mu(const ProblemInstance& inst) {
  const PhysicalParams& P = inst.params;
  return std::max(instance_diameter(inst), P.e_max + P.kappa * P.s_max * inst.N);
}

double MinlpModel::default_mu(const ProblemInstance& inst) {
  const PhysicalParams& P = inst.params;
  return 10.0 * std::max(instance_diameter(inst), P.e_max + P.kappa * P.s_max * (inst.N - 1));
}

MinlpModel::MinlpModel(const ProblemInstance& inst, std::optional<double> mu)
    : inst_(inst), mu_(mu.value_or(default_mu(inst))) {
  inst.validate();
  const double need = minimum_mu(inst);
  if (!(mu_ > need)) {
    throw std::invalid_argument("big-M constant " + std::to_string(mu_) +
                                " does not exceed the instance scale " + std::to_string(need));
  }
}

namespace {

// Appends the gated rows; Jacobian entries go to `jac` when non-null.
void gate_rows(const Vector& xv, const DecisionLayout& L, const BinaryAssignment& a,
               const MinlpModel& model, std::vector<double>& vals, SparseRows* jac,
               std::vector<std::string>* labels) {
  const ProblemInstance& inst = model.instance();
  const StarGraph& g = inst.graph;
  const double mu = model.mu();
  const int N = L.N;
  const int m = L.arms;
  auto row = [&](double v, const std::string& label) {
    vals.push_back(v);
    if (jac) jac->end_row();
    if (labels) labels->push_back(label);
  };
  auto add = [&](int c, double v) {
    if (jac) jac->add(c, v);
  };
  auto tag = [](const char* name, int k, int i) {
    return std::string(name) + "[" + std::to_string(k) + "," + std::to_string(i) + "]";
  };

  for (std::size_t i = 0; i < inst.task_count(); ++i) {
    const Vec2& target = inst.uav_tasks[i];
    for (int k = 0; k < N; ++k) {
      const double slack = mu * (1 - a.U(k, static_cast<Eigen::Index>(i)));
      for (int c = 0; c < 2; ++c) {
        const double d = xv[L.ra(k) + c] - target[c];
        for (double sign : {1.0, -1.0}) {
          add(L.ra(k) + c, sign);
          row(sign * d - slack, tag("task_gate", k, static_cast<int>(i)));
        }
      }
    }
  }
  for (int j = 0; j < m; ++j) {
    const double pmax = g.p_max()[j];
    for (int k = 0; k < N; ++k) {
      const double slack = mu * (1 - a.V(k, j));
      const double d = xv[L.p(k, j)] - pmax;
      for (double sign : {1.0, -1.0}) {
        add(L.p(k, j), sign);
        row(sign * d - slack, tag("arm_gate", k, j));
      }
    }
  }
  const PhysicalParams& P = inst.params;
  std::vector<Vec2> gap(static_cast<std::size_t>(N));
  std::vector<Eigen::Matrix2Xd> gap_jac(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    const auto pk = xv.segment(L.p(k), m);
    gap[k] = xv.segment<2>(L.ra(k)) - graph_position_extended(g, pk);
    gap_jac[k] = graph_position_jacobian_extended(g, pk);
  }
  for (int k = 0; k + 1 < N; ++k) {
    const int W = a.W[static_cast<std::size_t>(k)];
    const double e0 = xv[L.e(k)];
    const double e1 = xv[L.e(k + 1)];
    const double s = xv[L.s(k)];
    const double dis = e1 - e0 + s;
    for (double sign : {1.0, -1.0}) {
      add(L.e(k + 1), sign);
      add(L.e(k), -sign);
      add(L.s(k), sign);
      row(sign * dis - mu * (1 - W), tag("discharge_gate", k, 0));
    }
    add(L.e(k + 1), 1.0);
    add(L.e(k), -1.0);
    add(L.s(k), -P.kappa);
    row(e1 - e0 - P.kappa * s - mu * W, tag("charge_gate", k, 0));
    for (int q : {k, k + 1}) {
      for (int c = 0; c < 2; ++c) {
        for (double sign : {1.0, -1.0}) {
          if (jac) {
            add(L.ra(q) + c, sign);
            for (int j = 0; j < m; ++j) add(L.p(q, j), -sign * gap_jac[q](c, j));
          }
          row(sign * gap[q][c] - mu * W, tag("dock_gate", k, 2 * (q - k) + c));
        }
      }
    }
  }
}

class GatedProblem final : public ConstrainedProblem {
 public:
  GatedProblem(const MinlpModel& model, const BinaryAssignment& assign)
      : model_(model),
        assign_(assign),
        transcription_(model.instance(), SmoothingConfig{}, false) {}

  int dimension() const override { return transcription_.layout().size(); }

  double objective(const Vector& x, Vector* grad) const override {
    const DecisionLayout& L = transcription_.layout();
    if (grad) {
      grad->setZero(L.size());
      grad->segment(L.s_begin(), L.N - 1).setConstant(1.0);
    }
    return x.segment(L.s_begin(), L.N - 1).sum();
  }

  void residuals(const Vector& x, ResidualEval& out, bool with_jacobian) const override {
    transcription_.evaluate(x, out, with_jacobian);
    gate_rows(x, transcription_.layout(), assign_, model_, out.ineq, with_jacobian ? &out.jac_ineq : nullptr,
              nullptr);
  }

  double exact_violation(const Vector& x) const override {
    const DecisionVector dv(transcription_.layout(), x);
    const ViolationBreakdown v = violation_report(dv, model_.instance());
    double total = v.smooth_eq + v.smooth_ineq;
    std::vector<double> gates;
    gate_rows(x, transcription_.layout(), assign_, model_, gates, nullptr, nullptr);
    for (double r : gates) total += std::max(0.0, r);
    return total;
  }

 private:
  const MinlpModel& model_;
  const BinaryAssignment& assign_;
  Transcription transcription_;
};

using Clock = std::chrono::steady_clock;

constexpr double kMatchTol = 1e-7;  // km; coincident fixed positions

struct Leaf {
  std::vector<int> W;
  std::vector<int> task_stamp;
  std::vector<int> arm_stamp;
  double bound = 0.0;
  long long order = 0;
};

// Positions pinned by the assignment and the resulting bound on sum s.
struct Plan {
  bool feasible = true;
  double bound = 0.0;
  std::vector<std::optional<Vec2>> uav;
  std::vector<std::optional<NetPoint>> ugv;
  std::vector<bool> docked;
};

struct Demand {
  int from = 0;  // stamps from < to; covers steps from .. to-1
  int to = 0;
  double amount = 0.0;
};

// min sum s subject to interval demands and s >= s_min: greedy by right end
// is exact for interval (consecutive-ones) covering.
double interval_cover_bound(std::vector<Demand> demands, int steps, double s_min) {
  std::vector<double> s(static_cast<std::size_t>(steps), s_min);
  std::stable_sort(demands.begin(), demands.end(), [](const Demand& a, const Demand& b) { return a.to < b.to; });
  for (const Demand& d : demands) {
    double have = 0.0;
    for (int k = d.from; k < d.to; ++k) have += s[static_cast<std::size_t>(k)];
    if (d.amount > have) s[static_cast<std::size_t>(d.to - 1)] += d.amount - have;
  }
  double total = 0.0;
  for (double v : s) total += v;
  return total;
}

class Planner {
 public:
  explicit Planner(const ProblemInstance& inst) : inst_(inst) {
    const NetworkProjection a = project_to_network(inst.graph, inst.r0);
    const NetworkProjection b = project_to_network(inst.graph, inst.rf);
    start_ = {a.arm, a.t};
    finish_ = {b.arm, b.t};
  }

  Plan plan(const Leaf& leaf) const {
    const int N = inst_.N;
    const StarGraph& g = inst_.graph;
    const PhysicalParams& P = inst_.params;
    Plan out;
    out.uav.assign(static_cast<std::size_t>(N), std::nullopt);
    out.ugv.assign(static_cast<std::size_t>(N), std::nullopt);
    out.docked.assign(static_cast<std::size_t>(N), false);
    auto fail = [&] {
      out.feasible = false;
      return out;
    };
    auto pin_uav = [&](int k, const Vec2& q) {
      auto& slot = out.uav[static_cast<std::size_t>(k)];
      if (slot && (*slot - q).norm() > kMatchTol) return false;
      slot = q;
      return true;
    };
    auto pin_ugv = [&](int k, const NetPoint& q) {
      auto& slot = out.ugv[static_cast<std::size_t>(k)];
      if (slot && g.network_distance(slot->arm, slot->t, q.arm, q.t) > kMatchTol) return false;
      slot = q;
      return true;
    };

    if (!pin_uav(0, inst_.r0) || !pin_uav(N - 1, inst_.rf)) return fail();
    if (!pin_ugv(0, start_) || !pin_ugv(N - 1, finish_)) return fail();
    for (std::size_t i = 0; i < leaf.task_stamp.size(); ++i) {
      if (!pin_uav(leaf.task_stamp[i], inst_.uav_tasks[i])) return fail();
    }
    for (std::size_t j = 0; j < leaf.arm_stamp.size(); ++j) {
      if (!pin_ugv(leaf.arm_stamp[j], {j, g.p_max()[static_cast<Eigen::Index>(j)]})) return fail();
    }
    for (int k = 0; k + 1 < N; ++k) {
      if (leaf.W[static_cast<std::size_t>(k)] == 0) {
        out.docked[static_cast<std::size_t>(k)] = true;
        out.docked[static_cast<std::size_t>(k + 1)] = true;
      }
    }
    // Docked stamps share one position.
    for (int k = 0; k < N; ++k) {
      if (!out.docked[static_cast<std::size_t>(k)]) continue;
      const auto& u = out.uav[static_cast<std::size_t>(k)];
      if (u) {
        const NetworkProjection pr = project_to_network(g, *u);
        if (pr.distance > kMatchTol) return fail();
        if (!pin_ugv(k, {pr.arm, pr.t})) return fail();
      }
      const auto& v = out.ugv[static_cast<std::size_t>(k)];
      if (v && !pin_uav(k, g.point_on(v->arm, v->t))) return fail();
    }

    std::vector<Demand> demands;
    auto chain = [&](auto&& pinned, auto&& dist, double speed) {
      int last = -1;
      for (int k = 0; k < N; ++k) {
        if (!pinned(k)) continue;
        if (last >= 0) demands.push_back({last, k, dist(last, k) / speed});
        last = k;
      }
    };
    chain([&](int k) { return out.uav[static_cast<std::size_t>(k)].has_value(); },
          [&](int a, int b) { return (*out.uav[static_cast<std::size_t>(a)] - *out.uav[static_cast<std::size_t>(b)]).norm(); },
          P.v_max_A);
    chain([&](int k) { return out.ugv[static_cast<std::size_t>(k)].has_value(); },
          [&](int a, int b) {
            const NetPoint& pa = *out.ugv[static_cast<std::size_t>(a)];
            const NetPoint& pb = *out.ugv[static_cast<std::size_t>(b)];
            return g.network_distance(pa.arm, pa.t, pb.arm, pb.t);
          },
          P.v_max_G);

    // Discharge runs: the flight inside a run is paid from one battery.
    const double capacity = P.e_max - P.e_min;
    int k = 0;
    while (k + 1 < N) {
      if (leaf.W[static_cast<std::size_t>(k)] != 1) {
        ++k;
        continue;
      }
      const int a = k;
      while (k + 1 < N && leaf.W[static_cast<std::size_t>(k)] == 1) ++k;
      const int b = k;
      const double flight = run_flight(out, a, b);
      const double need = flight / P.v_max_A;
      if (need > capacity + 1e-12) return fail();
      demands.push_back({a, b, need});
    }
    out.bound = interval_cover_bound(std::move(demands), N - 1, P.s_min);
    return out;
  }

  // Bound valid for every assignment: UAV tour through all tasks, UGV tour
  // through all arm ends, each between the fixed endpoints.
  double global_bound() const {
    const StarGraph& g = inst_.graph;
    const PhysicalParams& P = inst_.params;
    std::vector<std::size_t> order(inst_.task_count());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    double uav = std::numeric_limits<double>::infinity();
    do {
      Vec2 at = inst_.r0;
      double len = 0.0;
      for (std::size_t i : order) {
        len += (inst_.uav_tasks[i] - at).norm();
        at = inst_.uav_tasks[i];
      }
      uav = std::min(uav, len + (inst_.rf - at).norm());
    } while (std::next_permutation(order.begin(), order.end()));

    std::vector<std::size_t> arms(g.arm_count());
    for (std::size_t j = 0; j < arms.size(); ++j) arms[j] = j;
    double ugv = std::numeric_limits<double>::infinity();
    do {
      NetPoint at = start_;
      double len = 0.0;
      for (std::size_t j : arms) {
        const NetPoint end{j, g.p_max()[static_cast<Eigen::Index>(j)]};
        len += g.network_distance(at.arm, at.t, end.arm, end.t);
        at = end;
      }
      ugv = std::min(ugv, len + g.network_distance(at.arm, at.t, finish_.arm, finish_.t));
    } while (std::next_permutation(arms.begin(), arms.end()));
    return std::max({uav / P.v_max_A, ugv / P.v_max_G, (inst_.N - 1) * P.s_min});
  }

  // Initial guess consistent with the pinned positions.
  DecisionVector initial_guess(const Plan& plan, const std::vector<int>& W) const {
    const int N = inst_.N;
    const StarGraph& g = inst_.graph;
    const PhysicalParams& P = inst_.params;
    std::vector<NetPoint> ugv(static_cast<std::size_t>(N));
    int last = 0;
    for (int k = 1; k < N; ++k) {
      if (!plan.ugv[static_cast<std::size_t>(k)]) continue;
      const NetPoint& a = *plan.ugv[static_cast<std::size_t>(last)];
      const NetPoint& b = *plan.ugv[static_cast<std::size_t>(k)];
      for (int q = last; q <= k; ++q) {
        ugv[static_cast<std::size_t>(q)] =
            interpolate_on_network(a, b, static_cast<double>(q - last) / (k - last));
      }
      last = k;
    }
    std::vector<std::optional<Vec2>> uav = plan.uav;
    for (int k = 0; k < N; ++k) {
      const auto& u = ugv[static_cast<std::size_t>(k)];
      if (!uav[static_cast<std::size_t>(k)] && plan.docked[static_cast<std::size_t>(k)]) {
        uav[static_cast<std::size_t>(k)] = g.point_on(u.arm, u.t);
      }
    }
    std::vector<Vec2> ra(static_cast<std::size_t>(N));
    last = 0;
    for (int k = 1; k < N; ++k) {
      if (!uav[static_cast<std::size_t>(k)]) continue;
      const Vec2 a = *uav[static_cast<std::size_t>(last)];
      const Vec2 b = *uav[static_cast<std::size_t>(k)];
      for (int q = last; q <= k; ++q) {
        ra[static_cast<std::size_t>(q)] = a + (b - a) * (static_cast<double>(q - last) / (k - last));
      }
      last = k;
    }

    DecisionVector x(DecisionLayout(N, static_cast<int>(g.arm_count())));
    for (int k = 0; k < N; ++k) {
      const NetPoint& u = ugv[static_cast<std::size_t>(k)];
      x.set_ra(k, ra[static_cast<std::size_t>(k)]);
      x.p(k) = network_coordinates(g, u.arm, u.t);
    }
    x.e(0) = P.e_max;
    for (int k = 0; k + 1 < N; ++k) {
      const NetPoint& a = ugv[static_cast<std::size_t>(k)];
      const NetPoint& b = ugv[static_cast<std::size_t>(k + 1)];
      const double s = std::clamp(std::max((ra[k + 1] - ra[k]).norm() / P.v_max_A,
                                           g.network_distance(a.arm, a.t, b.arm, b.t) / P.v_max_G),
                                  P.s_min, P.s_max);
      x.s(k) = s;
      const double next = W[static_cast<std::size_t>(k)] == 1 ? x.e(k) - s : std::min(x.e(k) + P.kappa * s, P.e_max);
      x.e(k + 1) = std::clamp(next, P.e_min, P.e_max);
    }
    return x;
  }

 private:
  // Lower bound on the UAV path length inside discharge run [a, b]. Run ends
  // are either pinned or docked (hence on the network).
  double run_flight(const Plan& plan, int a, int b) const {
    std::vector<Vec2> pts;
    for (int k = a; k <= b; ++k) {
      if (plan.uav[static_cast<std::size_t>(k)]) pts.push_back(*plan.uav[static_cast<std::size_t>(k)]);
    }
    if (pts.empty()) return 0.0;
    double len = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) len += (pts[i] - pts[i - 1]).norm();
    if (!plan.uav[static_cast<std::size_t>(a)]) len += project_to_network(inst_.graph, pts.front()).distance;
    if (!plan.uav[static_cast<std::size_t>(b)]) len += project_to_network(inst_.graph, pts.back()).distance;
    return len;
  }

  const ProblemInstance& inst_;
  NetPoint start_;
  NetPoint finish_;
};

// Deterministic perturbation of the free UAV positions and step durations.
DecisionVector perturb(const DecisionVector& x, const Plan& plan, const ProblemInstance& inst, int start) {
  DecisionVector y = x;
  const CounterRng rng(0x6f7261636c65ULL + static_cast<std::uint64_t>(start));
  const double scale = 0.05 * std::max(1.0, instance_diameter(inst));
  std::uint64_t c = 0;
  for (int k = 0; k < x.N(); ++k) {
    if (plan.uav[static_cast<std::size_t>(k)] || plan.docked[static_cast<std::size_t>(k)]) continue;
    const Vec2 d(rng.uniform(c) - 0.5, rng.uniform(c + 1) - 0.5);
    c += 2;
    y.set_ra(k, x.ra(k) + 2.0 * scale * d);
  }
  for (int k = 0; k + 1 < x.N(); ++k) {
    y.s(k) = x.s(k) * (1.0 + 0.5 * rng.uniform(c++)) + 1e-3;
  }
  return y;
}

}  // namespace

ResidualBundle bigM_residuals(const DecisionVector& x, const BinaryAssignment& assign, const MinlpModel& model) {
  const ProblemInstance& inst = model.instance();
  const DecisionLayout layout(inst.N, static_cast<int>(inst.arm_count()));
  if (x.layout() != layout) throw std::invalid_argument("decision vector layout does not match the instance");
  assign.validate(inst.N, static_cast<int>(inst.task_count()), static_cast<int>(inst.arm_count()));
  ResidualBundle out;
  std::vector<double> vals;
  gate_rows(x.flat(), layout, assign, model, vals, nullptr, &out.ineq_labels);
  out.ineq = Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  out.eq.resize(0);
  return out;
}

AlmConfig OracleOptions::default_alm() {
  AlmConfig cfg;
  cfg.target_violation = 1e-8;
  return cfg;
}

OracleResult solve_exact(const ProblemInstance& inst, const OracleLimits& limits, const OracleOptions& options) {
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
  inst.validate();
  const int N = inst.N;
  const int mA = static_cast<int>(inst.task_count());
  const int mG = static_cast<int>(inst.arm_count());
  if (N > limits.max_N) {
    throw OracleLimitError("N = " + std::to_string(N) + " exceeds the oracle limit max_N = " + std::to_string(limits.max_N));
  }
  if (mA > limits.max_mA) {
    throw OracleLimitError("m_A = " + std::to_string(mA) + " exceeds the oracle limit max_mA = " +
                           std::to_string(limits.max_mA));
  }
  if (mG > limits.max_mG) {
    throw OracleLimitError("m_G = " + std::to_string(mG) + " exceeds the oracle limit max_mG = " +
                           std::to_string(limits.max_mG));
  }
  if (options.starts < 1) throw std::invalid_argument("at least one start is required");
  const MinlpModel model(inst, options.mu);
  const Planner planner(inst);

  OracleResult res;
  // Depth-first over W (discharge first), then task stamps, then arm stamps.
  std::vector<Leaf> leaves;
  Leaf leaf;
  leaf.W.assign(static_cast<std::size_t>(N - 1), 1);
  leaf.task_stamp.assign(static_cast<std::size_t>(mA), 0);
  leaf.arm_stamp.assign(static_cast<std::size_t>(mG), 0);
  auto visit_leaf = [&] {
    ++res.patterns;
    const Plan p = planner.plan(leaf);
    if (!p.feasible) {
      ++res.infeasible;
      return;
    }
    leaf.bound = p.bound;
    leaf.order = res.patterns;
    leaves.push_back(leaf);
  };
  auto assign_arms = [&](auto&& self, int j) -> void {
    if (j == mG) {
      visit_leaf();
      return;
    }
    for (int k = 0; k < N; ++k) {
      leaf.arm_stamp[static_cast<std::size_t>(j)] = k;
      self(self, j + 1);
    }
  };
  auto assign_tasks = [&](auto&& self, int i) -> void {
    if (i == mA) {
      assign_arms(assign_arms, 0);
      return;
    }
    for (int k = 0; k < N; ++k) {
      leaf.task_stamp[static_cast<std::size_t>(i)] = k;
      self(self, i + 1);
    }
  };
  auto assign_w = [&](auto&& self, int k) -> void {
    if (k == N - 1) {
      assign_tasks(assign_tasks, 0);
      return;
    }
    for (int w : {1, 0}) {
      leaf.W[static_cast<std::size_t>(k)] = w;
      self(self, k + 1);
    }
  };
  assign_w(assign_w, 0);

  std::stable_sort(leaves.begin(), leaves.end(), [](const Leaf& a, const Leaf& b) {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.order < b.order;
  });

  const double global = planner.global_bound();
  auto done = [&](double bound) {
    return res.feasible && bound >= res.objective - 1e-9 * std::max(1.0, std::abs(res.objective));
  };
  std::size_t next = 0;
  for (; next < leaves.size(); ++next) {
    const Leaf& lf = leaves[next];
    if (done(lf.bound) || done(global)) break;
    if (elapsed() >= options.time_limit_s) {
      res.timed_out = true;
      break;
    }
    const Plan p = planner.plan(lf);
    const BinaryAssignment assign = BinaryAssignment::from_stamps(N, lf.task_stamp, lf.arm_stamp, lf.W);
    const GatedProblem problem(model, assign);
    const DecisionVector x0 = planner.initial_guess(p, lf.W);
    for (int s = 0; s < options.starts; ++s) {
      const DecisionVector guess = s == 0 ? x0 : perturb(x0, p, inst, s);
      const AlmResult r = minimize_alm(problem, guess.flat(), options.alm);
      ++res.subproblems;
      if (r.violation <= options.feasibility_tol && r.objective < res.objective) {
        res.feasible = true;
        res.objective = r.objective;
        res.violation = r.violation;
        res.x = DecisionVector(x0.layout(), r.x);
        res.assignment = assign;
      }
      // A start that meets the leaf bound cannot be improved by another start.
      if (r.violation <= options.feasibility_tol && r.objective <= lf.bound + 1e-9) break;
    }
  }
  if (!res.timed_out) res.bound_pruned = static_cast<long long>(leaves.size() - next);
  // Leaves not solved are bounded by the next bound; solved ones by the incumbent.
  const double rest = std::max(global, next < leaves.size() ? leaves[next].bound
                                                            : std::numeric_limits<double>::infinity());
  res.lower_bound = res.feasible ? std::min(res.objective, rest) : rest;
  res.wall_s = elapsed();
  return res;
}

}  // namespace rvopt
