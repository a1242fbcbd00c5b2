#include "rvopt/instances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rvopt {

PhysicalParams default_physical_params() {
  PhysicalParams p;
  p.e_max = 0.4;
  p.v_max_A = 36.0;
  p.v_max_G = 16.2;
  p.kappa = 1.5;
  p.e_min = 0.0;
  p.s_min = 0.0;
  p.s_max = 10.0;
  return p;
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const {
  // splitmix64 finalizer over (seed, counter).
  std::uint64_t z = seed_ * 0xD1B54A32D192ED03ULL + (counter + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double CounterRng::uniform(std::uint64_t counter) const {
  return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

FixtureMap fixture_map(const std::string& id) {
  if (id != "fig1") throw std::invalid_argument("unknown fixture map '" + id + "'");
  const Vec2 junction(0.0, 0.0);
  const std::vector<Vec2> north = {{-0.6, 2.0}, {-0.6, 4.0}, {-1.6, 5.8}, {-2.2, 7.6}};
  const std::vector<Vec2> east = {{2.0, -0.6}, {4.0, -0.6}, {5.8, -1.6}, {7.4, -2.8}};
  const std::vector<Vec2> southwest = {{-1.6, -1.2}, {-3.0, -2.6}, {-4.0, -4.4}, {-4.6, -6.2}};
  std::vector<Arm> arms;
  arms.push_back(Arm::polyline(junction, north));
  arms.push_back(Arm::polyline(junction, east));
  arms.push_back(Arm::polyline(junction, southwest));
  StarGraph graph(junction, std::move(arms));
  const Vec2 r0 = graph.point_on(0, 5.0);
  const Vec2 rf = graph.point_on(2, 5.0);
  return {std::move(graph), r0, rf};
}

Box2 network_bounding_box(const StarGraph& graph) {
  Box2 box{graph.junction(), graph.junction()};
  for (const Arm& arm : graph.arms()) {
    constexpr int kSamples = 400;
    for (int i = 0; i <= kSamples; ++i) {
      const Vec2 q = arm.position(arm.length() * i / kSamples);
      box.lo = box.lo.cwiseMin(q);
      box.hi = box.hi.cwiseMax(q);
    }
  }
  return box;
}

void GeneratorConfig::validate() const {
  if (m_A < 0) throw std::invalid_argument("m_A must be nonnegative");
  if (box && !(box->lo.x() < box->hi.x() && box->lo.y() < box->hi.y())) {
    throw std::invalid_argument("sampling box is empty");
  }
  if (N && *N < 2) throw std::invalid_argument("N must be at least 2");
  params.validate();
}

ProblemInstance generate(const GeneratorConfig& cfg) {
  cfg.validate();
  FixtureMap map = fixture_map(cfg.map_id);
  Box2 box;
  if (cfg.box) {
    box = *cfg.box;
  } else {
    box = network_bounding_box(map.graph);
    const Vec2 pad = 0.1 * (box.hi - box.lo);
    box.lo -= pad;
    box.hi += pad;
  }
  const CounterRng rng(cfg.seed);
  std::vector<Vec2> tasks;
  tasks.reserve(static_cast<std::size_t>(cfg.m_A));
  for (int i = 0; i < cfg.m_A; ++i) {
    const double u = rng.uniform(2 * static_cast<std::uint64_t>(i));
    const double v = rng.uniform(2 * static_cast<std::uint64_t>(i) + 1);
    tasks.emplace_back(box.lo.x() + u * (box.hi.x() - box.lo.x()),
                       box.lo.y() + v * (box.hi.y() - box.lo.y()));
  }
  const int N = cfg.N.value_or(default_stamp_count(tasks.size(), map.graph.arm_count()));
  ProblemInstance inst{std::move(map.graph), std::move(tasks), map.r0, map.rf, cfg.params, N};
  return inst;
}

namespace {

constexpr double kOnNetwork = 1e-9;

struct Waypoint {
  Vec2 uav;
  NetPoint ugv;
  bool flight = false;  // UAV flies on its own into this waypoint; UGV waits
};

enum class VisitKind { Task, ArmEnd };

struct Visit {
  VisitKind kind;
  std::size_t index;  // task or arm index
  NetPoint at;
  double offset = 0.0;  // UAV distance from the network
};

double net_distance(const StarGraph& g, const NetPoint& a, const NetPoint& b) {
  return g.network_distance(a.arm, a.t, b.arm, b.t);
}

std::vector<Visit> collect_visits(const ProblemInstance& inst) {
  const StarGraph& g = inst.graph;
  std::vector<Visit> visits;
  std::vector<bool> covered(g.arm_count(), false);
  for (std::size_t i = 0; i < inst.task_count(); ++i) {
    const NetworkProjection pr = project_to_network(g, inst.uav_tasks[i]);
    Visit v{VisitKind::Task, i, {pr.arm, pr.t}, pr.distance};
    if (pr.t >= g.p_max()[static_cast<Eigen::Index>(pr.arm)] - kOnNetwork) covered[pr.arm] = true;
    visits.push_back(v);
  }
  for (std::size_t j = 0; j < g.arm_count(); ++j) {
    if (!covered[j]) visits.push_back({VisitKind::ArmEnd, j, {j, g.p_max()[static_cast<Eigen::Index>(j)]}, 0.0});
  }
  return visits;
}

std::vector<Visit> order_greedy(const ProblemInstance& inst, std::vector<Visit> visits, NetPoint start) {
  std::vector<Visit> out;
  // Tasks first (greedy by network distance), then arm ends (also greedy).
  for (VisitKind kind : {VisitKind::Task, VisitKind::ArmEnd}) {
    std::vector<Visit> pool;
    for (const Visit& v : visits) {
      if (v.kind == kind) pool.push_back(v);
    }
    while (!pool.empty()) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t q = 0; q < pool.size(); ++q) {
        const double d = net_distance(inst.graph, start, pool[q].at);
        if (d < best_d) {
          best_d = d;
          best = q;
        }
      }
      start = pool[best].at;
      out.push_back(pool[best]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
    }
  }
  return out;
}

std::vector<Visit> order_sweep(const ProblemInstance& inst, const std::vector<Visit>& visits,
                               NetPoint start, NetPoint finish) {
  const std::size_t m = inst.arm_count();
  std::vector<std::vector<Visit>> per_arm(m);
  std::vector<Visit> at_junction;
  for (const Visit& v : visits) {
    if (v.at.t <= 0.0) at_junction.push_back(v);
    else per_arm[v.at.arm].push_back(v);
  }
  for (auto& list : per_arm) {
    std::stable_sort(list.begin(), list.end(), [](const Visit& a, const Visit& b) { return a.at.t < b.at.t; });
  }
  const bool start_on_arm = start.t > 0.0;
  const bool finish_on_arm = finish.t > 0.0;
  std::vector<Visit> out;
  std::vector<bool> done(m, false);

  if (start_on_arm) {
    const auto& list = per_arm[start.arm];
    for (const Visit& v : list) {
      if (v.at.t >= start.t) out.push_back(v);  // outward to the arm end
    }
    for (auto it = list.rbegin(); it != list.rend(); ++it) {
      if (it->at.t < start.t) out.push_back(*it);  // back towards the junction
    }
    done[start.arm] = true;
  }
  out.insert(out.end(), at_junction.begin(), at_junction.end());
  for (std::size_t j = 0; j < m; ++j) {
    if (done[j] || (finish_on_arm && j == finish.arm)) continue;
    out.insert(out.end(), per_arm[j].begin(), per_arm[j].end());
    done[j] = true;
  }
  if (finish_on_arm && !done[finish.arm]) {
    out.insert(out.end(), per_arm[finish.arm].begin(), per_arm[finish.arm].end());
  }
  return out;
}

std::vector<Waypoint> mandatory_waypoints(const ProblemInstance& inst, const WarmStartOptions& opt) {
  const StarGraph& g = inst.graph;
  const NetworkProjection p0 = project_to_network(g, inst.r0);
  const NetworkProjection pf = project_to_network(g, inst.rf);
  const NetPoint start{p0.arm, p0.t};
  const NetPoint finish{pf.arm, pf.t};

  std::vector<Visit> visits = collect_visits(inst);
  visits = opt.ordering == VisitOrdering::GreedyNearest ? order_greedy(inst, std::move(visits), start)
                                                        : order_sweep(inst, visits, start, finish);

  std::vector<Waypoint> wps;
  auto push = [&](const Waypoint& w) {
    if (!wps.empty()) {
      const Waypoint& b = wps.back();
      const bool same_uav = (b.uav - w.uav).norm() <= kOnNetwork;
      const bool same_ugv = net_distance(g, b.ugv, w.ugv) <= kOnNetwork;
      if (same_uav && same_ugv) return;
    }
    wps.push_back(w);
  };

  push({inst.r0, start, false});
  for (const Visit& v : visits) {
    const Vec2 q = g.point_on(v.at.arm, v.at.t);
    push({q, v.at, false});
    if (v.kind == VisitKind::Task && v.offset > kOnNetwork) {
      push({inst.uav_tasks[v.index], v.at, true});
      push({q, v.at, true});
    }
  }
  push({inst.rf, finish, false});
  if (wps.size() < 2) wps.push_back(wps.back());
  return wps;
}

}  // namespace

int minimal_stamp_count(const ProblemInstance& inst, const WarmStartOptions& options) {
  return static_cast<int>(mandatory_waypoints(inst, options).size());
}

DecisionVector warm_start(const ProblemInstance& inst, const WarmStartOptions& options) {
  const StarGraph& g = inst.graph;
  const PhysicalParams& P = inst.params;
  const std::vector<Waypoint> wps = mandatory_waypoints(inst, options);
  const int M = static_cast<int>(wps.size());
  if (M > inst.N) {
    throw std::invalid_argument("N = " + std::to_string(inst.N) +
                                " is too small for the warm start; need at least N = " +
                                std::to_string(M));
  }

  // Leg durations at full speed; split the longest legs until N stamps exist.
  const int legs = M - 1;
  std::vector<double> duration(static_cast<std::size_t>(legs));
  for (int l = 0; l < legs; ++l) {
    const Waypoint& a = wps[l];
    const Waypoint& b = wps[l + 1];
    duration[l] = b.flight ? (b.uav - a.uav).norm() / P.v_max_A
                           : net_distance(g, a.ugv, b.ugv) / P.v_max_G;
  }
  std::vector<int> pieces(static_cast<std::size_t>(legs), 1);
  for (int extra = inst.N - M; extra > 0; --extra) {
    int best = 0;
    double best_len = -1.0;
    for (int l = 0; l < legs; ++l) {
      const double len = duration[l] / pieces[l];
      if (len > best_len + 1e-15) {
        best_len = len;
        best = l;
      }
    }
    ++pieces[best];
  }

  std::vector<Waypoint> stamps;
  stamps.reserve(static_cast<std::size_t>(inst.N));
  stamps.push_back(wps[0]);
  for (int l = 0; l < legs; ++l) {
    const Waypoint& a = wps[l];
    const Waypoint& b = wps[l + 1];
    for (int q = 1; q <= pieces[l]; ++q) {
      const double f = static_cast<double>(q) / pieces[l];
      if (q == pieces[l]) {
        stamps.push_back(b);
      } else if (b.flight) {
        stamps.push_back({a.uav + f * (b.uav - a.uav), a.ugv, true});
      } else {
        const NetPoint at = interpolate_on_network(a.ugv, b.ugv, f);
        stamps.push_back({g.point_on(at.arm, at.t), at, false});
      }
    }
  }

  const DecisionLayout layout(inst.N, static_cast<int>(g.arm_count()));
  DecisionVector x(layout);
  for (int k = 0; k < inst.N; ++k) {
    const Waypoint& w = stamps[static_cast<std::size_t>(k)];
    x.set_ra(k, w.uav);
    x.p(k) = network_coordinates(g, w.ugv.arm, std::clamp(w.ugv.t, 0.0, g.p_max()[static_cast<Eigen::Index>(w.ugv.arm)]));
  }
  x.set_ra(0, inst.r0);
  x.set_ra(inst.N - 1, inst.rf);
  x.e(0) = P.e_max;
  for (int k = 0; k + 1 < inst.N; ++k) {
    const Waypoint& a = stamps[static_cast<std::size_t>(k)];
    const Waypoint& b = stamps[static_cast<std::size_t>(k + 1)];
    double s = b.flight ? (b.uav - a.uav).norm() / P.v_max_A
                        : std::max(net_distance(g, a.ugv, b.ugv) / P.v_max_G,
                                   (b.uav - a.uav).norm() / P.v_max_A);
    s = std::clamp(s, P.s_min, P.s_max);
    x.s(k) = s;
    const double next = b.flight ? x.e(k) - s
                                  : options.recharge ? x.e(k) + P.kappa * s : x.e(k);
    x.e(k + 1) = std::clamp(next, P.e_min, P.e_max);
  }
  return x;
}

}  // namespace rvopt
