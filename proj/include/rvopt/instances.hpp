// Problem fixtures, seeded random instances and the warm-start initializer.
#pragma once

#include "rvopt/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rvopt {

/// e_max = 0.4 h, v_A = 36 km/h, v_G = 16.2 km/h, kappa = 1.5, e_min = s_min = 0, s_max = 10 h.
PhysicalParams default_physical_params();

/// Counter-based generator: draw i of stream `seed` is a pure function of (seed, i).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
  std::uint64_t bits(std::uint64_t counter) const;
  /// Uniform double in [0, 1) for the given counter.
  double uniform(std::uint64_t counter) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

struct Box2 {
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Zero();
};

/// Three curved arms around a junction at the origin, with distinct start and
/// end points on two of the arms. Roughly 8 km per arm.
struct FixtureMap {
  StarGraph graph;
  Vec2 r0;
  Vec2 rf;
};
FixtureMap fixture_map(const std::string& id = "fig1");

/// Axis-aligned bounding box of the network, sampled along every arm.
Box2 network_bounding_box(const StarGraph& graph);

struct GeneratorConfig {
  std::uint64_t seed = 1;
  int m_A = 10;
  /// Sampling box; defaults to the network bounding box inflated by 20%.
  std::optional<Box2> box;
  std::string map_id = "fig1";
  std::optional<int> N;
  PhysicalParams params = default_physical_params();

  void validate() const;
};

ProblemInstance generate(const GeneratorConfig& cfg);

enum class VisitOrdering {
  /// Greedy nearest neighbour over task projections (network distance), then
  /// uncovered arm ends.
  GreedyNearest,
  /// Out-and-back sweep of every arm: start arm outward first, remaining arms
  /// by index, finishing on the end point's arm.
  ArmSweep,
};

struct WarmStartOptions {
  VisitOrdering ordering = VisitOrdering::ArmSweep;
  /// Charge at rate kappa on riding legs. Off: e only decreases (flight) and is clipped.
  bool recharge = false;
};

/// Number of stamps the warm start needs before any leg subdivision.
int minimal_stamp_count(const ProblemInstance& inst, const WarmStartOptions& options = {});

/// Rendezvous-at-projection initial guess. Throws std::invalid_argument if
/// inst.N cannot hold the mandatory waypoints.
DecisionVector warm_start(const ProblemInstance& inst, const WarmStartOptions& options = {});

}  // namespace rvopt
