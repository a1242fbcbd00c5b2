// Micro instances small enough for exact enumeration (N <= 6, m_A <= 2, m_G <= 2).
#pragma once

#include "rvopt/instances.hpp"
#include "rvopt/model.hpp"

#include <string>
#include <vector>

namespace rvopt::testing {

struct MicroCase {
  std::string name;
  ProblemInstance inst;
};

inline std::vector<MicroCase> micro_cases() {
  const PhysicalParams P = default_physical_params();
  const Vec2 o(0.0, 0.0);
  std::vector<MicroCase> out;

  StarGraph up(o, {Arm::straight(o, {0.0, 1.0}, 1.0)});
  out.push_back({"arm-end-hover", {up, {}, {0.0, 1.0}, {0.0, 1.0}, P, 2}});
  out.push_back({"round-trip", {up, {}, o, o, P, 3}});
  out.push_back({"round-trip-detour", {up, {{0.1, 0.0}}, o, o, P, 5}});
  out.push_back({"far-sortie", {up, {{2.5, 0.5}}, o, o, P, 6}});

  StarGraph vee(o, {Arm::straight(o, {1.0, 0.0}, 1.5), Arm::straight(o, {0.0, 1.0}, 1.0)});
  out.push_back({"two-arms", {vee, {}, o, o, P, 4}});
  out.push_back({"two-arms-on-network", {vee, {{0.8, 0.0}, {0.0, 0.3}}, {0.5, 0.0}, {0.0, 0.5}, P, 6}});

  StarGraph line(o, {Arm::straight(o, {1.0, 0.0}, 2.0)});
  out.push_back({"outbound-sortie", {line, {{1.0, 0.4}}, o, {2.0, 0.0}, P, 5}});

  const std::vector<Vec2> bend = {{0.8, 0.3}, {1.4, 0.9}, {1.7, 1.6}};
  StarGraph curved(o, {Arm::polyline(o, bend)});
  const Vec2 tip = curved.point_on(0, curved.p_max()[0]);
  out.push_back({"curved-two-tasks", {curved, {curved.point_on(0, 0.6), tip + Vec2(0.25, -0.2)}, o, tip, P, 6}});

  StarGraph fork(o, {Arm::straight(o, {1.0, 0.0}, 2.0), Arm::straight(o, Vec2(-1.0, 0.5).normalized(), 1.5)});
  out.push_back({"fork-end-sortie",
                 {fork, {{2.3, 0.4}}, {1.0, 0.0}, fork.point_on(1, 1.0), P, 6}});

  PhysicalParams small = P;
  small.e_max = 0.05;
  StarGraph long_line(o, {Arm::straight(o, {1.0, 0.0}, 4.0)});
  out.push_back({"short-battery", {long_line, {{2.0, 0.6}}, o, o, small, 6}});
  return out;
}

}  // namespace rvopt::testing
