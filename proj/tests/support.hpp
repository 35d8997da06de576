#pragma once

// Small hand-built scenarios shared by the unit tests.

#include <string>
#include <vector>

#include "scatterid/scatterid.hpp"

namespace scatterid::testing {

inline Trajectory line(Point2 from, Point2 to, double speed = 0.2) {
  const std::vector<Point2> pts{from, to};
  return Trajectory::through(pts, speed, 0.0);
}

inline RobotAgent agent(std::string source, std::vector<IdentityId> ids, Trajectory traj) {
  RobotAgent a;
  a.true_source_id = std::move(source);
  a.claimed_identities = std::move(ids);
  a.trajectory = std::move(traj);
  return a;
}

/// Parked receiver at the origin, one attacker with identities a1 and a2,
/// and two legitimate robots. All paths are long enough for `horizon_s`.
inline ScenarioConfig small_scenario(double horizon_s = 6.0, bool noise = false) {
  ScenarioConfig sc;
  sc.name = "small";
  sc.seed = 7;
  sc.timing.horizon_s = horizon_s;
  sc.noise.enabled = noise;
  sc.receiver = Trajectory({{0.0, {0.0, 0.0}}}, 0.2);
  const double len = 0.2 * (horizon_s + 1.0);
  sc.agents.push_back(agent("attacker", {"a1", "a2"}, line({1.5, 0.5}, {1.5, 0.5 + len})));
  sc.agents.push_back(agent("legit1", {"b1"}, line({-2.0, 1.0}, {-2.0 - len, 1.0})));
  sc.agents.push_back(agent("legit2", {"c1"}, line({0.5, -2.5}, {0.5 + len, -2.5})));
  sc.validate();
  return sc;
}

}  // namespace scatterid::testing
