#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "scatterid/scenario.hpp"

namespace scatterid {

struct Area {
  double width_m = 8.0;
  double height_m = 10.0;
};

/// Recipe for a seeded family of random scenarios. Every scenario shares the
/// template's radio, tag and timing settings; robots, attackers, paths and
/// power scales are drawn per scenario.
struct CorpusParams {
  ScenarioConfig base;
  std::size_t scenarios = 20;
  std::size_t min_identities = 4;
  std::size_t max_identities = 8;
  std::vector<Area> areas{{4.5, 5.5}, {8.0, 10.0}};  // office room, rooftop
  double speed_mps = 0.2;
  double tx_power_w = 0.1;
  double receiver_speed_mps = 0.2;
  double edge_margin_m = 0.3;
  bool power_scaling = true;
  double alpha_min = 0.25;
  double alpha_max = 4.0;
  double target_positive_fraction = 0.2;

  void validate() const {
    base.validate();
    if (scenarios == 0) throw ConfigError("corpus needs at least one scenario");
    if (min_identities < 3 || max_identities < min_identities)
      throw ConfigError("identity range must satisfy 3 <= min <= max");
    if (areas.empty()) throw ConfigError("corpus needs at least one area");
    for (const auto& a : areas)
      if (!(a.width_m > 2 * edge_margin_m && a.height_m > 2 * edge_margin_m))
        throw ConfigError("area too small for the edge margin");
    if (!(speed_mps > 0.0 && receiver_speed_mps > 0.0)) throw ConfigError("speeds must be positive");
    if (!(alpha_min > 0.0 && alpha_max >= alpha_min)) throw ConfigError("bad alpha range");
  }
};

/// Attacker group sizes (2..4 identities each, at least one legitimate robot)
/// whose share of same-source directed pairs is closest to `target`.
inline std::vector<std::size_t> attacker_groups(std::size_t n_identities, double target) {
  std::vector<std::size_t> best;
  double best_err = 1e300;
  const double total = static_cast<double>(n_identities * (n_identities - 1));
  std::vector<std::size_t> cur;
  auto search = [&](auto&& self, std::size_t used, std::size_t max_size) -> void {
    if (!cur.empty()) {
      double pos = 0.0;
      for (auto m : cur) pos += static_cast<double>(m * (m - 1));
      const double err = std::abs(pos / total - target);
      if (err < best_err - 1e-12 || (std::abs(err - best_err) <= 1e-12 && cur.size() < best.size())) {
        best_err = err;
        best = cur;
      }
    }
    for (std::size_t m = std::min<std::size_t>(max_size, 4); m >= 2; --m) {
      if (used + m + 1 > n_identities) continue;
      cur.push_back(m);
      self(self, used + m, m);
      cur.pop_back();
    }
  };
  search(search, 0, 4);
  return best;
}

namespace detail {

inline Trajectory random_walk(std::mt19937_64& rng, const Area& area, double margin,
                              double speed, double duration_s) {
  std::uniform_real_distribution<double> ux(margin, area.width_m - margin);
  std::uniform_real_distribution<double> uy(margin, area.height_m - margin);
  std::vector<Point2> pts{{ux(rng), uy(rng)}};
  double length = 0.0;
  while (length / speed <= duration_s) {
    Point2 next{ux(rng), uy(rng)};
    const double d = distance(pts.back(), next);
    if (d < 0.5) continue;
    length += d;
    pts.push_back(next);
  }
  return Trajectory::through(pts, speed, 0.0);
}

}  // namespace detail

/// Draws one random scenario from the corpus recipe.
inline ScenarioConfig make_scenario(const CorpusParams& cp, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 0x5CE7A210ull));
  ScenarioConfig sc = cp.base;
  sc.seed = seed;
  sc.name = "scenario-" + std::to_string(seed);
  sc.agents.clear();

  const Area area = cp.areas[std::uniform_int_distribution<std::size_t>(0, cp.areas.size() - 1)(rng)];
  const std::size_t n =
      std::uniform_int_distribution<std::size_t>(cp.min_identities, cp.max_identities)(rng);
  const auto groups = attacker_groups(n, cp.target_positive_fraction);
  const double duration = sc.timing.horizon_s + sc.timing.period_s;

  sc.receiver = detail::random_walk(rng, area, cp.edge_margin_m, cp.receiver_speed_mps, duration);

  // Identity names are shuffled so they carry no hint of the attacker groups.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i + 1;
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t next = 0;
  auto identity_name = [&](std::size_t k) { return "id" + std::to_string(k); };

  std::uniform_real_distribution<double> log_alpha(std::log(cp.alpha_min), std::log(cp.alpha_max));
  std::size_t robot = 0;
  auto add_agent = [&](std::size_t identities) {
    RobotAgent a;
    a.true_source_id = "robot" + std::to_string(++robot);
    a.base_tx_power_w = cp.tx_power_w;
    a.trajectory = detail::random_walk(rng, area, cp.edge_margin_m, cp.speed_mps, duration);
    for (std::size_t i = 0; i < identities; ++i) {
      const auto id = identity_name(order[next++]);
      a.claimed_identities.push_back(id);
      if (identities < 2) continue;
      // Drawn even when scaling is off so both arms share the same geometry.
      const double alpha = std::exp(log_alpha(rng));
      if (cp.power_scaling) a.power_scale[id] = alpha;
    }
    sc.agents.push_back(std::move(a));
  };
  std::size_t attackers_identities = 0;
  for (auto g : groups) {
    add_agent(g);
    attackers_identities += g;
  }
  for (std::size_t i = attackers_identities; i < n; ++i) add_agent(1);

  std::shuffle(sc.agents.begin(), sc.agents.end(), rng);
  sc.validate();
  return sc;
}

/// Scenario seeds for a corpus rooted at `seed`.
inline std::vector<std::uint64_t> corpus_seeds(const CorpusParams& cp, std::uint64_t seed) {
  std::vector<std::uint64_t> seeds;
  seeds.reserve(cp.scenarios);
  for (std::size_t i = 0; i < cp.scenarios; ++i) seeds.push_back(derive_seed(seed, 0xC0A9u, i));
  return seeds;
}

inline std::vector<ScenarioConfig> make_corpus(const CorpusParams& cp, std::uint64_t seed) {
  cp.validate();
  std::vector<ScenarioConfig> out;
  for (auto s : corpus_seeds(cp, seed)) out.push_back(make_scenario(cp, s));
  return out;
}

}  // namespace scatterid
