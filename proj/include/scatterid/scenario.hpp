#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scatterid/channel.hpp"
#include "scatterid/errors.hpp"
#include "scatterid/geometry.hpp"
#include "scatterid/tag_code.hpp"

namespace scatterid {

using IdentityId = std::string;

/// A physical transmitter. Legitimate robots claim one identity at full power;
/// a Sybil attacker claims several and may scale its power per identity.
struct RobotAgent {
  std::string true_source_id;
  std::vector<IdentityId> claimed_identities;
  std::map<IdentityId, double> power_scale;  // alpha per identity, 1 when absent
  double base_tx_power_w = 0.1;
  Trajectory trajectory;

  bool is_sybil() const { return claimed_identities.size() >= 2; }

  bool claims(const IdentityId& id) const {
    return std::find(claimed_identities.begin(), claimed_identities.end(), id) !=
           claimed_identities.end();
  }

  double alpha(const IdentityId& id) const {
    auto it = power_scale.find(id);
    return it == power_scale.end() ? 1.0 : it->second;
  }

  void validate() const {
    if (claimed_identities.empty())
      throw ConfigError("agent '" + true_source_id + "' claims no identity");
    if (!(base_tx_power_w > 0.0))
      throw ConfigError("agent '" + true_source_id + "' needs positive transmit power");
    for (const auto& [id, a] : power_scale) {
      if (!claims(id))
        throw ConfigError("agent '" + true_source_id + "' scales unknown identity '" + id + "'");
      if (!(a > 0.0)) throw ConfigError("power scale for '" + id + "' must be positive");
    }
    if (!is_sybil() && alpha(claimed_identities.front()) != 1.0)
      throw ConfigError("legitimate agent '" + true_source_id + "' must transmit at alpha = 1");
  }
};

struct TimingParams {
  double sample_rate_hz = 8000.0;
  std::size_t code_bits = 64;
  std::size_t samples_per_bit = 8;
  // Packet-start jitter: the backscatter segment begins after a prefix drawn
  // uniformly from [0, guard_samples]; the trace always has guard_samples of
  // ambient-only padding in total.
  std::size_t guard_samples = 256;
  std::optional<std::size_t> fixed_prefix_samples;
  double period_s = 0.6;
  double horizon_s = 60.0;
  double slot_s = 0.02;  // offset between successive identities' packets

  std::size_t block_samples() const { return code_bits * samples_per_bit; }
};

struct NoiseParams {
  bool enabled = true;
  // Ratio of the strongest tag increment to the noise standard deviation,
  // expressed as 20 log10(increment / sigma).
  double snr_db = 20.0;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  ChannelParams channel;
  TagLayout tags = TagLayout::ring(4, 0.12);
  TimingParams timing;
  NoiseParams noise;
  double ambient_w = 1e-6;
  Trajectory receiver;
  std::vector<RobotAgent> agents;

  std::size_t tag_count() const { return tags.count(); }
  std::size_t segment_samples() const { return timing.block_samples() * tag_count(); }
  std::size_t trace_samples() const { return segment_samples() + timing.guard_samples; }

  std::size_t identity_count() const {
    std::size_t n = 0;
    for (const auto& a : agents) n += a.claimed_identities.size();
    return n;
  }

  std::size_t period_count() const {
    return static_cast<std::size_t>(std::floor(timing.horizon_s / timing.period_s + 1e-9));
  }

  void validate() const {
    channel.validate();
    tags.validate();
    const auto& t = timing;
    if (!(t.sample_rate_hz > 0.0)) throw ConfigError("sample rate must be positive");
    if (t.code_bits == 0 || t.samples_per_bit == 0) throw ConfigError("empty tag code");
    if (t.guard_samples == 0) throw ConfigError("guard_samples must be at least 1");
    if (t.guard_samples > t.block_samples() / 2)
      throw ConfigError("guard_samples must not exceed half a tag block");
    if (t.fixed_prefix_samples && *t.fixed_prefix_samples > t.guard_samples)
      throw ConfigError("fixed prefix exceeds guard_samples");
    if (!(t.period_s > 0.0) || !(t.horizon_s > 0.0))
      throw ConfigError("period and horizon must be positive");
    if (!(t.slot_s >= 0.0)) throw ConfigError("slot spacing must be nonnegative");
    if (!(ambient_w >= 0.0)) throw ConfigError("ambient level must be nonnegative");
    if (noise.enabled && !std::isfinite(noise.snr_db)) throw ConfigError("snr_db must be finite");
    if (agents.empty()) return;
    if (static_cast<double>(identity_count()) * t.slot_s >= t.period_s)
      throw ConfigError("identity slots do not fit in one update period");
    const double needed = static_cast<double>(period_count() - 1) * t.period_s +
                          static_cast<double>(identity_count() - 1) * t.slot_s;
    auto covers = [&](const Trajectory& tr) {
      return tr.waypoints().size() == 1 || (tr.start_time() <= 0.0 && tr.end_time() >= needed);
    };
    if (!covers(receiver)) throw ConfigError("receiver trajectory shorter than horizon");
    std::vector<IdentityId> seen;
    for (const auto& a : agents) {
      a.validate();
      if (!covers(a.trajectory))
        throw ConfigError("trajectory of '" + a.true_source_id + "' shorter than horizon");
      for (const auto& id : a.claimed_identities) {
        if (std::find(seen.begin(), seen.end(), id) != seen.end())
          throw ConfigError("identity '" + id + "' claimed twice");
        seen.push_back(id);
      }
    }
  }
};

/// One received packet as seen by the verifying robot.
struct ReceivedTrace {
  IdentityId identity;
  std::string true_source_id;
  double start_time_s = 0.0;
  double sample_rate_hz = 8000.0;
  std::vector<double> samples;
  // Per-sample schedule: 0 outside the backscatter segment, i+1 inside tag
  // i's block; `reflecting` marks samples where that tag reflects.
  std::vector<std::uint16_t> tag_index;
  BitVector reflecting;
  BitVector tag_code;
  std::size_t samples_per_bit = 8;
  std::size_t tag_count = 0;
  // Ground truth kept for diagnostics and oracles; never read by the detector.
  std::size_t true_start = 0;
  std::vector<double> injected_power;

  std::size_t block_samples() const { return tag_code.size() * samples_per_bit; }
  std::size_t segment_samples() const { return block_samples() * tag_count; }
};

namespace detail {

// splitmix64 finaliser; derives independent stream seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return detail::mix_seed(detail::mix_seed(detail::mix_seed(seed) ^ a) ^ b);
}

/// Per-tag reflected powers for one transmitter pose (alpha already applied).
inline std::vector<double> tag_reflections(const ScenarioConfig& sc, Point2 tx_position,
                                           double tx_power_w, double t_s) {
  const Point2 rx = position_at(sc.receiver, t_s);
  const double heading = heading_at(sc.receiver, t_s);
  std::vector<double> out;
  out.reserve(sc.tags.count());
  for (const auto& body : sc.tags.tag_positions) {
    const Point2 tag = rx + rotate(body, heading);
    out.push_back(reflected_power(sc.channel, tx_power_w, distance(tx_position, tag), norm(body)));
  }
  return out;
}

inline ReceivedTrace synthesize_trace(const ScenarioConfig& sc, const RobotAgent& agent,
                                      const IdentityId& identity, double t_s,
                                      std::uint64_t rng_seed) {
  if (!agent.claims(identity))
    throw IdentityError("identity '" + identity + "' is not claimed by '" +
                        agent.true_source_id + "'");
  const double tx_power = agent.alpha(identity) * agent.base_tx_power_w;
  const Point2 tx = position_at(agent.trajectory, t_s);

  ReceivedTrace tr;
  tr.identity = identity;
  tr.true_source_id = agent.true_source_id;
  tr.start_time_s = t_s;
  tr.sample_rate_hz = sc.timing.sample_rate_hz;
  tr.tag_code = default_tag_code(sc.timing.code_bits);
  tr.samples_per_bit = sc.timing.samples_per_bit;
  tr.tag_count = sc.tags.count();
  tr.injected_power = tag_reflections(sc, tx, tx_power, t_s);

  std::mt19937_64 rng(rng_seed);
  const std::size_t guard = sc.timing.guard_samples;
  tr.true_start = sc.timing.fixed_prefix_samples
                      ? *sc.timing.fixed_prefix_samples
                      : std::uniform_int_distribution<std::size_t>(0, guard)(rng);

  double sigma = 0.0;
  if (sc.noise.enabled) {
    const double strongest =
        *std::max_element(tr.injected_power.begin(), tr.injected_power.end());
    sigma = strongest / std::pow(10.0, sc.noise.snr_db / 20.0);
  }
  std::normal_distribution<double> noise(0.0, 1.0);

  const std::size_t n = sc.trace_samples();
  const std::size_t block = tr.block_samples();
  const BitVector mask = expand_code(tr.tag_code, tr.samples_per_bit);
  tr.samples.resize(n);
  tr.tag_index.assign(n, 0);
  tr.reflecting.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double v = sc.ambient_w;
    if (i >= tr.true_start && i < tr.true_start + tr.segment_samples()) {
      const std::size_t off = i - tr.true_start;
      const std::size_t tag = off / block;
      tr.tag_index[i] = static_cast<std::uint16_t>(tag + 1);
      if (mask[off % block]) {
        tr.reflecting[i] = 1;
        v += tr.injected_power[tag];
      }
    }
    if (sigma > 0.0) v += sigma * noise(rng);
    tr.samples[i] = std::max(v, 0.0);  // magnitudes are nonnegative
  }
  return tr;
}

struct IdentityTraces {
  IdentityId identity;
  std::string true_source_id;
  bool sybil = false;
  std::vector<ReceivedTrace> traces;  // one per update period, in time order
};

struct SimulationResult {
  std::string scenario_name;
  std::uint64_t seed = 0;
  std::size_t period_count = 0;
  double period_s = 0.0;
  std::vector<IdentityTraces> identities;
};

/// Traces for every claimed identity, one per update period. Identity slots
/// follow declaration order; the slot offset keeps packets of one period
/// sequential.
inline SimulationResult simulate_scenario(const ScenarioConfig& sc, std::uint64_t rng_seed) {
  SimulationResult out;
  out.scenario_name = sc.name;
  out.seed = rng_seed;
  out.period_s = sc.timing.period_s;
  if (sc.agents.empty()) return out;
  sc.validate();
  out.period_count = sc.period_count();
  std::uint64_t slot = 0;
  for (const auto& agent : sc.agents) {
    for (const auto& id : agent.claimed_identities) {
      IdentityTraces it{id, agent.true_source_id, agent.is_sybil(), {}};
      it.traces.reserve(out.period_count);
      for (std::size_t k = 0; k < out.period_count; ++k) {
        const double t = static_cast<double>(k) * sc.timing.period_s +
                         static_cast<double>(slot) * sc.timing.slot_s;
        it.traces.push_back(synthesize_trace(sc, agent, id, t, derive_seed(rng_seed, slot, k)));
      }
      out.identities.push_back(std::move(it));
      ++slot;
    }
  }
  return out;
}

}  // namespace scatterid
