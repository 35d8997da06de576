#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "scatterid/distance.hpp"
#include "scatterid/hash.hpp"
#include "scatterid/scenario.hpp"
#include "scatterid/signal.hpp"

namespace scatterid {

// ---------------------------------------------------------------------------
// Signatures per scenario

struct IdentitySignatures {
  IdentityId identity;
  std::string true_source_id;
  std::vector<std::optional<MultipathSignature>> per_period;
};

struct ScenarioSignatures {
  std::string name;
  std::uint64_t seed = 0;
  double period_s = 0.6;
  std::vector<IdentitySignatures> identities;
};

inline ScenarioSignatures extract_signatures(const SimulationResult& sim,
                                             const SegmentationParams& params = {}) {
  ScenarioSignatures out{sim.scenario_name, sim.seed, sim.period_s, {}};
  for (const auto& it : sim.identities) {
    IdentitySignatures s{it.identity, it.true_source_id, {}};
    s.per_period.reserve(it.traces.size());
    for (const auto& tr : it.traces) s.per_period.push_back(process_trace(tr, params));
    out.identities.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Labeled distance samples

struct LabeledSample {
  std::uint64_t scenario_seed = 0;
  std::size_t window = 0;  // update period that closes the profile window
  double t_s = 0.0;
  IdentityId from;
  IdentityId to;
  std::string from_source;
  std::string to_source;
  int label = 0;  // 1 iff both identities share a transmitter
  Vector values;
};

struct Provenance {
  std::vector<std::uint64_t> seeds;
  std::string config_hash;
};

struct LabeledDataset {
  std::size_t L = 0;
  std::vector<LabeledSample> samples;
  Provenance provenance;
  std::vector<std::string> warnings;

  std::size_t size() const { return samples.size(); }

  std::size_t positives() const {
    std::size_t n = 0;
    for (const auto& s : samples) n += static_cast<std::size_t>(s.label);
    return n;
  }

  double positive_fraction() const {
    return samples.empty() ? 0.0
                           : static_cast<double>(positives()) / static_cast<double>(samples.size());
  }

  LabeledDataset subset(std::span<const std::size_t> indices) const {
    LabeledDataset d;
    d.L = L;
    d.provenance = provenance;
    d.samples.reserve(indices.size());
    for (auto i : indices) d.samples.push_back(samples.at(i));
    return d;
  }
};

struct DatasetOptions {
  std::size_t L = 10;
  bool normalize = true;
  DistanceMetric metric = DistanceMetric::adjusted_cosine;
  std::size_t window_stride = 3;  // emit pairs every this many periods
};

/// Slides an L-period window over every scenario and emits all directed
/// identity pairs whose profiles are complete in that window.
inline LabeledDataset build_dataset(std::span<const ScenarioSignatures> scenarios,
                                    const DatasetOptions& opt) {
  if (opt.L == 0) throw ParameterError("build_dataset: L must be positive");
  if (opt.window_stride == 0) throw ParameterError("build_dataset: window stride must be positive");
  LabeledDataset ds;
  ds.L = opt.L;
  for (const auto& sc : scenarios) {
    ds.provenance.seeds.push_back(sc.seed);
    std::vector<ProfileWindow> windows;
    std::size_t periods = 0;
    for (const auto& id : sc.identities) {
      windows.emplace_back(id.identity, opt.L);
      periods = std::max(periods, id.per_period.size());
    }
    std::size_t emitted = 0;
    for (std::size_t t = 0; t < periods; ++t) {
      std::vector<SignalProfile> ready;
      std::vector<std::size_t> owner;
      for (std::size_t i = 0; i < sc.identities.size(); ++i) {
        const auto& pp = sc.identities[i].per_period;
        std::optional<Vector> row;
        if (t < pp.size() && pp[t]) row = opt.normalize ? pp[t]->normalized : pp[t]->raw;
        windows[i].observe(t, std::move(row));
        if (windows[i].ready()) {
          ready.push_back(windows[i].profile());
          owner.push_back(i);
        }
      }
      if (ready.size() < 2 || t % opt.window_stride != 0) continue;
      for (std::size_t a = 0; a < ready.size(); ++a)
        for (std::size_t b = 0; b < ready.size(); ++b) {
          if (a == b) continue;
          const auto& ia = sc.identities[owner[a]];
          const auto& ib = sc.identities[owner[b]];
          LabeledSample s;
          s.scenario_seed = sc.seed;
          s.window = t;
          s.t_s = static_cast<double>(t) * sc.period_s;
          s.from = ia.identity;
          s.to = ib.identity;
          s.from_source = ia.true_source_id;
          s.to_source = ib.true_source_id;
          s.label = ia.true_source_id == ib.true_source_id ? 1 : 0;
          s.values = profile_distance_vector(ready[a], ready[b], opt.metric).values;
          ds.samples.push_back(std::move(s));
          ++emitted;
        }
    }
    if (emitted == 0)
      ds.warnings.push_back("scenario '" + sc.name + "' produced no complete profiles; skipped");
  }
  return ds;
}

/// Profiles from the last update period in which at least two identities
/// have a complete window; empty when that never happens.
inline std::vector<SignalProfile> latest_profiles(const ScenarioSignatures& sc, std::size_t L,
                                                  bool normalize = true) {
  std::vector<ProfileWindow> windows;
  std::size_t periods = 0;
  for (const auto& id : sc.identities) {
    windows.emplace_back(id.identity, L);
    periods = std::max(periods, id.per_period.size());
  }
  std::vector<SignalProfile> latest;
  for (std::size_t t = 0; t < periods; ++t) {
    std::vector<SignalProfile> ready;
    for (std::size_t i = 0; i < sc.identities.size(); ++i) {
      const auto& pp = sc.identities[i].per_period;
      std::optional<Vector> row;
      if (t < pp.size() && pp[t]) row = normalize ? pp[t]->normalized : pp[t]->raw;
      windows[i].observe(t, std::move(row));
      if (windows[i].ready()) ready.push_back(windows[i].profile());
    }
    if (ready.size() >= 2) latest = std::move(ready);
  }
  return latest;
}

inline std::string hash_config(const ScenarioConfig& sc) {
  Fnv1a h;
  const auto& c = sc.channel;
  for (double v : {c.wavelength_m, c.tx_gain, c.rx_gain, c.tag_gain, c.reflection_coeff,
                   c.tag_transfer, sc.tags.ring_radius_m, sc.ambient_w, sc.noise.snr_db,
                   sc.timing.sample_rate_hz, sc.timing.period_s, sc.timing.horizon_s,
                   sc.timing.slot_s})
    h.f64(v);
  h.u64(sc.noise.enabled);
  h.u64(sc.timing.code_bits).u64(sc.timing.samples_per_bit).u64(sc.timing.guard_samples);
  h.u64(sc.timing.fixed_prefix_samples.value_or(~0ull));
  for (const auto& p : sc.tags.tag_positions) h.f64(p.x).f64(p.y);
  auto traj = [&](const Trajectory& t) {
    h.f64(t.speed_mps()).u64(t.waypoints().size());
    for (const auto& w : t.waypoints()) h.f64(w.time_s).f64(w.position.x).f64(w.position.y);
  };
  traj(sc.receiver);
  for (const auto& a : sc.agents) {
    h.str(a.true_source_id).f64(a.base_tx_power_w);
    for (const auto& id : a.claimed_identities) h.str(id).f64(a.alpha(id));
    traj(a.trajectory);
  }
  return h.hex();
}

/// Simulates each (config, seed) pair and turns the traces into labeled
/// distance samples.
inline LabeledDataset generate_dataset(std::span<const ScenarioConfig> configs,
                                       std::span<const std::uint64_t> seeds,
                                       const DatasetOptions& opt,
                                       const SegmentationParams& seg = {}) {
  if (configs.size() != seeds.size())
    throw ParameterError("generate_dataset: one seed per scenario config required");
  bool mixed = false;
  for (const auto& c : configs) {
    bool attacker = false, legit = false;
    for (const auto& a : c.agents) (a.is_sybil() ? attacker : legit) = true;
    mixed = mixed || (attacker && legit);
  }
  if (!mixed)
    throw ParameterError(
        "generate_dataset: need a scenario with at least one attacker and one legitimate robot");
  std::vector<ScenarioSignatures> sigs;
  Fnv1a h;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    sigs.push_back(extract_signatures(simulate_scenario(configs[i], seeds[i]), seg));
    h.str(hash_config(configs[i]));
  }
  LabeledDataset ds = build_dataset(sigs, opt);
  ds.provenance.config_hash = h.hex();
  return ds;
}

inline std::string dataset_hash(const LabeledDataset& ds) {
  Fnv1a h;
  h.u64(ds.L).u64(ds.samples.size());
  for (const auto& s : ds.samples) {
    h.u64(s.scenario_seed).u64(s.window).f64(s.t_s).str(s.from).str(s.to);
    h.str(s.from_source).str(s.to_source).u64(static_cast<std::uint64_t>(s.label));
    for (double v : s.values) h.f64(v);
  }
  return h.hex();
}

// ---------------------------------------------------------------------------
// Cross-validation folds

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// k folds over `labels`, keeping every group (scenario) inside a single fold
/// and balancing each class across folds. Groups are visited largest first,
/// seeded shuffling breaks ties, and each goes to the fold where it most
/// reduces the squared deviation from an even per-class split.
inline std::vector<Fold> stratified_group_kfold(std::span<const int> labels,
                                                std::span<const std::uint64_t> groups,
                                                std::size_t k, std::uint64_t seed) {
  if (labels.size() != groups.size()) throw ShapeError("kfold: labels and groups differ in size");
  if (k < 2) throw ParameterError("kfold: k must be at least 2");
  if (k > labels.size()) throw ParameterError("kfold: k exceeds the number of samples");

  // Dense group ids in first-appearance order.
  std::map<std::uint64_t, std::size_t> seen;
  std::vector<std::size_t> gid(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i)
    gid[i] = seen.emplace(groups[i], seen.size()).first->second;
  const std::size_t G = seen.size();
  if (k > G)
    throw ParameterError("kfold: k exceeds the number of scenario groups (" + std::to_string(G) +
                         ")");
  std::vector<std::array<double, 2>> gcount(G, {0.0, 0.0});
  std::array<double, 2> total{0.0, 0.0};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i] ? 1 : 0;
    gcount[gid[i]][c] += 1.0;
    total[c] += 1.0;
  }

  std::vector<std::size_t> order(G);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return gcount[a][0] + gcount[a][1] > gcount[b][0] + gcount[b][1];
  });

  std::vector<std::array<double, 2>> fcount(k, {0.0, 0.0});
  std::vector<std::size_t> fold_of(G);
  const double share = 1.0 / static_cast<double>(k);
  for (auto g : order) {
    std::size_t best = 0;
    double best_cost = 1e300;
    for (std::size_t f = 0; f < k; ++f) {
      double cost = 0.0;
      for (std::size_t h = 0; h < k; ++h)
        for (int c = 0; c < 2; ++c) {
          if (total[c] == 0.0) continue;
          const double cnt = fcount[h][c] + (h == f ? gcount[g][c] : 0.0);
          const double dev = cnt / total[c] - share;
          cost += dev * dev;
        }
      if (cost < best_cost - 1e-15) {
        best_cost = cost;
        best = f;
      }
    }
    fold_of[g] = best;
    fcount[best][0] += gcount[g][0];
    fcount[best][1] += gcount[g][1];
  }

  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t f = fold_of[gid[i]];
    for (std::size_t h = 0; h < k; ++h) (h == f ? folds[h].test : folds[h].train).push_back(i);
  }
  return folds;
}

/// Folds grouped by scenario seed and stratified by label.
inline std::vector<Fold> kfold_split(const LabeledDataset& ds, std::size_t k, std::uint64_t seed) {
  std::vector<int> labels;
  std::vector<std::uint64_t> groups;
  labels.reserve(ds.size());
  groups.reserve(ds.size());
  for (const auto& s : ds.samples) {
    labels.push_back(s.label);
    groups.push_back(s.scenario_seed);
  }
  return stratified_group_kfold(labels, groups, k, seed);
}

}  // namespace scatterid
