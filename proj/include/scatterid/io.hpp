#pragma once

// File formats: YAML configs, trace/dataset/signature/matrix CSV, and JSON
// for models, metrics and verdicts. Needs yaml-cpp and nlohmann/json.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "json.hpp"
#include "scatterid/experiments.hpp"

namespace scatterid {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

class IoError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Text helpers

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw IoError("not a number: '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw IoError("not an unsigned integer: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t b = 0;
  for (;;) {
    const std::size_t e = line.find(',', b);
    out.push_back(line.substr(b, e == std::string_view::npos ? line.npos : e - b));
    if (e == std::string_view::npos) break;
    b = e + 1;
  }
  return out;
}

inline std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  return f;
}

inline std::ifstream open_in(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot read " + p.string());
  return f;
}

// Reads a CSV file, checks the header prefix and returns the data rows.
inline std::vector<std::vector<std::string>> read_csv(const fs::path& p,
                                                     std::string_view header_prefix,
                                                     std::vector<std::string>* header = nullptr) {
  auto f = open_in(p);
  std::string line;
  if (!std::getline(f, line) || line.rfind(header_prefix, 0) != 0)
    throw IoError(p.string() + ": expected header starting with '" + std::string(header_prefix) +
                  "'");
  if (header) {
    header->clear();
    for (auto c : split_csv(line)) header->emplace_back(c);
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> row;
    for (auto c : split_csv(line)) row.emplace_back(c);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_json(const fs::path& p, const json& j) {
  auto f = open_out(p);
  f << j.dump(2) << '\n';
}

inline json read_json(const fs::path& p) {
  auto f = open_in(p);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw IoError(p.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// YAML configuration

/// A config file either describes one explicit scenario (it has `agents`) or
/// a corpus recipe; both share the radio, tag and timing sections.
struct RunConfig {
  ScenarioConfig scenario;
  bool explicit_scenario = false;
  ExperimentConfig experiment;
  std::vector<std::size_t> sweep_K{2, 3, 4};
  std::vector<std::size_t> sweep_L{2, 4, 6, 8, 10, 12, 14, 16};
};

namespace detail {

inline void allow_keys(const YAML::Node& n, std::string_view where,
                       std::initializer_list<std::string_view> keys) {
  if (!n || n.IsNull()) return;
  if (!n.IsMap()) throw ConfigError(std::string(where) + ": expected a mapping");
  for (const auto& kv : n) {
    const auto k = kv.first.as<std::string>();
    bool ok = false;
    for (auto a : keys) ok = ok || a == k;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + k + "'");
  }
}

template <class T>
void read(const YAML::Node& n, const char* key, T& out) {
  if (n && n[key]) {
    try {
      out = n[key].template as<T>();
    } catch (const YAML::Exception& e) {
      throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

inline std::vector<Point2> read_points(const YAML::Node& n, std::string_view where) {
  if (!n || !n.IsSequence() || n.size() == 0)
    throw ConfigError(std::string(where) + ": expected a list of [x, y] points");
  std::vector<Point2> pts;
  for (const auto& p : n) {
    if (!p.IsSequence() || p.size() != 2)
      throw ConfigError(std::string(where) + ": each point is [x, y]");
    pts.push_back({p[0].as<double>(), p[1].as<double>()});
  }
  return pts;
}

inline Trajectory read_trajectory(const YAML::Node& n, double default_speed,
                                  std::string_view where) {
  double speed = default_speed, start = 0.0;
  read(n, "speed_mps", speed);
  read(n, "start_time_s", start);
  return Trajectory::through(read_points(n["waypoints"], where), speed, start);
}

}  // namespace detail

inline RunConfig parse_config(const YAML::Node& root) {
  using detail::read;
  detail::allow_keys(root, "config",
                     {"name", "seed", "channel", "tags", "timing", "noise", "ambient_w", "receiver",
                      "agents", "corpus", "experiment", "sweep"});
  RunConfig rc;
  ScenarioConfig& sc = rc.scenario;
  read(root, "name", sc.name);
  read(root, "seed", sc.seed);
  read(root, "ambient_w", sc.ambient_w);

  const auto ch = root["channel"];
  detail::allow_keys(ch, "channel",
                     {"wavelength_m", "tx_gain", "rx_gain", "tag_gain", "reflection_coeff",
                      "tag_transfer"});
  read(ch, "wavelength_m", sc.channel.wavelength_m);
  read(ch, "tx_gain", sc.channel.tx_gain);
  read(ch, "rx_gain", sc.channel.rx_gain);
  read(ch, "tag_gain", sc.channel.tag_gain);
  read(ch, "reflection_coeff", sc.channel.reflection_coeff);
  read(ch, "tag_transfer", sc.channel.tag_transfer);

  const auto tags = root["tags"];
  detail::allow_keys(tags, "tags", {"count", "ring_radius_m", "phase_rad", "positions"});
  if (tags) {
    double radius = sc.tags.ring_radius_m;
    read(tags, "ring_radius_m", radius);
    if (tags["positions"]) {
      sc.tags.tag_positions = detail::read_points(tags["positions"], "tags.positions");
      sc.tags.ring_radius_m = radius;
      sc.tags.validate();
    } else {
      std::size_t k = sc.tags.count();
      double phase = std::numbers::pi / 4;
      read(tags, "count", k);
      read(tags, "phase_rad", phase);
      sc.tags = TagLayout::ring(k, radius, phase);
    }
  }

  const auto tm = root["timing"];
  detail::allow_keys(tm, "timing",
                     {"sample_rate_hz", "code_bits", "samples_per_bit", "guard_samples",
                      "fixed_prefix_samples", "period_s", "horizon_s", "slot_s"});
  auto& t = sc.timing;
  read(tm, "sample_rate_hz", t.sample_rate_hz);
  read(tm, "code_bits", t.code_bits);
  read(tm, "samples_per_bit", t.samples_per_bit);
  read(tm, "guard_samples", t.guard_samples);
  if (tm && tm["fixed_prefix_samples"]) t.fixed_prefix_samples = tm["fixed_prefix_samples"].as<std::size_t>();
  read(tm, "period_s", t.period_s);
  read(tm, "horizon_s", t.horizon_s);
  read(tm, "slot_s", t.slot_s);

  const auto nz = root["noise"];
  detail::allow_keys(nz, "noise", {"enabled", "snr_db"});
  read(nz, "enabled", sc.noise.enabled);
  read(nz, "snr_db", sc.noise.snr_db);

  if (const auto agents = root["agents"]) {
    rc.explicit_scenario = true;
    if (!agents.IsSequence()) throw ConfigError("agents: expected a list");
    if (!root["receiver"]) throw ConfigError("an explicit scenario needs a receiver");
    detail::allow_keys(root["receiver"], "receiver", {"speed_mps", "start_time_s", "waypoints"});
    sc.receiver = detail::read_trajectory(root["receiver"], 0.2, "receiver");
    for (const auto& an : agents) {
      detail::allow_keys(an, "agent",
                         {"source", "identities", "tx_power_w", "power_scale", "speed_mps",
                          "start_time_s", "waypoints"});
      RobotAgent a;
      read(an, "source", a.true_source_id);
      read(an, "identities", a.claimed_identities);
      read(an, "tx_power_w", a.base_tx_power_w);
      read(an, "power_scale", a.power_scale);
      a.trajectory = detail::read_trajectory(an, 0.2, "agent '" + a.true_source_id + "'");
      sc.agents.push_back(std::move(a));
    }
    sc.validate();
  } else {
    sc.validate();
  }

  ExperimentConfig& ex = rc.experiment;
  ex.seed = sc.seed;
  CorpusParams& cp = ex.corpus;
  cp.base = sc;
  cp.base.agents.clear();
  const auto co = root["corpus"];
  detail::allow_keys(co, "corpus",
                     {"scenarios", "min_identities", "max_identities", "areas", "speed_mps",
                      "tx_power_w", "receiver_speed_mps", "edge_margin_m", "power_scaling",
                      "alpha_min", "alpha_max", "target_positive_fraction"});
  read(co, "scenarios", cp.scenarios);
  read(co, "min_identities", cp.min_identities);
  read(co, "max_identities", cp.max_identities);
  if (co && co["areas"]) {
    cp.areas.clear();
    for (const auto& p : detail::read_points(co["areas"], "corpus.areas"))
      cp.areas.push_back({p.x, p.y});
  }
  read(co, "speed_mps", cp.speed_mps);
  read(co, "tx_power_w", cp.tx_power_w);
  read(co, "receiver_speed_mps", cp.receiver_speed_mps);
  read(co, "edge_margin_m", cp.edge_margin_m);
  read(co, "power_scaling", cp.power_scaling);
  read(co, "alpha_min", cp.alpha_min);
  read(co, "alpha_max", cp.alpha_max);
  read(co, "target_positive_fraction", cp.target_positive_fraction);
  cp.validate();

  const auto en = root["experiment"];
  detail::allow_keys(en, "experiment",
                     {"L", "window_stride", "k_folds", "sigma", "robot_counting", "training",
                      "segmentation"});
  read(en, "L", ex.L);
  read(en, "window_stride", ex.window_stride);
  read(en, "k_folds", ex.k_folds);
  read(en, "sigma", ex.sigma);
  if (en && en["robot_counting"]) {
    const auto c = en["robot_counting"].as<std::string>();
    if (c == "final_window") ex.counting = RobotCounting::final_window;
    else if (c == "per_window") ex.counting = RobotCounting::per_window;
    else throw ConfigError("robot_counting must be final_window or per_window");
  }
  const auto tr = en ? en["training"] : YAML::Node();
  detail::allow_keys(tr, "training", {"learning_rate", "max_iterations", "gradient_tolerance"});
  read(tr, "learning_rate", ex.training.learning_rate);
  read(tr, "max_iterations", ex.training.max_iterations);
  read(tr, "gradient_tolerance", ex.training.gradient_tolerance);
  const auto sg = en ? en["segmentation"] : YAML::Node();
  detail::allow_keys(sg, "segmentation", {"window", "peak_z"});
  read(sg, "window", ex.segmentation.window);
  read(sg, "peak_z", ex.segmentation.peak_z);

  const auto sw = root["sweep"];
  detail::allow_keys(sw, "sweep", {"K", "L"});
  read(sw, "K", rc.sweep_K);
  read(sw, "L", rc.sweep_L);
  return rc;
}

inline RunConfig load_config(const fs::path& p) {
  try {
    return parse_config(YAML::LoadFile(p.string()));
  } catch (const YAML::Exception& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

inline RunConfig parse_config_text(const std::string& text) {
  try {
    return parse_config(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Traces: one CSV per identity plus a JSON sidecar per scenario

inline constexpr std::string_view kTraceHeader = "t_s,sample,tag_index";
inline constexpr std::string_view kSidecarName = "scenario.json";

inline std::string bits_string(const BitVector& bits) {
  std::string s;
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

inline void write_traces(const fs::path& dir, const SimulationResult& sim) {
  fs::create_directories(dir);
  json side;
  side["scenario"] = sim.scenario_name;
  side["seed"] = sim.seed;
  side["period_s"] = sim.period_s;
  json labels = json::object();
  json ids = json::array();
  for (const auto& it : sim.identities) {
    labels[it.identity] = it.true_source_id;
    const std::string file = it.identity + ".csv";
    auto f = open_out(dir / file);
    f << kTraceHeader << '\n';
    json traces = json::array();
    for (const auto& tr : it.traces) {
      for (std::size_t i = 0; i < tr.samples.size(); ++i)
        f << format_double(tr.start_time_s + static_cast<double>(i) / tr.sample_rate_hz) << ','
          << format_double(tr.samples[i]) << ',' << tr.tag_index[i] << '\n';
      traces.push_back({{"start_time_s", tr.start_time_s}, {"samples", tr.samples.size()}});
    }
    const auto& first = it.traces.empty() ? ReceivedTrace{} : it.traces.front();
    ids.push_back({{"identity", it.identity},
                   {"true_source_id", it.true_source_id},
                   {"file", file},
                   {"sample_rate_hz", first.sample_rate_hz},
                   {"tag_count", first.tag_count},
                   {"samples_per_bit", first.samples_per_bit},
                   {"tag_code", bits_string(first.tag_code)},
                   {"traces", traces}});
  }
  side["labels"] = labels;
  side["identities"] = ids;
  write_json(dir / kSidecarName, side);
}

/// Rebuilds the traces written by write_traces. Generator-side ground truth
/// (true start, injected powers) is not stored and stays empty.
inline SimulationResult read_traces(const fs::path& dir) {
  const json side = read_json(dir / kSidecarName);
  SimulationResult sim;
  try {
    sim.scenario_name = side.at("scenario").get<std::string>();
    sim.seed = side.at("seed").get<std::uint64_t>();
    sim.period_s = side.at("period_s").get<double>();
    for (const auto& id : side.at("identities")) {
      IdentityTraces it;
      it.identity = id.at("identity").get<std::string>();
      it.true_source_id = id.at("true_source_id").get<std::string>();
      BitVector code;
      for (char c : id.at("tag_code").get<std::string>()) code.push_back(c == '1' ? 1 : 0);
      const auto rows = read_csv(dir / id.at("file").get<std::string>(), kTraceHeader);
      std::size_t row = 0;
      for (const auto& tj : id.at("traces")) {
        ReceivedTrace tr;
        tr.identity = it.identity;
        tr.true_source_id = it.true_source_id;
        tr.start_time_s = tj.at("start_time_s").get<double>();
        tr.sample_rate_hz = id.at("sample_rate_hz").get<double>();
        tr.tag_count = id.at("tag_count").get<std::size_t>();
        tr.samples_per_bit = id.at("samples_per_bit").get<std::size_t>();
        tr.tag_code = code;
        const auto n = tj.at("samples").get<std::size_t>();
        if (row + n > rows.size()) throw IoError(it.identity + ": trace file is truncated");
        tr.samples.reserve(n);
        tr.tag_index.reserve(n);
        for (std::size_t i = 0; i < n; ++i, ++row) {
          const auto& r = rows[row];
          if (r.size() != 3) throw IoError(it.identity + ": expected 3 columns");
          tr.samples.push_back(parse_double(r[1]));
          tr.tag_index.push_back(static_cast<std::uint16_t>(parse_u64(r[2])));
        }
        it.traces.push_back(std::move(tr));
      }
      if (row != rows.size()) throw IoError(it.identity + ": trailing rows in trace file");
      sim.identities.push_back(std::move(it));
    }
  } catch (const json::exception& e) {
    throw IoError((dir / kSidecarName).string() + ": " + e.what());
  }
  sim.period_count = sim.identities.empty() ? 0 : sim.identities.front().traces.size();
  // Sybil flags follow from the labels: a source with several identities.
  std::map<std::string, std::size_t> per_source;
  for (const auto& it : sim.identities) ++per_source[it.true_source_id];
  for (auto& it : sim.identities) it.sybil = per_source[it.true_source_id] >= 2;
  return sim;
}

// ---------------------------------------------------------------------------
// Signatures and distance matrices

inline void write_signatures(const fs::path& p, const ScenarioSignatures& sigs) {
  auto f = open_out(p);
  std::size_t K = 0;
  for (const auto& id : sigs.identities)
    for (const auto& s : id.per_period)
      if (s) K = s->normalized.size();
  f << "identity,t_s";
  for (std::size_t k = 1; k <= K; ++k) f << ",f_" << k;
  f << '\n';
  for (const auto& id : sigs.identities)
    for (std::size_t t = 0; t < id.per_period.size(); ++t) {
      if (!id.per_period[t]) continue;
      f << id.identity << ',' << format_double(static_cast<double>(t) * sigs.period_s);
      for (double v : id.per_period[t]->normalized) f << ',' << format_double(v);
      f << '\n';
    }
}

inline void write_matrix(const fs::path& p, const DistanceMatrix& D) {
  auto f = open_out(p);
  const std::size_t L = D.size() ? D.at(0, 0).values.size() : 0;
  f << "i,j";
  for (std::size_t l = 1; l <= L; ++l) f << ",d_" << l;
  f << '\n';
  for (std::size_t i = 0; i < D.size(); ++i)
    for (std::size_t j = 0; j < D.size(); ++j) {
      if (i == j) continue;
      f << D.identities[i] << ',' << D.identities[j];
      for (double v : D.at(i, j).values) f << ',' << format_double(v);
      f << '\n';
    }
}

// ---------------------------------------------------------------------------
// Labeled datasets

inline constexpr std::string_view kDatasetHeader =
    "scenario_seed,window,t_s,from,to,from_source,to_source,label";

inline void write_dataset(const fs::path& csv, const LabeledDataset& ds) {
  auto f = open_out(csv);
  f << kDatasetHeader;
  for (std::size_t l = 1; l <= ds.L; ++l) f << ",d_" << l;
  f << '\n';
  for (const auto& s : ds.samples) {
    f << s.scenario_seed << ',' << s.window << ',' << format_double(s.t_s) << ',' << s.from << ','
      << s.to << ',' << s.from_source << ',' << s.to_source << ',' << s.label;
    for (double v : s.values) f << ',' << format_double(v);
    f << '\n';
  }
}

inline json dataset_summary(const LabeledDataset& ds) {
  return {{"L", ds.L},
          {"samples", ds.size()},
          {"positives", ds.positives()},
          {"positive_fraction", ds.positive_fraction()},
          {"seeds", ds.provenance.seeds},
          {"config_hash", ds.provenance.config_hash},
          {"dataset_hash", dataset_hash(ds)},
          {"warnings", ds.warnings}};
}

inline LabeledDataset read_dataset(const fs::path& csv) {
  std::vector<std::string> header;
  const auto rows = read_csv(csv, kDatasetHeader, &header);
  constexpr std::size_t fixed = 8;
  LabeledDataset ds;
  ds.L = header.size() - fixed;
  if (ds.L == 0) throw IoError(csv.string() + ": no distance columns");
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw IoError(csv.string() + ": ragged row");
    LabeledSample s;
    s.scenario_seed = parse_u64(r[0]);
    s.window = parse_u64(r[1]);
    s.t_s = parse_double(r[2]);
    s.from = r[3];
    s.to = r[4];
    s.from_source = r[5];
    s.to_source = r[6];
    s.label = static_cast<int>(parse_u64(r[7]));
    if (s.label > 1) throw IoError(csv.string() + ": label must be 0 or 1");
    for (std::size_t c = fixed; c < r.size(); ++c) s.values.push_back(parse_double(r[c]));
    ds.samples.push_back(std::move(s));
  }
  std::vector<std::uint64_t> seeds;
  for (const auto& s : ds.samples)
    if (seeds.empty() || seeds.back() != s.scenario_seed) seeds.push_back(s.scenario_seed);
  ds.provenance.seeds = seeds;
  return ds;
}

// ---------------------------------------------------------------------------
// Models, metrics, verdicts

inline json model_json(const LRModel& m) {
  return {{"L", m.dims()}, {"weights", m.weights}, {"bias", m.bias}};
}

inline LRModel model_from_json(const json& j) {
  try {
    LRModel m;
    m.weights = j.at("weights").get<Vector>();
    m.bias = j.at("bias").get<double>();
    if (j.at("L").get<std::size_t>() != m.weights.size())
      throw ShapeError("model: L does not match the number of weights");
    return m;
  } catch (const json::exception& e) {
    throw IoError(std::string("model: ") + e.what());
  }
}

inline void write_model(const fs::path& p, const LRModel& m) { write_json(p, model_json(m)); }
inline LRModel read_model(const fs::path& p) { return model_from_json(read_json(p)); }

inline json metrics_json(const MetricsReport& r) {
  return {{"tpr", r.tpr},         {"fpr", r.fpr},         {"accuracy", r.accuracy},
          {"auroc", r.auroc},     {"n_fake", r.n_fake},   {"n_legit", r.n_legit}};
}

inline void write_roc(const fs::path& p, const MetricsReport& r) {
  auto f = open_out(p);
  f << "threshold,fpr,tpr\n";
  for (const auto& pt : r.roc_points)
    f << format_double(pt.threshold) << ',' << format_double(pt.fpr) << ','
      << format_double(pt.tpr) << '\n';
}

inline json verdict_json(const Verdict& v) {
  json pairs = json::array();
  for (const auto& [a, b] : v.sybil_pairs) pairs.push_back({a, b});
  std::map<IdentityId, std::string> sorted;
  for (const auto& id : v.fake_identities) sorted[id] = "fake";
  for (const auto& id : v.legit_identities) sorted[id] = "legit";
  json labels = json::object();
  for (const auto& [id, l] : sorted) labels[id] = l;
  return {{"sigma", v.threshold}, {"sybil_pairs", pairs}, {"identities", labels}};
}

}  // namespace scatterid
