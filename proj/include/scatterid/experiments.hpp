#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scatterid/corpus.hpp"
#include "scatterid/dataset.hpp"
#include "scatterid/metrics.hpp"

namespace scatterid {

/// Everything an experiment needs besides the knob it varies.
struct ExperimentConfig {
  CorpusParams corpus;
  std::uint64_t seed = 42;
  std::size_t L = 10;
  std::size_t window_stride = 3;
  std::size_t k_folds = 10;
  double sigma = kDefaultSigma;
  TrainingConfig training;
  SegmentationParams segmentation;
  RobotCounting counting = RobotCounting::final_window;
};

inline std::vector<ScenarioSignatures> corpus_signatures(const CorpusParams& cp,
                                                         std::uint64_t seed,
                                                         const SegmentationParams& seg = {}) {
  cp.validate();
  std::vector<ScenarioSignatures> out;
  for (auto s : corpus_seeds(cp, seed))
    out.push_back(extract_signatures(simulate_scenario(make_scenario(cp, s), s), seg));
  return out;
}

inline DatasetOptions dataset_options(const ExperimentConfig& cfg,
                                      DistanceMetric metric = DistanceMetric::adjusted_cosine,
                                      bool normalize = true) {
  DatasetOptions o;
  o.L = cfg.L;
  o.normalize = normalize;
  o.metric = metric;
  o.window_stride = cfg.window_stride;
  return o;
}

/// Cross-validated metrics for one dataset built from cached signatures.
inline MetricsReport cv_report(std::span<const ScenarioSignatures> sigs, const DatasetOptions& opt,
                               const ExperimentConfig& cfg) {
  const LabeledDataset ds = build_dataset(sigs, opt);
  return cross_validate(ds, cfg.k_folds, cfg.seed, cfg.sigma, cfg.training, cfg.counting).report;
}

struct SweepCell {
  std::size_t K = 0;
  std::size_t L = 0;
  std::optional<double> auroc;  // empty when the cell failed
};

struct SweepResult {
  std::vector<SweepCell> cells;  // K-major, in the order of the ranges
  std::vector<std::string> warnings;

  std::optional<double> at(std::size_t K, std::size_t L) const {
    for (const auto& c : cells)
      if (c.K == K && c.L == L) return c.auroc;
    return std::nullopt;
  }
};

/// Re-runs the whole pipeline for every (K, L); K changes the tag ring, so
/// traces are regenerated per K and shared across L.
inline SweepResult sweep_profile_size(const ExperimentConfig& cfg,
                                      std::span<const std::size_t> K_range,
                                      std::span<const std::size_t> L_range) {
  if (K_range.empty() || L_range.empty()) throw ParameterError("sweep: ranges must be nonempty");
  SweepResult r;
  for (auto K : K_range) {
    ExperimentConfig c = cfg;
    std::vector<ScenarioSignatures> sigs;
    std::string k_error;
    try {
      c.corpus.base.tags = TagLayout::ring(K, cfg.corpus.base.tags.ring_radius_m);
      sigs = corpus_signatures(c.corpus, c.seed, c.segmentation);
    } catch (const Error& e) {
      k_error = e.what();
    }
    for (auto L : L_range) {
      SweepCell cell{K, L, std::nullopt};
      if (k_error.empty()) {
        c.L = L;
        try {
          cell.auroc = cv_report(sigs, dataset_options(c), c).auroc;
        } catch (const Error& e) {
          r.warnings.push_back("K=" + std::to_string(K) + " L=" + std::to_string(L) + ": " +
                               e.what());
        }
      } else {
        r.warnings.push_back("K=" + std::to_string(K) + " L=" + std::to_string(L) + ": " + k_error);
      }
      r.cells.push_back(cell);
    }
  }
  return r;
}

struct AblationArm {
  bool normalized = true;
  bool power_scaling = true;
  MetricsReport report;
};

/// {normalized, raw} x {power scaling, none} on the same scenario seeds.
inline std::vector<AblationArm> ablation_normalization(const ExperimentConfig& cfg) {
  std::vector<AblationArm> arms;
  for (bool scaling : {true, false}) {
    ExperimentConfig c = cfg;
    c.corpus.power_scaling = scaling;
    const auto sigs = corpus_signatures(c.corpus, c.seed, c.segmentation);
    for (bool normalized : {true, false})
      arms.push_back({normalized, scaling,
                      cv_report(sigs, dataset_options(c, DistanceMetric::adjusted_cosine, normalized), c)});
  }
  return arms;
}

struct MetricComparison {
  DistanceMetric metric = DistanceMetric::adjusted_cosine;
  MetricsReport report;
};

inline std::vector<MetricComparison> compare_distance_metrics(const ExperimentConfig& cfg) {
  const auto sigs = corpus_signatures(cfg.corpus, cfg.seed, cfg.segmentation);
  std::vector<MetricComparison> out;
  for (auto m : kAllMetrics) out.push_back({m, cv_report(sigs, dataset_options(cfg, m), cfg)});
  return out;
}

}  // namespace scatterid
