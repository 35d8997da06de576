#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "scatterid/dataset.hpp"
#include "scatterid/detector.hpp"

namespace scatterid {

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

inline constexpr std::size_t kRocPoints = 201;

/// ROC over `points` evenly spaced thresholds, swept from 1 down to 0; a
/// score is positive when it reaches the threshold.
inline std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels,
                                       std::size_t points = kRocPoints) {
  if (scores.size() != labels.size()) throw ShapeError("roc_curve: scores and labels differ");
  if (points < 2) throw ParameterError("roc_curve: need at least 2 thresholds");
  std::size_t pos = 0;
  for (int y : labels) pos += y ? 1 : 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw MetricsUndefinedError("roc_curve: both classes are required");

  // Sorting once lets every threshold count with a binary search.
  std::vector<double> ps, ns;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] ? ps : ns).push_back(scores[i]);
  std::sort(ps.begin(), ps.end());
  std::sort(ns.begin(), ns.end());
  auto at_least = [](const std::vector<double>& v, double t) {
    return static_cast<double>(v.end() - std::lower_bound(v.begin(), v.end(), t));
  };
  std::vector<RocPoint> roc;
  roc.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = 1.0 - static_cast<double>(i) / static_cast<double>(points - 1);
    roc.push_back({t, at_least(ns, t) / static_cast<double>(neg),
                   at_least(ps, t) / static_cast<double>(pos)});
  }
  return roc;
}

inline double trapezoid_auc(std::span<const RocPoint> roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i)
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) / 2.0;
  return area;
}

/// Probability that a random positive outscores a random negative, ties
/// counted as one half (Mann-Whitney U / (n_pos n_neg)).
inline double mann_whitney_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("mann_whitney_auc: size mismatch");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[idx[k]]) {
        rank_sum += mid_rank;
        ++pos;
      }
    i = j;
  }
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) throw MetricsUndefinedError("mann_whitney_auc: both classes required");
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

/// Robot-level outcome for one identity in one (scenario, window).
struct IdentityDecision {
  std::uint64_t scenario_seed = 0;
  std::size_t window = 0;
  IdentityId identity;
  bool fake = false;     // ground truth: its transmitter claims several identities
  bool flagged = false;  // verdict at sigma
};

/// Unordered identity pair in one (scenario, window), scored by
/// min(s_ij, s_ji) so that thresholding it reproduces the pair rule.
struct PairDecision {
  std::uint64_t scenario_seed = 0;
  std::size_t window = 0;
  IdentityId a, b;
  bool positive = false;
  double score = 0.0;
};

struct WindowDecisions {
  std::vector<IdentityDecision> identities;
  std::vector<PairDecision> pairs;
};

/// Rebuilds each window's similarity matrix from per-sample probabilities and
/// applies the pair rule. Output is ordered by (scenario, window, identity).
inline WindowDecisions window_decisions(const LabeledDataset& ds, std::span<const double> probs,
                                        double sigma) {
  if (probs.size() != ds.size()) throw ShapeError("window_decisions: one probability per sample");
  // Identities per transmitter across each scenario decide ground truth.
  std::map<std::pair<std::uint64_t, std::string>, std::set<IdentityId>> claims;
  for (const auto& s : ds.samples) {
    claims[{s.scenario_seed, s.from_source}].insert(s.from);
    claims[{s.scenario_seed, s.to_source}].insert(s.to);
  }
  std::map<std::pair<std::uint64_t, std::size_t>, std::vector<std::size_t>> windows;
  for (std::size_t i = 0; i < ds.size(); ++i)
    windows[{ds.samples[i].scenario_seed, ds.samples[i].window}].push_back(i);

  WindowDecisions out;
  for (const auto& [key, members] : windows) {
    std::map<IdentityId, std::size_t> index;
    std::map<IdentityId, std::string> source;
    for (auto i : members) {
      const auto& s = ds.samples[i];
      index.emplace(s.from, 0);
      index.emplace(s.to, 0);
      source[s.from] = s.from_source;
      source[s.to] = s.to_source;
    }
    SimilarityMatrix S;
    for (auto& [id, k] : index) {
      k = S.identities.size();
      S.identities.push_back(id);
    }
    const std::size_t n = S.size();
    S.probs.assign(n, Vector(n, 0.0));
    std::vector<std::vector<bool>> seen(n, std::vector<bool>(n, false));
    for (auto i : members) {
      const auto& s = ds.samples[i];
      const std::size_t a = index[s.from], b = index[s.to];
      S.probs[a][b] = probs[i];
      seen[a][b] = true;
    }
    const Verdict v = detect_sybil(S, sigma);
    for (const auto& id : S.identities)
      out.identities.push_back({key.first, key.second, id,
                                claims[{key.first, source[id]}].size() >= 2,
                                v.fake_identities.count(id) > 0});
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!seen[a][b] || !seen[b][a]) continue;
        out.pairs.push_back({key.first, key.second, S.identities[a], S.identities[b],
                             source[S.identities[a]] == source[S.identities[b]],
                             std::min(S.probs[a][b], S.probs[b][a])});
      }
  }
  return out;
}

/// How robots are counted for TPR, FPR and accuracy.
enum class RobotCounting {
  final_window,  // one verdict per (scenario, identity): its last complete window
  per_window,    // one verdict per (scenario, window, identity)
};

/// Keeps, per (scenario, identity), the decision from the latest window.
inline std::vector<IdentityDecision> final_decisions(std::span<const IdentityDecision> all) {
  std::map<std::pair<std::uint64_t, IdentityId>, IdentityDecision> last;
  for (const auto& d : all) {
    auto [it, inserted] = last.try_emplace({d.scenario_seed, d.identity}, d);
    if (!inserted && d.window >= it->second.window) it->second = d;
  }
  std::vector<IdentityDecision> out;
  out.reserve(last.size());
  for (auto& [key, d] : last) out.push_back(std::move(d));
  return out;
}

struct MetricsReport {
  double tpr = 0.0;
  double fpr = 0.0;
  double accuracy = 0.0;
  double auroc = 0.0;
  std::vector<RocPoint> roc_points;
  std::size_t n_fake = 0;
  std::size_t n_legit = 0;
  double sigma = kDefaultSigma;
};

inline MetricsReport evaluate_predictions(const LabeledDataset& test, std::span<const double> probs,
                                          double sigma = kDefaultSigma,
                                          RobotCounting counting = RobotCounting::final_window) {
  if (test.size() == 0) throw ParameterError("evaluate: empty test set");
  const auto wd = window_decisions(test, probs, sigma);
  const auto robots =
      counting == RobotCounting::final_window ? final_decisions(wd.identities) : wd.identities;
  MetricsReport r;
  r.sigma = sigma;
  std::size_t tp = 0, fp = 0;
  for (const auto& d : robots) {
    if (d.fake) {
      ++r.n_fake;
      tp += d.flagged;
    } else {
      ++r.n_legit;
      fp += d.flagged;
    }
  }
  if (r.n_fake == 0 || r.n_legit == 0)
    throw MetricsUndefinedError("evaluate: test set needs both fake and legitimate robots");
  r.tpr = static_cast<double>(tp) / static_cast<double>(r.n_fake);
  r.fpr = static_cast<double>(fp) / static_cast<double>(r.n_legit);
  r.accuracy = static_cast<double>(tp + (r.n_legit - fp)) / static_cast<double>(r.n_fake + r.n_legit);

  Vector scores;
  std::vector<int> labels;
  scores.reserve(wd.pairs.size());
  labels.reserve(wd.pairs.size());
  for (const auto& p : wd.pairs) {
    scores.push_back(p.score);
    labels.push_back(p.positive ? 1 : 0);
  }
  r.roc_points = roc_curve(scores, labels);
  r.auroc = trapezoid_auc(r.roc_points);
  return r;
}

inline Vector predict_all(const LRModel& model, const LabeledDataset& ds) {
  Vector p;
  p.reserve(ds.size());
  for (const auto& s : ds.samples) p.push_back(predict_similarity(model, s.values));
  return p;
}

inline MetricsReport evaluate(const LRModel& model, const LabeledDataset& test,
                              double sigma = kDefaultSigma,
                              RobotCounting counting = RobotCounting::final_window) {
  return evaluate_predictions(test, predict_all(model, test), sigma, counting);
}

/// Class-weighted training set for MWLE.
inline std::vector<TrainingSample> training_samples(const LabeledDataset& ds,
                                                    std::span<const std::size_t> indices) {
  std::vector<int> labels;
  labels.reserve(indices.size());
  for (auto i : indices) labels.push_back(ds.samples.at(i).label);
  const ClassWeights w = compute_class_weights(labels);
  std::vector<TrainingSample> out;
  out.reserve(indices.size());
  for (auto i : indices) {
    const auto& s = ds.samples[i];
    out.push_back({s.values, s.label, w(s.label)});
  }
  return out;
}

inline LRModel train_on(const LabeledDataset& ds, const TrainingConfig& config = {}) {
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  return train_mwle(training_samples(ds, all), config);
}

struct CrossValidationResult {
  MetricsReport report;
  Vector predictions;  // out-of-fold probability per sample
  std::vector<LRModel> models;
};

/// k-fold CV; every sample is scored by the model that did not see its
/// scenario, then robot-level metrics are computed on the pooled scores.
inline CrossValidationResult cross_validate(const LabeledDataset& ds, std::size_t k,
                                            std::uint64_t seed, double sigma = kDefaultSigma,
                                            const TrainingConfig& config = {},
                                            RobotCounting counting = RobotCounting::final_window) {
  CrossValidationResult cv;
  cv.predictions.assign(ds.size(), 0.0);
  for (const auto& fold : kfold_split(ds, k, seed)) {
    LRModel m = train_mwle(training_samples(ds, fold.train), config);
    for (auto i : fold.test) cv.predictions[i] = predict_similarity(m, ds.samples[i].values);
    cv.models.push_back(std::move(m));
  }
  cv.report = evaluate_predictions(ds, cv.predictions, sigma, counting);
  return cv;
}

}  // namespace scatterid
