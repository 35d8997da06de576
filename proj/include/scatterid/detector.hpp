#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scatterid/distance.hpp"
#include "scatterid/errors.hpp"

namespace scatterid {

/// Logistic function evaluated without overflow for any finite z. The result
/// is kept strictly inside (0, 1) even where it would round to an endpoint.
inline double sigmoid(double z) {
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  double v;
  if (z >= 0.0) {
    v = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    v = e / (1.0 + e);
  }
  return std::clamp(v, lo, hi);
}

// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

struct LRModel {
  Vector weights;
  double bias = 0.0;

  std::size_t dims() const { return weights.size(); }
};

inline double linear_score(const LRModel& model, std::span<const double> d) {
  if (d.size() != model.weights.size())
    throw ShapeError("distance vector has " + std::to_string(d.size()) +
                     " entries, model expects " + std::to_string(model.weights.size()));
  double z = model.bias;
  for (std::size_t i = 0; i < d.size(); ++i) z += model.weights[i] * d[i];
  return z;
}

inline double predict_similarity(const LRModel& model, std::span<const double> d) {
  return sigmoid(linear_score(model, d));
}

inline double predict_similarity(const LRModel& model, const DistanceVector& d) {
  return predict_similarity(model, d.values);
}

/// Weight per class, inversely proportional to its sample count and scaled
/// so that balanced data gets weight 1: v(c) = N / (2 count(c)).
struct ClassWeights {
  double negative = 1.0;
  double positive = 1.0;

  double operator()(int label) const { return label ? positive : negative; }
};

inline ClassWeights compute_class_weights(std::span<const int> labels) {
  std::size_t pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw TrainingDataError("labels must be 0 or 1");
    pos += static_cast<std::size_t>(y);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw TrainingDataError("both classes must be present");
  const double n = static_cast<double>(labels.size());
  return {n / (2.0 * static_cast<double>(neg)), n / (2.0 * static_cast<double>(pos))};
}

struct TrainingSample {
  Vector distance;
  int label = 0;
  double weight = 1.0;
};

struct TrainingConfig {
  double learning_rate = 0.1;
  std::size_t max_iterations = 5000;
  double gradient_tolerance = 1e-8;  // on the infinity norm
};

struct Gradient {
  Vector weights;
  double bias = 0.0;

  double inf_norm() const {
    double m = std::abs(bias);
    for (double g : weights) m = std::max(m, std::abs(g));
    return m;
  }
};

namespace detail {

inline void check_samples(std::span<const TrainingSample> samples) {
  if (samples.size() < 2) throw TrainingDataError("need at least 2 training samples");
  const std::size_t dims = samples.front().distance.size();
  bool has_pos = false, has_neg = false;
  for (const auto& s : samples) {
    if (s.distance.size() != dims) throw ShapeError("training samples differ in dimension");
    if (s.label != 0 && s.label != 1) throw TrainingDataError("labels must be 0 or 1");
    if (!(s.weight > 0.0)) throw TrainingDataError("sample weights must be positive");
    (s.label ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw TrainingDataError("both classes must be present");
}

}  // namespace detail

/// Log of the weighted likelihood, divided by the total weight:
///   sum_n v_n [y_n log g(z_n) + (1 - y_n) log(1 - g(z_n))] / sum_n v_n
inline double weighted_log_likelihood(const LRModel& model,
                                      std::span<const TrainingSample> samples) {
  double acc = 0.0, total = 0.0;
  for (const auto& s : samples) {
    const double z = linear_score(model, s.distance);
    acc += s.weight * (s.label ? -softplus(-z) : -softplus(z));
    total += s.weight;
  }
  return acc / total;
}

/// Analytic gradient of weighted_log_likelihood.
inline Gradient weighted_log_likelihood_gradient(const LRModel& model,
                                                 std::span<const TrainingSample> samples) {
  Gradient g{Vector(model.dims(), 0.0), 0.0};
  double total = 0.0;
  for (const auto& s : samples) {
    const double r = s.weight * (static_cast<double>(s.label) - sigmoid(linear_score(model, s.distance)));
    for (std::size_t i = 0; i < g.weights.size(); ++i) g.weights[i] += r * s.distance[i];
    g.bias += r;
    total += s.weight;
  }
  for (double& w : g.weights) w /= total;
  g.bias /= total;
  return g;
}

struct TrainingResult {
  LRModel model;
  std::size_t iterations = 0;
  bool converged = false;
  double log_likelihood = 0.0;
};

/// Maximum weighted likelihood by full-batch gradient ascent from zero.
inline TrainingResult train_mwle_detailed(std::span<const TrainingSample> samples,
                                          const TrainingConfig& config = {}) {
  detail::check_samples(samples);
  const std::size_t n = samples.size();
  const std::size_t dims = samples.front().distance.size();

  // Row-major copy for a tight inner loop.
  Vector x(n * dims);
  Vector y(n), v(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(samples[i].distance.begin(), samples[i].distance.end(),
              x.begin() + static_cast<std::ptrdiff_t>(i * dims));
    y[i] = samples[i].label;
    v[i] = samples[i].weight;
    total += v[i];
  }

  TrainingResult result;
  LRModel& m = result.model;
  m.weights.assign(dims, 0.0);
  Vector grad(dims);
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &x[i * dims];
      double z = m.bias;
      for (std::size_t k = 0; k < dims; ++k) z += m.weights[k] * row[k];
      const double r = v[i] * (y[i] - sigmoid(z));
      for (std::size_t k = 0; k < dims; ++k) grad[k] += r * row[k];
      grad_b += r;
    }
    double inf = std::abs(grad_b / total);
    for (double& g : grad) {
      g /= total;
      inf = std::max(inf, std::abs(g));
    }
    grad_b /= total;
    if (!std::isfinite(inf)) throw TrainingDivergenceError("train_mwle: non-finite gradient");
    result.iterations = it;
    if (inf < config.gradient_tolerance) {
      result.converged = true;
      break;
    }
    for (std::size_t k = 0; k < dims; ++k) m.weights[k] += config.learning_rate * grad[k];
    m.bias += config.learning_rate * grad_b;
    result.iterations = it + 1;
  }
  result.log_likelihood = weighted_log_likelihood(m, samples);
  if (!std::isfinite(result.log_likelihood))
    throw TrainingDivergenceError("train_mwle: non-finite log-likelihood");
  return result;
}

inline LRModel train_mwle(std::span<const TrainingSample> samples,
                          const TrainingConfig& config = {}) {
  return train_mwle_detailed(samples, config).model;
}

/// probs[i][j] = s_ij; the diagonal is 0.
struct SimilarityMatrix {
  std::vector<IdentityId> identities;
  std::vector<Vector> probs;

  std::size_t size() const { return identities.size(); }
};

inline SimilarityMatrix similarity_matrix(const LRModel& model, const DistanceMatrix& D) {
  SimilarityMatrix S;
  S.identities = D.identities;
  const std::size_t n = D.size();
  S.probs.assign(n, Vector(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) S.probs[i][j] = predict_similarity(model, D.at(i, j));
  return S;
}

struct Verdict {
  std::vector<std::pair<IdentityId, IdentityId>> sybil_pairs;
  std::set<IdentityId> fake_identities;
  std::set<IdentityId> legit_identities;
  double threshold = 0.5;
};

inline constexpr double kDefaultSigma = 0.5;

/// Flags (i, j) when both s_ij and s_ji reach sigma; an identity is fake
/// when it belongs to at least one flagged pair.
inline Verdict detect_sybil(const SimilarityMatrix& S, double sigma = kDefaultSigma) {
  if (!(sigma > 0.0 && sigma < 1.0)) throw ParameterError("detect_sybil: sigma must lie in (0, 1)");
  Verdict v;
  v.threshold = sigma;
  const std::size_t n = S.size();
  std::vector<bool> fake(n, false);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (S.probs[i][j] >= sigma && S.probs[j][i] >= sigma) {
        v.sybil_pairs.emplace_back(S.identities[i], S.identities[j]);
        fake[i] = fake[j] = true;
      }
  for (std::size_t i = 0; i < n; ++i)
    (fake[i] ? v.fake_identities : v.legit_identities).insert(S.identities[i]);
  return v;
}

/// Score whose threshold crossing reproduces detect_sybil's per-identity
/// decision: max over partners j of min(s_ij, s_ji).
inline Vector identity_scores(const SimilarityMatrix& S) {
  const std::size_t n = S.size();
  Vector out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) out[i] = std::max(out[i], std::min(S.probs[i][j], S.probs[j][i]));
  return out;
}

}  // namespace scatterid
