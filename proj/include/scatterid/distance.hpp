#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scatterid/errors.hpp"
#include "scatterid/signal.hpp"

namespace scatterid {

enum class DistanceMetric { adjusted_cosine, cosine, manhattan, euclidean, chebyshev };

inline constexpr DistanceMetric kAllMetrics[] = {
    DistanceMetric::adjusted_cosine, DistanceMetric::cosine, DistanceMetric::manhattan,
    DistanceMetric::euclidean, DistanceMetric::chebyshev};

inline std::string_view to_string(DistanceMetric m) {
  switch (m) {
    case DistanceMetric::adjusted_cosine: return "adjusted_cosine";
    case DistanceMetric::cosine: return "cosine";
    case DistanceMetric::manhattan: return "manhattan";
    case DistanceMetric::euclidean: return "euclidean";
    case DistanceMetric::chebyshev: return "chebyshev";
  }
  return "unknown";
}

inline DistanceMetric parse_metric(std::string_view name) {
  for (auto m : kAllMetrics)
    if (to_string(m) == name) return m;
  throw ParameterError("unknown distance metric '" + std::string(name) + "'");
}

namespace detail {

inline void check_dims(std::span<const double> f, std::span<const double> g) {
  if (f.size() != g.size()) throw ShapeError("vectors differ in dimension");
  if (f.empty()) throw ShapeError("empty vectors");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// One square root over the product of squared norms keeps exact cases exact.
inline double cosine_of(std::span<const double> f, std::span<const double> g) {
  return std::clamp(dot(f, g) / std::sqrt(dot(f, f) * dot(g, g)), -1.0, 1.0);
}

}  // namespace detail

/// 1 - cos(angle between f and g).
inline double cosine_distance(std::span<const double> f, std::span<const double> g) {
  detail::check_dims(f, g);
  const double nf = l2_norm(f);
  const double ng = l2_norm(g);
  if (!(nf > 0.0) || !(ng > 0.0)) throw DomainError("cosine_distance: zero vector");
  return 1.0 - detail::cosine_of(f, g);
}

inline constexpr double kCenteringEpsilon = 1e-12;

/// Cosine distance after subtracting the first profile's mean from both
/// vectors. Asymmetric: swapping the profiles swaps the centering mean.
inline double adjusted_cosine_distance(std::span<const double> f, std::span<const double> g,
                                       std::span<const double> mean_f) {
  detail::check_dims(f, g);
  detail::check_dims(f, mean_f);
  Vector cf(f.size()), cg(g.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    cf[i] = f[i] - mean_f[i];
    cg[i] = g[i] - mean_f[i];
  }
  const double nf = l2_norm(cf);
  const double ng = l2_norm(cg);
  if (nf < kCenteringEpsilon)
    throw DegenerateCenteringError(DegenerateCenteringError::Side::first,
                              "adjusted_cosine_distance: first vector equals the mean");
  if (ng < kCenteringEpsilon)
    throw DegenerateCenteringError(DegenerateCenteringError::Side::second,
                              "adjusted_cosine_distance: second vector equals the mean");
  return 1.0 - detail::cosine_of(cf, cg);
}

/// Row-wise baselines used by the metric comparison.
inline double baseline_distance(std::span<const double> f, std::span<const double> g,
                                DistanceMetric metric) {
  detail::check_dims(f, g);
  double acc = 0.0;
  switch (metric) {
    case DistanceMetric::cosine:
      return cosine_distance(f, g);
    case DistanceMetric::manhattan:
      for (std::size_t i = 0; i < f.size(); ++i) acc += std::abs(f[i] - g[i]);
      return acc;
    case DistanceMetric::euclidean:
      for (std::size_t i = 0; i < f.size(); ++i) acc += (f[i] - g[i]) * (f[i] - g[i]);
      return std::sqrt(acc);
    case DistanceMetric::chebyshev:
      for (std::size_t i = 0; i < f.size(); ++i) acc = std::max(acc, std::abs(f[i] - g[i]));
      return acc;
    case DistanceMetric::adjusted_cosine:
      break;
  }
  throw ParameterError("baseline_distance: adjusted cosine needs a profile mean");
}

inline double baseline_distance(std::span<const double> f, std::span<const double> g,
                                std::string_view metric) {
  return baseline_distance(f, g, parse_metric(metric));
}

struct DistanceVector {
  IdentityId from_identity;
  IdentityId to_identity;
  Vector values;
};

/// d_l = dist(F.row(l), G.row(l)). For the adjusted cosine, a row equal to
/// F's mean scores 0 and a G row equal to F's mean scores 1.
inline DistanceVector profile_distance_vector(const SignalProfile& F, const SignalProfile& G,
                                              DistanceMetric metric = DistanceMetric::adjusted_cosine) {
  if (F.length() != G.length() || F.dims() != G.dims() || F.length() == 0)
    throw ShapeError("profile_distance_vector: profiles differ in shape");
  DistanceVector d{F.identity, G.identity, Vector(F.length())};
  for (std::size_t l = 0; l < F.length(); ++l) {
    if (metric != DistanceMetric::adjusted_cosine) {
      d.values[l] = baseline_distance(F.rows[l], G.rows[l], metric);
      continue;
    }
    try {
      d.values[l] = adjusted_cosine_distance(F.rows[l], G.rows[l], F.mean_vector);
    } catch (const DegenerateCenteringError& e) {
      d.values[l] = e.side() == DegenerateCenteringError::Side::first ? 0.0 : 1.0;
    }
  }
  return d;
}

/// All N(N-1) directed distance vectors; the diagonal holds zero vectors.
struct DistanceMatrix {
  std::vector<IdentityId> identities;
  std::vector<std::vector<DistanceVector>> entries;

  std::size_t size() const { return identities.size(); }
  const DistanceVector& at(std::size_t i, std::size_t j) const { return entries.at(i).at(j); }
};

inline DistanceMatrix distance_matrix(std::span<const SignalProfile> profiles,
                                      DistanceMetric metric = DistanceMetric::adjusted_cosine) {
  if (profiles.size() < 2) throw ParameterError("distance_matrix: need at least 2 profiles");
  const std::size_t n = profiles.size();
  for (const auto& p : profiles)
    if (p.length() != profiles.front().length() || p.dims() != profiles.front().dims())
      throw ShapeError("distance_matrix: profiles differ in shape");
  DistanceMatrix D;
  D.entries.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    D.identities.push_back(profiles[i].identity);
    D.entries[i].resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        D.entries[i][j] = {profiles[i].identity, profiles[i].identity,
                           Vector(profiles[i].length(), 0.0)};
      } else {
        D.entries[i][j] = profile_distance_vector(profiles[i], profiles[j], metric);
      }
    }
  }
  return D;
}

}  // namespace scatterid
