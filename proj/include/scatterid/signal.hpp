#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scatterid/errors.hpp"
#include "scatterid/scenario.hpp"
#include "scatterid/tag_code.hpp"

namespace scatterid {

using Vector = std::vector<double>;

/// Centered moving average; near the edges the window is truncated and the
/// mean taken over the samples that exist.
inline Vector moving_average(std::span<const double> samples, std::size_t window) {
  if (window == 0) throw ParameterError("moving_average: window must be at least 1");
  if (window > samples.size())
    throw ParameterError("moving_average: window longer than the signal");
  if (window == 1) return Vector(samples.begin(), samples.end());
  const std::size_t left = (window - 1) / 2;
  const std::size_t right = window / 2;
  const std::size_t n = samples.size();
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= left ? i - left : 0;
    const std::size_t hi = std::min(n - 1, i + right);
    double acc = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) acc += samples[j];
    out[i] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

/// Sliding correlation of the smoothed signal with a 0/1 sample-domain code:
/// c[n] = sum_m s[n + m] * code[m] for every full overlap n = 0..len-M.
/// Evaluated through prefix sums over the code's runs of ones.
inline Vector correlate(std::span<const double> smoothed, std::span<const std::uint8_t> code) {
  if (code.empty()) throw ParameterError("correlate: empty code");
  if (code.size() > smoothed.size()) throw ParameterError("correlate: code longer than signal");
  std::vector<std::pair<std::size_t, std::size_t>> runs;  // [begin, end) of ones
  for (std::size_t m = 0; m < code.size();) {
    if (!code[m]) {
      ++m;
      continue;
    }
    std::size_t e = m;
    while (e < code.size() && code[e]) ++e;
    runs.emplace_back(m, e);
    m = e;
  }
  Vector prefix(smoothed.size() + 1, 0.0);
  for (std::size_t i = 0; i < smoothed.size(); ++i) prefix[i + 1] = prefix[i] + smoothed[i];
  const std::size_t lags = smoothed.size() - code.size() + 1;
  Vector c(lags, 0.0);
  for (std::size_t n = 0; n < lags; ++n) {
    double acc = 0.0;
    for (const auto& [b, e] : runs) acc += prefix[n + e] - prefix[n + b];
    c[n] = acc;
  }
  return c;
}

/// Half-open sample range [t_start, t_end) of the backscatter segment.
struct SegmentBounds {
  std::size_t t_start = 0;
  std::size_t t_end = 0;
  friend bool operator==(const SegmentBounds&, const SegmentBounds&) = default;
};

struct SegmentationParams {
  std::size_t window = 9;
  // Required height of the peak above the median of the balanced (+1/-1)
  // correlation, in units of that correlation's median absolute deviation.
  // Pure noise tops out near 8; real segments sit above 18.
  double peak_z = 12.0;
};

namespace detail {

inline double median_of(Vector v) {
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace detail

inline SegmentBounds segment_backscatter(const ReceivedTrace& trace,
                                         const SegmentationParams& params = {}) {
  const std::size_t m = trace.segment_samples();
  if (m == 0 || trace.samples.size() < m)
    throw ParameterError("segment_backscatter: trace shorter than one full code");
  const Vector smoothed = moving_average(trace.samples, params.window);
  const BitVector code = expand_code(trace.tag_code, trace.samples_per_bit, trace.tag_count);
  const Vector c = correlate(smoothed, code);
  const auto peak_it = std::max_element(c.begin(), c.end());
  const auto start = static_cast<std::size_t>(peak_it - c.begin());

  // Confidence test on the balanced correlation 2c - window sum: the ambient
  // baseline and the slow trend from partially covered blocks cancel there.
  Vector prefix(smoothed.size() + 1, 0.0);
  for (std::size_t i = 0; i < smoothed.size(); ++i) prefix[i + 1] = prefix[i] + smoothed[i];
  Vector b(c.size());
  for (std::size_t n = 0; n < c.size(); ++n) b[n] = 2.0 * c[n] - (prefix[n + m] - prefix[n]);
  const double med = detail::median_of(b);
  Vector dev(b.size());
  for (std::size_t n = 0; n < b.size(); ++n) dev[n] = std::abs(b[n] - med);
  const double mad = detail::median_of(std::move(dev));
  const double height = b[start] - med;
  if (!(height > 0.0) || !(height > params.peak_z * mad))
    throw SegmentationError("segment_backscatter: no correlation peak for identity '" +
                            trace.identity + "'");
  return {start, start + m};
}

inline SegmentBounds segment_backscatter(const ReceivedTrace& trace, std::size_t window) {
  return segment_backscatter(trace, SegmentationParams{window});
}

/// Mean of reflecting samples minus mean of the others, clamped at zero.
inline double extract_reflection(std::span<const double> block,
                                 std::span<const std::uint8_t> reflect_mask) {
  if (block.size() != reflect_mask.size())
    throw MaskError("extract_reflection: mask and block lengths differ");
  double on = 0.0, off = 0.0;
  std::size_t n_on = 0, n_off = 0;
  for (std::size_t i = 0; i < block.size(); ++i) {
    if (reflect_mask[i]) {
      on += block[i];
      ++n_on;
    } else {
      off += block[i];
      ++n_off;
    }
  }
  if (n_on == 0 || n_off == 0)
    throw MaskError("extract_reflection: mask needs both reflecting and silent samples");
  return std::max(0.0, on / static_cast<double>(n_on) - off / static_cast<double>(n_off));
}

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Per-tag reflected powers (`raw`) and their unit-L2 direction (`normalized`).
struct MultipathSignature {
  Vector raw;
  Vector normalized;
};

inline Vector normalize_l2(std::span<const double> v) {
  const double n = l2_norm(v);
  if (!(n > 0.0)) throw DegenerateSignatureError("cannot normalize an all-zero signature");
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

inline MultipathSignature build_signature(const ReceivedTrace& trace, SegmentBounds bounds) {
  const std::size_t block = trace.block_samples();
  if (bounds.t_end != bounds.t_start + trace.segment_samples() ||
      bounds.t_end > trace.samples.size())
    throw ParameterError("build_signature: bounds do not fit the trace");
  const BitVector mask = expand_code(trace.tag_code, trace.samples_per_bit);
  MultipathSignature sig;
  sig.raw.reserve(trace.tag_count);
  const std::span<const double> all(trace.samples);
  for (std::size_t k = 0; k < trace.tag_count; ++k)
    sig.raw.push_back(extract_reflection(all.subspan(bounds.t_start + k * block, block), mask));
  if (std::all_of(sig.raw.begin(), sig.raw.end(), [](double p) { return p == 0.0; }))
    throw DegenerateSignatureError("build_signature: no tag reflection in trace of '" +
                                   trace.identity + "'");
  sig.normalized = normalize_l2(sig.raw);
  return sig;
}

/// Segment + extract; undecodable traces yield nothing and are skipped.
inline std::optional<MultipathSignature> process_trace(const ReceivedTrace& trace,
                                                       const SegmentationParams& params = {}) {
  try {
    return build_signature(trace, segment_backscatter(trace, params));
  } catch (const SegmentationError&) {
    return std::nullopt;
  } catch (const DegenerateSignatureError&) {
    return std::nullopt;
  }
}

/// L successive signatures of one identity (rows, oldest first) and their mean.
struct SignalProfile {
  IdentityId identity;
  std::vector<Vector> rows;
  Vector mean_vector;

  std::size_t length() const { return rows.size(); }
  std::size_t dims() const { return mean_vector.size(); }
};

inline Vector row_mean(std::span<const Vector> rows) {
  Vector mean(rows.front().size(), 0.0);
  for (const auto& r : rows) {
    if (r.size() != mean.size()) throw ShapeError("profile rows differ in length");
    for (std::size_t k = 0; k < r.size(); ++k) mean[k] += r[k];
  }
  for (double& x : mean) x /= static_cast<double>(rows.size());
  return mean;
}

/// Profile from the L most recent signatures of `stream`.
inline SignalProfile build_profile(const IdentityId& identity, std::span<const Vector> stream,
                                   std::size_t L) {
  if (L == 0) throw ParameterError("build_profile: L must be at least 1");
  if (stream.size() < L)
    throw InsufficientDataError("build_profile: '" + identity + "' has " +
                                std::to_string(stream.size()) + " signatures, needs " +
                                std::to_string(L));
  SignalProfile p;
  p.identity = identity;
  const auto recent = stream.subspan(stream.size() - L);
  p.rows.assign(recent.begin(), recent.end());
  p.mean_vector = row_mean(p.rows);
  return p;
}

/// Streaming profile assembly for one identity. Keeps the last L successful
/// signatures; it is ready only while all of them fall inside the most
/// recent 2L update periods, so a long run of failures resets it.
class ProfileWindow {
 public:
  ProfileWindow(IdentityId identity, std::size_t L) : identity_(std::move(identity)), L_(L) {
    if (L_ == 0) throw ParameterError("ProfileWindow: L must be at least 1");
  }

  void observe(std::size_t period, std::optional<Vector> row) {
    current_ = period;
    if (row) {
      entries_.push_back({period, std::move(*row)});
      if (entries_.size() > L_) entries_.pop_front();
    }
    while (!entries_.empty() && entries_.front().period + 2 * L_ <= current_) entries_.pop_front();
  }

  bool ready() const { return entries_.size() == L_; }

  SignalProfile profile() const {
    if (!ready())
      throw InsufficientDataError("ProfileWindow: '" + identity_ + "' is not ready");
    SignalProfile p;
    p.identity = identity_;
    for (const auto& e : entries_) p.rows.push_back(e.row);
    p.mean_vector = row_mean(p.rows);
    return p;
  }

 private:
  struct Entry {
    std::size_t period;
    Vector row;
  };
  IdentityId identity_;
  std::size_t L_;
  std::size_t current_ = 0;
  std::deque<Entry> entries_;
};

}  // namespace scatterid
