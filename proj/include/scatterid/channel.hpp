#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "scatterid/errors.hpp"
#include "scatterid/geometry.hpp"

namespace scatterid {

/// Free-space backscatter link parameters. The tag's own response (its gain,
/// reflection coefficient and modulation loss) is lumped into `tag_transfer`.
struct ChannelParams {
  double wavelength_m = 0.125;  // 2.4 GHz ISM band
  double tx_gain = 1.0;
  double rx_gain = 1.0;
  double tag_gain = 1.0;
  double reflection_coeff = 0.5;
  double tag_transfer = 0.05;

  void validate() const {
    if (!(wavelength_m > 0.0 && tx_gain > 0.0 && rx_gain > 0.0 && tag_gain > 0.0))
      throw ConfigError("channel wavelength and gains must be strictly positive");
    if (!(reflection_coeff > 0.0 && reflection_coeff <= 1.0))
      throw ConfigError("reflection coefficient must lie in (0, 1]");
    // Zero is allowed: it models a tag that never reflects.
    if (!(tag_transfer >= 0.0)) throw ConfigError("tag transfer must be nonnegative");
  }
};

/// Power reflected by one tag toward the receiver:
///   P_t G_t / (4 pi d_t^2) * lambda^2 G_r / (16 pi^2 d_r^2) * T
inline double reflected_power(const ChannelParams& ch, double tx_power_w, double d_t_m,
                              double d_r_m) {
  if (!(d_t_m > 0.0) || !(d_r_m > 0.0))
    throw DomainError("reflected_power: distances must be strictly positive (degenerate geometry)");
  if (!(tx_power_w > 0.0)) throw DomainError("reflected_power: transmit power must be positive");
  constexpr double pi = std::numbers::pi;
  const double incident = tx_power_w * ch.tx_gain / (4.0 * pi * d_t_m * d_t_m);
  const double back = ch.wavelength_m * ch.wavelength_m * ch.rx_gain /
                      (16.0 * pi * pi * d_r_m * d_r_m);
  return incident * back * ch.tag_transfer;
}

/// Tag positions in the receiver body frame (x forward).
struct TagLayout {
  static constexpr double kRadiusTolerance = 1e-3;

  std::vector<Point2> tag_positions;
  double ring_radius_m = 0.12;

  std::size_t count() const { return tag_positions.size(); }

  /// K tags evenly spaced on a ring; the first sits at `phase_rad`.
  static TagLayout ring(std::size_t k, double radius_m, double phase_rad = std::numbers::pi / 4) {
    TagLayout layout;
    layout.ring_radius_m = radius_m;
    for (std::size_t i = 0; i < k; ++i) {
      const double a = phase_rad + 2.0 * std::numbers::pi * static_cast<double>(i) /
                                       static_cast<double>(k);
      layout.tag_positions.push_back({radius_m * std::cos(a), radius_m * std::sin(a)});
    }
    layout.validate();
    return layout;
  }

  void validate() const {
    if (tag_positions.size() < 2) throw ConfigError("tag layout needs at least 2 tags");
    if (!(ring_radius_m > 0.0)) throw ConfigError("tag ring radius must be positive");
    for (const auto& p : tag_positions)
      if (std::abs(norm(p) - ring_radius_m) > kRadiusTolerance)
        throw ConfigError("tag position off the ring by more than 1 mm");
  }
};

}  // namespace scatterid
