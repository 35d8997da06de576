#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "scatterid/errors.hpp"

namespace scatterid {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend bool operator==(Point2, Point2) = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

inline Point2 rotate(Point2 p, double angle_rad) {
  const double c = std::cos(angle_rad);
  const double s = std::sin(angle_rad);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

struct Waypoint {
  double time_s = 0.0;
  Point2 position;
};

// Piecewise-linear path at (nearly) constant speed. Validated on construction.
class Trajectory {
 public:
  static constexpr double kSpeedTolerance = 0.01;

  Trajectory() = default;

  Trajectory(std::vector<Waypoint> waypoints, double speed_mps)
      : waypoints_(std::move(waypoints)), speed_mps_(speed_mps) {
    if (!(speed_mps_ > 0.0)) throw ConfigError("trajectory speed must be positive");
    if (waypoints_.empty()) throw ConfigError("trajectory needs at least one waypoint");
    for (std::size_t i = 1; i < waypoints_.size(); ++i) {
      const auto& a = waypoints_[i - 1];
      const auto& b = waypoints_[i];
      if (!(b.time_s > a.time_s))
        throw ConfigError("trajectory waypoint times must be strictly increasing");
      const double v = distance(a.position, b.position) / (b.time_s - a.time_s);
      if (std::abs(v - speed_mps_) > kSpeedTolerance * speed_mps_)
        throw ConfigError("trajectory segment " + std::to_string(i) +
                          " speed deviates from nominal by more than 1%");
    }
  }

  // Builds the timed path visiting `points` in order at constant speed.
  // Consecutive duplicate points are dropped.
  static Trajectory through(std::span<const Point2> points, double speed_mps,
                            double start_time_s = 0.0) {
    if (points.empty()) throw ConfigError("trajectory needs at least one point");
    std::vector<Waypoint> wps{{start_time_s, points.front()}};
    for (std::size_t i = 1; i < points.size(); ++i) {
      const double len = distance(wps.back().position, points[i]);
      if (len <= 0.0) continue;
      wps.push_back({wps.back().time_s + len / speed_mps, points[i]});
    }
    return Trajectory(std::move(wps), speed_mps);
  }

  const std::vector<Waypoint>& waypoints() const { return waypoints_; }
  double speed_mps() const { return speed_mps_; }
  double start_time() const { return waypoints_.front().time_s; }
  double end_time() const { return waypoints_.back().time_s; }

 private:
  std::vector<Waypoint> waypoints_;
  double speed_mps_ = 1.0;
};

namespace detail {

// Index of the segment [i, i+1] containing t (t already range-checked).
inline std::size_t segment_index(const std::vector<Waypoint>& wps, double t_s) {
  auto it = std::upper_bound(wps.begin(), wps.end(), t_s,
                             [](double t, const Waypoint& w) { return t < w.time_s; });
  std::size_t hi = static_cast<std::size_t>(it - wps.begin());
  if (hi >= wps.size()) hi = wps.size() - 1;
  return hi == 0 ? 0 : hi - 1;
}

// A single waypoint is a parked robot and is valid at every time.
inline void check_time(const Trajectory& traj, double t_s) {
  if (traj.waypoints().size() == 1) return;
  if (!(t_s >= traj.start_time() && t_s <= traj.end_time()))
    throw RangeError("time " + std::to_string(t_s) + " outside trajectory span [" +
                     std::to_string(traj.start_time()) + ", " +
                     std::to_string(traj.end_time()) + "]");
}

}  // namespace detail

inline Point2 position_at(const Trajectory& traj, double t_s) {
  detail::check_time(traj, t_s);
  const auto& wps = traj.waypoints();
  if (wps.size() == 1) return wps.front().position;
  const std::size_t i = detail::segment_index(wps, t_s);
  const auto& a = wps[i];
  const auto& b = wps[i + 1];
  if (t_s == a.time_s) return a.position;
  if (t_s == b.time_s) return b.position;
  const double u = (t_s - a.time_s) / (b.time_s - a.time_s);
  return a.position + u * (b.position - a.position);
}

// Direction of travel at t; the receiver's body frame is aligned with it.
// A stationary (single waypoint) trajectory faces +x.
inline double heading_at(const Trajectory& traj, double t_s) {
  detail::check_time(traj, t_s);
  const auto& wps = traj.waypoints();
  if (wps.size() == 1) return 0.0;
  const std::size_t i = detail::segment_index(wps, t_s);
  const Point2 d = wps[i + 1].position - wps[i].position;
  return std::atan2(d.y, d.x);
}

}  // namespace scatterid
