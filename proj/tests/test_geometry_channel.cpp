#include <cmath>
#include <random>

#include "catch_amalgamated.hpp"
#include "scatterid/channel.hpp"
#include "scatterid/geometry.hpp"

using namespace scatterid;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("reflected power matches an independently computed fixture") {
  ChannelParams ch;
  ch.tag_transfer = 1.0;
  // Evaluated at 40 digits with mpmath, not with this code.
  constexpr double expected = 0.000136699822460596250679957295263;
  CHECK_THAT(reflected_power(ch, 1.0, 2.0, 0.12), WithinRel(expected, 1e-14));
}

TEST_CASE("reflected power scales with power and inverse-square distance") {
  const ChannelParams ch;
  const double base = reflected_power(ch, 0.1, 1.7, 0.12);
  CHECK_THAT(reflected_power(ch, 0.2, 1.7, 0.12), WithinRel(2.0 * base, 1e-15));
  CHECK_THAT(reflected_power(ch, 0.1, 3.4, 0.12), WithinRel(base / 4.0, 1e-15));
  CHECK(reflected_power(ch, 0.1, 1.71, 0.12) < base);
  CHECK(reflected_power(ch, 0.1, 1.7, 0.121) < base);
}

TEST_CASE("reflected power rejects degenerate geometry") {
  const ChannelParams ch;
  CHECK_THROWS_AS(reflected_power(ch, 0.1, 0.0, 0.12), DomainError);
  CHECK_THROWS_AS(reflected_power(ch, 0.1, 1.0, -0.1), DomainError);
  CHECK_THROWS_AS(reflected_power(ch, 0.0, 1.0, 0.12), DomainError);
}

TEST_CASE("channel parameters are validated") {
  ChannelParams ch;
  CHECK_NOTHROW(ch.validate());
  ch.reflection_coeff = 1.5;
  CHECK_THROWS_AS(ch.validate(), ConfigError);
  ch = {};
  ch.wavelength_m = 0.0;
  CHECK_THROWS_AS(ch.validate(), ConfigError);
  ch = {};
  ch.tag_transfer = 0.0;  // a silent tag is allowed
  CHECK_NOTHROW(ch.validate());
}

TEST_CASE("tag ring keeps every tag at the ring radius") {
  for (std::size_t k : {2u, 3u, 4u, 7u}) {
    const auto layout = TagLayout::ring(k, 0.12);
    REQUIRE(layout.count() == k);
    for (const auto& p : layout.tag_positions) CHECK(std::abs(norm(p) - 0.12) <= 1e-3);
  }
  CHECK_THROWS_AS(TagLayout::ring(1, 0.12), ConfigError);
  TagLayout off{{{0.12, 0.0}, {0.0, 0.125}}, 0.12};
  CHECK_THROWS_AS(off.validate(), ConfigError);
}

TEST_CASE("trajectory interpolation") {
  const std::vector<Point2> pts{{0.0, 0.0}, {2.0, 0.0}, {2.0, 1.0}};
  const auto tr = Trajectory::through(pts, 0.5, 1.0);
  REQUIRE(tr.waypoints().size() == 3);
  CHECK(tr.start_time() == 1.0);
  CHECK(tr.end_time() == 7.0);

  SECTION("waypoints and midpoints") {
    CHECK(position_at(tr, 1.0) == Point2{0.0, 0.0});
    CHECK(position_at(tr, 5.0) == Point2{2.0, 0.0});
    const Point2 mid = position_at(tr, 3.0);
    CHECK_THAT(mid.x, WithinAbs(1.0, 1e-15));
    CHECK_THAT(mid.y, WithinAbs(0.0, 1e-15));
  }

  SECTION("random times against an independent re-interpolation") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ut(1.0, 7.0);
    for (int i = 0; i < 1000; ++i) {
      const double t = ut(rng);
      // Arc length walked so far, then locate it on the polyline by hand.
      double s = (t - 1.0) * 0.5;
      Point2 expect;
      if (s <= 2.0) {
        expect = {s, 0.0};
      } else {
        expect = {2.0, s - 2.0};
      }
      const Point2 got = position_at(tr, t);
      CHECK_THAT(got.x, WithinAbs(expect.x, 1e-12));
      CHECK_THAT(got.y, WithinAbs(expect.y, 1e-12));
    }
  }

  SECTION("heading follows the current segment") {
    CHECK_THAT(heading_at(tr, 2.0), WithinAbs(0.0, 1e-15));
    CHECK_THAT(heading_at(tr, 6.0), WithinAbs(std::numbers::pi / 2, 1e-15));
  }

  SECTION("outside the span") {
    CHECK_THROWS_AS(position_at(tr, 0.5), RangeError);
    CHECK_THROWS_AS(position_at(tr, 7.5), RangeError);
  }
}

TEST_CASE("a single waypoint is a parked robot") {
  const Trajectory parked({{0.0, {1.0, 2.0}}}, 0.2);
  CHECK(position_at(parked, 0.0) == Point2{1.0, 2.0});
  CHECK(position_at(parked, 100.0) == Point2{1.0, 2.0});
  CHECK(heading_at(parked, 5.0) == 0.0);
}

TEST_CASE("trajectory validation") {
  CHECK_THROWS_AS(Trajectory({{0.0, {0, 0}}, {0.0, {1, 0}}}, 1.0), ConfigError);
  CHECK_THROWS_AS(Trajectory({{1.0, {0, 0}}, {0.5, {1, 0}}}, 1.0), ConfigError);
  // 1 m in 1 s is fine at 1 m/s, within 1 %, but not at 0.5 m/s.
  CHECK_NOTHROW(Trajectory({{0.0, {0, 0}}, {1.0, {1.005, 0}}}, 1.0));
  CHECK_THROWS_AS(Trajectory({{0.0, {0, 0}}, {1.0, {1.0, 0}}}, 0.5), ConfigError);
  CHECK_THROWS_AS(Trajectory({{0.0, {0, 0}}}, 0.0), ConfigError);
}
