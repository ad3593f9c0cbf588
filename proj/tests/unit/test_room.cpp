#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "../support.hpp"

using namespace echoguard;
using Catch::Approx;

namespace {

RoomConfig small_room() {
  RoomConfig c;
  c.length_m = 5.0;
  c.width_m = 4.0;
  c.height_m = 3.0;
  c.mic_pos = {1.0, 1.5, 1.2};
  c.src_pos = {3.5, 2.3, 0.8};
  c.absorption = 0.4;
  return c;
}

double tap_energy(const ImpulseResponse& ir) {
  double e = 0.0;
  for (double t : ir.taps) e += t * t;
  return e;
}

double dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

RoomConfig random_room(SplitMix64& rng) {
  RoomConfig c;
  c.length_m = 3.0 + rng.next_unit() * 17.0;
  c.width_m = 3.0 + rng.next_unit() * 17.0;
  c.height_m = 2.5 + rng.next_unit() * 7.5;
  auto inside = [&](double dim) { return 0.3 + rng.next_unit() * (dim - 0.6); };
  c.mic_pos = {inside(c.length_m), inside(c.width_m), inside(c.height_m)};
  c.src_pos = {inside(c.length_m), inside(c.width_m), inside(c.height_m)};
  c.absorption = 0.2 + rng.next_unit() * 0.7;
  return c;
}

}  // namespace

TEST_CASE("room validation") {
  SECTION("the default room is valid") {
    REQUIRE(validate_room(default_room()).empty());
    RoomConfig c = default_room();
    REQUIRE(c.length_m == 68.55);
    REQUIRE(c.mic_pos == std::array<double, 3>{24.87, 23.59, 1.75});
    REQUIRE(c.src_pos == std::array<double, 3>{36.11, 0.97, 1.00});
    REQUIRE(c.absorption == 0.5);
  }

  SECTION("mic outside the box is flagged") {
    RoomConfig c = small_room();
    c.mic_pos[0] = -1.0;
    const auto v = validate_room(c);
    REQUIRE(v.size() == 1);
    REQUIRE(v[0].find("mic") != std::string::npos);
  }

  SECTION("absorption above one is flagged") {
    RoomConfig c = small_room();
    c.absorption = 1.5;
    const auto v = validate_room(c);
    REQUIRE(v.size() == 1);
    REQUIRE(v[0].find("absorption") != std::string::npos);
  }

  SECTION("positions on a wall count as outside") {
    RoomConfig c = small_room();
    c.src_pos[2] = 0.0;
    REQUIRE_FALSE(validate_room(c).empty());
    c = small_room();
    c.mic_pos[1] = c.width_m;
    REQUIRE_FALSE(validate_room(c).empty());
  }

  SECTION("multiple defects are all reported") {
    RoomConfig c;
    c.length_m = -2.0;
    c.absorption = 2.0;
    REQUIRE(validate_room(c).size() >= 3);
  }

  SECTION("generate_rir refuses invalid configs") {
    RoomConfig c = small_room();
    c.absorption = -0.1;
    REQUIRE_THROWS_AS(generate_rir(c, 16000), Error);
  }
}

TEST_CASE("direct path rendering") {
  SECTION("order zero places one arrival at the geometric delay") {
    SplitMix64 rng(101);
    for (int trial = 0; trial < 20; ++trial) {
      const RoomConfig c = random_room(rng);
      const ImpulseResponse ir = generate_rir(c, 16000, 0);
      const double d = direct_path_distance(c);
      const double delay = d / kSpeedOfSound * 16000.0;

      std::size_t first = ir.taps.size();
      for (std::size_t i = 0; i < ir.taps.size(); ++i)
        if (ir.taps[i] != 0.0) { first = i; break; }
      REQUIRE(first < ir.taps.size());
      REQUIRE(std::abs(static_cast<double>(first) - delay) <= 1.0);

      const double total = std::accumulate(ir.taps.begin(), ir.taps.end(), 0.0);
      REQUIRE(total == Approx(1.0 / std::max(d, kDistanceFloor)).margin(1e-9));
    }
  }

  SECTION("near-coincident source is capped by the distance floor") {
    RoomConfig c = small_room();
    c.src_pos = {1.0, 1.5, 1.25};  // 5 cm above the mic
    const ImpulseResponse ir = generate_rir(c, 16000, 0);
    const double total = std::accumulate(ir.taps.begin(), ir.taps.end(), 0.0);
    REQUIRE(total == Approx(1.0 / kDistanceFloor).margin(1e-9));
  }

  SECTION("full absorption collapses the response to the direct path") {
    RoomConfig c = small_room();
    c.absorption = 1.0;
    const ImpulseResponse walls = generate_rir(c, 16000, 12);
    RoomConfig direct_only = c;
    const ImpulseResponse direct = generate_rir(direct_only, 16000, 0);
    REQUIRE(walls.taps == direct.taps);
  }
}

TEST_CASE("first-order image geometry") {
  const RoomConfig c = small_room();
  const auto images = enumerate_images(c, 1);

  SECTION("exactly seven arrivals: direct plus one per wall") {
    REQUIRE(images.size() == 7);
    int direct_count = 0;
    for (const auto& im : images) {
      REQUIRE(im.reflections <= 1);
      if (im.reflections == 0) ++direct_count;
    }
    REQUIRE(direct_count == 1);
  }

  SECTION("distances match mirrored source positions") {
    const std::array<double, 3> s = c.src_pos;
    const std::vector<std::array<double, 3>> mirrors = {
        s,
        {-s[0], s[1], s[2]},
        {2.0 * c.length_m - s[0], s[1], s[2]},
        {s[0], -s[1], s[2]},
        {s[0], 2.0 * c.width_m - s[1], s[2]},
        {s[0], s[1], -s[2]},
        {s[0], s[1], 2.0 * c.height_m - s[2]},
    };
    std::vector<double> expected;
    for (const auto& m : mirrors) expected.push_back(dist(m, c.mic_pos));
    std::vector<double> got;
    for (const auto& im : images) got.push_back(im.distance_m);
    std::sort(expected.begin(), expected.end());
    std::sort(got.begin(), got.end());
    for (std::size_t i = 0; i < 7; ++i) REQUIRE(got[i] == Approx(expected[i]).margin(1e-12));
  }

  SECTION("rendered taps carry mass at each arrival delay") {
    const ImpulseResponse ir = generate_rir(c, 16000, 1);
    for (const auto& im : images) {
      const auto idx = static_cast<std::size_t>(im.distance_m / kSpeedOfSound * 16000.0);
      REQUIRE(idx + 1 < ir.taps.size());
      REQUIRE(ir.taps[idx] + ir.taps[idx + 1] > 0.0);
    }
  }

  SECTION("negative max_order is rejected") {
    REQUIRE_THROWS_AS(enumerate_images(c, -1), Error);
  }
}

TEST_CASE("reverberant energy falls with absorption") {
  const RoomConfig base = small_room();
  double prev = std::numeric_limits<double>::infinity();
  for (int step = 1; step <= 9; ++step) {
    RoomConfig c = base;
    c.absorption = 0.1 * step;
    const double e = tap_energy(generate_rir(c, 16000, 8));
    REQUIRE(e < prev);
    prev = e;
  }
}

TEST_CASE("cardioid gains") {
  SECTION("front is unity, rear is null") {
    REQUIRE(cardioid_gain(0.3, 0.3) == Approx(1.0));
    REQUIRE(cardioid_gain(1.0 + 3.14159265358979323846, 1.0) == Approx(0.0).margin(1e-12));
    REQUIRE(cardioid_gain(0.5 * 3.14159265358979323846, 0.0) == Approx(0.5));
  }

  SECTION("four mics at quarter turns sum to two everywhere") {
    SplitMix64 rng(7);
    for (int i = 0; i < 100; ++i) {
      const double phi = rng.next_unit() * testsup::kTau;
      double sum = 0.0;
      for (int k = 0; k < 4; ++k) sum += cardioid_gain(phi, testsup::kTau * k / 4.0);
      REQUIRE(sum == Approx(2.0).margin(1e-12));
    }
  }
}

TEST_CASE("directional impulse sets") {
  const RoomConfig c = small_room();

  SECTION("angles are evenly spaced and IRs share a length") {
    const auto set = generate_directional_set(c, 4, 16000, 3);
    REQUIRE(set.angles.size() == 4);
    REQUIRE(set.irs.size() == 4);
    for (int k = 0; k < 4; ++k) REQUIRE(set.angles[k] == Approx(testsup::kTau * k / 4.0));
    for (const auto& ir : set.irs) REQUIRE(ir.taps.size() == set.max_taps());
    REQUIRE(set.sample_rate() == 16000);
  }

  SECTION("per-tap sum over four mics is twice the omni response") {
    const auto set = generate_directional_set(c, 4, 16000, 3);
    const ImpulseResponse omni = generate_rir(c, 16000, 3);

    // Each IR is tail-trimmed independently before padding, so the identity
    // is exact only on the prefix every response still covers.
    std::size_t untrimmed = omni.taps.size();
    for (const auto& ir : set.irs) {
      std::size_t last = ir.taps.size();
      while (last > 0 && ir.taps[last - 1] == 0.0) --last;
      untrimmed = std::min(untrimmed, last);
    }
    const double direct_delay = direct_path_distance(c) / kSpeedOfSound * 16000.0;
    REQUIRE(untrimmed > static_cast<std::size_t>(direct_delay) + 32);
    for (std::size_t i = 0; i < untrimmed; ++i) {
      double sum = 0.0;
      for (const auto& ir : set.irs) sum += ir.taps[i];
      REQUIRE(sum == Approx(2.0 * omni.taps[i]).margin(1e-12));
    }

    // Past the first trim point the mismatch stays inside the trim guarantee:
    // each removed tail holds at most 1e-6 of its response's energy.
    auto energy = [](const std::vector<double>& taps) {
      double e = 0.0;
      for (double t : taps) e += t * t;
      return e;
    };
    double budget = 2.0 * std::sqrt(1e-6 * energy(omni.taps));
    for (const auto& ir : set.irs) budget += std::sqrt(1e-6 * energy(ir.taps));
    double mismatch = 0.0;
    for (std::size_t i = 0; i < std::max(omni.taps.size(), set.max_taps()); ++i) {
      double sum = 0.0;
      if (i < set.max_taps())
        for (const auto& ir : set.irs) sum += ir.taps[i];
      const double o = i < omni.taps.size() ? omni.taps[i] : 0.0;
      mismatch += (sum - 2.0 * o) * (sum - 2.0 * o);
    }
    REQUIRE(std::sqrt(mismatch) <= budget);
  }

  SECTION("a mic aimed straight at the source hears the direct path at full gain") {
    RoomConfig aligned = small_room();
    aligned.mic_pos = {1.0, 2.0, 1.5};
    aligned.src_pos = {3.0, 2.0, 1.5};  // arrival azimuth 0 at the mic
    aligned.absorption = 1.0;
    const auto set = generate_directional_set(aligned, 1, 16000, 0);
    const ImpulseResponse omni = generate_rir(aligned, 16000, 0);
    REQUIRE(set.irs[0].taps == omni.taps);
  }

  SECTION("a mic facing away from the source is silent under full absorption") {
    RoomConfig apart = small_room();
    apart.mic_pos = {3.0, 2.0, 1.5};
    apart.src_pos = {1.0, 2.0, 1.5};  // arrival azimuth pi, mic 0 faces azimuth 0
    apart.absorption = 1.0;
    const auto set = generate_directional_set(apart, 1, 16000, 0);
    for (double t : set.irs[0].taps) REQUIRE(t == Approx(0.0).margin(1e-15));
  }

  SECTION("generation is deterministic") {
    const auto a = generate_directional_set(c, 3, 16000, 4);
    const auto b = generate_directional_set(c, 3, 16000, 4);
    for (int k = 0; k < 3; ++k) REQUIRE(a.irs[k].taps == b.irs[k].taps);
    REQUIRE(generate_rir(c, 16000, 4).taps == generate_rir(c, 16000, 4).taps);
  }

  SECTION("argument validation") {
    REQUIRE_THROWS_AS(generate_directional_set(c, 0, 16000, 2), Error);
    REQUIRE_THROWS_AS(generate_directional_set(c, 2, 0, 2), Error);
  }
}
