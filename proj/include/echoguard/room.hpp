#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "echoguard/audio.hpp"
#include "echoguard/errors.hpp"

namespace echoguard {

inline constexpr double kSpeedOfSound = 343.0;   // m/s
inline constexpr double kDistanceFloor = 0.1;    // m, avoids the 1/d singularity
inline constexpr double kTailEnergyTrim = 1e-6;  // fraction of total energy
inline constexpr int kDefaultMaxOrder = 30;

// Rectangular-room acoustic configuration: the ten-gene vector
// (dimensions, mic position, source position, surface absorption).
struct RoomConfig {
  double length_m = 0.0;
  double width_m = 0.0;
  double height_m = 0.0;
  std::array<double, 3> mic_pos{0.0, 0.0, 0.0};
  std::array<double, 3> src_pos{0.0, 0.0, 0.0};
  double absorption = 0.5;
};

// Finite tap sequence realizing the room's response to an impulse.
struct ImpulseResponse {
  std::vector<double> taps;
  int sample_rate = kDefaultSampleRate;
};

// One virtual source of the image-source expansion.
struct ImageSource {
  double distance_m = 0.0;  // image-to-mic distance
  int reflections = 0;      // number of wall bounces on the path
  double azimuth = 0.0;     // horizontal arrival angle at the mic, radians
};

inline std::vector<std::string> validate_room(const RoomConfig& c) {
  std::vector<std::string> violations;
  auto check_dim = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      violations.push_back(std::string(name) + " must be positive");
  };
  check_dim(c.length_m, "length_m");
  check_dim(c.width_m, "width_m");
  check_dim(c.height_m, "height_m");

  auto check_pos = [&](const std::array<double, 3>& p, const char* who) {
    const double dims[3] = {c.length_m, c.width_m, c.height_m};
    for (int i = 0; i < 3; ++i) {
      if (!std::isfinite(p[i]) || p[i] <= 0.0 || p[i] >= dims[i]) {
        violations.push_back(std::string(who) + " outside room");
        return;
      }
    }
  };
  check_pos(c.mic_pos, "mic");
  check_pos(c.src_pos, "src");

  if (!(c.absorption >= 0.0 && c.absorption <= 1.0))
    violations.push_back("absorption outside [0, 1]");
  return violations;
}

inline double direct_path_distance(const RoomConfig& c) {
  const double dx = c.src_pos[0] - c.mic_pos[0];
  const double dy = c.src_pos[1] - c.mic_pos[1];
  const double dz = c.src_pos[2] - c.mic_pos[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Image-source enumeration for the rectangular box, up to `max_order` wall
// reflections. Mirrors across each wall pair: image coordinate
// (1-2q)*src + 2m*L with q in {0,1}, m integer; the per-axis reflection
// count is |m-q| + |m|.
inline std::vector<ImageSource> enumerate_images(const RoomConfig& c, int max_order) {
  if (max_order < 0) throw Error(ErrorKind::invalid_argument, "max_order must be >= 0");
  const double dims[3] = {c.length_m, c.width_m, c.height_m};
  const int half = max_order / 2 + 1;

  std::vector<ImageSource> images;
  std::array<double, 3> img{};
  for (int mx = -half; mx <= half; ++mx) {
    for (int qx = 0; qx <= 1; ++qx) {
      const int nx = std::abs(mx - qx) + std::abs(mx);
      if (nx > max_order) continue;
      img[0] = (1 - 2 * qx) * c.src_pos[0] + 2.0 * mx * dims[0];
      for (int my = -half; my <= half; ++my) {
        for (int qy = 0; qy <= 1; ++qy) {
          const int ny = std::abs(my - qy) + std::abs(my);
          if (nx + ny > max_order) continue;
          img[1] = (1 - 2 * qy) * c.src_pos[1] + 2.0 * my * dims[1];
          for (int mz = -half; mz <= half; ++mz) {
            for (int qz = 0; qz <= 1; ++qz) {
              const int nz = std::abs(mz - qz) + std::abs(mz);
              if (nx + ny + nz > max_order) continue;
              img[2] = (1 - 2 * qz) * c.src_pos[2] + 2.0 * mz * dims[2];
              const double dx = img[0] - c.mic_pos[0];
              const double dy = img[1] - c.mic_pos[1];
              const double dz = img[2] - c.mic_pos[2];
              images.push_back(ImageSource{std::sqrt(dx * dx + dy * dy + dz * dz),
                                           nx + ny + nz, std::atan2(dy, dx)});
            }
          }
        }
      }
    }
  }
  return images;
}

namespace detail {

// Amplitude per image: (1-absorption)^(n/2) / max(d, floor), placed at delay
// d/c with linear interpolation across the two adjacent samples.
inline std::vector<double> render_taps(const std::vector<ImageSource>& images,
                                       const std::vector<double>& gains, double absorption,
                                       int sample_rate) {
  int max_reflections = 0;
  double max_delay = 0.0;
  for (const auto& im : images) {
    max_reflections = std::max(max_reflections, im.reflections);
    max_delay = std::max(max_delay, im.distance_m / kSpeedOfSound);
  }

  std::vector<double> refl_amp(static_cast<std::size_t>(max_reflections) + 1);
  for (int n = 0; n <= max_reflections; ++n)
    refl_amp[n] = std::pow(1.0 - absorption, n / 2.0);

  std::vector<double> taps(static_cast<std::size_t>(std::ceil(max_delay * sample_rate)) + 2,
                           0.0);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& im = images[i];
    const double amp =
        refl_amp[im.reflections] / std::max(im.distance_m, kDistanceFloor) * gains[i];
    if (amp == 0.0) continue;
    const double delay = im.distance_m / kSpeedOfSound * sample_rate;
    const auto idx = static_cast<std::size_t>(delay);
    const double frac = delay - static_cast<double>(idx);
    taps[idx] += amp * (1.0 - frac);
    taps[idx + 1] += amp * frac;
  }
  return taps;
}

inline std::size_t trimmed_length(const std::vector<double>& taps) {
  double total = 0.0;
  for (double t : taps) total += t * t;
  if (total <= 0.0) return taps.size();
  const double threshold = kTailEnergyTrim * total;
  double suffix = 0.0;
  std::size_t keep = taps.size();
  for (std::size_t i = taps.size(); i-- > 0;) {
    suffix += taps[i] * taps[i];
    if (suffix >= threshold) {
      keep = i + 1;
      break;
    }
  }
  return std::max<std::size_t>(keep, 1);
}

inline void require_valid(const RoomConfig& c) {
  auto violations = validate_room(c);
  if (!violations.empty()) {
    std::string msg = "invalid room:";
    for (const auto& v : violations) msg += " " + v + ";";
    throw Error(ErrorKind::invalid_config, msg);
  }
}

}  // namespace detail

// Omnidirectional room impulse response via the image-source method.
inline ImpulseResponse generate_rir(const RoomConfig& config, int sample_rate,
                                    int max_order = kDefaultMaxOrder) {
  detail::require_valid(config);
  if (sample_rate <= 0) throw Error(ErrorKind::invalid_argument, "sample_rate must be > 0");
  const auto images = enumerate_images(config, max_order);
  const std::vector<double> unity(images.size(), 1.0);
  auto taps = detail::render_taps(images, unity, config.absorption, sample_rate);
  taps.resize(detail::trimmed_length(taps));
  return ImpulseResponse{std::move(taps), sample_rate};
}

// Per-angle impulse responses for the simulated rotating microphone.
struct DirectionalRirSet {
  std::vector<double> angles;  // azimuths 2*pi*k/N
  std::vector<ImpulseResponse> irs;
  RoomConfig room;

  int sample_rate() const { return irs.empty() ? 0 : irs.front().sample_rate; }
  std::size_t max_taps() const {
    std::size_t m = 0;
    for (const auto& ir : irs) m = std::max(m, ir.taps.size());
    return m;
  }
};

inline double cardioid_gain(double arrival_azimuth, double mic_azimuth) {
  return 0.5 * (1.0 + std::cos(arrival_azimuth - mic_azimuth));
}

// Cardioid microphones at azimuths 2*pi*k/n_mics; each image tap is scaled by
// the cardioid gain at its horizontal arrival angle. All IRs are padded to a
// common length so they can be blended sample by sample.
inline DirectionalRirSet generate_directional_set(const RoomConfig& config, int n_mics,
                                                  int sample_rate,
                                                  int max_order = kDefaultMaxOrder) {
  if (n_mics < 1) throw Error(ErrorKind::invalid_argument, "n_mics must be >= 1");
  detail::require_valid(config);
  if (sample_rate <= 0) throw Error(ErrorKind::invalid_argument, "sample_rate must be > 0");

  const auto images = enumerate_images(config, max_order);
  DirectionalRirSet set;
  set.room = config;
  set.angles.resize(n_mics);
  set.irs.reserve(n_mics);

  const double two_pi = 6.283185307179586476925286766559;
  std::vector<double> gains(images.size());
  std::size_t longest = 0;
  for (int k = 0; k < n_mics; ++k) {
    const double theta = two_pi * k / n_mics;
    set.angles[k] = theta;
    for (std::size_t i = 0; i < images.size(); ++i)
      gains[i] = cardioid_gain(images[i].azimuth, theta);
    auto taps = detail::render_taps(images, gains, config.absorption, sample_rate);
    taps.resize(detail::trimmed_length(taps));
    longest = std::max(longest, taps.size());
    set.irs.push_back(ImpulseResponse{std::move(taps), sample_rate});
  }
  for (auto& ir : set.irs) ir.taps.resize(longest, 0.0);
  return set;
}

// Default room: a large hall with the mic well separated from the source.
inline RoomConfig default_room() {
  RoomConfig c;
  c.length_m = 68.55;
  c.width_m = 58.89;
  c.height_m = 20.73;
  c.mic_pos = {24.87, 23.59, 1.75};
  c.src_pos = {36.11, 0.97, 1.00};
  c.absorption = 0.5;
  return c;
}

}  // namespace echoguard
