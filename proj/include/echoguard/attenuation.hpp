#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "echoguard/audio.hpp"
#include "echoguard/errors.hpp"
#include "echoguard/rng.hpp"

namespace echoguard {

enum class FrameSelection {
  random,      // i.i.d. Bernoulli(select_prob) per frame, seeded
  energy_top,  // highest-RMS fraction select_prob of frames (whole-buffer only)
};

// Transient dips: selected frames are scaled by a Gaussian notch
// a(t) = 1 - (1-alpha) * exp(-t^2) with t running over [-2, 2].
struct AttenuationConfig {
  double frame_s = 0.020;
  double select_prob = 0.30;
  double alpha = 0.70;
  std::uint64_t seed = 0;
  FrameSelection selection = FrameSelection::random;
};

inline std::size_t attenuation_frame_length(const AttenuationConfig& cfg, int sample_rate) {
  return static_cast<std::size_t>(std::llround(cfg.frame_s * sample_rate));
}

inline void validate_attenuation(const AttenuationConfig& cfg, int sample_rate) {
  if (!(cfg.frame_s > 0.0) || !std::isfinite(cfg.frame_s))
    throw Error(ErrorKind::invalid_config, "frame_s must be positive and finite");
  if (!(cfg.select_prob >= 0.0 && cfg.select_prob <= 1.0))
    throw Error(ErrorKind::invalid_config, "select_prob must lie in [0, 1]");
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0))
    throw Error(ErrorKind::invalid_config, "alpha must lie in (0, 1]");
  if (sample_rate > 0 && attenuation_frame_length(cfg, sample_rate) < 2)
    throw Error(ErrorKind::invalid_config, "frame_s too short: frames need at least 2 samples");
}

// Scale factors for one nominal frame. A trailing partial frame uses a prefix
// of this curve, which keeps batch and streaming output identical.
inline std::vector<double> attenuation_curve(std::size_t frame_len, double alpha) {
  std::vector<double> curve(frame_len, 1.0);
  if (frame_len < 2) return curve;
  for (std::size_t k = 0; k < frame_len; ++k) {
    const double t = -2.0 + 4.0 * static_cast<double>(k) / static_cast<double>(frame_len - 1);
    curve[k] = 1.0 - (1.0 - alpha) * std::exp(-t * t);
  }
  return curve;
}

// Selection is addressed by absolute frame index, so any chunking of the
// stream selects the same frames.
inline bool attenuation_frame_selected(std::uint64_t seed, std::size_t frame_index, double p) {
  return indexed_unit(seed, static_cast<std::uint64_t>(frame_index)) < p;
}

namespace detail {

inline std::vector<char> energy_top_mask(const std::vector<double>& samples,
                                         std::size_t frame_len, double p) {
  const std::size_t n_frames = (samples.size() + frame_len - 1) / frame_len;
  std::vector<char> mask(n_frames, 0);
  const auto n_sel = static_cast<std::size_t>(std::llround(p * static_cast<double>(n_frames)));
  if (n_sel == 0) return mask;

  std::vector<double> energy(n_frames, 0.0);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t begin = f * frame_len;
    const std::size_t end = std::min(samples.size(), begin + frame_len);
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += samples[i] * samples[i];
    energy[f] = acc / static_cast<double>(end - begin);
  }
  std::vector<std::size_t> order(n_frames);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return energy[a] > energy[b]; });
  for (std::size_t i = 0; i < std::min(n_sel, n_frames); ++i) mask[order[i]] = 1;
  return mask;
}

}  // namespace detail

inline AudioBuffer apply_attenuation(const AudioBuffer& audio, const AttenuationConfig& cfg) {
  validate_attenuation(cfg, audio.sample_rate);
  AudioBuffer out = audio;
  if (cfg.alpha == 1.0 || audio.empty()) return out;  // a(t) is identically 1

  const std::size_t frame_len = attenuation_frame_length(cfg, audio.sample_rate);
  const std::vector<double> curve = attenuation_curve(frame_len, cfg.alpha);
  const std::size_t n_frames = (audio.samples.size() + frame_len - 1) / frame_len;

  std::vector<char> energy_mask;
  if (cfg.selection == FrameSelection::energy_top)
    energy_mask = detail::energy_top_mask(audio.samples, frame_len, cfg.select_prob);

  for (std::size_t f = 0; f < n_frames; ++f) {
    const bool selected = cfg.selection == FrameSelection::random
                              ? attenuation_frame_selected(cfg.seed, f, cfg.select_prob)
                              : energy_mask[f] != 0;
    if (!selected) continue;
    const std::size_t begin = f * frame_len;
    const std::size_t end = std::min(out.samples.size(), begin + frame_len);
    for (std::size_t i = begin; i < end; ++i) out.samples[i] *= curve[i - begin];
  }
  return out;
}

}  // namespace echoguard
