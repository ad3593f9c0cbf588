#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "echoguard/audio.hpp"
#include "echoguard/errors.hpp"

namespace echoguard {

namespace detail {

inline double sinc_pi(double x) {
  if (x == 0.0) return 1.0;
  const double px = 3.141592653589793238462643383279 * x;
  return std::sin(px) / px;
}

// Blackman over [-1, 1].
inline double blackman(double v) {
  if (v <= -1.0 || v >= 1.0) return 0.0;
  const double pi = 3.141592653589793238462643383279;
  return 0.42 + 0.5 * std::cos(pi * v) + 0.08 * std::cos(2.0 * pi * v);
}

}  // namespace detail

inline constexpr int kResampleTaps = 64;

// Band-limited arbitrary-ratio resampling with a 64-tap windowed-sinc kernel.
// Kernel weights are renormalized per output sample so DC gain is exact.
inline AudioBuffer resample(const AudioBuffer& in, int target_rate) {
  if (target_rate <= 0) throw Error(ErrorKind::invalid_argument, "target_rate must be > 0");
  if (in.sample_rate <= 0)
    throw Error(ErrorKind::invalid_argument, "source sample_rate must be > 0");
  if (target_rate == in.sample_rate) return in;

  const double ratio = static_cast<double>(target_rate) / in.sample_rate;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(in.samples.size()) * ratio));
  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len, 0.0);
  if (in.samples.empty()) return out;

  const double cutoff = std::min(1.0, ratio);  // relative to the source Nyquist
  const int half = kResampleTaps / 2;
  const auto n_in = static_cast<long long>(in.samples.size());

  for (std::size_t n = 0; n < out_len; ++n) {
    const double t = static_cast<double>(n) / ratio;
    const auto k0 = static_cast<long long>(std::ceil(t)) - half;
    double acc = 0.0;
    double wsum = 0.0;
    for (int j = 0; j < kResampleTaps; ++j) {
      const long long k = k0 + j;
      const double u = t - static_cast<double>(k);
      const double w = cutoff * detail::sinc_pi(cutoff * u) * detail::blackman(u / half);
      wsum += w;
      if (k >= 0 && k < n_in) acc += w * in.samples[static_cast<std::size_t>(k)];
    }
    out.samples[n] = wsum != 0.0 ? acc / wsum : 0.0;
  }
  return out;
}

}  // namespace echoguard
