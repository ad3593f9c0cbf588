#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "echoguard/audio.hpp"
#include "echoguard/convolve.hpp"
#include "echoguard/errors.hpp"
#include "echoguard/room.hpp"

namespace echoguard {

// Virtual microphone rotation. The capture point blends between N cardioid
// microphones on a schedule of raised-cosine windows with 50% overlap, one
// full revolution every 1/rotation_hz seconds.
struct OscillationSchedule {
  double rotation_hz = 5.0;
  int n_mics = 4;

  double revolution_s() const { return 1.0 / rotation_hz; }
  double window_s() const { return 2.0 * revolution_s() / n_mics; }
  double center_s(int i) const { return revolution_s() * i / n_mics; }
};

inline void validate_schedule(const OscillationSchedule& s) {
  if (!(s.rotation_hz > 0.0) || !std::isfinite(s.rotation_hz))
    throw Error(ErrorKind::invalid_config, "rotation_hz must be positive and finite");
  if (s.n_mics < 1) throw Error(ErrorKind::invalid_config, "n_mics must be at least 1");
}

namespace detail {

inline void fill_weights(const OscillationSchedule& s, double t, double* w) {
  const double t_rev = s.revolution_s();
  const double t_win = s.window_s();
  const double pi = 3.141592653589793238462643383279;
  double sum = 0.0;
  for (int i = 0; i < s.n_mics; ++i) {
    double d = t - s.center_s(i);
    d -= t_rev * std::round(d / t_rev);
    double v = 0.0;
    if (std::abs(d) <= t_win / 2.0) v = 0.5 * (1.0 + std::cos(2.0 * pi * d / t_win));
    w[i] = v;
    sum += v;
  }
  // The 50% overlap makes the windows sum to one; normalization absorbs
  // rounding noise.
  if (sum > 0.0)
    for (int i = 0; i < s.n_mics; ++i) w[i] /= sum;
  else
    for (int i = 0; i < s.n_mics; ++i) w[i] = 1.0 / s.n_mics;
}

}  // namespace detail

// Blend weights at time t (seconds).
inline std::vector<double> oscillation_weights(const OscillationSchedule& s, double t) {
  validate_schedule(s);
  std::vector<double> w(static_cast<std::size_t>(s.n_mics), 0.0);
  detail::fill_weights(s, t, w.data());
  return w;
}

// Weight lookup addressed by absolute sample index. When the revolution spans
// a whole number of samples the table is precomputed once per period; batch
// and streaming renderers share this class, so their outputs match exactly.
class OscillationWeights {
 public:
  OscillationWeights(const OscillationSchedule& s, int sample_rate)
      : schedule_(s), sample_rate_(sample_rate) {
    validate_schedule(s);
    if (sample_rate <= 0) throw Error(ErrorKind::invalid_argument, "sample_rate must be > 0");
    const double span = sample_rate / s.rotation_hz;
    const double rounded = std::round(span);
    if (rounded >= 1.0 && rounded <= 1 << 22 && std::abs(span - rounded) < 1e-9 * span) {
      period_ = static_cast<std::size_t>(rounded);
      table_.resize(period_ * static_cast<std::size_t>(s.n_mics));
      for (std::size_t k = 0; k < period_; ++k)
        detail::fill_weights(s, static_cast<double>(k) / sample_rate,
                             &table_[k * static_cast<std::size_t>(s.n_mics)]);
    } else {
      scratch_.resize(static_cast<std::size_t>(s.n_mics));
    }
  }

  int n_mics() const { return schedule_.n_mics; }

  const double* at(std::size_t sample_index) const {
    if (period_ != 0)
      return &table_[(sample_index % period_) * static_cast<std::size_t>(schedule_.n_mics)];
    detail::fill_weights(schedule_, static_cast<double>(sample_index) / sample_rate_,
                         scratch_.data());
    return scratch_.data();
  }

 private:
  OscillationSchedule schedule_;
  int sample_rate_;
  std::size_t period_ = 0;
  std::vector<double> table_;
  mutable std::vector<double> scratch_;
};

// Renders the rotating-capture signal: each microphone's reverberant view is
// blended per sample by the schedule. Output has the input's length.
inline AudioBuffer apply_oscillation(const AudioBuffer& clean, const DirectionalRirSet& set,
                                     const OscillationSchedule& sched) {
  if (clean.empty()) throw Error(ErrorKind::empty_audio, "cannot process empty audio");
  if (clean.sample_rate != set.sample_rate())
    throw Error(ErrorKind::sample_rate_mismatch, "audio and impulse set sample rates differ");
  if (set.irs.size() != static_cast<std::size_t>(sched.n_mics))
    throw Error(ErrorKind::invalid_config, "schedule n_mics does not match the impulse set");

  const std::size_t n = clean.samples.size();
  std::vector<std::vector<double>> mic(set.irs.size());
  for (std::size_t m = 0; m < set.irs.size(); ++m) {
    mic[m] = convolve_full(clean.samples, set.irs[m].taps);
    mic[m].resize(n);
  }

  const OscillationWeights weights(sched, clean.sample_rate);
  AudioBuffer out;
  out.sample_rate = clean.sample_rate;
  out.samples.assign(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const double* w = weights.at(t);
    double acc = 0.0;
    for (std::size_t m = 0; m < mic.size(); ++m) acc += w[m] * mic[m][t];
    out.samples[t] = acc;
  }
  return out;
}

}  // namespace echoguard
