#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "echoguard/errors.hpp"

namespace echoguard {

inline constexpr int kDefaultSampleRate = 16000;

// Mono sampled waveform. Samples are dimensionless amplitudes, nominally in
// [-1, 1]; stored as doubles regardless of file encoding.
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }

  bool all_finite() const {
    for (double v : samples)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

// One analysis frame. `samples` views the in-range part of the buffer; reads
// past `true_length()` yield the zero padding.
struct FrameView {
  std::span<const double> samples;
  std::size_t full_length = 0;
  std::size_t start = 0;

  std::size_t true_length() const { return samples.size(); }
  bool is_partial() const { return samples.size() < full_length; }
  double at(std::size_t i) const { return i < samples.size() ? samples[i] : 0.0; }

  std::vector<double> padded() const {
    std::vector<double> out(full_length, 0.0);
    for (std::size_t i = 0; i < samples.size(); ++i) out[i] = samples[i];
    return out;
  }
};

// Drops the first `shift` samples and zero-pads back to `target_len`; used to
// line a reverberant signal up with its dry original.
inline AudioBuffer shifted_left(const AudioBuffer& buffer, std::size_t shift,
                                std::size_t target_len) {
  AudioBuffer out;
  out.sample_rate = buffer.sample_rate;
  const std::size_t n = buffer.samples.size();
  const std::size_t begin = std::min(shift, n);
  out.samples.assign(buffer.samples.begin() + static_cast<long>(begin), buffer.samples.end());
  out.samples.resize(target_len, 0.0);
  return out;
}

// Frame k covers [k*hop, k*hop + frame_len); the trailing partial frame is
// emitted with its true length recorded.
inline std::vector<FrameView> frames(const AudioBuffer& buffer, std::size_t frame_len,
                                     std::size_t hop) {
  if (frame_len < 1 || hop < 1)
    throw Error(ErrorKind::invalid_argument, "frame_len and hop must be >= 1");
  std::vector<FrameView> out;
  const std::size_t n = buffer.samples.size();
  for (std::size_t start = 0; start < n; start += hop) {
    const std::size_t avail = std::min(frame_len, n - start);
    out.push_back(FrameView{
        std::span<const double>(buffer.samples.data() + start, avail), frame_len, start});
  }
  return out;
}

}  // namespace echoguard
