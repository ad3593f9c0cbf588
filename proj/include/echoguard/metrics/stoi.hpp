#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "echoguard/audio.hpp"
#include "echoguard/errors.hpp"
#include "echoguard/fft.hpp"
#include "echoguard/resample.hpp"

namespace echoguard {

namespace stoi_detail {

inline constexpr int kRate = 10000;
inline constexpr std::size_t kFrameLen = 256;
inline constexpr std::size_t kHop = 128;
inline constexpr std::size_t kFftLen = 512;
inline constexpr int kNumBands = 15;
inline constexpr double kBandStart = 150.0;
inline constexpr std::size_t kSegFrames = 30;  // 384 ms at 10 kHz
inline constexpr double kSilenceRangeDb = 40.0;
inline constexpr double kMinDurationS = 0.384;
inline const double kClipFactor = 1.0 + std::pow(10.0, 15.0 / 20.0);  // -15 dB SDR bound
inline constexpr double kEps = 1e-30;

inline std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  const double pi = 3.141592653589793238462643383279;
  for (std::size_t k = 0; k < n; ++k)
    w[k] = 0.5 * (1.0 - std::cos(2.0 * pi * static_cast<double>(k) / (n - 1)));
  return w;
}

// Drops frames whose clean-signal energy sits more than 40 dB below the
// loudest clean frame, then rebuilds both signals by overlap-add of the
// surviving windowed frames.
inline bool remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const std::vector<double> w = hann(kFrameLen);
  if (x.size() < kFrameLen) return false;
  const std::size_t n_frames = (x.size() - kFrameLen) / kHop + 1;

  std::vector<double> energy_db(n_frames);
  double max_db = -1e300;
  for (std::size_t f = 0; f < n_frames; ++f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < kFrameLen; ++i) {
      const double v = w[i] * x[f * kHop + i];
      acc += v * v;
    }
    energy_db[f] = acc > 0.0 ? 10.0 * std::log10(acc) : -1e300;
    max_db = std::max(max_db, energy_db[f]);
  }

  std::vector<std::size_t> keep;
  keep.reserve(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f)
    if (energy_db[f] > max_db - kSilenceRangeDb) keep.push_back(f);
  if (keep.empty()) return false;

  const std::size_t out_len = (keep.size() - 1) * kHop + kFrameLen;
  std::vector<double> xs(out_len, 0.0);
  std::vector<double> ys(out_len, 0.0);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const std::size_t src = keep[k] * kHop;
    const std::size_t dst = k * kHop;
    for (std::size_t i = 0; i < kFrameLen; ++i) {
      xs[dst + i] += w[i] * x[src + i];
      ys[dst + i] += w[i] * y[src + i];
    }
  }
  x = std::move(xs);
  y = std::move(ys);
  return true;
}

// One-third-octave band energies per STFT frame: rows = frames, bands laid
// out contiguously per frame.
inline std::vector<double> band_envelopes(const std::vector<double>& signal,
                                          std::size_t n_frames) {
  const std::vector<double> w = hann(kFrameLen);

  // Nearest-bin edges for each band.
  std::vector<std::size_t> lo(kNumBands);
  std::vector<std::size_t> hi(kNumBands);
  const std::size_t n_bins = kFftLen / 2 + 1;
  for (int j = 0; j < kNumBands; ++j) {
    const double cf = kBandStart * std::pow(2.0, j / 3.0);
    const double fl = cf * std::pow(2.0, -1.0 / 6.0);
    const double fh = cf * std::pow(2.0, 1.0 / 6.0);
    std::size_t bl = 0;
    std::size_t bh = 0;
    double dl = 1e300;
    double dh = 1e300;
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double f = static_cast<double>(b) * kRate / kFftLen;
      if (std::abs(f - fl) < dl) {
        dl = std::abs(f - fl);
        bl = b;
      }
      if (std::abs(f - fh) < dh) {
        dh = std::abs(f - fh);
        bh = b;
      }
    }
    lo[j] = bl;
    hi[j] = bh;
  }

  std::vector<double> env(n_frames * kNumBands, 0.0);
  std::vector<std::complex<double>> buf(kFftLen);
  for (std::size_t f = 0; f < n_frames; ++f) {
    std::fill(buf.begin(), buf.end(), std::complex<double>{0.0, 0.0});
    for (std::size_t i = 0; i < kFrameLen; ++i) buf[i] = {w[i] * signal[f * kHop + i], 0.0};
    fft(buf, false);
    for (int j = 0; j < kNumBands; ++j) {
      double acc = 0.0;
      for (std::size_t b = lo[j]; b < hi[j]; ++b) acc += std::norm(buf[b]);
      env[f * kNumBands + j] = std::sqrt(acc);
    }
  }
  return env;
}

}  // namespace stoi_detail

// Short-time objective intelligibility of `degraded` against `clean`:
// mean correlation of one-third-octave temporal envelopes over 384 ms
// segments, after silent-frame removal and -15 dB SDR clipping.
inline double stoi(const AudioBuffer& clean, const AudioBuffer& degraded) {
  using namespace stoi_detail;
  if (clean.sample_rate != degraded.sample_rate)
    throw Error(ErrorKind::sample_rate_mismatch, "stoi inputs must share a sample rate");
  if (clean.empty() || degraded.empty())
    throw Error(ErrorKind::empty_audio, "stoi inputs must be non-empty");

  const std::size_t n = std::min(clean.samples.size(), degraded.samples.size());
  if (static_cast<double>(n) / clean.sample_rate < kMinDurationS)
    throw Error(ErrorKind::too_short_audio, "stoi needs at least 384 ms of audio");

  AudioBuffer c;
  c.sample_rate = clean.sample_rate;
  c.samples.assign(clean.samples.begin(), clean.samples.begin() + static_cast<long>(n));
  AudioBuffer d;
  d.sample_rate = degraded.sample_rate;
  d.samples.assign(degraded.samples.begin(), degraded.samples.begin() + static_cast<long>(n));

  std::vector<double> x = resample(c, kRate).samples;
  std::vector<double> y = resample(d, kRate).samples;
  y.resize(x.size(), 0.0);

  if (!remove_silent_frames(x, y))
    throw Error(ErrorKind::silent_audio, "clean signal has no frames above the silence floor");

  if (x.size() < kFrameLen) throw Error(ErrorKind::too_short_audio, "too little audio after silence removal");
  const std::size_t n_frames = (x.size() - kFrameLen) / kHop + 1;
  if (n_frames < kSegFrames)
    throw Error(ErrorKind::too_short_audio, "stoi needs at least 30 analysis frames");

  const std::vector<double> ex = band_envelopes(x, n_frames);
  const std::vector<double> ey = band_envelopes(y, n_frames);

  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> sx(kSegFrames);
  std::vector<double> sy(kSegFrames);
  for (std::size_t end = kSegFrames; end <= n_frames; ++end) {
    const std::size_t start = end - kSegFrames;
    for (int j = 0; j < kNumBands; ++j) {
      double nx2 = 0.0;
      double ny2 = 0.0;
      for (std::size_t i = 0; i < kSegFrames; ++i) {
        sx[i] = ex[(start + i) * kNumBands + j];
        sy[i] = ey[(start + i) * kNumBands + j];
        nx2 += sx[i] * sx[i];
        ny2 += sy[i] * sy[i];
      }
      const double alpha = std::sqrt(nx2 / (ny2 + kEps));
      double mx = 0.0;
      double my = 0.0;
      for (std::size_t i = 0; i < kSegFrames; ++i) {
        sy[i] = std::min(alpha * sy[i], kClipFactor * sx[i]);
        mx += sx[i];
        my += sy[i];
      }
      mx /= kSegFrames;
      my /= kSegFrames;
      double dot = 0.0;
      double vx = 0.0;
      double vy = 0.0;
      for (std::size_t i = 0; i < kSegFrames; ++i) {
        const double a = sx[i] - mx;
        const double b = sy[i] - my;
        dot += a * b;
        vx += a * a;
        vy += b * b;
      }
      if (vx <= kEps) continue;  // flat clean envelope carries no information
      total += dot / (std::sqrt(vx) * std::sqrt(vy) + kEps);
      ++count;
    }
  }
  if (count == 0)
    throw Error(ErrorKind::silent_audio, "no informative envelope segments");
  return total / static_cast<double>(count);
}

}  // namespace echoguard
