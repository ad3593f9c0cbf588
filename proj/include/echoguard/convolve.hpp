#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "echoguard/audio.hpp"
#include "echoguard/errors.hpp"
#include "echoguard/fft.hpp"
#include "echoguard/room.hpp"

namespace echoguard {

// FFT overlap-add convolution against a fixed impulse response.
//
// The FFT size depends only on the IR length, so feeding the same samples in
// any chunking yields bit-identical output. Batch helpers below reuse the
// same engine for that reason.
class OverlapAddConvolver {
 public:
  explicit OverlapAddConvolver(const std::vector<double>& ir) {
    if (ir.empty()) throw Error(ErrorKind::invalid_argument, "impulse response is empty");
    ir_len_ = ir.size();
    fft_size_ = 2 * std::max<std::size_t>(4096, next_pow2(ir_len_));
    block_ = fft_size_ - ir_len_ + 1;

    spectrum_.assign(fft_size_, {0.0, 0.0});
    for (std::size_t i = 0; i < ir_len_; ++i) spectrum_[i] = {ir[i], 0.0};
    fft(spectrum_, false);

    tail_.assign(ir_len_ - 1, 0.0);
    pending_.reserve(block_);
  }

  std::size_t block_size() const { return block_; }
  std::size_t ir_length() const { return ir_len_; }

  // Accepts any number of samples; emits output in whole blocks.
  std::vector<double> push(std::span<const double> in) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < in.size()) {
      const std::size_t take = std::min(block_ - pending_.size(), in.size() - pos);
      pending_.insert(pending_.end(), in.begin() + pos, in.begin() + pos + take);
      pos += take;
      if (pending_.size() == block_) emit_block(out);
    }
    return out;
  }

  // Drains the partial block and the convolution tail. The engine resets to
  // silence and is reusable afterwards.
  std::vector<double> flush() {
    std::vector<double> out;
    const std::size_t partial = pending_.size();
    if (partial > 0) {
      pending_.resize(block_, 0.0);
      emit_block(out);
    }
    out.insert(out.end(), tail_.begin(), tail_.end());
    if (partial > 0) out.resize(partial + ir_len_ - 1);
    std::fill(tail_.begin(), tail_.end(), 0.0);
    pending_.clear();
    return out;
  }

 private:
  void emit_block(std::vector<double>& out) {
    std::vector<std::complex<double>> buf(fft_size_, {0.0, 0.0});
    for (std::size_t i = 0; i < block_; ++i) buf[i] = {pending_[i], 0.0};
    fft(buf, false);
    for (std::size_t i = 0; i < fft_size_; ++i) buf[i] *= spectrum_[i];
    fft(buf, true);

    const std::size_t base = out.size();
    out.resize(base + block_);
    for (std::size_t i = 0; i < block_; ++i) {
      double v = buf[i].real();
      if (i < tail_.size()) v += tail_[i];
      out[base + i] = v;
    }
    for (std::size_t i = 0; i + 1 < ir_len_; ++i) tail_[i] = buf[block_ + i].real();
    pending_.clear();
  }

  std::size_t ir_len_ = 0;
  std::size_t fft_size_ = 0;
  std::size_t block_ = 0;
  std::vector<std::complex<double>> spectrum_;
  std::vector<double> tail_;
  std::vector<double> pending_;
};

// Full convolution: output length n + ir_len - 1.
inline std::vector<double> convolve_full(std::span<const double> x,
                                         const std::vector<double>& ir) {
  OverlapAddConvolver conv(ir);
  std::vector<double> out = conv.push(x);
  std::vector<double> rest = conv.flush();
  out.insert(out.end(), rest.begin(), rest.end());
  out.resize(x.size() + ir.size() - 1);
  return out;
}

// Convolution trimmed to the input length (what a listener hears in-room).
inline AudioBuffer convolve(const AudioBuffer& audio, const ImpulseResponse& ir) {
  if (audio.sample_rate != ir.sample_rate)
    throw Error(ErrorKind::sample_rate_mismatch, "audio and impulse response sample rates differ");
  if (audio.empty()) throw Error(ErrorKind::empty_audio, "cannot convolve empty audio");
  AudioBuffer out;
  out.sample_rate = audio.sample_rate;
  out.samples = convolve_full(audio.samples, ir.taps);
  out.samples.resize(audio.samples.size());
  return out;
}

}  // namespace echoguard
