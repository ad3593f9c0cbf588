#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "echoguard/attenuation.hpp"
#include "echoguard/audio.hpp"
#include "echoguard/convolve.hpp"
#include "echoguard/errors.hpp"
#include "echoguard/oscillation.hpp"
#include "echoguard/room.hpp"

namespace echoguard {

enum class GainMode {
  none,
  peak_normalize,  // rescale so max |sample| = 0.9 (whole-buffer only)
};

inline constexpr double kPeakTarget = 0.9;

struct JammerConfig {
  RoomConfig room = default_room();
  int n_mics = 4;
  OscillationSchedule oscillation{};  // n_mics here mirrors the field above
  AttenuationConfig attenuation{};
  int sample_rate = kDefaultSampleRate;
  int max_order = kDefaultMaxOrder;
  GainMode gain_mode = GainMode::none;

  OscillationSchedule schedule() const { return {oscillation.rotation_hz, n_mics}; }
};

inline void validate_jammer(const JammerConfig& cfg) {
  detail::require_valid(cfg.room);
  if (cfg.sample_rate <= 0) throw Error(ErrorKind::invalid_config, "sample_rate must be > 0");
  if (cfg.max_order < 0) throw Error(ErrorKind::invalid_config, "max_order must be >= 0");
  validate_schedule(cfg.schedule());
  validate_attenuation(cfg.attenuation, cfg.sample_rate);
}

// Whole-buffer pipeline. Builds the directional impulse set once, then
// processes any number of buffers against it.
class Jammer {
 public:
  explicit Jammer(const JammerConfig& cfg) : cfg_(cfg) {
    validate_jammer(cfg_);
    set_ = generate_directional_set(cfg_.room, cfg_.n_mics, cfg_.sample_rate, cfg_.max_order);
  }

  const JammerConfig& config() const { return cfg_; }
  const DirectionalRirSet& rir_set() const { return set_; }

  std::size_t direct_path_delay_samples() const {
    return static_cast<std::size_t>(
        std::llround(direct_path_distance(cfg_.room) / kSpeedOfSound * cfg_.sample_rate));
  }

  AudioBuffer process(const AudioBuffer& audio) const {
    AudioBuffer out = apply_oscillation(audio, set_, cfg_.schedule());
    out = apply_attenuation(out, cfg_.attenuation);
    if (cfg_.gain_mode == GainMode::peak_normalize) {
      double peak = 0.0;
      for (double v : out.samples) peak = std::max(peak, std::abs(v));
      if (peak > 0.0)
        for (double& v : out.samples) v *= kPeakTarget / peak;
    }
    return out;
  }

 private:
  JammerConfig cfg_;
  DirectionalRirSet set_;
};

inline AudioBuffer echoguard(const AudioBuffer& audio, const JammerConfig& cfg) {
  return Jammer(cfg).process(audio);
}

// Streaming pipeline over fixed-length input frames. Output samples appear
// once each overlap-add block fills; the rest arrives on flush. Produces the
// whole-buffer pipeline's output exactly: the convolvers' block size depends
// only on the impulse length, the blend weights are addressed by absolute
// sample index, and attenuation frames are selected by absolute frame index.
class StreamJammer {
 public:
  explicit StreamJammer(const JammerConfig& cfg) : cfg_(cfg) {
    validate_jammer(cfg_);
    if (cfg_.gain_mode == GainMode::peak_normalize)
      throw Error(ErrorKind::invalid_config,
                  "peak normalization needs the whole buffer; streaming supports gain_mode none");
    if (cfg_.attenuation.selection == FrameSelection::energy_top)
      throw Error(ErrorKind::invalid_config,
                  "energy-ranked frame selection needs the whole buffer; use random selection");
    set_ = generate_directional_set(cfg_.room, cfg_.n_mics, cfg_.sample_rate, cfg_.max_order);
    weights_ = std::make_unique<OscillationWeights>(cfg_.schedule(), cfg_.sample_rate);
    for (const auto& ir : set_.irs) convs_.emplace_back(ir.taps);
    atten_frame_ = attenuation_frame_length(cfg_.attenuation, cfg_.sample_rate);
    curve_ = attenuation_curve(atten_frame_, cfg_.attenuation.alpha);
  }

  // One overlap-add block must fill before the first sample can be emitted,
  // and the impulse tail extends every block beyond its input.
  std::size_t latency_samples() const { return block_samples() + tail_samples(); }
  std::size_t block_samples() const { return convs_.front().block_size(); }
  std::size_t tail_samples() const { return convs_.front().ir_length() - 1; }

  // Frames must share the length of the first frame pushed; one trailing
  // shorter frame is accepted immediately before flush.
  std::vector<double> push(std::span<const double> frame) {
    if (frame.empty()) throw Error(ErrorKind::empty_audio, "cannot push an empty frame");
    if (frame_len_ == 0) frame_len_ = frame.size();
    if (saw_partial_ || frame.size() > frame_len_)
      throw Error(ErrorKind::frame_length_changed, "frame length changed mid-stream");
    if (frame.size() < frame_len_) saw_partial_ = true;
    in_count_ += frame.size();

    std::vector<std::vector<double>> mic(convs_.size());
    for (std::size_t m = 0; m < convs_.size(); ++m) mic[m] = convs_[m].push(frame);
    return mix(mic, mic.front().size());
  }

  std::vector<double> flush() {
    std::vector<std::vector<double>> mic(convs_.size());
    for (std::size_t m = 0; m < convs_.size(); ++m) mic[m] = convs_[m].flush();
    const std::size_t remaining = in_count_ - emitted_;
    return mix(mic, std::min(mic.front().size(), remaining));
  }

 private:
  std::vector<double> mix(const std::vector<std::vector<double>>& mic, std::size_t count) {
    std::vector<double> out(count, 0.0);
    const bool attenuate = cfg_.attenuation.alpha != 1.0;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t pos = emitted_ + i;
      const double* w = weights_->at(pos);
      double acc = 0.0;
      for (std::size_t m = 0; m < mic.size(); ++m) acc += w[m] * mic[m][i];
      if (attenuate) {
        const std::size_t f = pos / atten_frame_;
        if (attenuation_frame_selected(cfg_.attenuation.seed, f, cfg_.attenuation.select_prob))
          acc *= curve_[pos % atten_frame_];
      }
      out[i] = acc;
    }
    emitted_ += count;
    return out;
  }

  JammerConfig cfg_;
  DirectionalRirSet set_;
  std::unique_ptr<OscillationWeights> weights_;
  std::vector<OverlapAddConvolver> convs_;
  std::vector<double> curve_;
  std::size_t atten_frame_ = 0;
  std::size_t frame_len_ = 0;
  std::size_t in_count_ = 0;
  std::size_t emitted_ = 0;
  bool saw_partial_ = false;
};

// Streams `audio` through the jammer in fixed frames and reassembles the
// result; used by the CLI --stream path and the equivalence tests.
inline AudioBuffer process_stream(const AudioBuffer& audio, const JammerConfig& cfg,
                                  std::size_t frame_len) {
  if (frame_len == 0) throw Error(ErrorKind::invalid_argument, "frame_len must be > 0");
  if (audio.empty()) throw Error(ErrorKind::empty_audio, "cannot process empty audio");
  if (audio.sample_rate != cfg.sample_rate)
    throw Error(ErrorKind::sample_rate_mismatch, "audio and config sample rates differ");

  StreamJammer stream(cfg);
  AudioBuffer out;
  out.sample_rate = audio.sample_rate;
  out.samples.reserve(audio.samples.size());
  const std::span<const double> all(audio.samples);
  for (std::size_t pos = 0; pos < all.size(); pos += frame_len) {
    const auto chunk = all.subspan(pos, std::min(frame_len, all.size() - pos));
    const std::vector<double> got = stream.push(chunk);
    out.samples.insert(out.samples.end(), got.begin(), got.end());
  }
  const std::vector<double> rest = stream.flush();
  out.samples.insert(out.samples.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace echoguard
