#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "../support.hpp"

using namespace echoguard;
using Catch::Approx;
using testsup::TempDir;

namespace {

std::vector<double> direct_convolution(const std::vector<double>& x,
                                       const std::vector<double>& h) {
  std::vector<double> out(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < h.size(); ++j) out[i + j] += x[i] * h[j];
  return out;
}

}  // namespace

TEST_CASE("wav round trips") {
  TempDir dir;
  AudioBuffer buf = testsup::speech_like(0.25, 9);

  SECTION("pcm16 preserves samples within the quantization step") {
    write_wav(buf, dir.str("a.wav"), WavEncoding::pcm16);
    const AudioBuffer back = read_wav(dir.str("a.wav"));
    REQUIRE(back.sample_rate == buf.sample_rate);
    REQUIRE(back.samples.size() == buf.samples.size());
    REQUIRE(testsup::max_abs_diff(buf.samples, back.samples) <= 1.0 / 32768.0);
  }

  SECTION("float32 survives bit-exactly at single precision") {
    write_wav(buf, dir.str("f.wav"), WavEncoding::float32);
    const AudioBuffer back = read_wav(dir.str("f.wav"));
    REQUIRE(back.samples.size() == buf.samples.size());
    for (std::size_t i = 0; i < buf.samples.size(); ++i)
      REQUIRE(back.samples[i] == static_cast<double>(static_cast<float>(buf.samples[i])));
  }

  SECTION("pcm16 clamps out-of-range amplitudes") {
    AudioBuffer loud;
    loud.sample_rate = 16000;
    loud.samples = {2.0, -2.0, 0.5};
    write_wav(loud, dir.str("loud.wav"), WavEncoding::pcm16);
    const AudioBuffer back = read_wav(dir.str("loud.wav"));
    REQUIRE(back.samples[0] == Approx(32767.0 / 32768.0));
    REQUIRE(back.samples[1] == Approx(-1.0));
    REQUIRE(back.samples[2] == Approx(0.5).margin(1.0 / 32768.0));
  }

  SECTION("empty buffer is rejected on write") {
    AudioBuffer empty;
    empty.sample_rate = 16000;
    REQUIRE_THROWS_AS(write_wav(empty, dir.str("e.wav"), WavEncoding::pcm16), Error);
  }

  SECTION("missing file and zero-sample file are distinct errors") {
    try {
      read_wav(dir.str("absent.wav"));
      FAIL("expected missing_file");
    } catch (const Error& e) {
      REQUIRE(e.kind() == ErrorKind::missing_file);
    }

    // Hand-built header with a zero-length data chunk.
    std::vector<unsigned char> bytes;
    auto ascii = [&](const char* s) { for (; *s; ++s) bytes.push_back(*s); };
    ascii("RIFF");
    detail::append_u32le(bytes, 36);
    ascii("WAVE");
    ascii("fmt ");
    detail::append_u32le(bytes, 16);
    detail::append_u16le(bytes, 1);
    detail::append_u16le(bytes, 1);
    detail::append_u32le(bytes, 16000);
    detail::append_u32le(bytes, 32000);
    detail::append_u16le(bytes, 2);
    detail::append_u16le(bytes, 16);
    ascii("data");
    detail::append_u32le(bytes, 0);
    testsup::spit(dir.str("zero.wav"),
                  std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    try {
      read_wav(dir.str("zero.wav"));
      FAIL("expected empty_audio");
    } catch (const Error& e) {
      REQUIRE(e.kind() == ErrorKind::empty_audio);
    }
  }

  SECTION("stereo input downmixes to the channel mean") {
    std::vector<unsigned char> bytes;
    auto ascii = [&](const char* s) { for (; *s; ++s) bytes.push_back(*s); };
    auto s16 = [&](int v) { detail::append_u16le(bytes, static_cast<std::uint16_t>(v)); };
    ascii("RIFF");
    detail::append_u32le(bytes, 36 + 8);
    ascii("WAVE");
    ascii("fmt ");
    detail::append_u32le(bytes, 16);
    detail::append_u16le(bytes, 1);
    detail::append_u16le(bytes, 2);
    detail::append_u32le(bytes, 16000);
    detail::append_u32le(bytes, 64000);
    detail::append_u16le(bytes, 4);
    detail::append_u16le(bytes, 16);
    ascii("data");
    detail::append_u32le(bytes, 8);
    s16(1000);
    s16(3000);
    s16(-2000);
    s16(2000);
    testsup::spit(dir.str("stereo.wav"),
                  std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    const AudioBuffer back = read_wav(dir.str("stereo.wav"));
    REQUIRE(back.samples.size() == 2);
    REQUIRE(back.samples[0] == Approx(2000.0 / 32768.0));
    REQUIRE(back.samples[1] == Approx(0.0).margin(1e-12));
  }

  SECTION("pcm16 max sample maps to 32767/32768") {
    std::vector<unsigned char> bytes;
    auto ascii = [&](const char* s) { for (; *s; ++s) bytes.push_back(*s); };
    ascii("RIFF");
    detail::append_u32le(bytes, 36 + 2);
    ascii("WAVE");
    ascii("fmt ");
    detail::append_u32le(bytes, 16);
    detail::append_u16le(bytes, 1);
    detail::append_u16le(bytes, 1);
    detail::append_u32le(bytes, 16000);
    detail::append_u32le(bytes, 32000);
    detail::append_u16le(bytes, 2);
    detail::append_u16le(bytes, 16);
    ascii("data");
    detail::append_u32le(bytes, 2);
    detail::append_u16le(bytes, 32767);
    testsup::spit(dir.str("max.wav"),
                  std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    REQUIRE(read_wav(dir.str("max.wav")).samples[0] == Approx(32767.0 / 32768.0));
  }
}

TEST_CASE("resample") {
  SECTION("same target rate returns the buffer unchanged") {
    const AudioBuffer x = testsup::speech_like(0.1, 3);
    const AudioBuffer y = resample(x, x.sample_rate);
    REQUIRE(y.sample_rate == x.sample_rate);
    REQUIRE(y.samples == x.samples);
  }

  SECTION("length arithmetic: 1 second of 16 kHz to 10 kHz") {
    AudioBuffer x = testsup::white_noise(1.0, 4);
    const AudioBuffer y = resample(x, 10000);
    REQUIRE(y.sample_rate == 10000);
    REQUIRE(std::llabs(static_cast<long long>(y.samples.size()) - 10000) <= 1);
  }

  SECTION("440 Hz tone keeps its spectral peak across 8 kHz to 16 kHz") {
    AudioBuffer tone;
    tone.sample_rate = 8000;
    tone.samples.resize(8000);
    for (std::size_t i = 0; i < tone.samples.size(); ++i)
      tone.samples[i] = 0.5 * std::sin(testsup::kTau * 440.0 * i / 8000.0);
    const AudioBuffer up = resample(tone, 16000);
    const std::vector<double> mag = magnitude_spectrum(up.samples);
    const std::size_t n = next_pow2(up.samples.size());
    std::size_t peak = 0;
    for (std::size_t k = 1; k < n / 2; ++k)
      if (mag[k] > mag[peak]) peak = k;
    const double bin_hz = 16000.0 / static_cast<double>(n);
    REQUIRE(std::abs(peak * bin_hz - 440.0) <= bin_hz);
  }

  SECTION("resampling is linear") {
    const AudioBuffer a = testsup::speech_like(0.2, 5);
    AudioBuffer b = testsup::white_noise(0.2, 6);
    b.samples.resize(a.samples.size());
    AudioBuffer sum = a;
    for (std::size_t i = 0; i < sum.samples.size(); ++i) sum.samples[i] += b.samples[i];
    const AudioBuffer ra = resample(a, 10000);
    const AudioBuffer rb = resample(b, 10000);
    const AudioBuffer rsum = resample(sum, 10000);
    REQUIRE(ra.samples.size() == rsum.samples.size());
    for (std::size_t i = 0; i < rsum.samples.size(); ++i)
      REQUIRE(rsum.samples[i] == Approx(ra.samples[i] + rb.samples[i]).margin(1e-6));
  }
}

TEST_CASE("frame iteration") {
  AudioBuffer buf;
  buf.sample_rate = 16000;

  SECTION("exact tiling") {
    buf.samples.assign(100, 1.0);
    const auto fs = frames(buf, 20, 20);
    REQUIRE(fs.size() == 5);
    for (const auto& f : fs) REQUIRE(f.true_length() == 20);
  }

  SECTION("trailing partial frame keeps its true length") {
    buf.samples.assign(105, 1.0);
    const auto fs = frames(buf, 20, 20);
    REQUIRE(fs.size() == 6);
    REQUIRE(fs.back().true_length() == 5);
    REQUIRE(fs.back().is_partial());
    REQUIRE(fs.back().padded().size() == 20);
    REQUIRE(fs.back().padded()[5] == 0.0);
  }

  SECTION("hop below frame length overlaps") {
    buf.samples.resize(60);
    std::iota(buf.samples.begin(), buf.samples.end(), 0.0);
    const auto fs = frames(buf, 20, 10);
    REQUIRE(fs[1].start == 10);
    REQUIRE(fs[0].samples[10] == fs[1].samples[0]);
  }

  SECTION("hop == frame_len strides reconstruct the signal") {
    buf.samples.resize(97);
    std::iota(buf.samples.begin(), buf.samples.end(), 0.0);
    std::vector<double> rebuilt;
    for (const auto& f : frames(buf, 20, 20))
      rebuilt.insert(rebuilt.end(), f.samples.begin(), f.samples.end());
    REQUIRE(rebuilt == buf.samples);
  }
}

TEST_CASE("overlap-add convolution") {
  SECTION("unit impulse is identity") {
    const AudioBuffer x = testsup::speech_like(0.3, 7);
    const ImpulseResponse unit{{1.0}, x.sample_rate};
    const AudioBuffer y = convolve(x, unit);
    REQUIRE(y.samples.size() == x.samples.size());
    REQUIRE(testsup::max_abs_diff(y.samples, x.samples) < 1e-9);
  }

  SECTION("single-tap ir scales") {
    const AudioBuffer x = testsup::speech_like(0.2, 8);
    const ImpulseResponse half{{0.5}, x.sample_rate};
    const AudioBuffer y = convolve(x, half);
    for (std::size_t i = 0; i < x.samples.size(); ++i)
      REQUIRE(y.samples[i] == Approx(0.5 * x.samples[i]).margin(1e-9));
  }

  SECTION("matches the direct time-domain oracle") {
    SplitMix64 rng(21);
    std::vector<double> x(1000), h(64);
    for (double& v : x) v = rng.next_unit() * 2.0 - 1.0;
    for (double& v : h) v = rng.next_unit() * 2.0 - 1.0;
    const std::vector<double> fast = convolve_full(x, h);
    const std::vector<double> slow = direct_convolution(x, h);
    REQUIRE(fast.size() == slow.size());
    REQUIRE(testsup::rms_diff(fast, slow) < 1e-5);
  }

  SECTION("sample-rate mismatch is rejected") {
    AudioBuffer x = testsup::speech_like(0.1, 2);
    ImpulseResponse ir{{1.0, 0.2}, 8000};
    REQUIRE_THROWS_AS(convolve(x, ir), Error);
  }

  SECTION("empty inputs are rejected") {
    AudioBuffer empty;
    empty.sample_rate = 16000;
    REQUIRE_THROWS_AS(convolve(empty, ImpulseResponse{{1.0}, 16000}), Error);
    REQUIRE_THROWS_AS(OverlapAddConvolver(std::vector<double>{}), Error);
  }

  SECTION("output is invariant to push chunking") {
    SplitMix64 rng(22);
    std::vector<double> x(10000), h(300);
    for (double& v : x) v = rng.next_unit() * 2.0 - 1.0;
    for (double& v : h) v = rng.next_unit() * 2.0 - 1.0;
    const std::vector<double> whole = convolve_full(x, h);

    OverlapAddConvolver conv(h);
    std::vector<double> chunked;
    std::span<const double> all(x);
    const std::size_t sizes[] = {1, 7, 160, 4096, 9999};
    std::size_t pos = 0, si = 0;
    while (pos < all.size()) {
      const std::size_t take = std::min(sizes[si++ % 5], all.size() - pos);
      const auto got = conv.push(all.subspan(pos, take));
      chunked.insert(chunked.end(), got.begin(), got.end());
      pos += take;
    }
    const auto rest = conv.flush();
    chunked.insert(chunked.end(), rest.begin(), rest.end());
    REQUIRE(chunked == whole);
  }

  SECTION("flush emits exactly the linear-convolution tail") {
    std::vector<double> x(777, 0.0);
    x[0] = 1.0;
    x[776] = -0.5;
    std::vector<double> h(33, 0.0);
    h[0] = 1.0;
    h[32] = 0.25;
    const std::vector<double> full = convolve_full(x, h);
    REQUIRE(full.size() == 777 + 33 - 1);
    const std::vector<double> slow = direct_convolution(x, h);
    REQUIRE(testsup::max_abs_diff(full, slow) < 1e-9);
  }
}

TEST_CASE("oscillation weights") {
  SECTION("single mic gets all the weight") {
    const OscillationSchedule one{5.0, 1};
    for (double t : {0.0, 0.123, 1.9}) {
      const auto w = oscillation_weights(one, t);
      REQUIRE(w.size() == 1);
      REQUIRE(w[0] == Approx(1.0));
    }
  }

  SECTION("weights sum to one for random draws") {
    SplitMix64 rng(31);
    for (int i = 0; i < 2000; ++i) {
      OscillationSchedule s;
      s.n_mics = 1 + static_cast<int>(rng.next_u64() % 8);
      s.rotation_hz = rng.next_unit() * 10.0 + 1e-6;
      const double t = rng.next_unit() * 20.0;
      const auto w = oscillation_weights(s, t);
      const double sum = std::accumulate(w.begin(), w.end(), 0.0);
      REQUIRE(sum == Approx(1.0).margin(1e-9));
      for (double v : w) REQUIRE(v >= 0.0);
    }
  }

  SECTION("third window center concentrates on mic 2") {
    const OscillationSchedule s{1.0, 4};
    const auto w = oscillation_weights(s, 0.5);
    REQUIRE(w[0] == Approx(0.0).margin(1e-9));
    REQUIRE(w[1] == Approx(0.0).margin(1e-9));
    REQUIRE(w[2] == Approx(1.0).margin(1e-9));
    REQUIRE(w[3] == Approx(0.0).margin(1e-9));
  }

  SECTION("precomputed table matches the reference evaluation") {
    for (double rotation : {5.0, 3.7, 0.9}) {
      const OscillationSchedule s{rotation, 4};
      const OscillationWeights table(s, 16000);
      SplitMix64 rng(32);
      for (int i = 0; i < 500; ++i) {
        const std::size_t idx = rng.next_u64() % 160000;
        const auto ref = oscillation_weights(s, static_cast<double>(idx) / 16000.0);
        const double* got = table.at(idx);
        for (int m = 0; m < 4; ++m) REQUIRE(got[m] == Approx(ref[m]).margin(1e-12));
      }
    }
  }

  SECTION("invalid schedules are rejected") {
    REQUIRE_THROWS_AS(validate_schedule(OscillationSchedule{0.0, 4}), Error);
    REQUIRE_THROWS_AS(validate_schedule(OscillationSchedule{5.0, 0}), Error);
  }
}

TEST_CASE("oscillation blending") {
  const AudioBuffer x = testsup::speech_like(0.25, 41);

  SECTION("single mic reduces to plain convolution") {
    DirectionalRirSet set;
    set.room = default_room();
    set.angles = {0.0};
    set.irs = {ImpulseResponse{{0.8, 0.1, 0.05}, x.sample_rate}};
    const AudioBuffer blended = apply_oscillation(x, set, {5.0, 1});
    const AudioBuffer plain = convolve(x, set.irs[0]);
    REQUIRE(blended.samples == plain.samples);
  }

  SECTION("identical IRs blend to the common convolution") {
    const ImpulseResponse ir{{0.6, -0.2, 0.1}, x.sample_rate};
    DirectionalRirSet set;
    set.room = default_room();
    set.angles = {0.0, 1.57, 3.14, 4.71};
    set.irs = {ir, ir, ir, ir};
    const AudioBuffer blended = apply_oscillation(x, set, {5.0, 4});
    const AudioBuffer plain = convolve(x, ir);
    REQUIRE(testsup::max_abs_diff(blended.samples, plain.samples) < 1e-12);
  }

  SECTION("two mics with scalar IRs follow the closed-form mix") {
    DirectionalRirSet set;
    set.room = default_room();
    set.angles = {0.0, 3.14159};
    set.irs = {ImpulseResponse{{1.0}, x.sample_rate}, ImpulseResponse{{0.5}, x.sample_rate}};
    const OscillationSchedule s{1.0, 2};
    const AudioBuffer blended = apply_oscillation(x, set, s);
    for (std::size_t i = 0; i < x.samples.size(); i += 97) {
      const auto w = oscillation_weights(s, static_cast<double>(i) / x.sample_rate);
      const double expect = (w[0] + 0.5 * w[1]) * x.samples[i];
      REQUIRE(blended.samples[i] == Approx(expect).margin(1e-9));
    }
  }
}

TEST_CASE("transient attenuation") {
  SECTION("alpha one is a bit-identical pass-through") {
    const AudioBuffer x = testsup::speech_like(0.5, 51);
    AttenuationConfig cfg;
    cfg.alpha = 1.0;
    cfg.select_prob = 1.0;
    const AudioBuffer y = apply_attenuation(x, cfg);
    REQUIRE(y.samples == x.samples);
  }

  SECTION("curve hits alpha at the center and the formula at the edges") {
    const std::size_t frame_len = 321;
    const auto curve = attenuation_curve(frame_len, 0.7);
    REQUIRE(curve.size() == frame_len);
    REQUIRE(curve[160] == 0.7);
    const double edge = 1.0 - 0.3 * std::exp(-4.0);
    REQUIRE(curve.front() == Approx(edge).margin(1e-9));
    REQUIRE(curve.back() == Approx(edge).margin(1e-9));
    REQUIRE(curve.front() == Approx(0.99451).margin(5e-6));
  }

  SECTION("selected frames multiply by the curve, unselected pass through") {
    AudioBuffer x;
    x.sample_rate = 16000;
    x.samples.assign(3 * 320, 1.0);
    AttenuationConfig cfg;
    cfg.frame_s = 0.02;
    cfg.alpha = 0.7;
    cfg.seed = 77;

    cfg.select_prob = 0.0;
    REQUIRE(apply_attenuation(x, cfg).samples == x.samples);

    cfg.select_prob = 1.0;
    const AudioBuffer y = apply_attenuation(x, cfg);
    const auto curve = attenuation_curve(320, 0.7);
    for (std::size_t f = 0; f < 3; ++f)
      for (std::size_t i = 0; i < 320; ++i)
        REQUIRE(y.samples[f * 320 + i] == curve[i]);
  }

  SECTION("partial trailing frame applies the curve prefix") {
    AudioBuffer x;
    x.sample_rate = 16000;
    x.samples.assign(320 + 100, 1.0);
    AttenuationConfig cfg;
    cfg.frame_s = 0.02;
    cfg.alpha = 0.6;
    cfg.select_prob = 1.0;
    const AudioBuffer y = apply_attenuation(x, cfg);
    const auto curve = attenuation_curve(320, 0.6);
    for (std::size_t i = 0; i < 100; ++i) REQUIRE(y.samples[320 + i] == curve[i]);
  }

  SECTION("selection frequency tracks the probability") {
    const std::uint64_t seeds[] = {0, 12345};
    for (std::uint64_t seed : seeds) {
      std::size_t selected = 0;
      for (std::uint64_t k = 0; k < 10000; ++k)
        if (attenuation_frame_selected(seed, k, 0.3)) ++selected;
      const double bound = 4.0 * std::sqrt(10000.0 * 0.3 * 0.7);
      REQUIRE(std::abs(static_cast<double>(selected) - 3000.0) <= bound);
    }
  }

  SECTION("selection is deterministic per seed and frame") {
    for (std::uint64_t k = 0; k < 50; ++k)
      REQUIRE(attenuation_frame_selected(9, k, 0.4) == attenuation_frame_selected(9, k, 0.4));
  }

  SECTION("energy ranking attenuates exactly the loudest frames") {
    AudioBuffer x;
    x.sample_rate = 16000;
    x.samples.assign(10 * 160, 0.01);
    const std::size_t loud[] = {2, 5, 7, 8};
    for (std::size_t f : loud)
      for (std::size_t i = 0; i < 160; ++i) x.samples[f * 160 + i] = 0.9;

    AttenuationConfig cfg;
    cfg.frame_s = 0.01;
    cfg.alpha = 0.5;
    cfg.select_prob = 0.4;
    cfg.selection = FrameSelection::energy_top;
    const AudioBuffer y = apply_attenuation(x, cfg);
    const auto curve = attenuation_curve(160, 0.5);
    for (std::size_t f = 0; f < 10; ++f) {
      const bool is_loud = std::find(std::begin(loud), std::end(loud), f) != std::end(loud);
      for (std::size_t i = 0; i < 160; ++i) {
        const double in = x.samples[f * 160 + i];
        const double out = y.samples[f * 160 + i];
        if (is_loud) REQUIRE(out == in * curve[i]);
        else REQUIRE(out == in);
      }
    }
  }

  SECTION("config validation") {
    AttenuationConfig cfg;
    cfg.alpha = 0.0;
    REQUIRE_THROWS_AS(validate_attenuation(cfg, 16000), Error);
    cfg.alpha = 0.7;
    cfg.select_prob = 1.5;
    REQUIRE_THROWS_AS(validate_attenuation(cfg, 16000), Error);
    cfg.select_prob = 0.3;
    cfg.frame_s = 0.0;
    REQUIRE_THROWS_AS(validate_attenuation(cfg, 16000), Error);
  }
}
