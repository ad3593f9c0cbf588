#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "echoguard/audio.hpp"
#include "echoguard/errors.hpp"

namespace echoguard {

enum class WavEncoding { pcm16, float32 };

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void append_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

inline void append_u16le(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

}  // namespace detail

// Reads a RIFF/WAVE file holding PCM-16 or IEEE float-32 samples. Multi-channel
// input is downmixed by the arithmetic mean of the channels.
inline AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::missing_file, path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(ErrorKind::malformed_file, path.string() + " is not a RIFF/WAVE file");

  std::uint16_t format_tag = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t chunk_len = detail::read_u32le(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_len > bytes.size())
      throw Error(ErrorKind::malformed_file, path.string() + ": truncated chunk");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_len < 16)
        throw Error(ErrorKind::malformed_file, path.string() + ": short fmt chunk");
      format_tag = detail::read_u16le(bytes.data() + body);
      channels = detail::read_u16le(bytes.data() + body + 2);
      sample_rate = detail::read_u32le(bytes.data() + body + 4);
      bits = detail::read_u16le(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr)
    throw Error(ErrorKind::malformed_file, path.string() + ": missing fmt or data chunk");
  if (channels == 0 || sample_rate == 0)
    throw Error(ErrorKind::malformed_file, path.string() + ": bad fmt fields");

  WavEncoding enc;
  if (format_tag == 1 && bits == 16)
    enc = WavEncoding::pcm16;
  else if (format_tag == 3 && bits == 32)
    enc = WavEncoding::float32;
  else
    throw Error(ErrorKind::unsupported_encoding,
                path.string() + ": format tag " + std::to_string(format_tag) + ", " +
                    std::to_string(bits) + " bits");

  const std::size_t bytes_per = enc == WavEncoding::pcm16 ? 2 : 4;
  const std::size_t frame_bytes = bytes_per * channels;
  const std::size_t n_frames = data_len / frame_bytes;
  if (n_frames == 0) throw Error(ErrorKind::empty_audio, path.string());

  AudioBuffer out;
  out.sample_rate = static_cast<int>(sample_rate);
  out.samples.resize(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + f * frame_bytes + c * bytes_per;
      if (enc == WavEncoding::pcm16) {
        const std::int16_t v = static_cast<std::int16_t>(detail::read_u16le(p));
        acc += static_cast<double>(v) / 32768.0;
      } else {
        std::uint32_t u = detail::read_u32le(p);
        float fv;
        std::memcpy(&fv, &u, 4);
        acc += static_cast<double>(fv);
      }
    }
    out.samples[f] = acc / channels;
  }
  return out;
}

// Writes a mono WAV. pcm16 clamps amplitudes to [-1, 1) before quantization.
inline void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path,
                      WavEncoding encoding = WavEncoding::pcm16) {
  if (buffer.empty()) throw Error(ErrorKind::empty_audio, "refusing to write empty buffer");
  if (buffer.sample_rate <= 0)
    throw Error(ErrorKind::invalid_argument, "sample_rate must be positive");

  const std::uint16_t channels = 1;
  const std::uint16_t bits = encoding == WavEncoding::pcm16 ? 16 : 32;
  const std::uint16_t format_tag = encoding == WavEncoding::pcm16 ? 1 : 3;
  const std::uint32_t byte_rate = buffer.sample_rate * channels * bits / 8;
  const std::uint16_t block_align = channels * bits / 8;
  const std::uint32_t data_len = static_cast<std::uint32_t>(buffer.size() * bits / 8);

  std::vector<unsigned char> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::append_u32le(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  detail::append_u32le(out, 16);
  detail::append_u16le(out, format_tag);
  detail::append_u16le(out, channels);
  detail::append_u32le(out, static_cast<std::uint32_t>(buffer.sample_rate));
  detail::append_u32le(out, byte_rate);
  detail::append_u16le(out, block_align);
  detail::append_u16le(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::append_u32le(out, data_len);

  if (encoding == WavEncoding::pcm16) {
    for (double v : buffer.samples) {
      double clamped = std::clamp(v, -1.0, 32767.0 / 32768.0);
      auto q = static_cast<std::int16_t>(std::lrint(clamped * 32768.0));
      detail::append_u16le(out, static_cast<std::uint16_t>(q));
    }
  } else {
    for (double v : buffer.samples) {
      const float fv = static_cast<float>(v);
      std::uint32_t u;
      std::memcpy(&u, &fv, 4);
      detail::append_u32le(out, u);
    }
  }

  std::ofstream of(path, std::ios::binary | std::ios::trunc);
  if (!of) throw Error(ErrorKind::unwritable_file, path.string());
  of.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!of) throw Error(ErrorKind::unwritable_file, path.string());
}

}  // namespace echoguard
