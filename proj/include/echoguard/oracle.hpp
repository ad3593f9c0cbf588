#pragma once

#include <atomic>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "echoguard/audio.hpp"
#include "echoguard/errors.hpp"
#include "echoguard/metrics/stoi.hpp"
#include "echoguard/metrics/wer.hpp"
#include "echoguard/wav.hpp"

namespace echoguard {

enum class OracleKind { external_command, mock };

// Uniform description of a transcription backend. External commands receive
// the audio as a WAV path substituted for `{audio}`, print a UTF-8 transcript
// on stdout, and exit 0 on success.
struct OracleSpec {
  OracleKind kind = OracleKind::mock;
  std::string command;  // external only; must contain {audio}
  double timeout_s = 30.0;
  bool concurrency_safe = false;
  std::string cache_dir;  // empty disables caching unless ECHOGUARD_CACHE is set
};

inline void validate_oracle(const OracleSpec& spec) {
  if (spec.kind == OracleKind::external_command && spec.command.find("{audio}") == std::string::npos)
    throw Error(ErrorKind::invalid_config, "external oracle command must contain {audio}");
  if (!(spec.timeout_s > 0.0))
    throw Error(ErrorKind::invalid_config, "oracle timeout_s must be positive");
}

// The ECHOGUARD_CACHE environment variable overrides the configured cache dir.
inline std::string effective_cache_dir(const OracleSpec& spec) {
  if (const char* env = std::getenv("ECHOGUARD_CACHE"); env != nullptr && env[0] != '\0')
    return env;
  return spec.cache_dir;
}

namespace detail {

inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a_str(const std::string& s, std::uint64_t h) {
  return fnv1a(s.data(), s.size(), h);
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline bool valid_utf8(const std::string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    if (c < 0x80) extra = 0;
    else if ((c & 0xE0) == 0xC0 && c >= 0xC2) extra = 1;
    else if ((c & 0xF0) == 0xE0) extra = 2;
    else if ((c & 0xF8) == 0xF0 && c <= 0xF4) extra = 3;
    else return false;
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k)
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    i += extra + 1;
  }
  return true;
}

inline std::string strip_trailing_whitespace(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r'))
    s.pop_back();
  return s;
}

}  // namespace detail

inline std::uint64_t audio_fingerprint(const AudioBuffer& audio) {
  std::uint64_t h = 14695981039346656037ULL;
  const std::int64_t rate = audio.sample_rate;
  h = detail::fnv1a(&rate, sizeof rate, h);
  h = detail::fnv1a(audio.samples.data(), audio.samples.size() * sizeof(double), h);
  return h;
}

// Cache key: backend identity plus audio content. `sample_tag` folds in the
// registration identity for backends whose answer depends on it (the mock).
inline std::string oracle_cache_key(const OracleSpec& spec, const AudioBuffer& audio,
                                    const std::string& sample_tag = {}) {
  std::uint64_t h = 14695981039346656037ULL;
  const char kind = spec.kind == OracleKind::mock ? 'm' : 'x';
  h = detail::fnv1a(&kind, 1, h);
  h = detail::fnv1a_str(spec.command, h);
  h = detail::fnv1a_str(sample_tag, h);
  const std::uint64_t content = audio_fingerprint(audio);
  h = detail::fnv1a(&content, sizeof content, h);
  return detail::hex64(h);
}

// One file per key, filename = hex hash, body = transcript. Writes go to a
// temp file first and land by rename, so concurrent readers never see a
// partial transcript.
class TranscriptCache {
 public:
  explicit TranscriptCache(std::string dir) : dir_(std::move(dir)) {}

  bool enabled() const { return !dir_.empty(); }

  std::optional<std::string> lookup(const std::string& key) const {
    if (!enabled()) return std::nullopt;
    std::ifstream in(std::filesystem::path(dir_) / key, std::ios::binary);
    if (!in) return std::nullopt;
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return body;
  }

  void store(const std::string& key, const std::string& transcript) const {
    if (!enabled()) return;
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    const fs::path final_path = fs::path(dir_) / key;
    const fs::path tmp_path =
        fs::path(dir_) / (key + ".tmp" + std::to_string(::getpid()));
    {
      std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorKind::unwritable_file, "cannot write cache file " + tmp_path.string());
      out << transcript;
    }
    fs::rename(tmp_path, final_path, ec);
    if (ec) {
      fs::remove(tmp_path, ec);
      throw Error(ErrorKind::unwritable_file, "cannot finalize cache file " + final_path.string());
    }
  }

 private:
  std::string dir_;
};

// Runs `command` under /bin/sh, captures stdout, and enforces the timeout
// with SIGKILL. Returns the transcript with trailing whitespace stripped.
inline std::string run_oracle_command(const std::string& command, double timeout_s) {
  int fds[2];
  if (::pipe(fds) != 0) throw Error(ErrorKind::oracle_failure, "pipe() failed");

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw Error(ErrorKind::oracle_failure, "fork() failed");
  }
  if (pid == 0) {
    ::dup2(fds[1], STDOUT_FILENO);
    ::close(fds[0]);
    ::close(fds[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fds[1]);

  std::string output;
  const auto deadline_ms = static_cast<long long>(timeout_s * 1000.0);
  long long waited_ms = 0;
  bool timed_out = false;
  char buf[4096];
  while (true) {
    struct pollfd pfd{fds[0], POLLIN, 0};
    const long long slice = std::min<long long>(100, deadline_ms - waited_ms);
    if (slice < 0) {
      timed_out = true;
      break;
    }
    const int rc = ::poll(&pfd, 1, static_cast<int>(slice));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (rc == 0) {
      waited_ms += slice;
      if (waited_ms >= deadline_ms) {
        timed_out = true;
        break;
      }
      continue;
    }
    const ssize_t got = ::read(fds[0], buf, sizeof buf);
    if (got > 0) {
      output.append(buf, static_cast<std::size_t>(got));
      continue;
    }
    break;  // EOF or read error
  }
  ::close(fds[0]);

  int status = 0;
  if (timed_out) {
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    throw Error(ErrorKind::oracle_timeout, "oracle command exceeded its timeout");
  }
  ::waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw Error(ErrorKind::oracle_failure, "oracle command exited with a failure status");
  if (!detail::valid_utf8(output))
    throw Error(ErrorKind::oracle_bad_output, "oracle output is not valid UTF-8");
  return detail::strip_trailing_whitespace(output);
}

// Deterministic stand-in for a real ASR system. Each registered sample's
// reference words own equal-duration slices of the clean clip; a word is
// transcribed when its slice survives degradation (segment STOI at or above
// the threshold).
struct MockSample {
  std::vector<std::string> words;
  AudioBuffer clean;
};

struct MockAsrConfig {
  double segment_stoi_threshold = 0.7;
  std::map<std::uint64_t, MockSample> samples;  // keyed by clean fingerprint

  void register_sample(const AudioBuffer& clean, const std::string& reference_text) {
    samples[audio_fingerprint(clean)] = MockSample{tokenize(reference_text), clean};
  }
};

namespace detail {

// Segment score in [0, 1]: STOI clamped to the unit interval; segments the
// metric cannot score (too short or silent) fall back to exact comparison.
inline double mock_segment_score(const AudioBuffer& clean_seg, const AudioBuffer& degraded_seg) {
  try {
    const double s = stoi(clean_seg, degraded_seg);
    return std::min(1.0, std::max(0.0, s));
  } catch (const Error&) {
    return clean_seg.samples == degraded_seg.samples ? 1.0 : 0.0;
  }
}

}  // namespace detail

inline std::vector<std::string> mock_transcribe(const MockAsrConfig& cfg,
                                                const AudioBuffer& clean,
                                                const AudioBuffer& degraded) {
  const auto it = cfg.samples.find(audio_fingerprint(clean));
  if (it == cfg.samples.end())
    throw Error(ErrorKind::unknown_sample, "clean audio does not match any registered sample");
  const MockSample& sample = it->second;
  const std::size_t n = clean.samples.size();
  if (sample.words.empty() || n == 0) return {};

  AudioBuffer deg = degraded;
  deg.sample_rate = clean.sample_rate;
  deg.samples.resize(n, 0.0);

  std::vector<std::string> out;
  const std::size_t w_count = sample.words.size();
  for (std::size_t k = 0; k < w_count; ++k) {
    const std::size_t begin = k * n / w_count;
    const std::size_t end = (k + 1) * n / w_count;
    AudioBuffer cs;
    cs.sample_rate = clean.sample_rate;
    cs.samples.assign(clean.samples.begin() + static_cast<long>(begin),
                      clean.samples.begin() + static_cast<long>(end));
    AudioBuffer ds;
    ds.sample_rate = clean.sample_rate;
    ds.samples.assign(deg.samples.begin() + static_cast<long>(begin),
                      deg.samples.begin() + static_cast<long>(end));
    if (detail::mock_segment_score(cs, ds) >= cfg.segment_stoi_threshold)
      out.push_back(sample.words[k]);
  }
  return out;
}

// Front door for both backends: cache lookup, backend dispatch, invocation
// counting. External backends are serialized unless OracleSpec marks them
// concurrency-safe.
class Transcriber {
 public:
  explicit Transcriber(OracleSpec spec, MockAsrConfig mock = {})
      : spec_(std::move(spec)), mock_(std::move(mock)), cache_(effective_cache_dir(spec_)) {
    validate_oracle(spec_);
  }

  void register_sample(const std::string& sample_id, const AudioBuffer& clean,
                       const std::string& reference_text) {
    std::lock_guard<std::mutex> lock(mu_);
    mock_.register_sample(clean, reference_text);
    clean_by_id_[sample_id] = clean;
  }

  const MockAsrConfig& mock_config() const { return mock_; }
  std::size_t backend_invocations() const { return invocations_.load(); }

  // `sample_id` selects the registered clean reference for the mock backend;
  // external commands ignore it.
  std::vector<std::string> transcribe(const std::string& sample_id, const AudioBuffer& audio) {
    const std::string tag = spec_.kind == OracleKind::mock ? sample_id : std::string{};
    const std::string key = oracle_cache_key(spec_, audio, tag);
    if (const auto hit = cache_.lookup(key)) return tokenize(*hit);

    std::string text;
    if (spec_.kind == OracleKind::mock) {
      AudioBuffer clean;
      {
        std::lock_guard<std::mutex> lock(mu_);
        const auto it = clean_by_id_.find(sample_id);
        if (it == clean_by_id_.end())
          throw Error(ErrorKind::unknown_sample, "no registered sample named " + sample_id);
        clean = it->second;
      }
      invocations_.fetch_add(1);
      const std::vector<std::string> words = mock_transcribe(mock_, clean, audio);
      text = join_tokens(words);
    } else {
      text = invoke_external(audio, key);
    }
    cache_.store(key, text);
    return tokenize(text);
  }

 private:
  std::string invoke_external(const AudioBuffer& audio, const std::string& key) {
    namespace fs = std::filesystem;
    const fs::path wav_path =
        fs::temp_directory_path() /
        ("echoguard-" + key + "-" + std::to_string(::getpid()) + ".wav");
    write_wav(audio, wav_path.string(), WavEncoding::pcm16);

    std::string command = spec_.command;
    const std::string placeholder = "{audio}";
    for (std::size_t pos = command.find(placeholder); pos != std::string::npos;
         pos = command.find(placeholder, pos)) {
      command.replace(pos, placeholder.size(), wav_path.string());
      pos += wav_path.string().size();
    }

    std::string text;
    try {
      if (spec_.concurrency_safe) {
        invocations_.fetch_add(1);
        text = run_oracle_command(command, spec_.timeout_s);
      } else {
        std::lock_guard<std::mutex> lock(backend_mu_);
        invocations_.fetch_add(1);
        text = run_oracle_command(command, spec_.timeout_s);
      }
    } catch (...) {
      std::error_code ec;
      fs::remove(wav_path, ec);
      throw;
    }
    std::error_code ec;
    fs::remove(wav_path, ec);
    return text;
  }

  OracleSpec spec_;
  MockAsrConfig mock_;
  TranscriptCache cache_;
  std::map<std::string, AudioBuffer> clean_by_id_;
  std::atomic<std::size_t> invocations_{0};
  std::mutex mu_;
  std::mutex backend_mu_;
};

}  // namespace echoguard
