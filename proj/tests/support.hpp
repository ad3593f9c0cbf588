#pragma once

#include <sys/wait.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <echoguard/echoguard.hpp>

namespace testsup {

using namespace echoguard;

inline constexpr double kTau = 6.283185307179586476925287;

// Broadband noise under a syllable-rate envelope; enough structure for the
// envelope-correlation metric to treat it as speech.
inline AudioBuffer speech_like(double seconds, std::uint64_t seed, int rate = 16000) {
  AudioBuffer out;
  out.sample_rate = rate;
  out.samples.resize(static_cast<std::size_t>(seconds * rate));
  SplitMix64 rng(seed);
  const double phase = rng.next_unit() * kTau;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    const double env = (0.3 + 0.35 * (1.0 + std::sin(kTau * 3.1 * t + phase))) *
                       (0.6 + 0.4 * std::sin(kTau * 0.7 * t));
    out.samples[i] = env * (rng.next_unit() * 2.0 - 1.0) * 0.45;
  }
  return out;
}

inline AudioBuffer white_noise(double seconds, std::uint64_t seed, int rate = 16000,
                               double amplitude = 0.3) {
  AudioBuffer out;
  out.sample_rate = rate;
  out.samples.resize(static_cast<std::size_t>(seconds * rate));
  SplitMix64 rng(seed);
  for (double& v : out.samples) v = (rng.next_unit() * 2.0 - 1.0) * amplitude;
  return out;
}

inline double rms_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::runtime_error("rms_diff needs equal lengths");
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc / static_cast<double>(a.size()));
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::runtime_error("max_abs_diff needs equal lengths");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("echoguard-test-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

// A clip per word list entry, named clipNN.wav / clipNN.txt.
inline std::vector<std::string> write_corpus(const std::filesystem::path& dir,
                                             const std::vector<std::string>& transcripts,
                                             double seconds, std::uint64_t seed,
                                             int rate = 16000) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < transcripts.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "clip%02zu", i);
    ids.emplace_back(name);
    write_wav(speech_like(seconds, seed + i, rate), dir / (ids.back() + ".wav"),
              WavEncoding::float32);
    spit(dir / (ids.back() + ".txt"), transcripts[i] + "\n");
  }
  return ids;
}

#ifdef ECHOGUARD_CLI_PATH

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline CliResult run_cli(const std::vector<std::string>& args, const TempDir& dir) {
  std::string cmd = ECHOGUARD_CLI_PATH;
  for (const std::string& a : args) cmd += " '" + a + "'";
  const std::string out_path = dir.str("cli_stdout.txt");
  const std::string err_path = dir.str("cli_stderr.txt");
  cmd += " >" + out_path + " 2>" + err_path;
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

#endif  // ECHOGUARD_CLI_PATH

}  // namespace testsup
