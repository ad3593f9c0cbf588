#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "echoguard/attenuation.hpp"
#include "echoguard/errors.hpp"
#include "echoguard/evolve.hpp"
#include "echoguard/jammer.hpp"
#include "echoguard/oracle.hpp"
#include "echoguard/oscillation.hpp"
#include "echoguard/room.hpp"
#include "echoguard/version.hpp"

namespace echoguard {

inline void to_json(nlohmann::json& j, const RoomConfig& room) {
  j = nlohmann::json{{"length_m", room.length_m},
                     {"width_m", room.width_m},
                     {"height_m", room.height_m},
                     {"mic_pos", room.mic_pos},
                     {"src_pos", room.src_pos},
                     {"absorption", room.absorption}};
}

inline void from_json(const nlohmann::json& j, RoomConfig& room) {
  const RoomConfig defaults = default_room();  // partial room objects inherit the rest
  room.length_m = j.value("length_m", defaults.length_m);
  room.width_m = j.value("width_m", defaults.width_m);
  room.height_m = j.value("height_m", defaults.height_m);
  room.mic_pos = j.value("mic_pos", defaults.mic_pos);
  room.src_pos = j.value("src_pos", defaults.src_pos);
  room.absorption = j.value("absorption", defaults.absorption);
}

inline void to_json(nlohmann::json& j, const OscillationSchedule& s) {
  j = nlohmann::json{{"rotation_hz", s.rotation_hz}, {"n_mics", s.n_mics}};
}

inline void from_json(const nlohmann::json& j, OscillationSchedule& s) {
  OscillationSchedule defaults;
  s.rotation_hz = j.value("rotation_hz", defaults.rotation_hz);
  s.n_mics = j.value("n_mics", defaults.n_mics);
}

inline void to_json(nlohmann::json& j, const AttenuationConfig& cfg) {
  j = nlohmann::json{
      {"frame_s", cfg.frame_s},
      {"select_prob", cfg.select_prob},
      {"alpha", cfg.alpha},
      {"seed", cfg.seed},
      {"selection", cfg.selection == FrameSelection::random ? "random" : "energy_top"}};
}

inline void from_json(const nlohmann::json& j, AttenuationConfig& cfg) {
  AttenuationConfig defaults;
  cfg.frame_s = j.value("frame_s", defaults.frame_s);
  cfg.select_prob = j.value("select_prob", defaults.select_prob);
  cfg.alpha = j.value("alpha", defaults.alpha);
  cfg.seed = j.value("seed", defaults.seed);
  const std::string sel = j.value("selection", std::string("random"));
  if (sel == "random") cfg.selection = FrameSelection::random;
  else if (sel == "energy_top") cfg.selection = FrameSelection::energy_top;
  else throw Error(ErrorKind::invalid_config, "selection must be 'random' or 'energy_top'");
}

inline void to_json(nlohmann::json& j, const JammerConfig& cfg) {
  j = nlohmann::json{
      {"room", cfg.room},
      {"n_mics", cfg.n_mics},
      {"oscillation", nlohmann::json{{"rotation_hz", cfg.oscillation.rotation_hz}}},
      {"attenuation", cfg.attenuation},
      {"sample_rate", cfg.sample_rate},
      {"max_order", cfg.max_order},
      {"output_gain_mode", cfg.gain_mode == GainMode::none ? "none" : "peak-normalize"}};
}

inline void from_json(const nlohmann::json& j, JammerConfig& cfg) {
  JammerConfig defaults;
  cfg.room = j.value("room", defaults.room);
  cfg.n_mics = j.value("n_mics", defaults.n_mics);
  if (j.contains("oscillation"))
    cfg.oscillation.rotation_hz =
        j.at("oscillation").value("rotation_hz", defaults.oscillation.rotation_hz);
  cfg.attenuation = j.value("attenuation", defaults.attenuation);
  cfg.sample_rate = j.value("sample_rate", defaults.sample_rate);
  cfg.max_order = j.value("max_order", defaults.max_order);
  const std::string mode = j.value("output_gain_mode", std::string("none"));
  if (mode == "none") cfg.gain_mode = GainMode::none;
  else if (mode == "peak-normalize") cfg.gain_mode = GainMode::peak_normalize;
  else throw Error(ErrorKind::invalid_config, "output_gain_mode must be 'none' or 'peak-normalize'");
  cfg.oscillation.n_mics = cfg.n_mics;
}

inline void to_json(nlohmann::json& j, const EaConfig& cfg) {
  j = nlohmann::json{{"population_size", cfg.population_size},
                     {"generations", cfg.generations},
                     {"crossover_rate", cfg.crossover_rate},
                     {"mutation_rate", cfg.mutation_rate},
                     {"tournament_size", cfg.tournament_size},
                     {"mutation_sigma", cfg.mutation_sigma},
                     {"stoi_floor", cfg.stoi_floor},
                     {"stoi_penalty", cfg.stoi_penalty},
                     {"seed", cfg.seed},
                     {"workers", cfg.workers}};
}

inline void from_json(const nlohmann::json& j, EaConfig& cfg) {
  EaConfig defaults;
  cfg.population_size = j.value("population_size", defaults.population_size);
  cfg.generations = j.value("generations", defaults.generations);
  cfg.crossover_rate = j.value("crossover_rate", defaults.crossover_rate);
  cfg.mutation_rate = j.value("mutation_rate", defaults.mutation_rate);
  cfg.tournament_size = j.value("tournament_size", defaults.tournament_size);
  cfg.mutation_sigma = j.value("mutation_sigma", defaults.mutation_sigma);
  cfg.stoi_floor = j.value("stoi_floor", defaults.stoi_floor);
  cfg.stoi_penalty = j.value("stoi_penalty", defaults.stoi_penalty);
  cfg.seed = j.value("seed", defaults.seed);
  cfg.workers = j.value("workers", defaults.workers);
}

inline void to_json(nlohmann::json& j, const GenomeBounds& b) {
  j = nlohmann::json{{"lo", b.lo}, {"hi", b.hi}};
}

inline void from_json(const nlohmann::json& j, GenomeBounds& b) {
  const GenomeBounds defaults = GenomeBounds::defaults();
  b.lo = j.value("lo", defaults.lo);
  b.hi = j.value("hi", defaults.hi);
}

inline void to_json(nlohmann::json& j, const OracleSpec& spec) {
  j = nlohmann::json{
      {"kind", spec.kind == OracleKind::mock ? "mock" : "external-command"},
      {"command", spec.command},
      {"timeout_s", spec.timeout_s},
      {"concurrency_safe", spec.concurrency_safe},
      {"cache_dir", spec.cache_dir}};
}

inline void from_json(const nlohmann::json& j, OracleSpec& spec) {
  OracleSpec defaults;
  const std::string kind = j.value("kind", std::string("mock"));
  if (kind == "mock") spec.kind = OracleKind::mock;
  else if (kind == "external-command") spec.kind = OracleKind::external_command;
  else throw Error(ErrorKind::invalid_config, "oracle kind must be 'mock' or 'external-command'");
  spec.command = j.value("command", defaults.command);
  spec.timeout_s = j.value("timeout_s", defaults.timeout_s);
  spec.concurrency_safe = j.value("concurrency_safe", defaults.concurrency_safe);
  spec.cache_dir = j.value("cache_dir", defaults.cache_dir);
}

// Written next to every CLI run's outputs; feeding it back as the config
// reproduces the run.
struct RunManifest {
  std::string subcommand;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string version = kVersion;
  double duration_s = 0.0;
};

inline void to_json(nlohmann::json& j, const RunManifest& m) {
  j = nlohmann::json{{"subcommand", m.subcommand}, {"config", m.config},
                     {"seed", m.seed},           {"inputs", m.inputs},
                     {"outputs", m.outputs},     {"version", m.version},
                     {"duration_s", m.duration_s}};
}

inline void from_json(const nlohmann::json& j, RunManifest& m) {
  m.subcommand = j.value("subcommand", std::string{});
  m.config = j.value("config", nlohmann::json::object());
  m.seed = j.value("seed", std::uint64_t{0});
  m.inputs = j.value("inputs", std::vector<std::string>{});
  m.outputs = j.value("outputs", std::vector<std::string>{});
  m.version = j.value("version", std::string{});
  m.duration_s = j.value("duration_s", 0.0);
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::missing_file, "cannot open " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_file, path + ": " + e.what());
  }
}

inline void save_text_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::unwritable_file, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorKind::unwritable_file, "failed while writing " + path);
}

inline void save_json_file(const std::string& path, const nlohmann::json& j) {
  save_text_file(path, j.dump(2) + "\n");
}

}  // namespace echoguard
