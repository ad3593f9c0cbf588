// echoguard: adversarial audio jamming CLI.
//
// Subcommands: jam, rir, optimize, evaluate, metrics. Every run writes a
// manifest JSON next to its primary output; feeding that manifest back via
// --config reproduces the run. Exit codes: 0 success, 1 invalid
// configuration or arguments, 2 I/O or oracle failure.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <echoguard/echoguard.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace echoguard;

// A config argument may be a plain config file or a manifest from a previous
// run; manifests carry the resolved config under "config".
// A config file that exists but does not parse is a configuration defect,
// not an I/O failure, so it maps to the config exit code.
json load_config_json(const std::string& path) {
  json j;
  try {
    j = load_json_file(path);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::malformed_file)
      throw Error(ErrorKind::invalid_config, e.what());
    throw;
  }
  if (j.is_object() && j.contains("subcommand") && j.contains("config")) return j.at("config");
  return j;
}

// Optional overrides shared by the subcommands that build a jammer config.
struct ConfigFlags {
  std::string config_path;
  std::optional<double> room_length, room_width, room_height, absorption;
  std::vector<double> mic_pos, src_pos;
  std::optional<int> n_mics, sample_rate, max_order;
  std::optional<double> rotation_hz, frame_s, select_prob, alpha;
  std::optional<std::string> selection, gain_mode;
  std::optional<std::uint64_t> seed;
};

void add_room_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--config", f.config_path, "config JSON (or a previous run's manifest)");
  cmd->add_option("--room.length_m", f.room_length, "room length in meters");
  cmd->add_option("--room.width_m", f.room_width, "room width in meters");
  cmd->add_option("--room.height_m", f.room_height, "room height in meters");
  cmd->add_option("--room.mic_pos", f.mic_pos, "microphone position x y z")->expected(3);
  cmd->add_option("--room.src_pos", f.src_pos, "source position x y z")->expected(3);
  cmd->add_option("--room.absorption", f.absorption, "wall absorption in [0, 1]");
  cmd->add_option("--sample-rate", f.sample_rate, "processing sample rate in Hz");
  cmd->add_option("--max-order", f.max_order, "image-source reflection budget");
}

void add_jam_flags(CLI::App* cmd, ConfigFlags& f) {
  add_room_flags(cmd, f);
  cmd->add_option("--n-mics", f.n_mics, "simulated microphone count (>= 1)");
  cmd->add_option("--oscillation.rotation_hz", f.rotation_hz, "mic rotation rate in Hz");
  cmd->add_option("--attenuation.frame_s", f.frame_s, "attenuation frame length in seconds");
  cmd->add_option("--attenuation.select_prob", f.select_prob, "frame selection probability");
  cmd->add_option("--attenuation.alpha", f.alpha, "attenuation floor in (0, 1]");
  cmd->add_option("--attenuation.selection", f.selection, "frame selection: random|energy_top");
  cmd->add_option("--gain-mode", f.gain_mode, "output gain: none|peak-normalize");
  cmd->add_option("--seed", f.seed, "attenuation RNG seed");
}

JammerConfig resolve_config(const ConfigFlags& f) {
  JammerConfig cfg;
  if (!f.config_path.empty()) {
    json j = load_config_json(f.config_path);
    if (j.is_object() && j.contains("base")) j = j.at("base");
    if (j.is_object() && j.contains("length_m") && !j.contains("room"))
      j = json{{"room", j}};  // bare room object
    cfg = j.get<JammerConfig>();
  }
  if (f.room_length) cfg.room.length_m = *f.room_length;
  if (f.room_width) cfg.room.width_m = *f.room_width;
  if (f.room_height) cfg.room.height_m = *f.room_height;
  if (!f.mic_pos.empty()) cfg.room.mic_pos = {f.mic_pos[0], f.mic_pos[1], f.mic_pos[2]};
  if (!f.src_pos.empty()) cfg.room.src_pos = {f.src_pos[0], f.src_pos[1], f.src_pos[2]};
  if (f.absorption) cfg.room.absorption = *f.absorption;
  if (f.n_mics) cfg.n_mics = *f.n_mics;
  if (f.sample_rate) cfg.sample_rate = *f.sample_rate;
  if (f.max_order) cfg.max_order = *f.max_order;
  if (f.rotation_hz) cfg.oscillation.rotation_hz = *f.rotation_hz;
  if (f.frame_s) cfg.attenuation.frame_s = *f.frame_s;
  if (f.select_prob) cfg.attenuation.select_prob = *f.select_prob;
  if (f.alpha) cfg.attenuation.alpha = *f.alpha;
  if (f.selection) {
    if (*f.selection == "random") cfg.attenuation.selection = FrameSelection::random;
    else if (*f.selection == "energy_top") cfg.attenuation.selection = FrameSelection::energy_top;
    else throw Error(ErrorKind::invalid_config, "selection must be 'random' or 'energy_top'");
  }
  if (f.gain_mode) {
    if (*f.gain_mode == "none") cfg.gain_mode = GainMode::none;
    else if (*f.gain_mode == "peak-normalize") cfg.gain_mode = GainMode::peak_normalize;
    else throw Error(ErrorKind::invalid_config, "gain mode must be 'none' or 'peak-normalize'");
  }
  if (f.seed) cfg.attenuation.seed = *f.seed;
  cfg.oscillation.n_mics = cfg.n_mics;
  return cfg;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void write_manifest(const std::string& subcommand, json config, std::uint64_t seed,
                    std::vector<std::string> inputs, std::vector<std::string> outputs,
                    const Stopwatch& watch) {
  RunManifest m;
  m.subcommand = subcommand;
  m.config = std::move(config);
  m.seed = seed;
  m.inputs = std::move(inputs);
  m.outputs = std::move(outputs);
  m.duration_s = watch.seconds();
  save_json_file(m.outputs.front() + ".manifest.json", json(m));
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::missing_file, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Corpus directory: *.wav clips, each with a sibling .txt reference
// transcript. Clips are resampled to the processing rate on load.
struct LoadedCorpus {
  std::shared_ptr<std::vector<CorpusClip>> clips = std::make_shared<std::vector<CorpusClip>>();
  std::vector<std::pair<std::string, std::string>> raw_text;  // id -> reference text
};

LoadedCorpus load_corpus(const std::string& dir, int sample_rate) {
  if (!fs::is_directory(dir))
    throw Error(ErrorKind::missing_file, "corpus directory not found: " + dir);
  std::vector<fs::path> wavs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".wav")
      wavs.push_back(entry.path());
  std::sort(wavs.begin(), wavs.end());
  if (wavs.empty()) throw Error(ErrorKind::missing_file, "no .wav clips in " + dir);

  LoadedCorpus corpus;
  for (const fs::path& wav_path : wavs) {
    fs::path txt_path = wav_path;
    txt_path.replace_extension(".txt");
    if (!fs::exists(txt_path))
      throw Error(ErrorKind::missing_file, "missing transcript " + txt_path.string());
    const std::string text = read_text_file(txt_path);
    CorpusClip clip;
    clip.id = wav_path.stem().string();
    clip.clean = resample(read_wav(wav_path), sample_rate);
    clip.reference = tokenize(text);
    corpus.raw_text.emplace_back(clip.id, text);
    corpus.clips->push_back(std::move(clip));
  }
  return corpus;
}

std::shared_ptr<Transcriber> make_transcriber(const OracleSpec& spec, const LoadedCorpus& corpus) {
  auto oracle = std::make_shared<Transcriber>(spec);
  if (spec.kind == OracleKind::mock) {
    for (std::size_t i = 0; i < corpus.clips->size(); ++i)
      oracle->register_sample((*corpus.clips)[i].id, (*corpus.clips)[i].clean,
                              corpus.raw_text[i].second);
  }
  return oracle;
}

// Ratings CSV: header `sample_id,pleasantness,clarity`, one row per sample.
std::map<std::string, std::pair<double, double>> load_ratings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::missing_file, "cannot open ratings file " + path);
  auto split = [](const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
  };
  auto strip_cr = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
    return s;
  };

  std::string line;
  if (!std::getline(in, line) || split(strip_cr(line)) !=
      std::vector<std::string>{"sample_id", "pleasantness", "clarity"})
    throw Error(ErrorKind::malformed_file,
                "ratings header must be 'sample_id,pleasantness,clarity'");
  std::map<std::string, std::pair<double, double>> ratings;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != 3)
      throw Error(ErrorKind::malformed_file, "ratings row needs 3 fields: " + line);
    try {
      ratings[fields[0]] = {std::stod(fields[1]), std::stod(fields[2])};
    } catch (const std::exception&) {
      throw Error(ErrorKind::malformed_file, "non-numeric rating in row: " + line);
    }
  }
  return ratings;
}

// Report base path -> (csv path, json path). A .csv or .json base names its
// sibling by swapping the extension; anything else gets both appended.
std::pair<std::string, std::string> report_paths(const std::string& base) {
  fs::path p(base);
  if (p.extension() == ".csv") return {base, p.replace_extension(".json").string()};
  if (p.extension() == ".json") return {fs::path(base).replace_extension(".csv").string(), base};
  return {base + ".csv", base + ".json"};
}

// --- jam ------------------------------------------------------------------

int cmd_jam(const ConfigFlags& flags, const std::string& input, const std::string& output,
            bool stream, double frame_ms, bool latency_report, const std::string& encoding) {
  const Stopwatch watch;
  JammerConfig cfg = resolve_config(flags);
  validate_jammer(cfg);

  WavEncoding enc;
  if (encoding == "pcm16") enc = WavEncoding::pcm16;
  else if (encoding == "float32") enc = WavEncoding::float32;
  else throw Error(ErrorKind::invalid_config, "encoding must be 'pcm16' or 'float32'");

  AudioBuffer in = read_wav(input);
  if (in.sample_rate != cfg.sample_rate) in = resample(in, cfg.sample_rate);

  if (latency_report) {
    const StreamJammer probe(cfg);
    const json report{{"block_samples", probe.block_samples()},
                      {"tail_samples", probe.tail_samples()},
                      {"latency_samples", probe.latency_samples()},
                      {"latency_s", static_cast<double>(probe.latency_samples()) /
                                        cfg.sample_rate}};
    std::cout << report.dump(2) << "\n";
  }

  AudioBuffer out;
  if (stream) {
    const auto frame_len = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(frame_ms / 1000.0 * cfg.sample_rate)));
    out = process_stream(in, cfg, frame_len);
  } else {
    out = echoguard::echoguard(in, cfg);
  }
  write_wav(out, output, enc);
  write_manifest("jam", json(cfg), cfg.attenuation.seed, {input}, {output}, watch);
  std::cout << "wrote " << output << " (" << out.samples.size() << " samples at "
            << out.sample_rate << " Hz)\n";
  return 0;
}

// --- rir ------------------------------------------------------------------

int cmd_rir(const ConfigFlags& flags, const std::string& output) {
  const Stopwatch watch;
  const JammerConfig cfg = resolve_config(flags);
  detail::require_valid(cfg.room);

  const ImpulseResponse rir = generate_rir(cfg.room, cfg.sample_rate, cfg.max_order);
  write_wav(AudioBuffer{rir.taps, rir.sample_rate}, output, WavEncoding::float32);

  const double distance = direct_path_distance(cfg.room);
  const json sidecar{{"room", cfg.room},
                     {"sample_rate", cfg.sample_rate},
                     {"max_order", cfg.max_order},
                     {"tap_count", rir.taps.size()},
                     {"direct_path_distance_m", distance},
                     {"direct_path_delay_samples",
                      std::llround(distance / kSpeedOfSound * cfg.sample_rate)},
                     {"duration_s", static_cast<double>(rir.taps.size()) / cfg.sample_rate}};
  const std::string sidecar_path = fs::path(output).replace_extension(".json").string();
  save_json_file(sidecar_path, sidecar);
  write_manifest("rir", json(cfg), 0, {}, {output, sidecar_path}, watch);
  std::cout << "wrote " << output << " (" << rir.taps.size() << " taps)\n";
  return 0;
}

// --- optimize ---------------------------------------------------------------

int cmd_optimize(const ConfigFlags& flags, const std::string& corpus_dir,
                 const std::string& best_path, const std::string& history_path,
                 const std::string& oracle_path, const std::string& ea_path,
                 std::optional<int> population, std::optional<int> generations,
                 std::optional<int> workers) {
  const Stopwatch watch;
  const JammerConfig base = resolve_config(flags);

  EaConfig ea;
  GenomeBounds bounds = GenomeBounds::defaults();
  if (!ea_path.empty()) {
    const json j = load_config_json(ea_path);
    ea = j.get<EaConfig>();
    bounds = j.value("bounds", bounds);
  } else if (!flags.config_path.empty()) {
    const json j = load_config_json(flags.config_path);
    if (j.is_object() && j.contains("ea")) ea = j.at("ea").get<EaConfig>();
    if (j.is_object() && j.contains("bounds")) bounds = j.at("bounds").get<GenomeBounds>();
  }
  if (population) ea.population_size = *population;
  if (generations) ea.generations = *generations;
  if (workers) ea.workers = *workers;
  if (flags.seed) ea.seed = *flags.seed;
  validate_ea(ea);
  validate_bounds(bounds);

  OracleSpec spec;
  if (!oracle_path.empty()) spec = load_config_json(oracle_path).get<OracleSpec>();
  else if (!flags.config_path.empty()) {
    const json j = load_config_json(flags.config_path);
    if (j.is_object() && j.contains("oracle")) spec = j.at("oracle").get<OracleSpec>();
  }

  const LoadedCorpus corpus = load_corpus(corpus_dir, base.sample_rate);
  const auto oracle = make_transcriber(spec, corpus);
  const FitnessEvaluator evaluator = make_audio_evaluator(corpus.clips, oracle, base);
  const EvolveResult result = evolve(ea, bounds, evaluator);

  JammerConfig best_cfg = base;
  best_cfg.room = result.best.genome.to_room();
  save_json_file(best_path, json(best_cfg));
  save_text_file(history_path, history_to_csv(result.history));
  write_manifest("optimize",
                 json{{"base", base}, {"ea", ea}, {"bounds", bounds}, {"oracle", spec}},
                 ea.seed, {corpus_dir}, {best_path, history_path}, watch);

  std::cout << "evaluations " << result.evaluations << ", best fitness "
            << result.best.fitness << " (wer " << result.best.mean_wer << ", stoi "
            << result.best.mean_stoi << ")\n";
  if (result.aborted) {
    std::cerr << "error: search aborted, too many oracle failures in one generation\n";
    return 2;
  }
  std::cout << "wrote " << best_path << " and " << history_path << "\n";
  return 0;
}

// --- evaluate ---------------------------------------------------------------

int cmd_evaluate(const ConfigFlags& flags, const std::string& corpus_dir,
                 const std::string& report_base, const std::string& oracle_path,
                 const std::string& ratings_path, int workers) {
  const Stopwatch watch;
  const JammerConfig cfg = resolve_config(flags);
  if (workers < 1) throw Error(ErrorKind::invalid_config, "workers must be >= 1");

  OracleSpec spec;
  if (!oracle_path.empty()) spec = load_config_json(oracle_path).get<OracleSpec>();
  const LoadedCorpus corpus = load_corpus(corpus_dir, cfg.sample_rate);
  const auto oracle = make_transcriber(spec, corpus);
  std::map<std::string, std::pair<double, double>> ratings;
  if (!ratings_path.empty()) ratings = load_ratings(ratings_path);

  const Jammer jam(cfg);
  const std::size_t delay = jam.direct_path_delay_samples();
  const auto& clips = *corpus.clips;
  std::vector<EvalRecord> records(clips.size());

  auto process = [&](std::size_t first) {
    for (std::size_t i = first; i < clips.size(); i += static_cast<std::size_t>(workers)) {
      const CorpusClip& clip = clips[i];
      try {
        const AudioBuffer jammed = jam.process(clip.clean);
        const AudioBuffer aligned = shifted_left(jammed, delay, clip.clean.samples.size());
        const auto clean_tx = oracle->transcribe(clip.id, clip.clean);
        const auto jammed_tx = oracle->transcribe(clip.id, aligned);
        std::optional<double> pleasantness, clarity;
        if (const auto it = ratings.find(clip.id); it != ratings.end()) {
          pleasantness = it->second.first;
          clarity = it->second.second;
        }
        records[i] = make_record(clip.id, clean_tx, jammed_tx, pleasantness, clarity);
      } catch (const Error& e) {
        records[i].sample_id = clip.id;
        records[i].error = e.what();
      }
    }
  };
  if (workers == 1) {
    process(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(process, static_cast<std::size_t>(w));
    for (auto& t : pool) t.join();
  }

  const auto [csv_path, json_path] = report_paths(report_base);
  save_text_file(csv_path, report_to_csv(records));
  const json report = report_to_json(records);  // throws if every sample failed
  save_json_file(json_path, report);
  write_manifest("evaluate", json(cfg), cfg.attenuation.seed, {corpus_dir},
                 {csv_path, json_path}, watch);

  const json& summary = report.at("summary");
  std::cout << "samples " << summary.at("n_samples") << " (failed " << summary.at("n_failed")
            << "), mean wer " << summary.at("mean_wer").get<double>() << ", mean cosine "
            << summary.at("mean_cosine").get<double>() << ", success rate "
            << summary.at("success_rate").get<double>() << "\n";
  std::cout << "wrote " << csv_path << " and " << json_path << "\n";
  return 0;
}

// --- metrics ----------------------------------------------------------------

struct MetricRow {
  std::string id;
  std::optional<WerBreakdown> werb;
  std::optional<double> cosine, stoi_score, pleasantness, clarity, utility;
};

int cmd_metrics(const std::string& report_base, const std::vector<std::string>& clean_wavs,
                const std::vector<std::string>& jammed_wavs,
                const std::vector<std::string>& ref_txts,
                const std::vector<std::string>& hyp_txts, const std::string& ratings_path) {
  const Stopwatch watch;
  if (clean_wavs.size() != jammed_wavs.size())
    throw Error(ErrorKind::invalid_argument, "--clean and --jammed counts must match");
  if (ref_txts.size() != hyp_txts.size())
    throw Error(ErrorKind::invalid_argument, "--ref and --hyp counts must match");
  if (clean_wavs.empty() && ref_txts.empty())
    throw Error(ErrorKind::invalid_argument,
                "metrics needs at least one WAV pair or transcript pair");
  std::map<std::string, std::pair<double, double>> ratings;
  if (!ratings_path.empty()) ratings = load_ratings(ratings_path);

  const std::size_t n_rows = std::max(clean_wavs.size(), ref_txts.size());
  std::vector<MetricRow> rows(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) {
    MetricRow& row = rows[i];
    if (i < ref_txts.size()) {
      row.id = fs::path(ref_txts[i]).stem().string();
      const auto ref = tokenize(read_text_file(ref_txts[i]));
      const auto hyp = tokenize(read_text_file(hyp_txts[i]));
      row.werb = wer(ref, hyp);
      row.cosine = transcript_cosine(ref, hyp);
    }
    if (i < clean_wavs.size()) {
      if (row.id.empty()) row.id = fs::path(clean_wavs[i]).stem().string();
      const AudioBuffer clean = read_wav(clean_wavs[i]);
      AudioBuffer jammed = read_wav(jammed_wavs[i]);
      if (jammed.sample_rate != clean.sample_rate) jammed = resample(jammed, clean.sample_rate);
      row.stoi_score = stoi(clean, jammed);
    }
    if (const auto it = ratings.find(row.id); it != ratings.end()) {
      row.pleasantness = it->second.first;
      row.clarity = it->second.second;
      if (row.cosine) row.utility = utility_index(*row.pleasantness, *row.clarity, *row.cosine);
    }
  }

  auto mean_of = [&](auto pick) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (const MetricRow& row : rows)
      if (const auto v = pick(row)) {
        sum += *v;
        ++n;
      }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  const auto mean_wer = mean_of([](const MetricRow& r) -> std::optional<double> {
    if (r.werb) return r.werb->wer;
    return std::nullopt;
  });
  const auto mean_cosine = mean_of([](const MetricRow& r) { return r.cosine; });
  const auto mean_stoi = mean_of([](const MetricRow& r) { return r.stoi_score; });
  const auto mean_utility = mean_of([](const MetricRow& r) { return r.utility; });
  std::optional<double> success_rate;
  if (mean_cosine) {
    std::size_t below = 0, total = 0;
    for (const MetricRow& row : rows)
      if (row.cosine) {
        ++total;
        if (*row.cosine < 0.5) ++below;
      }
    success_rate = static_cast<double>(below) / static_cast<double>(total);
  }

  std::ostringstream csv;
  csv << "sample_id,wer,cosine,stoi,pleasantness,clarity,utility\n";
  auto cell = [](const std::optional<double>& v) {
    return v ? detail::format_double(*v) : std::string{};
  };
  json samples = json::array();
  for (const MetricRow& row : rows) {
    const std::optional<double> wer_v =
        row.werb ? std::optional<double>(row.werb->wer) : std::nullopt;
    csv << detail::csv_field(row.id) << ',' << cell(wer_v) << ',' << cell(row.cosine) << ','
        << cell(row.stoi_score) << ',' << cell(row.pleasantness) << ',' << cell(row.clarity)
        << ',' << cell(row.utility) << '\n';
    json sample{{"sample_id", row.id}};
    if (row.werb) {
      sample["wer"] = row.werb->wer;
      sample["substitutions"] = row.werb->substitutions;
      sample["deletions"] = row.werb->deletions;
      sample["insertions"] = row.werb->insertions;
    }
    if (row.cosine) sample["cosine"] = *row.cosine;
    if (row.stoi_score) sample["stoi"] = *row.stoi_score;
    if (row.pleasantness) sample["pleasantness"] = *row.pleasantness;
    if (row.clarity) sample["clarity"] = *row.clarity;
    if (row.utility) sample["utility"] = *row.utility;
    samples.push_back(std::move(sample));
  }
  json summary{{"n_rows", n_rows}};
  if (mean_wer) summary["mean_wer"] = *mean_wer;
  if (mean_cosine) summary["mean_cosine"] = *mean_cosine;
  if (mean_stoi) summary["mean_stoi"] = *mean_stoi;
  if (mean_utility) summary["mean_utility"] = *mean_utility;
  if (success_rate) summary["success_rate"] = *success_rate;

  const auto [csv_path, json_path] = report_paths(report_base);
  save_text_file(csv_path, csv.str());
  save_json_file(json_path, json{{"summary", summary}, {"samples", samples}});

  std::vector<std::string> inputs;
  for (const auto& p : clean_wavs) inputs.push_back(p);
  for (const auto& p : jammed_wavs) inputs.push_back(p);
  for (const auto& p : ref_txts) inputs.push_back(p);
  for (const auto& p : hyp_txts) inputs.push_back(p);
  write_manifest("metrics", json{{"ratings", ratings_path}}, 0, inputs, {csv_path, json_path},
                 watch);
  std::cout << summary.dump() << "\n";
  std::cout << "wrote " << csv_path << " and " << json_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial audio jamming toolkit"};
  app.require_subcommand(1);

  // jam
  auto* jam = app.add_subcommand("jam", "transform a WAV through the jamming pipeline");
  ConfigFlags jam_flags;
  std::string jam_input, jam_output;
  bool jam_stream = false, jam_latency = false;
  double jam_frame_ms = 10.0;
  std::string jam_encoding = "pcm16";
  jam->add_option("input", jam_input, "input WAV")->required();
  jam->add_option("output", jam_output, "output WAV")->required();
  add_jam_flags(jam, jam_flags);
  jam->add_flag("--stream", jam_stream, "process through the streaming path");
  jam->add_option("--frame-ms", jam_frame_ms, "streaming frame length in milliseconds");
  jam->add_flag("--latency-report", jam_latency, "print streaming latency as JSON");
  jam->add_option("--encoding", jam_encoding, "output encoding: pcm16|float32");

  // rir
  auto* rir = app.add_subcommand("rir", "synthesize a room impulse response");
  ConfigFlags rir_flags;
  std::string rir_output;
  rir->add_option("output", rir_output, "output WAV (float32), JSON sidecar beside it")
      ->required();
  add_room_flags(rir, rir_flags);

  // optimize
  auto* opt = app.add_subcommand("optimize", "evolve a room configuration against a corpus");
  ConfigFlags opt_flags;
  std::string opt_corpus, opt_best = "best_config.json", opt_history = "history.csv";
  std::string opt_oracle, opt_ea;
  std::optional<int> opt_population, opt_generations, opt_workers;
  opt->add_option("corpus", opt_corpus, "directory of WAV clips with .txt transcripts")
      ->required();
  add_jam_flags(opt, opt_flags);
  opt->add_option("--best", opt_best, "output path for the winning config JSON");
  opt->add_option("--history", opt_history, "output path for the per-generation CSV");
  opt->add_option("--oracle", opt_oracle, "oracle spec JSON");
  opt->add_option("--ea", opt_ea, "search config JSON");
  opt->add_option("--population", opt_population, "population size override");
  opt->add_option("--generations", opt_generations, "generation count override");
  opt->add_option("--workers", opt_workers, "parallel fitness workers");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "jam a corpus and report transcription metrics");
  ConfigFlags eval_flags;
  std::string eval_corpus, eval_report, eval_oracle, eval_ratings;
  int eval_workers = 1;
  eval->add_option("corpus", eval_corpus, "directory of WAV clips with .txt transcripts")
      ->required();
  eval->add_option("report", eval_report, "report base path (writes .csv and .json)")
      ->required();
  add_jam_flags(eval, eval_flags);
  eval->add_option("--oracle", eval_oracle, "oracle spec JSON");
  eval->add_option("--ratings", eval_ratings, "ratings CSV: sample_id,pleasantness,clarity");
  eval->add_option("--workers", eval_workers, "parallel sample workers");

  // metrics
  auto* met = app.add_subcommand("metrics", "score WAV pairs and transcript pairs offline");
  std::string met_report, met_ratings;
  std::vector<std::string> met_clean, met_jammed, met_ref, met_hyp;
  met->add_option("report", met_report, "report base path (writes .csv and .json)")->required();
  met->add_option("--clean", met_clean, "clean WAV (repeatable, pairs with --jammed)");
  met->add_option("--jammed", met_jammed, "jammed WAV (repeatable)");
  met->add_option("--ref", met_ref, "reference transcript file (repeatable, pairs with --hyp)");
  met->add_option("--hyp", met_hyp, "hypothesis transcript file (repeatable)");
  met->add_option("--ratings", met_ratings, "ratings CSV: sample_id,pleasantness,clarity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (jam->parsed())
      return cmd_jam(jam_flags, jam_input, jam_output, jam_stream, jam_frame_ms, jam_latency,
                     jam_encoding);
    if (rir->parsed()) return cmd_rir(rir_flags, rir_output);
    if (opt->parsed())
      return cmd_optimize(opt_flags, opt_corpus, opt_best, opt_history, opt_oracle, opt_ea,
                          opt_population, opt_generations, opt_workers);
    if (eval->parsed())
      return cmd_evaluate(eval_flags, eval_corpus, eval_report, eval_oracle, eval_ratings,
                          eval_workers);
    if (met->parsed())
      return cmd_metrics(met_report, met_clean, met_jammed, met_ref, met_hyp, met_ratings);
  } catch (const echoguard::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const auto kind = e.kind();
    return (kind == echoguard::ErrorKind::invalid_config ||
            kind == echoguard::ErrorKind::invalid_argument)
               ? 1
               : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
