#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "echoguard/audio.hpp"
#include "echoguard/errors.hpp"
#include "echoguard/jammer.hpp"
#include "echoguard/metrics/stoi.hpp"
#include "echoguard/metrics/wer.hpp"
#include "echoguard/oracle.hpp"
#include "echoguard/rng.hpp"
#include "echoguard/room.hpp"

namespace echoguard {

inline constexpr int kGenomeSize = 10;

// r0..r2 room dimensions, r3..r5 microphone position, r6..r8 source
// position (meters), r9 absorption.
struct Genome {
  std::array<double, kGenomeSize> values{};

  RoomConfig to_room() const {
    RoomConfig room;
    room.length_m = values[0];
    room.width_m = values[1];
    room.height_m = values[2];
    room.mic_pos = {values[3], values[4], values[5]};
    room.src_pos = {values[6], values[7], values[8]};
    room.absorption = values[9];
    return room;
  }
};

struct GenomeBounds {
  std::array<double, kGenomeSize> lo{};
  std::array<double, kGenomeSize> hi{};

  // Dimensions span [2, 80] m (wide enough to admit hall-scale rooms),
  // positions the full box, absorption the unit interval.
  static GenomeBounds defaults() {
    GenomeBounds b;
    for (int i = 0; i < 3; ++i) {
      b.lo[i] = 2.0;
      b.hi[i] = 80.0;
    }
    for (int i = 3; i < 9; ++i) {
      b.lo[i] = 0.0;
      b.hi[i] = 80.0;
    }
    b.lo[9] = 0.0;
    b.hi[9] = 1.0;
    return b;
  }
};

inline void validate_bounds(const GenomeBounds& b) {
  for (int i = 0; i < kGenomeSize; ++i)
    if (!(b.lo[i] <= b.hi[i]) || !std::isfinite(b.lo[i]) || !std::isfinite(b.hi[i]))
      throw Error(ErrorKind::invalid_config, "genome bounds are inverted or non-finite");
}

struct EaConfig {
  int population_size = 200;
  int generations = 11;
  double crossover_rate = 0.5;
  double mutation_rate = 0.5;
  int tournament_size = 3;
  double mutation_sigma = 0.1;  // fraction of each gene's range
  double stoi_floor = 0.75;
  double stoi_penalty = 2.0;  // lambda
  std::uint64_t seed = 0;
  int workers = 1;
};

inline void validate_ea(const EaConfig& cfg) {
  if (cfg.population_size < 2)
    throw Error(ErrorKind::invalid_config, "population_size must be at least 2");
  if (cfg.generations < 1) throw Error(ErrorKind::invalid_config, "generations must be >= 1");
  if (!(cfg.crossover_rate >= 0.0 && cfg.crossover_rate <= 1.0))
    throw Error(ErrorKind::invalid_config, "crossover_rate must lie in [0, 1]");
  if (!(cfg.mutation_rate >= 0.0 && cfg.mutation_rate <= 1.0))
    throw Error(ErrorKind::invalid_config, "mutation_rate must lie in [0, 1]");
  if (cfg.tournament_size < 1)
    throw Error(ErrorKind::invalid_config, "tournament_size must be >= 1");
  if (!(cfg.mutation_sigma >= 0.0))
    throw Error(ErrorKind::invalid_config, "mutation_sigma must be >= 0");
  if (cfg.workers < 1) throw Error(ErrorKind::invalid_config, "workers must be >= 1");
}

struct FitnessRecord {
  Genome genome;
  double mean_wer = 0.0;
  double mean_stoi = 0.0;
  double fitness = -std::numeric_limits<double>::infinity();
  int generation = 0;
  bool failed = false;
};

inline double fitness_of(double mean_wer, double mean_stoi, const EaConfig& cfg) {
  return mean_wer - cfg.stoi_penalty * std::max(0.0, cfg.stoi_floor - mean_stoi);
}

struct HistoryEntry {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double best_wer = 0.0;
  double best_stoi = 0.0;
};

struct EvolveResult {
  FitnessRecord best;
  std::vector<HistoryEntry> history;
  std::size_t evaluations = 0;
  bool aborted = false;
};

// Maps a genome to (mean_wer, mean_stoi). The RNG stream is derived from
// (seed, generation, index), so results cannot depend on evaluation order.
using FitnessEvaluator =
    std::function<std::pair<double, double>(const Genome&, SplitMix64&)>;

namespace detail {

inline constexpr std::uint64_t kInitDomain = 0x696e6974;    // population sampling
inline constexpr std::uint64_t kEvalDomain = 0x6576616c;    // fitness streams
inline constexpr std::uint64_t kBreedDomain = 0x62726565;   // selection/variation
inline constexpr double kAbortFailureFraction = 0.5;
inline constexpr int kEvalAttempts = 3;
inline constexpr int kRepairAttempts = 100;

// Clamp to bounds, then resample offending positions inside the sampled box.
inline void repair_genome(Genome& g, const GenomeBounds& b, SplitMix64& rng) {
  for (int i = 0; i < kGenomeSize; ++i) g.values[i] = std::clamp(g.values[i], b.lo[i], b.hi[i]);
  for (int attempt = 0; attempt < kRepairAttempts; ++attempt) {
    if (validate_room(g.to_room()).empty()) return;
    for (int axis = 0; axis < 3; ++axis) {
      const double dim = g.values[axis];
      g.values[3 + axis] = std::clamp(rng.next_uniform(0.0, dim), b.lo[3 + axis], b.hi[3 + axis]);
      g.values[6 + axis] = std::clamp(rng.next_uniform(0.0, dim), b.lo[6 + axis], b.hi[6 + axis]);
    }
  }
  if (!validate_room(g.to_room()).empty())
    throw Error(ErrorKind::invalid_config, "could not repair genome to a valid room");
}

inline std::size_t tournament_winner(const std::vector<FitnessRecord>& pop, int size,
                                     SplitMix64& rng) {
  std::size_t best = static_cast<std::size_t>(rng.next_u64() % pop.size());
  for (int k = 1; k < size; ++k) {
    const auto idx = static_cast<std::size_t>(rng.next_u64() % pop.size());
    if (pop[idx].fitness > pop[best].fitness) best = idx;
  }
  return best;
}

}  // namespace detail

inline std::vector<Genome> init_population(const EaConfig& cfg, const GenomeBounds& bounds) {
  validate_ea(cfg);
  validate_bounds(bounds);
  std::vector<Genome> pop(static_cast<std::size_t>(cfg.population_size));
  for (std::size_t i = 0; i < pop.size(); ++i) {
    SplitMix64 rng(mix_seed(mix_seed(cfg.seed, detail::kInitDomain), i));
    for (int g = 0; g < kGenomeSize; ++g)
      pop[i].values[g] = rng.next_uniform(bounds.lo[g], bounds.hi[g]);
    detail::repair_genome(pop[i], bounds, rng);
  }
  return pop;
}

// Tournament selection, uniform gene-swap crossover, Gaussian mutation,
// clamping and room repair; slot 0 carries the elite unchanged.
inline std::vector<Genome> select_crossover_mutate(const std::vector<FitnessRecord>& parents,
                                                   const EaConfig& cfg,
                                                   const GenomeBounds& bounds, int generation) {
  SplitMix64 rng(mix_seed(mix_seed(cfg.seed, detail::kBreedDomain),
                          static_cast<std::uint64_t>(generation)));
  std::size_t elite = 0;
  for (std::size_t i = 1; i < parents.size(); ++i)
    if (parents[i].fitness > parents[elite].fitness) elite = i;

  std::vector<Genome> children;
  children.reserve(parents.size());
  children.push_back(parents[elite].genome);

  std::array<double, kGenomeSize> range{};
  for (int g = 0; g < kGenomeSize; ++g) range[g] = bounds.hi[g] - bounds.lo[g];

  while (children.size() < parents.size()) {
    Genome a = parents[detail::tournament_winner(parents, cfg.tournament_size, rng)].genome;
    Genome b = parents[detail::tournament_winner(parents, cfg.tournament_size, rng)].genome;
    for (int g = 0; g < kGenomeSize; ++g)
      if (rng.next_bernoulli(cfg.crossover_rate)) std::swap(a.values[g], b.values[g]);
    for (Genome* child : {&a, &b}) {
      for (int g = 0; g < kGenomeSize; ++g)
        if (rng.next_bernoulli(cfg.mutation_rate))
          child->values[g] += rng.next_gaussian() * cfg.mutation_sigma * range[g];
      detail::repair_genome(*child, bounds, rng);
      if (children.size() < parents.size()) children.push_back(*child);
    }
  }
  return children;
}

inline EvolveResult evolve(const EaConfig& cfg, const GenomeBounds& bounds,
                           const FitnessEvaluator& evaluator) {
  validate_ea(cfg);
  validate_bounds(bounds);

  const auto n = static_cast<std::size_t>(cfg.population_size);
  const std::size_t budget =
      n * (static_cast<std::size_t>(cfg.generations) + 1);  // init plus G generations
  EvolveResult result;

  // Evaluates slot i of the current generation unless it holds a carried
  // record; exceptions count as attempts, three failures mark the genome.
  const auto evaluate_one = [&](FitnessRecord& rec, const Genome& genome, int generation,
                                std::size_t index) {
    rec.genome = genome;
    rec.generation = generation;
    for (int attempt = 0; attempt < detail::kEvalAttempts; ++attempt) {
      SplitMix64 rng(mix_seed(mix_seed(cfg.seed, detail::kEvalDomain),
                              mix_seed(static_cast<std::uint64_t>(generation), index),
                              static_cast<std::uint64_t>(attempt)));
      try {
        const auto [mean_wer, mean_stoi] = evaluator(genome, rng);
        rec.mean_wer = mean_wer;
        rec.mean_stoi = mean_stoi;
        rec.fitness = fitness_of(mean_wer, mean_stoi, cfg);
        rec.failed = false;
        return;
      } catch (const std::exception&) {
        // retry with a fresh stream
      }
    }
    rec.failed = true;
    rec.fitness = -std::numeric_limits<double>::infinity();
  };

  const auto evaluate_population = [&](std::vector<FitnessRecord>& records,
                                       const std::vector<Genome>& genomes, int generation,
                                       const FitnessRecord* carried) {
    std::size_t fresh = genomes.size() - (carried != nullptr ? 1 : 0);
    if (result.evaluations + fresh > budget)
      throw Error(ErrorKind::invalid_config, "fitness evaluation budget exceeded");
    result.evaluations += fresh;

    records.assign(genomes.size(), FitnessRecord{});
    const auto worker_count =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), genomes.size());
    const auto run_slice = [&](std::size_t worker) {
      for (std::size_t i = worker; i < genomes.size(); i += worker_count) {
        if (carried != nullptr && i == 0) {
          records[0] = *carried;
          records[0].generation = generation;
          continue;
        }
        evaluate_one(records[i], genomes[i], generation, i);
      }
    };
    if (worker_count <= 1) {
      run_slice(0);
    } else {
      std::vector<std::thread> threads;
      threads.reserve(worker_count);
      for (std::size_t w = 0; w < worker_count; ++w) threads.emplace_back(run_slice, w);
      for (auto& t : threads) t.join();
    }
  };

  const auto failed_count = [](const std::vector<FitnessRecord>& records) {
    std::size_t c = 0;
    for (const auto& r : records) c += r.failed ? 1 : 0;
    return c;
  };

  std::vector<Genome> genomes = init_population(cfg, bounds);
  std::vector<FitnessRecord> population;
  evaluate_population(population, genomes, 0, nullptr);
  result.best = *std::max_element(
      population.begin(), population.end(),
      [](const FitnessRecord& a, const FitnessRecord& b) { return a.fitness < b.fitness; });
  if (static_cast<double>(failed_count(population)) >
      detail::kAbortFailureFraction * static_cast<double>(n)) {
    result.aborted = true;
    return result;
  }

  for (int g = 1; g <= cfg.generations; ++g) {
    genomes = select_crossover_mutate(population, cfg, bounds, g);
    std::size_t elite = 0;
    for (std::size_t i = 1; i < population.size(); ++i)
      if (population[i].fitness > population[elite].fitness) elite = i;
    const FitnessRecord carried = population[elite];

    evaluate_population(population, genomes, g, &carried);
    if (static_cast<double>(failed_count(population)) >
        detail::kAbortFailureFraction * static_cast<double>(n)) {
      result.aborted = true;
      return result;
    }

    std::size_t best_i = 0;
    double fitness_sum = 0.0;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < population.size(); ++i) {
      if (population[i].fitness > population[best_i].fitness) best_i = i;
      if (!population[i].failed) {
        fitness_sum += population[i].fitness;
        ++ok;
      }
    }
    HistoryEntry entry;
    entry.generation = g;
    entry.best_fitness = population[best_i].fitness;
    entry.mean_fitness = ok > 0 ? fitness_sum / static_cast<double>(ok) : 0.0;
    entry.best_wer = population[best_i].mean_wer;
    entry.best_stoi = population[best_i].mean_stoi;
    result.history.push_back(entry);

    if (population[best_i].fitness > result.best.fitness) result.best = population[best_i];
  }
  return result;
}

inline std::string history_to_csv(const std::vector<HistoryEntry>& history) {
  std::ostringstream os;
  os.precision(10);
  os << "generation,best_fitness,mean_fitness,best_wer,best_stoi\n";
  for (const auto& h : history)
    os << h.generation << ',' << h.best_fitness << ',' << h.mean_fitness << ',' << h.best_wer
       << ',' << h.best_stoi << '\n';
  return os.str();
}

// One corpus clip: clean audio plus its reference transcript.
struct CorpusClip {
  std::string id;
  AudioBuffer clean;
  std::vector<std::string> reference;
};

// Fitness against real audio: jam each clip with the genome's room, align the
// result back to the clean timeline, transcribe, and average WER and STOI.
inline FitnessEvaluator make_audio_evaluator(std::shared_ptr<std::vector<CorpusClip>> corpus,
                                             std::shared_ptr<Transcriber> oracle,
                                             JammerConfig base) {
  if (!corpus || corpus->empty())
    throw Error(ErrorKind::invalid_argument, "audio evaluator needs a non-empty corpus");
  return [corpus, oracle, base](const Genome& genome, SplitMix64& rng) {
    JammerConfig cfg = base;
    cfg.room = genome.to_room();
    cfg.attenuation.seed = rng.next_u64();
    const Jammer jam(cfg);
    const std::size_t delay = jam.direct_path_delay_samples();

    double wer_sum = 0.0;
    double stoi_sum = 0.0;
    for (const CorpusClip& clip : *corpus) {
      const AudioBuffer jammed = jam.process(clip.clean);
      const AudioBuffer aligned = shifted_left(jammed, delay, clip.clean.samples.size());
      const std::vector<std::string> transcript = oracle->transcribe(clip.id, aligned);
      wer_sum += wer(clip.reference, transcript).wer;
      stoi_sum += stoi(clip.clean, aligned);
    }
    const auto count = static_cast<double>(corpus->size());
    return std::make_pair(wer_sum / count, stoi_sum / count);
  };
}

}  // namespace echoguard
