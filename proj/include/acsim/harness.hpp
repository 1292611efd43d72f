#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "acsim/attackers.hpp"
#include "acsim/defenders.hpp"
#include "acsim/graph.hpp"
#include "acsim/ppo.hpp"
#include "acsim/sim.hpp"

namespace acsim {

// One results-CSV row: an experiment cell evaluated under one seed.
struct MetricsRow {
  std::string experiment;
  std::string cell_id;
  double fpr = 0.0;
  double fnr = 0.0;
  std::size_t graph_size = 0;
  std::string train_attacker = "-";
  std::string eval_attacker;
  std::string defender;
  std::uint64_t seed = 0;
  double mean_reward = 0.0;
  double flags_fraction = 0.0;
  double mean_len = 0.0;
  std::size_t min_len = 0;
  std::size_t max_len = 0;
  double train_seconds = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

// Cross-seed aggregate of all rows sharing every key column except seed.
struct AggregateRow {
  MetricsRow key;  // seed and per-seed metrics unused
  std::size_t num_seeds = 0;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double flags_mean = 0.0;
  double flags_std = 0.0;
  double len_mean = 0.0;
};

struct DefenderSpec {
  DefenderKind kind = DefenderKind::kNone;
  std::shared_ptr<const PolicyParams> params;  // learned only
  SelectMode mode = SelectMode::kSample;

  std::unique_ptr<DefenderPolicy> make() const;
};

struct SeedEvaluation {
  double mean_reward = 0.0;
  double flags_fraction = 0.0;
  double mean_len = 0.0;
  std::size_t min_len = 0;
  std::size_t max_len = 0;
  std::size_t truncated = 0;
  std::vector<double> episode_rewards;
  std::vector<double> episode_flags;
  std::vector<std::size_t> episode_lengths;
};

// Episode i of a seed uses derive_seed(seed, kEval, {i}) regardless of the
// cell, so evaluations that differ only in defender or noise are paired.
std::uint64_t eval_episode_seed(std::uint64_t seed, std::size_t episode);

SeedEvaluation evaluate_seed(const AttackGraph& graph, AttackerKind attacker,
                             const DefenderSpec& defender, const NoiseConfig& noise,
                             const RewardConfig& rewards, std::size_t episodes,
                             std::uint64_t seed);

struct EvalConfig {
  AttackGraph graph;
  AttackerKind attacker = AttackerKind::kDepthFirst;
  DefenderSpec defender;
  NoiseConfig noise;
  RewardConfig rewards;
  std::size_t episodes = 100;
  std::vector<std::uint64_t> seeds = {1, 2};

  void check() const;  // throws InputError
};

// One row per seed, experiment "evaluate".
std::vector<MetricsRow> evaluate(const EvalConfig& config, std::size_t jobs = 1);

struct NoiseCell {
  double fpr = 0.0;
  double fnr = 0.0;

  bool operator==(const NoiseCell&) const = default;
};

// All (fpr, fnr) pairs drawn from `values` with fnr <= fpr, ordered by fpr
// then fnr. Pairs with fnr > fpr mirror a kept pair with labels swapped.
std::vector<NoiseCell> noise_grid(std::span<const double> values);

struct ExperimentConfig {
  std::size_t episodes = 100;
  std::vector<std::uint64_t> seeds = {1, 2};
  HyperParams hp = desk_scale_hyperparams();
  std::size_t jobs = 1;
  bool record_timing = false;  // wall-clock train_seconds; off keeps output byte-stable
  SelectMode learned_mode = SelectMode::kSample;

  void check() const;
};

// Noise sweep against a depth-first attacker. Learned defenders are trained
// once per (cell, seed).
std::vector<MetricsRow> run_sweep(const AttackGraph& graph,
                                  std::span<const DefenderKind> defenders,
                                  std::span<const double> values,
                                  const ExperimentConfig& config);

// One policy per training attacker (all five kinds), each evaluated against
// all five.
std::vector<MetricsRow> attacker_matrix(const AttackGraph& graph, const NoiseConfig& noise,
                                        const ExperimentConfig& config);

// Generated graph per size; learned and tripwire defenders on each.
std::vector<MetricsRow> scaling_study(std::span<const std::size_t> sizes,
                                      const NoiseConfig& noise, AttackerKind attacker,
                                      std::uint64_t graph_seed,
                                      const ExperimentConfig& config);

std::vector<AggregateRow> aggregate(const std::vector<MetricsRow>& rows);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(std::istream& in);  // throws ParseError
void write_summary_csv(std::ostream& out, const std::vector<AggregateRow>& rows);

// Runs fn(0..n-1) on up to `jobs` threads; rethrows the lowest-index failure.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace acsim
