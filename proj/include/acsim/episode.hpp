#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "acsim/attackers.hpp"
#include "acsim/defenders.hpp"
#include "acsim/graph.hpp"
#include "acsim/sim.hpp"

namespace acsim {

struct StepRecord {
  std::size_t t = 0;
  std::optional<std::size_t> attacker_action;
  std::optional<std::size_t> defender_action;
  double reward = 0.0;
  bool done = false;
  std::string observation;  // Observation::bit_string() after the step

  bool operator==(const StepRecord&) const = default;
};

struct EpisodeRecord {
  std::vector<StepRecord> steps;  // empty unless recording was requested
  double total_reward = 0.0;
  std::size_t flags_captured = 0;
  std::size_t num_flags = 0;
  std::size_t length = 0;
  bool truncated = false;

  double flags_fraction() const {
    return num_flags == 0 ? 0.0
                          : static_cast<double>(flags_captured) / static_cast<double>(num_flags);
  }
  bool operator==(const EpisodeRecord&) const = default;
};

// Hard cap: 10 * (|A| + sum of mean TTCs) steps.
std::size_t episode_step_cap(const AttackGraph& graph);

/// Plays one episode to termination (or the cap, flagged `truncated`).
///
/// The episode seed is split into independent engine, attacker and defender
/// streams, so a fixed seed with fixed policies replays exactly.
EpisodeRecord run_episode(const AttackGraph& graph, AttackerPolicy& attacker,
                          DefenderPolicy& defender, const NoiseConfig& noise,
                          const RewardConfig& rewards, std::uint64_t seed,
                          bool record_steps = true);

// One row per step: episode,t,attacker_action,defender_action,reward,done,
// observation. Actions are step ids; "-" marks no attacker action or a
// defender no-op.
void write_trajectory_header(std::ostream& out);
void write_trajectory_csv(std::ostream& out, const AttackGraph& graph,
                          const EpisodeRecord& record, std::size_t episode = 0);
// Same fields, one JSON object per line, plus an "episode" field.
void write_trajectory_jsonl(std::ostream& out, const AttackGraph& graph,
                            const EpisodeRecord& record, std::size_t episode = 0);

}  // namespace acsim
