#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "acsim/graph.hpp"
#include "acsim/rng.hpp"

namespace acsim {

// IDS error rates. TPR/TNR are 1-fnr and 1-fpr and are never stored.
struct NoiseConfig {
  double fpr = 0.0;  // P(o = 1 | a = 0)
  double fnr = 0.0;  // P(o = 0 | a = 1)

  void check() const;  // throws InputError outside [0, 1]
};

struct SimState {
  std::size_t clock = 0;
  std::vector<double> remaining_ttc;   // per attack step
  std::vector<bool> compromised;       // vector A_t
  std::vector<bool> enabled;           // vector D_t
  std::vector<bool> captured_flags;    // per attack step, cumulative

  bool operator==(const SimState&) const = default;
};

// Defender's view of the state.
struct Observation {
  std::vector<std::uint8_t> attack_bits;   // noisy, one per attack step
  std::vector<std::uint8_t> defense_bits;  // exact copy of D_t

  // "0110|10": attack bits, separator, defense bits.
  std::string bit_string() const;
  // Attack bits followed by defense bits as 0.0/1.0, the policy input.
  std::vector<double> features() const;

  bool operator==(const Observation&) const = default;
};

struct StepOutcome {
  double reward = 0.0;
  Observation observation;
  bool done = false;
  std::vector<std::size_t> flags_captured_now;
};

// Independent exponential draws with mean ttc_mean; exactly 0 where the mean
// is 0.
std::vector<double> sample_ttc(const AttackGraph& graph, Rng& rng);

// Fresh IDS reading of the state. One uniform draw per attack bit, always,
// so the number of draws does not depend on the state.
Observation observe(const SimState& state, const NoiseConfig& noise, Rng& rng);

// -(|enabled| * c_d) - (|flags_captured_now| * c_f).
double reward_of(const SimState& state, std::size_t flags_captured_now,
                 const RewardConfig& rewards);

// Lowest cumulative reward an episode of `episode_length` steps can reach:
// one defense enabled per step from the first step, every flag lost.
// Throws InputError if episode_length < |D|.
double min_reward_bound(const AttackGraph& graph, const RewardConfig& rewards,
                        std::size_t episode_length);

// Initial state: entry compromised, nothing enabled, TTCs sampled.
// Throws ValidationError for invalid graphs.
SimState init_episode(const AttackGraph& graph, Rng& ttc_rng);

/// One attack-defend episode.
///
/// TTCs are drawn from the kTtc stream of `seed` and IDS noise from the
/// kNoise stream, so the TTC realization does not depend on the noise rates.
/// The graph must outlive the simulator.
class Simulator {
 public:
  Simulator(const AttackGraph& graph, NoiseConfig noise, RewardConfig rewards,
            std::uint64_t seed);

  const AttackGraph& graph() const { return *graph_; }
  const SimState& state() const { return state_; }
  // Reading produced by the most recent step (or at initialization).
  const Observation& observation() const { return observation_; }
  std::vector<std::size_t> attack_surface() const;
  bool done() const;

  // Resolves one time-step: defender first, then attacker, then reward,
  // observation and termination. Throws ContractViolation for an attacker
  // action outside the current surface (or a missing one while the surface
  // is non-empty) and for enabling an already-enabled defense.
  StepOutcome step(std::optional<std::size_t> attacker_action,
                   std::optional<std::size_t> defender_action);

 private:
  const AttackGraph* graph_;
  NoiseConfig noise_;
  RewardConfig rewards_;
  Rng noise_rng_;
  SimState state_;
  Observation observation_;
};

}  // namespace acsim
