#include "acsim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "acsim/errors.hpp"

namespace acsim {

void NoiseConfig::check() const {
  if (!(fpr >= 0.0 && fpr <= 1.0)) throw InputError("fpr must be in [0, 1]");
  if (!(fnr >= 0.0 && fnr <= 1.0)) throw InputError("fnr must be in [0, 1]");
}

std::string Observation::bit_string() const {
  std::string out;
  out.reserve(attack_bits.size() + defense_bits.size() + 1);
  for (auto b : attack_bits) out.push_back(b ? '1' : '0');
  out.push_back('|');
  for (auto b : defense_bits) out.push_back(b ? '1' : '0');
  return out;
}

std::vector<double> Observation::features() const {
  std::vector<double> out;
  out.reserve(attack_bits.size() + defense_bits.size());
  for (auto b : attack_bits) out.push_back(b ? 1.0 : 0.0);
  for (auto b : defense_bits) out.push_back(b ? 1.0 : 0.0);
  return out;
}

std::vector<double> sample_ttc(const AttackGraph& graph, Rng& rng) {
  std::vector<double> out(graph.num_attack_steps(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double mean = graph.attack_step(i).ttc_mean;
    if (mean == 0.0) continue;
    std::exponential_distribution<double> dist(1.0 / mean);
    out[i] = dist(rng);
  }
  return out;
}

Observation observe(const SimState& state, const NoiseConfig& noise, Rng& rng) {
  Observation obs;
  obs.attack_bits.resize(state.compromised.size());
  for (std::size_t i = 0; i < state.compromised.size(); ++i) {
    double u = uniform01(rng);
    if (state.compromised[i]) {
      obs.attack_bits[i] = u < noise.fnr ? 0 : 1;
    } else {
      obs.attack_bits[i] = u < noise.fpr ? 1 : 0;
    }
  }
  obs.defense_bits.resize(state.enabled.size());
  for (std::size_t i = 0; i < state.enabled.size(); ++i) {
    obs.defense_bits[i] = state.enabled[i] ? 1 : 0;
  }
  return obs;
}

double reward_of(const SimState& state, std::size_t flags_captured_now,
                 const RewardConfig& rewards) {
  auto enabled = std::count(state.enabled.begin(), state.enabled.end(), true);
  return -static_cast<double>(enabled) * rewards.defense_cost -
         static_cast<double>(flags_captured_now) * rewards.flag_cost;
}

double min_reward_bound(const AttackGraph& graph, const RewardConfig& rewards,
                        std::size_t episode_length) {
  const double defenses = static_cast<double>(graph.num_defense_steps());
  if (episode_length < graph.num_defense_steps()) {
    throw InputError("min_reward_bound: episode length shorter than |D|");
  }
  const double flags = static_cast<double>(graph.flags().size());
  double ramp = 0.0;  // sum_{i=1}^{|D|-1} i
  if (defenses >= 1.0) ramp = (defenses - 1.0) * defenses / 2.0;
  double plateau = 0.0;
  if (defenses >= 1.0) {
    plateau = defenses * (static_cast<double>(episode_length) - (defenses - 1.0));
  }
  return -rewards.defense_cost * (ramp + plateau) - rewards.flag_cost * flags;
}

SimState init_episode(const AttackGraph& graph, Rng& ttc_rng) {
  require_valid(graph);
  SimState s;
  s.remaining_ttc = sample_ttc(graph, ttc_rng);
  s.compromised.assign(graph.num_attack_steps(), false);
  s.enabled.assign(graph.num_defense_steps(), false);
  s.captured_flags.assign(graph.num_attack_steps(), false);
  s.compromised[*graph.entry()] = true;
  return s;
}

Simulator::Simulator(const AttackGraph& graph, NoiseConfig noise, RewardConfig rewards,
                     std::uint64_t seed)
    : graph_(&graph),
      noise_(noise),
      rewards_(rewards),
      noise_rng_(make_rng(seed, Stream::kNoise)) {
  noise_.check();
  rewards_.check();
  Rng ttc_rng = make_rng(seed, Stream::kTtc);
  state_ = init_episode(graph, ttc_rng);
  observation_ = observe(state_, noise_, noise_rng_);
}

std::vector<std::size_t> Simulator::attack_surface() const {
  return acsim::attack_surface(*graph_, state_.compromised, state_.enabled);
}

bool Simulator::done() const {
  for (std::size_t i = 0; i < graph_->num_attack_steps(); ++i) {
    if (in_attack_surface(*graph_, i, state_.compromised, state_.enabled)) return false;
  }
  return true;
}

StepOutcome Simulator::step(std::optional<std::size_t> attacker_action,
                            std::optional<std::size_t> defender_action) {
  const auto& g = *graph_;
  if (attacker_action) {
    if (*attacker_action >= g.num_attack_steps() ||
        !in_attack_surface(g, *attacker_action, state_.compromised, state_.enabled)) {
      throw ContractViolation("attacker action outside the attack surface");
    }
  } else if (!done()) {
    throw ContractViolation("attacker must act while the attack surface is non-empty");
  }
  if (defender_action) {
    if (*defender_action >= g.num_defense_steps()) {
      throw ContractViolation("defender action is not a defense step");
    }
    if (state_.enabled[*defender_action]) {
      throw ContractViolation("defense '" + g.defense_steps()[*defender_action].id +
                              "' is already enabled");
    }
  }

  StepOutcome out;

  // Defender: enabling blocks the children and revokes their compromise.
  if (defender_action) {
    state_.enabled[*defender_action] = true;
    for (auto child : g.defense_children(*defender_action)) {
      state_.compromised[child] = false;
    }
  }

  // Attacker: the target may have just been blocked, in which case the work
  // is lost.
  if (attacker_action &&
      in_attack_surface(g, *attacker_action, state_.compromised, state_.enabled)) {
    auto a = *attacker_action;
    state_.remaining_ttc[a] -= 1.0;
    if (state_.remaining_ttc[a] <= 0.0) {
      state_.compromised[a] = true;
      if (g.attack_step(a).is_flag && !state_.captured_flags[a]) {
        state_.captured_flags[a] = true;
        out.flags_captured_now.push_back(a);
      }
    }
  }

  out.reward = reward_of(state_, out.flags_captured_now.size(), rewards_);
  observation_ = observe(state_, noise_, noise_rng_);
  out.observation = observation_;
  out.done = done();
  ++state_.clock;
  return out;
}

}  // namespace acsim
