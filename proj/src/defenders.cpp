#include "acsim/defenders.hpp"

#include <random>
#include <string>

#include "acsim/errors.hpp"

namespace acsim {

std::string_view to_string(DefenderKind kind) {
  switch (kind) {
    case DefenderKind::kNone: return "none";
    case DefenderKind::kRandom: return "random";
    case DefenderKind::kTripwire: return "tripwire";
    case DefenderKind::kLearned: return "learned";
  }
  return "?";
}

DefenderKind parse_defender_kind(std::string_view name) {
  for (auto kind : {DefenderKind::kNone, DefenderKind::kRandom, DefenderKind::kTripwire,
                    DefenderKind::kLearned}) {
    if (to_string(kind) == name) return kind;
  }
  throw InputError("unknown defender '" + std::string(name) +
                   "' (expected random|tripwire|learned|none)");
}

DefenderAction random_defender_select(const std::vector<bool>& enabled, Rng& rng) {
  std::vector<std::size_t> choices;
  for (std::size_t i = 0; i < enabled.size(); ++i) {
    if (!enabled[i]) choices.push_back(i);
  }
  std::uniform_int_distribution<std::size_t> pick(0, choices.size());
  auto k = pick(rng);
  if (k == choices.size()) return std::nullopt;
  return choices[k];
}

DefenderAction tripwire_select(const AttackGraph& graph, const Observation& observation,
                               const std::vector<bool>& enabled) {
  if (observation.attack_bits.size() != graph.num_attack_steps()) {
    throw InputError("observation length does not match the graph");
  }
  for (std::size_t d = 0; d < graph.num_defense_steps(); ++d) {
    if (enabled[d]) continue;
    for (auto child : graph.defense_children(d)) {
      if (observation.attack_bits[child]) return d;
    }
  }
  return std::nullopt;
}

std::vector<bool> action_mask(const std::vector<bool>& enabled) {
  std::vector<bool> mask(enabled.size() + 1, true);
  for (std::size_t i = 0; i < enabled.size(); ++i) mask[i] = !enabled[i];
  return mask;
}

DefenderAction action_from_index(std::size_t index, std::size_t num_defenses) {
  if (index >= num_defenses) return std::nullopt;
  return index;
}

std::size_t index_from_action(DefenderAction action, std::size_t num_defenses) {
  return action ? *action : num_defenses;
}

DefenderAction learned_select(const PolicyParams& params, const Observation& observation,
                              const std::vector<bool>& enabled, Rng& rng, SelectMode mode) {
  const std::size_t defenses = enabled.size();
  if (params.num_actions() != defenses + 1) {
    throw InputError("policy has " + std::to_string(params.num_actions()) +
                     " actions, graph needs " + std::to_string(defenses + 1));
  }
  auto features = observation.features();
  auto out = forward(params, features);
  auto mask = action_mask(enabled);
  auto probs = masked_softmax(out.logits, mask);

  std::size_t choice = defenses;
  if (mode == SelectMode::kGreedy) {
    double best = -1.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i] && probs(static_cast<Eigen::Index>(i)) > best) {
        best = probs(static_cast<Eigen::Index>(i));
        choice = i;
      }
    }
  } else {
    double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!mask[i]) continue;
      choice = i;
      acc += probs(static_cast<Eigen::Index>(i));
      if (u < acc) break;
    }
  }
  return action_from_index(choice, defenses);
}

void RandomDefender::reset(const AttackGraph&, std::uint64_t seed) { rng_.seed(seed); }

DefenderAction RandomDefender::select(const Observation&, const std::vector<bool>& enabled) {
  return random_defender_select(enabled, rng_);
}

void TripwireDefender::reset(const AttackGraph& graph, std::uint64_t) { graph_ = &graph; }

DefenderAction TripwireDefender::select(const Observation& observation,
                                        const std::vector<bool>& enabled) {
  if (!graph_) throw ContractViolation("tripwire defender used before reset");
  return tripwire_select(*graph_, observation, enabled);
}

void LearnedDefender::reset(const AttackGraph& graph, std::uint64_t seed) {
  if (params_->input_size() != graph.num_attack_steps() + graph.num_defense_steps() ||
      params_->num_actions() != graph.num_defense_steps() + 1) {
    throw InputError("policy shape does not match the graph");
  }
  rng_.seed(seed);
}

DefenderAction LearnedDefender::select(const Observation& observation,
                                       const std::vector<bool>& enabled) {
  return learned_select(*params_, observation, enabled, rng_, mode_);
}

std::unique_ptr<DefenderPolicy> make_defender(DefenderKind kind) {
  switch (kind) {
    case DefenderKind::kNone: return std::make_unique<NoopDefender>();
    case DefenderKind::kRandom: return std::make_unique<RandomDefender>();
    case DefenderKind::kTripwire: return std::make_unique<TripwireDefender>();
    case DefenderKind::kLearned: break;
  }
  throw InputError("the learned defender needs policy parameters");
}

}  // namespace acsim
