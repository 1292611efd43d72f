#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "acsim/graph.hpp"
#include "acsim/mlp.hpp"
#include "acsim/rng.hpp"
#include "acsim/sim.hpp"

namespace acsim {

// "none" always does nothing; it is the no-defender baseline.
enum class DefenderKind { kNone, kRandom, kTripwire, kLearned };

std::string_view to_string(DefenderKind kind);
DefenderKind parse_defender_kind(std::string_view name);  // throws InputError

enum class SelectMode { kSample, kGreedy };

// A defender action is a defense index to enable, or nothing (no-op).
using DefenderAction = std::optional<std::size_t>;

class DefenderPolicy {
 public:
  virtual ~DefenderPolicy() = default;

  virtual DefenderKind kind() const = 0;
  virtual void reset(const AttackGraph& graph, std::uint64_t seed) = 0;
  // `enabled` is the exact defense state; never returns an enabled defense.
  virtual DefenderAction select(const Observation& observation,
                                const std::vector<bool>& enabled) = 0;
};

// Uniform over the disabled defenses plus no-op.
DefenderAction random_defender_select(const std::vector<bool>& enabled, Rng& rng);

// Lowest-index disabled defense with a child whose observed bit is 1.
DefenderAction tripwire_select(const AttackGraph& graph, const Observation& observation,
                               const std::vector<bool>& enabled);

// Legal-action mask for the policy head: one entry per defense (legal while
// disabled) followed by the always-legal no-op.
std::vector<bool> action_mask(const std::vector<bool>& enabled);

// Maps a policy-head index to an action (index |D| is the no-op).
DefenderAction action_from_index(std::size_t index, std::size_t num_defenses);
std::size_t index_from_action(DefenderAction action, std::size_t num_defenses);

// Masked categorical over the policy logits. Throws InputError when the
// network shape does not match the observation.
DefenderAction learned_select(const PolicyParams& params, const Observation& observation,
                              const std::vector<bool>& enabled, Rng& rng, SelectMode mode);

class NoopDefender final : public DefenderPolicy {
 public:
  DefenderKind kind() const override { return DefenderKind::kNone; }
  void reset(const AttackGraph&, std::uint64_t) override {}
  DefenderAction select(const Observation&, const std::vector<bool>&) override {
    return std::nullopt;
  }
};

class RandomDefender final : public DefenderPolicy {
 public:
  DefenderKind kind() const override { return DefenderKind::kRandom; }
  void reset(const AttackGraph& graph, std::uint64_t seed) override;
  DefenderAction select(const Observation& observation,
                        const std::vector<bool>& enabled) override;

 private:
  Rng rng_;
};

class TripwireDefender final : public DefenderPolicy {
 public:
  DefenderKind kind() const override { return DefenderKind::kTripwire; }
  void reset(const AttackGraph& graph, std::uint64_t seed) override;
  DefenderAction select(const Observation& observation,
                        const std::vector<bool>& enabled) override;

 private:
  const AttackGraph* graph_ = nullptr;
};

class LearnedDefender final : public DefenderPolicy {
 public:
  LearnedDefender(std::shared_ptr<const PolicyParams> params, SelectMode mode)
      : params_(std::move(params)), mode_(mode) {}

  DefenderKind kind() const override { return DefenderKind::kLearned; }
  void reset(const AttackGraph& graph, std::uint64_t seed) override;
  DefenderAction select(const Observation& observation,
                        const std::vector<bool>& enabled) override;

 private:
  std::shared_ptr<const PolicyParams> params_;
  SelectMode mode_;
  Rng rng_;
};

// Heuristic defenders only; kLearned needs parameters, so it throws InputError.
std::unique_ptr<DefenderPolicy> make_defender(DefenderKind kind);

}  // namespace acsim
