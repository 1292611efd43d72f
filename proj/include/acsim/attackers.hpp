#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acsim/graph.hpp"
#include "acsim/rng.hpp"
#include "acsim/sim.hpp"

namespace acsim {

enum class AttackerKind { kRandom, kBreadthFirst, kDepthFirst, kPathfinder, kMixture };

// CLI spellings: random, bfs, dfs, pathfinder, mixture.
std::string_view to_string(AttackerKind kind);
AttackerKind parse_attacker_kind(std::string_view name);  // throws InputError

// The four base kinds, in the order the mixture draws from.
inline constexpr AttackerKind kBaseAttackers[] = {
    AttackerKind::kRandom, AttackerKind::kBreadthFirst, AttackerKind::kDepthFirst,
    AttackerKind::kPathfinder};
inline constexpr AttackerKind kAllAttackers[] = {
    AttackerKind::kRandom, AttackerKind::kBreadthFirst, AttackerKind::kDepthFirst,
    AttackerKind::kPathfinder, AttackerKind::kMixture};

/// Episode-local attacker. select() always returns a member of `surface`, or
/// nothing iff the surface is empty.
class AttackerPolicy {
 public:
  virtual ~AttackerPolicy() = default;

  virtual AttackerKind kind() const = 0;
  // Called once per episode with the initial state and the episode's attacker
  // stream seed.
  virtual void reset(const AttackGraph& graph, const SimState& state,
                     std::uint64_t seed) = 0;
  virtual std::optional<std::size_t> select(const AttackGraph& graph,
                                            const SimState& state,
                                            std::span<const std::size_t> surface) = 0;
};

std::unique_ptr<AttackerPolicy> make_attacker(AttackerKind kind);

// Uniform pick; nothing for an empty surface.
std::optional<std::size_t> random_select(std::span<const std::size_t> surface, Rng& rng);

class RandomAttacker final : public AttackerPolicy {
 public:
  AttackerKind kind() const override { return AttackerKind::kRandom; }
  void reset(const AttackGraph& graph, const SimState& state, std::uint64_t seed) override;
  std::optional<std::size_t> select(const AttackGraph& graph, const SimState& state,
                                    std::span<const std::size_t> surface) override;

 private:
  Rng rng_;
};

/// Breadth-first and depth-first search over the evolving surface.
///
/// Surface steps not yet in the frontier are discovered in a shuffled batch
/// and appended (breadth-first: queue back, depth-first: stack top). The
/// attacker keeps working the frontier head until it is compromised or
/// leaves the surface.
class SearchAttacker final : public AttackerPolicy {
 public:
  explicit SearchAttacker(bool depth_first) : depth_first_(depth_first) {}

  AttackerKind kind() const override {
    return depth_first_ ? AttackerKind::kDepthFirst : AttackerKind::kBreadthFirst;
  }
  void reset(const AttackGraph& graph, const SimState& state, std::uint64_t seed) override;
  std::optional<std::size_t> select(const AttackGraph& graph, const SimState& state,
                                    std::span<const std::size_t> surface) override;

 private:
  bool depth_first_;
  Rng rng_;
  std::deque<std::size_t> frontier_;  // head = front
  std::vector<bool> in_frontier_;
};

// Planning cost of every attack step: work-steps needed to compromise it
// from the current state. Compromised steps cost 0, steps behind an enabled
// defense (or only reachable through one) are infinite. OR-steps add the
// cheapest parent, AND-steps add the sum over their parents; iterated to a
// fixpoint.
inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();
std::vector<double> pathfinder_costs(const AttackGraph& graph, const SimState& state);

// Work-steps needed for a step with this remaining TTC (at least one).
double work_steps(double remaining_ttc);

/// Full-information attacker. Orders flags by initial path cost and walks the
/// cheapest plan toward the current target, replanning every step so a
/// defense on the route is routed around immediately. Targets that become
/// unreachable are dropped; with no reachable target left it works randomly.
class PathfinderAttacker final : public AttackerPolicy {
 public:
  AttackerKind kind() const override { return AttackerKind::kPathfinder; }
  void reset(const AttackGraph& graph, const SimState& state, std::uint64_t seed) override;
  std::optional<std::size_t> select(const AttackGraph& graph, const SimState& state,
                                    std::span<const std::size_t> surface) override;

  const std::vector<std::size_t>& targets() const { return targets_; }

 private:
  Rng rng_;
  std::vector<std::size_t> targets_;  // flags by increasing initial cost
  std::size_t next_target_ = 0;
};

// Draws one base kind per episode and delegates to it for the whole episode.
class MixtureAttacker final : public AttackerPolicy {
 public:
  AttackerKind kind() const override { return AttackerKind::kMixture; }
  void reset(const AttackGraph& graph, const SimState& state, std::uint64_t seed) override;
  std::optional<std::size_t> select(const AttackGraph& graph, const SimState& state,
                                    std::span<const std::size_t> surface) override;

  // Base kind drawn at the last reset.
  AttackerKind active_kind() const { return active_kind_; }

 private:
  AttackerKind active_kind_ = AttackerKind::kRandom;
  std::unique_ptr<AttackerPolicy> active_;
};

}  // namespace acsim
