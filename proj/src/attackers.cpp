#include "acsim/attackers.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "acsim/errors.hpp"

namespace acsim {

std::string_view to_string(AttackerKind kind) {
  switch (kind) {
    case AttackerKind::kRandom: return "random";
    case AttackerKind::kBreadthFirst: return "bfs";
    case AttackerKind::kDepthFirst: return "dfs";
    case AttackerKind::kPathfinder: return "pathfinder";
    case AttackerKind::kMixture: return "mixture";
  }
  return "?";
}

AttackerKind parse_attacker_kind(std::string_view name) {
  for (auto kind : kAllAttackers) {
    if (to_string(kind) == name) return kind;
  }
  throw InputError("unknown attacker '" + std::string(name) +
                   "' (expected random|bfs|dfs|pathfinder|mixture)");
}

std::unique_ptr<AttackerPolicy> make_attacker(AttackerKind kind) {
  switch (kind) {
    case AttackerKind::kRandom: return std::make_unique<RandomAttacker>();
    case AttackerKind::kBreadthFirst: return std::make_unique<SearchAttacker>(false);
    case AttackerKind::kDepthFirst: return std::make_unique<SearchAttacker>(true);
    case AttackerKind::kPathfinder: return std::make_unique<PathfinderAttacker>();
    case AttackerKind::kMixture: return std::make_unique<MixtureAttacker>();
  }
  throw InputError("unknown attacker kind");
}

std::optional<std::size_t> random_select(std::span<const std::size_t> surface, Rng& rng) {
  if (surface.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, surface.size() - 1);
  return surface[pick(rng)];
}

// -- random ------------------------------------------------------------------

void RandomAttacker::reset(const AttackGraph&, const SimState&, std::uint64_t seed) {
  rng_.seed(seed);
}

std::optional<std::size_t> RandomAttacker::select(const AttackGraph&, const SimState&,
                                                  std::span<const std::size_t> surface) {
  return random_select(surface, rng_);
}

// -- breadth-first / depth-first ---------------------------------------------

void SearchAttacker::reset(const AttackGraph& graph, const SimState&, std::uint64_t seed) {
  rng_.seed(seed);
  frontier_.clear();
  in_frontier_.assign(graph.num_attack_steps(), false);
}

std::optional<std::size_t> SearchAttacker::select(const AttackGraph& graph, const SimState&,
                                                  std::span<const std::size_t> surface) {
  if (surface.empty()) return std::nullopt;
  std::vector<bool> on_surface(graph.num_attack_steps(), false);
  for (auto s : surface) on_surface[s] = true;

  std::vector<std::size_t> fresh;
  for (auto s : surface) {
    if (!in_frontier_[s]) fresh.push_back(s);
  }
  std::shuffle(fresh.begin(), fresh.end(), rng_);
  for (auto s : fresh) in_frontier_[s] = true;
  if (depth_first_) {
    // fresh[0] ends up on top of the stack.
    for (auto it = fresh.rbegin(); it != fresh.rend(); ++it) frontier_.push_front(*it);
  } else {
    frontier_.insert(frontier_.end(), fresh.begin(), fresh.end());
  }

  while (!on_surface[frontier_.front()]) {
    in_frontier_[frontier_.front()] = false;
    frontier_.pop_front();
  }
  return frontier_.front();
}

// -- pathfinder --------------------------------------------------------------

double work_steps(double remaining_ttc) {
  return std::max(1.0, std::ceil(remaining_ttc));
}

std::vector<double> pathfinder_costs(const AttackGraph& graph, const SimState& state) {
  const std::size_t n = graph.num_attack_steps();
  std::vector<double> cost(n, kUnreachable);
  std::vector<bool> blocked(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (state.compromised[i]) {
      cost[i] = 0.0;
      continue;
    }
    for (auto d : graph.defense_parents(i)) {
      if (state.enabled[d]) blocked[i] = true;
    }
  }

  // Costs only decrease; a DAG settles within n sweeps.
  for (std::size_t sweep = 0; sweep <= n; ++sweep) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (state.compromised[i] || blocked[i]) continue;
      const auto& parents = graph.attack_parents(i);
      if (parents.empty()) continue;
      double reach;
      if (graph.attack_step(i).logic == StepLogic::kAnd) {
        reach = 0.0;
        for (auto p : parents) reach += cost[p];
      } else {
        reach = kUnreachable;
        for (auto p : parents) reach = std::min(reach, cost[p]);
      }
      double candidate = reach + work_steps(state.remaining_ttc[i]);
      if (candidate < cost[i]) {
        cost[i] = candidate;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return cost;
}

void PathfinderAttacker::reset(const AttackGraph& graph, const SimState& state,
                               std::uint64_t seed) {
  rng_.seed(seed);
  auto cost = pathfinder_costs(graph, state);
  targets_ = graph.flags();
  std::stable_sort(targets_.begin(), targets_.end(),
                   [&cost](std::size_t a, std::size_t b) { return cost[a] < cost[b]; });
  next_target_ = 0;
}

std::optional<std::size_t> PathfinderAttacker::select(const AttackGraph& graph,
                                                      const SimState& state,
                                                      std::span<const std::size_t> surface) {
  if (surface.empty()) return std::nullopt;
  auto cost = pathfinder_costs(graph, state);

  while (next_target_ < targets_.size()) {
    auto target = targets_[next_target_];
    if (state.captured_flags[target] || cost[target] == kUnreachable) {
      ++next_target_;
      continue;
    }
    // Walk back from the target along the cheapest plan until a workable step.
    std::size_t step = target;
    while (!in_attack_surface(graph, step, state.compromised, state.enabled)) {
      std::optional<std::size_t> best;
      for (auto p : graph.attack_parents(step)) {
        if (state.compromised[p] || cost[p] == kUnreachable) continue;
        if (!best || cost[p] < cost[*best]) best = p;
      }
      if (!best) throw ContractViolation("pathfinder: plan has no workable step");
      step = *best;
    }
    return step;
  }
  return random_select(surface, rng_);
}

// -- mixture -----------------------------------------------------------------

void MixtureAttacker::reset(const AttackGraph& graph, const SimState& state,
                            std::uint64_t seed) {
  Rng draw = make_rng(seed, Stream::kMixture);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(kBaseAttackers) - 1);
  active_kind_ = kBaseAttackers[pick(draw)];
  active_ = make_attacker(active_kind_);
  active_->reset(graph, state, derive_seed(seed, Stream::kAttacker));
}

std::optional<std::size_t> MixtureAttacker::select(const AttackGraph& graph,
                                                   const SimState& state,
                                                   std::span<const std::size_t> surface) {
  if (!active_) throw ContractViolation("mixture attacker used before reset");
  return active_->select(graph, state, surface);
}

}  // namespace acsim
