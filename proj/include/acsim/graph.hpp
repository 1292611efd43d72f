#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace acsim {

enum class StepLogic { kOr, kAnd };

struct AttackStep {
  std::string id;
  StepLogic logic = StepLogic::kOr;
  double ttc_mean = 0.0;  // mean time-to-compromise, in time-steps
  bool is_flag = false;
  bool is_entry = false;

  bool operator==(const AttackStep&) const = default;
};

struct DefenseStep {
  std::string id;

  bool operator==(const DefenseStep&) const = default;
};

// Directed prerequisite edge. The child is always an attack step; the parent
// is an attack step or a defense step.
struct Edge {
  std::string parent;
  std::string child;

  bool operator==(const Edge&) const = default;
};

struct RewardConfig {
  double defense_cost = 1.0;  // per enabled defense, per time-step
  double flag_cost = 1.0;     // once per captured flag

  // Throws InputError unless both costs are positive and finite.
  void check() const;
};

/// Immutable attack graph.
///
/// The order of attack_steps and defense_steps fixes the index order of the
/// state vectors A and D; every index-based API in the library uses it.
/// Construction never throws on semantic problems (duplicate ids, dangling
/// edges, missing entry...). Those are reported by validate(), and edges that
/// cannot be resolved are left out of the adjacency lists.
class AttackGraph {
 public:
  AttackGraph() = default;
  AttackGraph(std::vector<AttackStep> attack_steps,
              std::vector<DefenseStep> defense_steps, std::vector<Edge> edges);

  const std::vector<AttackStep>& attack_steps() const { return attack_steps_; }
  const std::vector<DefenseStep>& defense_steps() const { return defense_steps_; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::size_t num_attack_steps() const { return attack_steps_.size(); }
  std::size_t num_defense_steps() const { return defense_steps_.size(); }
  const AttackStep& attack_step(std::size_t i) const { return attack_steps_[i]; }

  std::optional<std::size_t> attack_index(std::string_view id) const;
  std::optional<std::size_t> defense_index(std::string_view id) const;

  // First attack step marked as entry, if any.
  std::optional<std::size_t> entry() const { return entry_; }
  // Attack-step indices of flags, in index order.
  const std::vector<std::size_t>& flags() const { return flags_; }

  const std::vector<std::size_t>& attack_parents(std::size_t step) const {
    return attack_parents_[step];
  }
  const std::vector<std::size_t>& defense_parents(std::size_t step) const {
    return defense_parents_[step];
  }
  const std::vector<std::size_t>& attack_children(std::size_t step) const {
    return attack_children_[step];
  }
  const std::vector<std::size_t>& defense_children(std::size_t defense) const {
    return defense_children_[defense];
  }

  bool operator==(const AttackGraph& other) const {
    return attack_steps_ == other.attack_steps_ &&
           defense_steps_ == other.defense_steps_ && edges_ == other.edges_;
  }

 private:
  std::vector<AttackStep> attack_steps_;
  std::vector<DefenseStep> defense_steps_;
  std::vector<Edge> edges_;

  std::unordered_map<std::string, std::size_t> attack_lookup_;
  std::unordered_map<std::string, std::size_t> defense_lookup_;
  std::optional<std::size_t> entry_;
  std::vector<std::size_t> flags_;
  std::vector<std::vector<std::size_t>> attack_parents_;
  std::vector<std::vector<std::size_t>> defense_parents_;
  std::vector<std::vector<std::size_t>> attack_children_;
  std::vector<std::vector<std::size_t>> defense_children_;
};

// Every invariant violation, grouped by rule, each group sorted by node id.
// An empty result means the graph is valid.
std::vector<std::string> validate(const AttackGraph& graph);

// Throws ValidationError if validate() reports anything.
void require_valid(const AttackGraph& graph);

// True if `step` satisfies the three attack-surface conditions and is not
// itself compromised.
bool in_attack_surface(const AttackGraph& graph, std::size_t step,
                       const std::vector<bool>& compromised,
                       const std::vector<bool>& enabled);

// Attack surface as sorted attack-step indices. `compromised` has one entry
// per attack step, `enabled` one per defense step.
std::vector<std::size_t> attack_surface(const AttackGraph& graph,
                                        const std::vector<bool>& compromised,
                                        const std::vector<bool>& enabled);

// Id-based variant; throws InputError on ids that are not attack steps
// (compromised) or defense steps (enabled).
std::set<std::string> attack_surface(const AttackGraph& graph,
                                     const std::set<std::string>& compromised,
                                     const std::set<std::string>& enabled);

// 1.5 times the summed mean TTC of all attack steps.
double flag_cost(const AttackGraph& graph);

// c_d = 1, c_f = flag_cost(graph).
RewardConfig default_rewards(const AttackGraph& graph);

std::string_view to_string(StepLogic logic);

}  // namespace acsim
