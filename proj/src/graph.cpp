#include "acsim/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <utility>

#include "acsim/errors.hpp"

namespace acsim {

namespace {

std::string join_violations(const std::vector<std::string>& violations) {
  std::string out = "invalid attack graph:";
  for (const auto& v : violations) {
    out += "\n  ";
    out += v;
  }
  return out;
}

void add_unique(std::vector<std::size_t>& list, std::size_t value) {
  if (std::find(list.begin(), list.end(), value) == list.end()) {
    list.push_back(value);
  }
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error(join_violations(violations)),
      violations_(std::move(violations)) {}

void RewardConfig::check() const {
  if (!(defense_cost > 0.0) || !std::isfinite(defense_cost)) {
    throw InputError("defense cost must be positive");
  }
  if (!(flag_cost > 0.0) || !std::isfinite(flag_cost)) {
    throw InputError("flag cost must be positive");
  }
}

AttackGraph::AttackGraph(std::vector<AttackStep> attack_steps,
                         std::vector<DefenseStep> defense_steps,
                         std::vector<Edge> edges)
    : attack_steps_(std::move(attack_steps)),
      defense_steps_(std::move(defense_steps)) {
  const std::size_t n = attack_steps_.size();
  for (std::size_t i = 0; i < n; ++i) {
    attack_lookup_.emplace(attack_steps_[i].id, i);
    if (attack_steps_[i].is_entry && !entry_) entry_ = i;
    if (attack_steps_[i].is_flag) flags_.push_back(i);
  }
  for (std::size_t i = 0; i < defense_steps_.size(); ++i) {
    defense_lookup_.emplace(defense_steps_[i].id, i);
  }

  attack_parents_.resize(n);
  defense_parents_.resize(n);
  attack_children_.resize(n);
  defense_children_.resize(defense_steps_.size());

  // Edges form a set: keep the first occurrence of each pair.
  std::set<std::pair<std::string, std::string>> seen;
  for (auto& e : edges) {
    if (!seen.emplace(e.parent, e.child).second) continue;
    edges_.push_back(std::move(e));
  }

  for (const auto& e : edges_) {
    auto child = attack_index(e.child);
    if (!child) continue;
    if (auto p = attack_index(e.parent)) {
      add_unique(attack_parents_[*child], *p);
      add_unique(attack_children_[*p], *child);
    } else if (auto d = defense_index(e.parent)) {
      add_unique(defense_parents_[*child], *d);
      add_unique(defense_children_[*d], *child);
    }
  }
}

std::optional<std::size_t> AttackGraph::attack_index(std::string_view id) const {
  auto it = attack_lookup_.find(std::string(id));
  if (it == attack_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> AttackGraph::defense_index(std::string_view id) const {
  auto it = defense_lookup_.find(std::string(id));
  if (it == defense_lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> validate(const AttackGraph& graph) {
  std::vector<std::string> out;
  auto emit = [&out](const std::string& rule, std::set<std::string> ids) {
    for (const auto& id : ids) out.push_back(rule + " " + id);
  };

  const auto& steps = graph.attack_steps();

  // Rule 1: ids are unique across both node kinds.
  {
    std::map<std::string, int> counts;
    for (const auto& s : steps) ++counts[s.id];
    for (const auto& d : graph.defense_steps()) ++counts[d.id];
    std::set<std::string> dups;
    for (const auto& [id, c] : counts) {
      if (c > 1) dups.insert(id);
    }
    emit("duplicate id", std::move(dups));
  }

  // Rule 2: edges reference known nodes, never point into a defense step and
  // never loop onto themselves.
  {
    std::set<std::string> unknown, into_defense, self_loops;
    for (const auto& e : graph.edges()) {
      bool parent_known = graph.attack_index(e.parent) || graph.defense_index(e.parent);
      if (!parent_known) unknown.insert(e.parent);
      if (graph.defense_index(e.child)) {
        into_defense.insert(e.child);
      } else if (!graph.attack_index(e.child)) {
        unknown.insert(e.child);
      }
      if (e.parent == e.child) self_loops.insert(e.child);
    }
    emit("unknown edge endpoint", std::move(unknown));
    emit("edge into defense step", std::move(into_defense));
    emit("self-loop", std::move(self_loops));
  }

  // Rule 3: exactly one entry step.
  {
    auto entries = std::count_if(steps.begin(), steps.end(),
                                 [](const AttackStep& s) { return s.is_entry; });
    if (entries == 0) out.emplace_back("no entry step");
    if (entries > 1) out.emplace_back("multiple entry steps");
  }

  // Rule 4: per-step attribute constraints.
  {
    std::set<std::string> bad_ttc, entry_ttc, entry_flag;
    for (const auto& s : steps) {
      if (!(s.ttc_mean >= 0.0) || !std::isfinite(s.ttc_mean)) bad_ttc.insert(s.id);
      if (s.is_entry && s.ttc_mean != 0.0) entry_ttc.insert(s.id);
      if (s.is_entry && s.is_flag) entry_flag.insert(s.id);
    }
    emit("invalid ttc", std::move(bad_ttc));
    emit("entry step with nonzero ttc", std::move(entry_ttc));
    emit("entry step is a flag", std::move(entry_flag));
  }

  // Rule 5: every flag reachable from the entry, ignoring defenses.
  if (auto entry = graph.entry()) {
    std::vector<bool> seen(graph.num_attack_steps(), false);
    std::deque<std::size_t> queue{*entry};
    seen[*entry] = true;
    while (!queue.empty()) {
      auto cur = queue.front();
      queue.pop_front();
      for (auto child : graph.attack_children(cur)) {
        if (!seen[child]) {
          seen[child] = true;
          queue.push_back(child);
        }
      }
    }
    std::set<std::string> unreachable;
    for (auto f : graph.flags()) {
      if (!seen[f]) unreachable.insert(steps[f].id);
    }
    emit("unreachable flag", std::move(unreachable));
  }

  return out;
}

void require_valid(const AttackGraph& graph) {
  auto violations = validate(graph);
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

bool in_attack_surface(const AttackGraph& graph, std::size_t step,
                       const std::vector<bool>& compromised,
                       const std::vector<bool>& enabled) {
  if (compromised[step]) return false;
  for (auto d : graph.defense_parents(step)) {
    if (enabled[d]) return false;
  }
  const auto& parents = graph.attack_parents(step);
  std::size_t done = 0;
  for (auto p : parents) {
    if (compromised[p]) ++done;
  }
  if (done == 0) return false;
  if (graph.attack_step(step).logic == StepLogic::kAnd) return done == parents.size();
  return true;
}

std::vector<std::size_t> attack_surface(const AttackGraph& graph,
                                        const std::vector<bool>& compromised,
                                        const std::vector<bool>& enabled) {
  if (compromised.size() != graph.num_attack_steps() ||
      enabled.size() != graph.num_defense_steps()) {
    throw InputError("attack_surface: state vector length does not match graph");
  }
  std::vector<std::size_t> surface;
  for (std::size_t i = 0; i < graph.num_attack_steps(); ++i) {
    if (in_attack_surface(graph, i, compromised, enabled)) surface.push_back(i);
  }
  return surface;
}

std::set<std::string> attack_surface(const AttackGraph& graph,
                                     const std::set<std::string>& compromised,
                                     const std::set<std::string>& enabled) {
  std::vector<bool> c(graph.num_attack_steps(), false);
  std::vector<bool> e(graph.num_defense_steps(), false);
  for (const auto& id : compromised) {
    auto i = graph.attack_index(id);
    if (!i) throw InputError("unknown attack step '" + id + "'");
    c[*i] = true;
  }
  for (const auto& id : enabled) {
    auto i = graph.defense_index(id);
    if (!i) throw InputError("unknown defense step '" + id + "'");
    e[*i] = true;
  }
  std::set<std::string> out;
  for (auto i : attack_surface(graph, c, e)) out.insert(graph.attack_step(i).id);
  return out;
}

double flag_cost(const AttackGraph& graph) {
  double total = 0.0;
  for (const auto& s : graph.attack_steps()) total += s.ttc_mean;
  return 1.5 * total;
}

RewardConfig default_rewards(const AttackGraph& graph) {
  return RewardConfig{1.0, flag_cost(graph)};
}

std::string_view to_string(StepLogic logic) {
  return logic == StepLogic::kAnd ? "and" : "or";
}

}  // namespace acsim
