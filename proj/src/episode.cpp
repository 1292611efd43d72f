#include "acsim/episode.hpp"

#include <cmath>

#include "json.hpp"

namespace acsim {

namespace {

std::string attack_label(const AttackGraph& g, std::optional<std::size_t> a) {
  return a ? g.attack_step(*a).id : "-";
}

std::string defense_label(const AttackGraph& g, std::optional<std::size_t> d) {
  return d ? g.defense_steps()[*d].id : "-";
}

}  // namespace

std::size_t episode_step_cap(const AttackGraph& graph) {
  double total = static_cast<double>(graph.num_attack_steps());
  for (const auto& s : graph.attack_steps()) total += s.ttc_mean;
  return static_cast<std::size_t>(std::ceil(10.0 * total));
}

EpisodeRecord run_episode(const AttackGraph& graph, AttackerPolicy& attacker,
                          DefenderPolicy& defender, const NoiseConfig& noise,
                          const RewardConfig& rewards, std::uint64_t seed,
                          bool record_steps) {
  Simulator sim(graph, noise, rewards, seed);
  attacker.reset(graph, sim.state(), derive_seed(seed, Stream::kAttacker));
  defender.reset(graph, derive_seed(seed, Stream::kDefender));

  EpisodeRecord record;
  record.num_flags = graph.flags().size();
  const std::size_t cap = episode_step_cap(graph);

  while (!sim.done()) {
    if (record.length >= cap) {
      record.truncated = true;
      break;
    }
    auto surface = sim.attack_surface();
    auto attack = attacker.select(graph, sim.state(), surface);
    auto defend = defender.select(sim.observation(), sim.state().enabled);
    const std::size_t t = sim.state().clock;
    auto outcome = sim.step(attack, defend);

    record.total_reward += outcome.reward;
    record.flags_captured += outcome.flags_captured_now.size();
    ++record.length;
    if (record_steps) {
      record.steps.push_back(StepRecord{t, attack, defend, outcome.reward, outcome.done,
                                        outcome.observation.bit_string()});
    }
  }
  return record;
}

void write_trajectory_header(std::ostream& out) {
  out << "episode,t,attacker_action,defender_action,reward,done,observation\n";
}

void write_trajectory_csv(std::ostream& out, const AttackGraph& graph,
                          const EpisodeRecord& record, std::size_t episode) {
  for (const auto& s : record.steps) {
    out << episode << ',' << s.t << ',' << attack_label(graph, s.attacker_action) << ','
        << defense_label(graph, s.defender_action) << ',' << s.reward << ','
        << (s.done ? 1 : 0) << ',' << s.observation << '\n';
  }
}

void write_trajectory_jsonl(std::ostream& out, const AttackGraph& graph,
                            const EpisodeRecord& record, std::size_t episode) {
  for (const auto& s : record.steps) {
    nlohmann::ordered_json row;
    row["episode"] = episode;
    row["t"] = s.t;
    row["attacker_action"] = attack_label(graph, s.attacker_action);
    row["defender_action"] = defense_label(graph, s.defender_action);
    row["reward"] = s.reward;
    row["done"] = s.done;
    row["observation"] = s.observation;
    out << row.dump() << '\n';
  }
}

}  // namespace acsim
