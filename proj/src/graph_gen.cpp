#include "acsim/graph_gen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "acsim/errors.hpp"
#include "acsim/rng.hpp"

namespace acsim {

namespace {

std::string step_id(std::size_t i, std::size_t width) {
  auto digits = std::to_string(i);
  return "s" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void GenConfig::check() const {
  if (num_attack_steps < 20 || num_attack_steps % 20 != 0) {
    throw InputError("num_attack_steps must be a positive multiple of 20, got " +
                     std::to_string(num_attack_steps));
  }
  if (!(ttc_min >= 0.0) || !(ttc_max >= ttc_min) || !std::isfinite(ttc_max)) {
    throw InputError("ttc range must satisfy 0 <= min <= max");
  }
  if (!is_probability(and_fraction)) throw InputError("and_fraction must be in [0, 1]");
  if (!is_probability(extra_parent_prob)) {
    throw InputError("extra_parent_prob must be in [0, 1]");
  }
}

AttackGraph generate_graph(const GenConfig& config) {
  config.check();
  const std::size_t n = config.num_attack_steps;
  const std::size_t width = std::to_string(n - 1).size();
  Rng rng = make_rng(config.seed, Stream::kGraph);
  std::uniform_real_distribution<double> ttc_dist(config.ttc_min, config.ttc_max);

  std::vector<AttackStep> steps(n);
  std::vector<std::vector<std::size_t>> parents(n);
  std::vector<std::size_t> depth(n, 0);
  std::vector<Edge> edges;

  steps[0] = AttackStep{step_id(0, width), StepLogic::kOr, 0.0, false, true};
  for (std::size_t k = 1; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    parents[k].push_back(pick(rng));
    if (k >= 2 && uniform01(rng) < config.extra_parent_prob) {
      std::size_t second = pick(rng);
      while (second == parents[k][0]) second = pick(rng);
      parents[k].push_back(second);
    }
    bool is_and = parents[k].size() >= 2 && uniform01(rng) < config.and_fraction;
    double ttc = std::round(ttc_dist(rng) * 10.0) / 10.0;
    steps[k] = AttackStep{step_id(k, width), is_and ? StepLogic::kAnd : StepLogic::kOr,
                          ttc, false, false};
    for (auto p : parents[k]) {
      depth[k] = std::max(depth[k], depth[p] + 1);
      edges.push_back(Edge{steps[p].id, steps[k].id});
    }
  }

  // Deepest steps become flags; ids are zero-padded so id order is index order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (depth[a] != depth[b]) return depth[a] > depth[b];
    return steps[a].id < steps[b].id;
  });
  std::vector<std::size_t> flag_steps(order.begin(), order.begin() + n / 20);
  std::sort(flag_steps.begin(), flag_steps.end());

  std::vector<DefenseStep> defenses;
  for (auto f : flag_steps) {
    steps[f].is_flag = true;
    defenses.push_back(DefenseStep{"d_" + steps[f].id});
    edges.push_back(Edge{defenses.back().id, steps[f].id});
  }

  return AttackGraph(std::move(steps), std::move(defenses), std::move(edges));
}

}  // namespace acsim
