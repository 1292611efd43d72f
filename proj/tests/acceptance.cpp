// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "acsim/attackers.hpp"
#include "acsim/defenders.hpp"
#include "acsim/episode.hpp"
#include "acsim/graph_gen.hpp"
#include "acsim/graph_io.hpp"
#include "acsim/harness.hpp"
#include "acsim/ppo.hpp"
#include "acsim/sim.hpp"
#include "acsim/stats.hpp"
#include "oracles.hpp"
#include "ppo_fixtures.hpp"

using namespace acsim;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

AttackGraph bundled(const std::string& name) {
  return load_graph_file(std::string(ACSIM_GRAPH_DIR) + "/" + name);
}

const char* kBundled[] = {"toy.json", "four_ways.json", "two_keys_one_door.json"};

Verdict noise_grid_shape() {
  std::vector<double> values{0.0, 0.125, 0.25, 0.725, 1.0};
  auto n = noise_grid(values).size();
  return {n == 15, "cells=" + std::to_string(n)};
}

Verdict reward_bounds() {
  std::size_t violations = 0, episodes = 0;
  double lowest_margin = 1e300;
  for (const char* name : kBundled) {
    auto g = bundled(name);
    auto r = default_rewards(g);
    for (std::uint64_t i = 0; i < 1000; ++i) {
      auto attacker = make_attacker(AttackerKind::kRandom);
      RandomDefender defender;
      auto rec = run_episode(g, *attacker, defender, NoiseConfig{}, r, i, false);
      const auto len = std::max(rec.length, g.num_defense_steps());
      const double lo = min_reward_bound(g, r, len);
      ++episodes;
      lowest_margin = std::min(lowest_margin, rec.total_reward - lo);
      if (rec.total_reward > 0.0 || rec.total_reward < lo) ++violations;
    }
  }
  return {violations == 0, "episodes=" + std::to_string(episodes) +
                               " violations=" + std::to_string(violations) +
                               " min_margin=" + fmt(lowest_margin)};
}

Verdict noise_calibration() {
  const double fpr = 0.25, fnr = 0.125;
  SimState s;
  s.compromised.assign(10, false);
  for (std::size_t i = 0; i < 5; ++i) s.compromised[i] = true;
  Rng rng(99);
  std::size_t fp = 0, fn = 0, pos = 0, neg = 0;
  for (int rep = 0; rep < 20000; ++rep) {
    auto o = observe(s, NoiseConfig{fpr, fnr}, rng);
    for (std::size_t i = 0; i < 10; ++i) {
      if (s.compromised[i]) {
        ++pos;
        fn += o.attack_bits[i] == 0;
      } else {
        ++neg;
        fp += o.attack_bits[i] == 1;
      }
    }
  }
  const double efp = static_cast<double>(fp) / static_cast<double>(neg);
  const double efn = static_cast<double>(fn) / static_cast<double>(pos);
  const bool ok = pos >= 100000 && neg >= 100000 && std::abs(efp - fpr) <= 0.01 &&
                  std::abs(efn - fnr) <= 0.01;
  return {ok, "fpr=" + fmt(efp) + " fnr=" + fmt(efn) + " bits/class=" + std::to_string(pos)};
}

Verdict ttc_sampling() {
  AttackGraph g({{"e", StepLogic::kOr, 0.0, false, true}, {"a", StepLogic::kOr, 10.0, true, false}},
                {}, {{"e", "a"}});
  Rng rng(4);
  double sum = 0.0;
  bool positive = true, zero_ok = true;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto t = sample_ttc(g, rng);
    zero_ok &= t[0] == 0.0;
    positive &= t[1] > 0.0;
    sum += t[1];
  }
  const double m = sum / n;
  return {std::abs(m - 10.0) <= 0.2 && positive && zero_ok,
          "mean=" + fmt(m) + " all_positive=" + std::to_string(positive) +
              " zero_mean_is_zero=" + std::to_string(zero_ok)};
}

Verdict surface_oracle() {
  std::mt19937_64 rng(2024);
  std::size_t states = 0, mismatches = 0;
  for (int gi = 0; gi < 50; ++gi) {
    std::uniform_int_distribution<std::size_t> na(2, 12), nd(0, 4);
    auto g = oracle::random_graph(rng, na(rng), nd(rng), 0.4);
    std::bernoulli_distribution bit(0.5);
    for (int k = 0; k < 250; ++k) {
      std::vector<bool> comp(g.num_attack_steps()), en(g.num_defense_steps());
      for (std::size_t i = 0; i < comp.size(); ++i) comp[i] = bit(rng);
      for (std::size_t i = 0; i < en.size(); ++i) en[i] = bit(rng);
      ++states;
      mismatches += attack_surface(g, comp, en) != oracle::surface(g, comp, en);
    }
  }
  return {mismatches == 0 && states >= 10000,
          "states=" + std::to_string(states) + " mismatches=" + std::to_string(mismatches)};
}

Verdict pathfinder_optimality() {
  std::mt19937_64 rng(31);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto g = oracle::random_graph(rng, 12, 0, 0.0);
    const std::uint64_t seed = 500 + static_cast<std::uint64_t>(trial);
    Simulator sim(g, NoiseConfig{}, RewardConfig{1.0, 1.0}, seed);
    std::vector<double> w;
    for (double t : sim.state().remaining_ttc) w.push_back(oracle::work_steps(t));
    auto dist = oracle::dijkstra(g, w);
    double best = kUnreachable;
    for (auto f : g.flags()) best = std::min(best, dist[f]);
    PathfinderAttacker pf;
    pf.reset(g, sim.state(), seed);
    std::size_t t = 0;
    while (!sim.done()) {
      auto out = sim.step(pf.select(g, sim.state(), sim.attack_surface()), std::nullopt);
      ++t;
      if (!out.flags_captured_now.empty()) break;
    }
    mismatches += static_cast<double>(t) != best;
  }
  return {mismatches == 0, "graphs=20 mismatches=" + std::to_string(mismatches)};
}

Verdict gradient_check() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  std::size_t params = 0;
  for (int trial = 0; trial < 10; ++trial) {
    auto p = fixtures::random_params(rng, 5, {6, 5}, 4);
    auto b = fixtures::random_batch(rng, p, 12);
    auto c = fixtures::gradient_check(p, b, fixtures::all_terms_hyperparams(), 1e-5);
    worst = std::max(worst, c.max_rel_error);
    params += c.parameters;
  }
  return {worst < 1e-4, "max_rel_error=" + fmt(worst) + " parameters=" + std::to_string(params)};
}

Verdict learning_sanity() {
  auto g = bundled("toy.json");
  auto r = default_rewards(g);
  const NoiseConfig noise{};
  auto trained = train(g, AttackerKind::kDepthFirst, noise, r, desk_scale_hyperparams(), 1);
  DefenderSpec learned{DefenderKind::kLearned,
                       std::make_shared<const PolicyParams>(trained.params), SelectMode::kGreedy};
  DefenderSpec random{DefenderKind::kRandom, nullptr, SelectMode::kSample};
  auto a = evaluate_seed(g, AttackerKind::kDepthFirst, learned, noise, r, 200, 1);
  auto b = evaluate_seed(g, AttackerKind::kDepthFirst, random, noise, r, 200, 1);
  auto t = welch_t_test(a.episode_rewards, b.episode_rewards);
  return {a.mean_reward > b.mean_reward && t.p_value < 0.05,
          "learned=" + fmt(a.mean_reward) + " random=" + fmt(b.mean_reward) +
              " p=" + fmt(t.p_value)};
}

Verdict fnr_resilience() {
  auto g = bundled("four_ways.json");
  auto r = default_rewards(g);
  DefenderSpec trip{DefenderKind::kTripwire, nullptr, SelectMode::kSample};
  auto clean = evaluate_seed(g, AttackerKind::kDepthFirst, trip, NoiseConfig{0.0, 0.0}, r, 200, 1);
  auto blind = evaluate_seed(g, AttackerKind::kDepthFirst, trip, NoiseConfig{0.0, 1.0}, r, 200, 1);
  auto t = welch_t_test(blind.episode_rewards, clean.episode_rewards);
  std::size_t trace_diffs = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto seed = eval_episode_seed(1, i);
    auto a1 = make_attacker(AttackerKind::kDepthFirst);
    auto a2 = make_attacker(AttackerKind::kDepthFirst);
    TripwireDefender tw;
    NoopDefender noop;
    auto x = run_episode(g, *a1, tw, NoiseConfig{0.0, 1.0}, r, seed);
    auto y = run_episode(g, *a2, noop, NoiseConfig{0.0, 1.0}, r, seed);
    trace_diffs += !(x == y);
  }
  return {blind.mean_reward < clean.mean_reward && t.p_value < 0.05 && trace_diffs == 0,
          "fnr0=" + fmt(clean.mean_reward) + " fnr1=" + fmt(blind.mean_reward) +
              " p=" + fmt(t.p_value) + " trace_diffs=" + std::to_string(trace_diffs)};
}

Verdict random_flatness() {
  auto g = bundled("four_ways.json");
  auto r = default_rewards(g);
  std::vector<double> values{0.0, 0.125, 0.25, 0.725, 1.0};
  DefenderSpec random{DefenderKind::kRandom, nullptr, SelectMode::kSample};
  std::vector<double> means, errs;
  for (auto cell : noise_grid(values)) {
    auto e = evaluate_seed(g, AttackerKind::kDepthFirst, random, NoiseConfig{cell.fpr, cell.fnr},
                           r, 500, 1);
    means.push_back(e.mean_reward);
    errs.push_back(std_error(e.episode_rewards));
  }
  std::size_t violations = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    for (std::size_t j = i + 1; j < means.size(); ++j) {
      const double sigma = std::sqrt(errs[i] * errs[i] + errs[j] * errs[j]);
      const double gap = std::abs(means[i] - means[j]);
      worst = std::max(worst, sigma > 0 ? gap / sigma : (gap > 0 ? 1e300 : 0.0));
      violations += gap > 3.0 * sigma;
    }
  }
  return {violations == 0 && means.size() == 15,
          "cells=" + std::to_string(means.size()) + " max_gap_sigma=" + fmt(worst) +
              " violations=" + std::to_string(violations)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "acsim_acceptance_determinism";
  fs::remove_all(root);
  const std::string cli = ACSIM_CLI;
  const std::string graphs = ACSIM_GRAPH_DIR;
  const std::string hp =
      " --hidden 16 --train-batch 128 --minibatch 64 --iterations 2 --sgd-epochs 2";
  // Each command writes into {d}; run under two directories, compare files.
  const std::vector<std::string> commands = {
      "generate --size 60 --seed 5 --out {d}/g.json",
      "simulate --graph {d}/g.json --attacker mixture --defender random --fpr 0.2 --fnr 0.1 "
      "--episodes 20 --seed 9 --trajectory {d}/traj.csv --out {d}/sim.csv",
      "simulate --graph " + graphs + "/four_ways.json --episodes 5 --json --trajectory "
      "{d}/traj.jsonl --out {d}/sim.jsonl",
      "train --graph " + graphs + "/two_keys_one_door.json --fpr 0.1 --fnr 0.1" + hp +
          " --seed 4 --out {d}/policy.json --curve {d}/curve.csv",
      "evaluate --graph " + graphs + "/two_keys_one_door.json --defender learned --policy-file "
      "{d}/policy.json --episodes 30 --seeds 1,2,3 --jobs 2 --out {d}/eval.csv",
      "sweep --graph " + graphs + "/toy.json --values 0,0.5,1" + hp +
          " --episodes 10 --seeds 1,2 --jobs 2 --out-dir {d}/exp",
      "attacker-matrix --graph " + graphs + "/toy.json" + hp +
          " --episodes 5 --seeds 1 --jobs 2 --out-dir {d}/exp",
      "scaling --sizes 20,40" + hp + " --episodes 5 --seeds 1,2 --jobs 2 --out-dir {d}/exp",
  };
  std::size_t failures = 0;
  for (const char* run : {"a", "b"}) {
    const fs::path d = root / run;
    fs::create_directories(d);
    for (auto cmd : commands) {
      for (auto pos = cmd.find("{d}"); pos != std::string::npos; pos = cmd.find("{d}")) {
        cmd.replace(pos, 3, d.string());
      }
      const int status = std::system((cli + " " + cmd + " >/dev/null 2>&1").c_str());
      failures += !(WIFEXITED(status) && WEXITSTATUS(status) == 0);
    }
  }
  std::size_t files = 0, diffs = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(entry.path(), root / "a");
    diffs += slurp(entry.path()) != slurp(root / "b" / rel);
  }
  fs::remove_all(root);
  return {failures == 0 && diffs == 0 && files == 12,
          "files=" + std::to_string(files) + " diffs=" + std::to_string(diffs) +
              " failed_commands=" + std::to_string(failures)};
}

Verdict generator_contract() {
  std::size_t problems = 0;
  std::string shapes;
  for (std::size_t n : {20u, 40u, 60u, 80u}) {
    GenConfig cfg;
    cfg.num_attack_steps = n;
    cfg.seed = 1;
    auto g = generate_graph(cfg);
    problems += !validate(g).empty();
    problems += g.num_attack_steps() != n;
    problems += g.flags().size() != n / 20;
    std::set<std::size_t> guards;
    for (auto f : g.flags()) {
      const auto& d = g.defense_parents(f);
      problems += d.empty();
      for (auto x : d) guards.insert(x);
    }
    problems += guards.size() != g.flags().size();
    shapes += " " + std::to_string(n) + ":" + std::to_string(g.flags().size());
  }
  return {problems == 0, "size:flags" + shapes + " problems=" + std::to_string(problems)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "noise-grid shape", noise_grid_shape},
      {2, "reward bounds", reward_bounds},
      {3, "noise calibration", noise_calibration},
      {4, "ttc sampling", ttc_sampling},
      {5, "attack-surface oracle", surface_oracle},
      {6, "pathfinder optimality", pathfinder_optimality},
      {7, "ppo gradient check", gradient_check},
      {8, "learning sanity", learning_sanity},
      {9, "fnr resilience", fnr_resilience},
      {10, "random-defender flatness", random_flatness},
      {11, "determinism", determinism},
      {12, "generator contract", generator_contract},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !v.pass;
    std::printf("%s %2d %-26s %s (%.2fs)\n", v.pass ? "PASS" : "FAIL", c.id, c.name,
                v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
