#include <gtest/gtest.h>

#include <map>
#include <random>

#include "acsim/attackers.hpp"
#include "acsim/defenders.hpp"
#include "acsim/episode.hpp"
#include "acsim/errors.hpp"
#include "acsim/graph_io.hpp"
#include "acsim/mlp.hpp"
#include "acsim/sim.hpp"
#include "oracles.hpp"

using namespace acsim;

namespace {

AttackStep step(std::string id, double ttc = 1.0, bool flag = false,
                StepLogic logic = StepLogic::kOr) {
  return AttackStep{std::move(id), logic, ttc, flag, false};
}
AttackStep entry_step() { return AttackStep{"e", StepLogic::kOr, 0.0, false, true}; }

// Initial state with hand-set remaining TTCs.
SimState state_with(const AttackGraph& g, std::vector<double> ttc) {
  SimState s;
  s.remaining_ttc = std::move(ttc);
  s.compromised.assign(g.num_attack_steps(), false);
  s.compromised[*g.entry()] = true;
  s.enabled.assign(g.num_defense_steps(), false);
  s.captured_flags.assign(g.num_attack_steps(), false);
  return s;
}

// Drives one attacker with no defender until the surface empties and returns
// the order in which steps became compromised.
std::vector<std::size_t> compromise_order(const AttackGraph& g, AttackerPolicy& attacker,
                                          std::uint64_t seed) {
  Simulator sim(g, NoiseConfig{}, RewardConfig{1.0, 1.0}, seed);
  attacker.reset(g, sim.state(), seed);
  std::vector<std::size_t> order;
  while (!sim.done()) {
    auto before = sim.state().compromised;
    auto surface = sim.attack_surface();
    sim.step(attacker.select(g, sim.state(), surface), std::nullopt);
    for (std::size_t i = 0; i < g.num_attack_steps(); ++i) {
      if (!before[i] && sim.state().compromised[i]) order.push_back(i);
    }
  }
  return order;
}

std::vector<std::size_t> distances(const AttackGraph& g) {
  std::vector<double> unit(g.num_attack_steps(), 1.0);
  auto d = oracle::dijkstra(g, unit);
  std::vector<std::size_t> out;
  for (double x : d) out.push_back(static_cast<std::size_t>(x));
  return out;
}

// Random rooted tree with all TTC means 1.
AttackGraph random_tree(std::mt19937_64& rng, std::size_t n) {
  std::vector<AttackStep> steps{entry_step()};
  std::vector<Edge> edges;
  for (std::size_t k = 1; k < n; ++k) {
    steps.push_back(step("s" + std::to_string(k)));
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    auto p = pick(rng);
    edges.push_back({p == 0 ? "e" : "s" + std::to_string(p), "s" + std::to_string(k)});
  }
  return AttackGraph(steps, {}, edges);
}

PolicyParams params_with_logits(std::size_t inputs, const std::vector<double>& logits) {
  std::vector<std::size_t> hidden{3};
  auto p = zero_policy_params(inputs, hidden, logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) p.policy_head.bias[i] = logits[i];
  return p;
}

}  // namespace

TEST(AttackerKind, ParseRoundTrip) {
  for (auto k : kAllAttackers) EXPECT_EQ(parse_attacker_kind(to_string(k)), k);
  EXPECT_THROW(parse_attacker_kind("warp"), InputError);
}

TEST(RandomSelect, Basics) {
  Rng rng(1);
  std::vector<std::size_t> one{4};
  EXPECT_EQ(random_select(one, rng), std::optional<std::size_t>(4));
  EXPECT_EQ(random_select({}, rng), std::nullopt);
  std::vector<std::size_t> two{1, 2};
  int first = 0;
  for (int i = 0; i < 10000; ++i) first += *random_select(two, rng) == 1;
  EXPECT_NEAR(first / 10000.0, 0.5, 0.02);
}

TEST(Attackers, AlwaysSelectFromSurface) {
  std::mt19937_64 rng(3);
  for (auto kind : kAllAttackers) {
    for (int ep = 0; ep < 1000; ++ep) {
      auto g = oracle::random_graph(rng, 8, 2, 0.3);
      auto attacker = make_attacker(kind);
      RandomDefender defender;
      // The engine throws ContractViolation on any off-surface action.
      ASSERT_NO_THROW(run_episode(g, *attacker, defender, NoiseConfig{}, RewardConfig{1, 1},
                                  static_cast<std::uint64_t>(ep), false));
    }
  }
}

TEST(Attackers, EmptySurfaceGivesNothing) {
  AttackGraph g({entry_step()}, {}, {});
  auto s = state_with(g, {0.0});
  for (auto kind : kAllAttackers) {
    auto a = make_attacker(kind);
    a->reset(g, s, 1);
    EXPECT_EQ(a->select(g, s, {}), std::nullopt);
  }
}

TEST(Bfs, ChainInOrder) {
  AttackGraph g({entry_step(), step("a"), step("b")}, {}, {{"e", "a"}, {"a", "b"}});
  SearchAttacker bfs(false);
  EXPECT_EQ(compromise_order(g, bfs, 1), (std::vector<std::size_t>{1, 2}));
}

TEST(Bfs, DepthOneBeforeDepthTwoInShuffledOrder) {
  AttackGraph g({entry_step(), step("a"), step("b"), step("c"), step("x")}, {},
                {{"e", "a"}, {"e", "b"}, {"a", "c"}, {"b", "x"}});
  std::set<std::vector<std::size_t>> prefixes;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    SearchAttacker bfs(false);
    auto order = compromise_order(g, bfs, seed);
    ASSERT_EQ(order.size(), 4u);
    std::set<std::size_t> first_two(order.begin(), order.begin() + 2);
    EXPECT_EQ(first_two, (std::set<std::size_t>{1, 2}));
    prefixes.insert({order[0], order[1]});
  }
  EXPECT_EQ(prefixes.size(), 2u);
}

TEST(Bfs, OrderNonDecreasingInDistance) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = oracle::random_graph(rng, 12, 0, 0.0);
    auto dist = distances(g);
    SearchAttacker bfs(false);
    auto order = compromise_order(g, bfs, trial);
    EXPECT_EQ(order.size(), g.num_attack_steps() - 1);
    for (std::size_t i = 1; i < order.size(); ++i) {
      EXPECT_LE(dist[order[i - 1]], dist[order[i]]);
    }
  }
}

TEST(Bfs, SwitchesWhenTargetDefended) {
  // The defender blocks the step BFS is working on; the next pick is the
  // other depth-one step.
  AttackGraph g({entry_step(), step("a", 5.0), step("b", 5.0)}, {{"da"}, {"db"}},
                {{"e", "a"}, {"e", "b"}, {"da", "a"}, {"db", "b"}});
  auto s = state_with(g, {0.0, 5.0, 5.0});
  SearchAttacker bfs(false);
  bfs.reset(g, s, 7);
  auto surface = attack_surface(g, s.compromised, s.enabled);
  auto first = *bfs.select(g, s, surface);
  s.enabled[first == 1 ? 0 : 1] = true;
  surface = attack_surface(g, s.compromised, s.enabled);
  auto second = *bfs.select(g, s, surface);
  EXPECT_NE(first, second);
}

TEST(Dfs, ChainInOrder) {
  AttackGraph g({entry_step(), step("a"), step("b"), step("c")}, {},
                {{"e", "a"}, {"a", "b"}, {"b", "c"}});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SearchAttacker dfs(true);
    EXPECT_EQ(compromise_order(g, dfs, seed), (std::vector<std::size_t>{1, 2, 3}));
  }
}

TEST(Dfs, FollowsNewChildBeforeSibling) {
  AttackGraph g({entry_step(), step("a"), step("b"), step("c")}, {},
                {{"e", "a"}, {"e", "b"}, {"a", "c"}});
  bool saw_a_first = false;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    SearchAttacker dfs(true);
    auto order = compromise_order(g, dfs, seed);
    if (order[0] == 1) {
      saw_a_first = true;
      EXPECT_EQ(order, (std::vector<std::size_t>{1, 3, 2}));
    } else {
      EXPECT_EQ(order, (std::vector<std::size_t>{2, 1, 3}));
    }
  }
  EXPECT_TRUE(saw_a_first);
}

TEST(Dfs, TreeOrderIsDepthFirst) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = random_tree(rng, 12);
    SearchAttacker dfs(true);
    auto order = compromise_order(g, dfs, trial);
    ASSERT_EQ(order.size(), 11u);
    // Preorder check: each step's parent is on the current root path, and a
    // step is only left once all its children were visited.
    std::vector<bool> visited(12, false);
    visited[0] = true;
    std::vector<std::size_t> path{0};
    for (auto v : order) {
      auto parent = g.attack_parents(v)[0];
      while (!path.empty() && path.back() != parent) {
        for (auto c : g.attack_children(path.back())) EXPECT_TRUE(visited[c]);
        path.pop_back();
      }
      ASSERT_FALSE(path.empty());
      path.push_back(v);
      visited[v] = true;
    }
  }
}

TEST(PathfinderCosts, AndStepSumsParents) {
  AttackGraph g({entry_step(), step("a"), step("b"), step("c", 1.0, true, StepLogic::kAnd)},
                {}, {{"e", "a"}, {"e", "b"}, {"a", "c"}, {"b", "c"}});
  auto s = state_with(g, {0.0, 2.0, 2.5, 0.4});
  auto cost = pathfinder_costs(g, s);
  EXPECT_EQ(cost[0], 0.0);
  EXPECT_EQ(cost[1], 2.0);
  EXPECT_EQ(cost[2], 3.0);
  EXPECT_EQ(cost[3], 6.0);
  s.enabled = {};
  s.compromised[1] = true;
  EXPECT_EQ(pathfinder_costs(g, s)[3], 4.0);
}

TEST(PathfinderCosts, BlockedIsUnreachable) {
  AttackGraph g({entry_step(), step("a"), step("f", 1.0, true)}, {{"d"}},
                {{"e", "a"}, {"a", "f"}, {"d", "a"}});
  auto s = state_with(g, {0.0, 1.0, 1.0});
  s.enabled[0] = true;
  auto cost = pathfinder_costs(g, s);
  EXPECT_EQ(cost[1], kUnreachable);
  EXPECT_EQ(cost[2], kUnreachable);
  EXPECT_EQ(work_steps(0.0), 1.0);
  EXPECT_EQ(work_steps(2.3), 3.0);
  EXPECT_EQ(work_steps(-0.5), 1.0);
}

TEST(Pathfinder, TargetsCheapestFlagFirst) {
  // Flag f1 costs 5, flag f2 costs 12.
  AttackGraph g({entry_step(), step("f1", 1.0, true), step("f2", 1.0, true)}, {},
                {{"e", "f1"}, {"e", "f2"}});
  auto s = state_with(g, {0.0, 5.0, 12.0});
  PathfinderAttacker pf;
  pf.reset(g, s, 1);
  EXPECT_EQ(pf.targets(), (std::vector<std::size_t>{1, 2}));
  auto surface = attack_surface(g, s.compromised, s.enabled);
  EXPECT_EQ(pf.select(g, s, surface), std::optional<std::size_t>(1));
}

TEST(Pathfinder, DiamondTakesCheapArm) {
  AttackGraph g({entry_step(), step("l"), step("r"), step("f", 1.0, true)}, {},
                {{"e", "l"}, {"e", "r"}, {"l", "f"}, {"r", "f"}});
  auto s = state_with(g, {0.0, 3.0, 7.0, 1.0});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PathfinderAttacker pf;
    pf.reset(g, s, seed);
    auto surface = attack_surface(g, s.compromised, s.enabled);
    EXPECT_EQ(pf.select(g, s, surface), std::optional<std::size_t>(1));
  }
}

TEST(Pathfinder, ReroutesWhenSevered) {
  AttackGraph g({entry_step(), step("l"), step("r"), step("f", 1.0, true)}, {{"dl"}},
                {{"e", "l"}, {"e", "r"}, {"l", "f"}, {"r", "f"}, {"dl", "l"}});
  auto s = state_with(g, {0.0, 3.0, 7.0, 1.0});
  PathfinderAttacker pf;
  pf.reset(g, s, 1);
  auto surface = attack_surface(g, s.compromised, s.enabled);
  EXPECT_EQ(pf.select(g, s, surface), std::optional<std::size_t>(1));
  s.enabled[0] = true;
  surface = attack_surface(g, s.compromised, s.enabled);
  EXPECT_EQ(pf.select(g, s, surface), std::optional<std::size_t>(2));
}

TEST(Pathfinder, DropsUnreachableFlagThenFallsBack) {
  AttackGraph g({entry_step(), step("f", 1.0, true), step("x")}, {{"d"}},
                {{"e", "f"}, {"e", "x"}, {"d", "f"}});
  auto s = state_with(g, {0.0, 1.0, 4.0});
  PathfinderAttacker pf;
  pf.reset(g, s, 1);
  s.enabled[0] = true;
  auto surface = attack_surface(g, s.compromised, s.enabled);
  EXPECT_EQ(pf.select(g, s, surface), std::optional<std::size_t>(2));
}

TEST(Pathfinder, TimeToFirstFlagMatchesDijkstra) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = oracle::random_graph(rng, 12, 0, 0.0);
    const std::uint64_t seed = 100 + trial;
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
      auto surface = sim.attack_surface();
      auto out = sim.step(pf.select(g, sim.state(), surface), std::nullopt);
      ++t;
      if (!out.flags_captured_now.empty()) break;
    }
    EXPECT_EQ(static_cast<double>(t), best);
  }
}

TEST(Mixture, DrawsBaseKindsUniformly) {
  AttackGraph g({entry_step(), step("a")}, {}, {{"e", "a"}});
  auto s = state_with(g, {0.0, 1.0});
  std::map<AttackerKind, int> counts;
  MixtureAttacker mix;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    mix.reset(g, s, derive_seed(5, Stream::kEval, {static_cast<std::uint64_t>(i)}));
    ++counts[mix.active_kind()];
  }
  ASSERT_EQ(counts.size(), 4u);
  for (auto [kind, c] : counts) EXPECT_NEAR(c / double(n), 0.25, 0.03) << to_string(kind);
}

TEST(Mixture, SameSeedSameDraw) {
  AttackGraph g({entry_step(), step("a")}, {}, {{"e", "a"}});
  auto s = state_with(g, {0.0, 1.0});
  MixtureAttacker m1, m2;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    m1.reset(g, s, seed);
    m2.reset(g, s, seed);
    EXPECT_EQ(m1.active_kind(), m2.active_kind());
  }
}

TEST(DefenderKind, ParseRoundTrip) {
  for (auto k : {DefenderKind::kNone, DefenderKind::kRandom, DefenderKind::kTripwire,
                 DefenderKind::kLearned}) {
    EXPECT_EQ(parse_defender_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_defender_kind("wall"), InputError);
  EXPECT_THROW(make_defender(DefenderKind::kLearned), InputError);
}

TEST(RandomDefender, Frequencies) {
  Rng rng(2);
  EXPECT_EQ(random_defender_select({true, true}, rng), std::nullopt);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += random_defender_select({true, false}, rng).has_value();
  EXPECT_NEAR(hits / 10000.0, 0.5, 0.02);
  std::map<int, int> counts;
  for (int i = 0; i < 10000; ++i) {
    auto a = random_defender_select({false, false, false}, rng);
    ++counts[a ? static_cast<int>(*a) : -1];
  }
  for (int k : {-1, 0, 1, 2}) EXPECT_NEAR(counts[k] / 10000.0, 0.25, 0.02);
}

TEST(Tripwire, Rules) {
  AttackGraph g({entry_step(), step("a"), step("b")}, {{"d1"}, {"d2"}},
                {{"e", "a"}, {"e", "b"}, {"d1", "a"}, {"d2", "b"}});
  Observation o;
  o.attack_bits = {1, 0, 1};
  o.defense_bits = {0, 0};
  EXPECT_EQ(tripwire_select(g, o, {false, false}), std::optional<std::size_t>(1));
  o.attack_bits = {1, 1, 1};
  EXPECT_EQ(tripwire_select(g, o, {false, false}), std::optional<std::size_t>(0));
  EXPECT_EQ(tripwire_select(g, o, {true, false}), std::optional<std::size_t>(1));
  o.attack_bits = {0, 0, 0};
  EXPECT_EQ(tripwire_select(g, o, {false, false}), std::nullopt);
}

TEST(Tripwire, FullFalseNegativeNeverActs) {
  auto g = load_graph_file(std::string(ACSIM_GRAPH_DIR) + "/four_ways.json");
  auto r = default_rewards(g);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto a1 = make_attacker(AttackerKind::kDepthFirst);
    auto a2 = make_attacker(AttackerKind::kDepthFirst);
    TripwireDefender trip;
    NoopDefender noop;
    auto r1 = run_episode(g, *a1, trip, NoiseConfig{0.0, 1.0}, r, seed);
    auto r2 = run_episode(g, *a2, noop, NoiseConfig{0.0, 1.0}, r, seed);
    for (const auto& s : r1.steps) EXPECT_FALSE(s.defender_action.has_value());
    EXPECT_EQ(r1, r2);
  }
}

TEST(Tripwire, NoiselessTriggerProperties) {
  auto g = load_graph_file(std::string(ACSIM_GRAPH_DIR) + "/four_ways.json");
  auto r = default_rewards(g);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Simulator sim(g, NoiseConfig{}, r, seed);
    auto attacker = make_attacker(AttackerKind::kRandom);
    attacker->reset(g, sim.state(), seed);
    TripwireDefender trip;
    trip.reset(g, seed);
    while (!sim.done()) {
      auto before = sim.state();
      auto action = trip.select(sim.observation(), before.enabled);
      bool any_triggered = false;
      for (std::size_t d = 0; d < g.num_defense_steps(); ++d) {
        if (before.enabled[d]) continue;
        for (auto c : g.defense_children(d)) any_triggered |= before.compromised[c];
      }
      if (action) {
        bool justified = false;
        for (auto c : g.defense_children(*action)) justified |= before.compromised[c];
        EXPECT_TRUE(justified);
      }
      EXPECT_EQ(action.has_value(), any_triggered);
      auto surface = sim.attack_surface();
      sim.step(attacker->select(g, sim.state(), surface), action);
    }
  }
}

TEST(ActionMask, Layout) {
  EXPECT_EQ(action_mask({true, false}), (std::vector<bool>{false, true, true}));
  EXPECT_EQ(action_from_index(2, 2), std::nullopt);
  EXPECT_EQ(action_from_index(1, 2), std::optional<std::size_t>(1));
  EXPECT_EQ(index_from_action(std::nullopt, 2), 2u);
  EXPECT_EQ(index_from_action(0u, 2), 0u);
}

TEST(LearnedSelect, UniformZeroLogits) {
  // |A| = 2, |D| = 2, three actions.
  auto p = params_with_logits(4, {0.0, 0.0, 0.0});
  Observation o{{1, 0}, {0, 0}};
  Rng rng(3);
  std::map<int, int> counts;
  for (int i = 0; i < 10000; ++i) {
    auto a = learned_select(p, o, {false, false}, rng, SelectMode::kSample);
    ++counts[a ? static_cast<int>(*a) : -1];
  }
  for (int k : {-1, 0, 1}) EXPECT_NEAR(counts[k] / 10000.0, 1.0 / 3.0, 0.02);
}

TEST(LearnedSelect, FullMaskForcesNoop) {
  auto p = params_with_logits(4, {50.0, 50.0, -50.0});
  Observation o{{1, 0}, {1, 1}};
  Rng rng(4);
  for (auto mode : {SelectMode::kSample, SelectMode::kGreedy}) {
    for (int i = 0; i < 100; ++i) EXPECT_EQ(learned_select(p, o, {true, true}, rng, mode), std::nullopt);
  }
}

TEST(LearnedSelect, GreedyArgmax) {
  auto p = params_with_logits(4, {2.0, 1.0, 0.5});
  Observation o{{1, 0}, {0, 0}};
  Rng rng(5);
  EXPECT_EQ(learned_select(p, o, {false, false}, rng, SelectMode::kGreedy),
            std::optional<std::size_t>(0));
}

TEST(LearnedSelect, NeverReturnsEnabledDefense) {
  std::vector<std::size_t> hidden{8};
  auto p = init_policy_params(7, hidden, 5, 3);
  Rng rng(6);
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < 2000; ++i) {
    std::vector<bool> enabled(4);
    for (auto&& e : enabled) e = coin(rng);
    Observation o;
    o.attack_bits = {1, static_cast<std::uint8_t>(coin(rng)), 0};
    for (bool e : enabled) o.defense_bits.push_back(e ? 1 : 0);
    auto a = learned_select(p, o, enabled, rng, i % 2 ? SelectMode::kGreedy : SelectMode::kSample);
    if (a) EXPECT_FALSE(enabled[*a]);
    auto r = random_defender_select(enabled, rng);
    if (r) EXPECT_FALSE(enabled[*r]);
  }
}

TEST(LearnedSelect, ShapeMismatchThrows) {
  auto p = params_with_logits(4, {0.0, 0.0, 0.0});
  Observation o{{1, 0, 0}, {0, 0}};
  Rng rng(7);
  EXPECT_THROW(learned_select(p, o, {false, false}, rng, SelectMode::kSample), InputError);
}
