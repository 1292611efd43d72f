#include "acsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include "acsim/episode.hpp"
#include "acsim/errors.hpp"
#include "acsim/graph_gen.hpp"
#include "acsim/stats.hpp"

namespace acsim {

namespace {

MetricsRow row_from(const SeedEvaluation& eval) {
  MetricsRow row;
  row.mean_reward = eval.mean_reward;
  row.flags_fraction = eval.flags_fraction;
  row.mean_len = eval.mean_len;
  row.min_len = eval.min_len;
  row.max_len = eval.max_len;
  return row;
}

std::string format_rate(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

struct Trained {
  std::shared_ptr<const PolicyParams> params;
  double seconds = 0.0;
};

Trained train_policy(const AttackGraph& graph, AttackerKind attacker, const NoiseConfig& noise,
                     const RewardConfig& rewards, const ExperimentConfig& config,
                     std::uint64_t seed) {
  auto start = std::chrono::steady_clock::now();
  auto result = train(graph, attacker, noise, rewards, config.hp, seed);
  std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  Trained out;
  out.params = std::make_shared<const PolicyParams>(std::move(result.params));
  out.seconds = config.record_timing ? elapsed.count() : 0.0;
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

constexpr const char* kMetricsHeader =
    "experiment,cell_id,fpr,fnr,graph_size,train_attacker,eval_attacker,defender,seed,"
    "mean_reward,flags_fraction,mean_len,min_len,max_len,train_seconds";

}  // namespace

std::unique_ptr<DefenderPolicy> DefenderSpec::make() const {
  if (kind == DefenderKind::kLearned) {
    if (!params) throw InputError("learned defender needs a policy");
    return std::make_unique<LearnedDefender>(params, mode);
  }
  return make_defender(kind);
}

std::uint64_t eval_episode_seed(std::uint64_t seed, std::size_t episode) {
  return derive_seed(seed, Stream::kEval, {episode});
}

SeedEvaluation evaluate_seed(const AttackGraph& graph, AttackerKind attacker_kind,
                             const DefenderSpec& spec, const NoiseConfig& noise,
                             const RewardConfig& rewards, std::size_t episodes,
                             std::uint64_t seed) {
  if (episodes == 0) throw InputError("evaluation needs at least one episode");
  auto attacker = make_attacker(attacker_kind);
  auto defender = spec.make();
  SeedEvaluation out;
  for (std::size_t i = 0; i < episodes; ++i) {
    auto rec = run_episode(graph, *attacker, *defender, noise, rewards,
                           eval_episode_seed(seed, i), /*record_steps=*/false);
    out.episode_rewards.push_back(rec.total_reward);
    out.episode_flags.push_back(rec.flags_fraction());
    out.episode_lengths.push_back(rec.length);
    if (rec.truncated) ++out.truncated;
  }
  std::vector<double> lengths(out.episode_lengths.begin(), out.episode_lengths.end());
  out.mean_reward = mean(out.episode_rewards);
  out.flags_fraction = mean(out.episode_flags);
  out.mean_len = mean(lengths);
  out.min_len = *std::min_element(out.episode_lengths.begin(), out.episode_lengths.end());
  out.max_len = *std::max_element(out.episode_lengths.begin(), out.episode_lengths.end());
  return out;
}

void EvalConfig::check() const {
  require_valid(graph);
  noise.check();
  rewards.check();
  if (episodes == 0) throw InputError("episodes must be >= 1");
  if (seeds.empty()) throw InputError("at least one seed is required");
}

std::vector<MetricsRow> evaluate(const EvalConfig& config, std::size_t jobs) {
  config.check();
  std::vector<MetricsRow> rows(config.seeds.size());
  parallel_for(config.seeds.size(), jobs, [&](std::size_t i) {
    auto eval = evaluate_seed(config.graph, config.attacker, config.defender, config.noise,
                              config.rewards, config.episodes, config.seeds[i]);
    MetricsRow row = row_from(eval);
    row.experiment = "evaluate";
    row.cell_id = "fpr" + format_rate(config.noise.fpr) + "-fnr" + format_rate(config.noise.fnr);
    row.fpr = config.noise.fpr;
    row.fnr = config.noise.fnr;
    row.graph_size = config.graph.num_attack_steps();
    row.eval_attacker = std::string(to_string(config.attacker));
    row.defender = std::string(to_string(config.defender.kind));
    row.seed = config.seeds[i];
    rows[i] = std::move(row);
  });
  return rows;
}

std::vector<NoiseCell> noise_grid(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
      throw InputError("noise rates must lie in [0, 1]");
    }
    if (i > 0 && !(values[i - 1] < values[i])) {
      throw InputError("noise rates must be sorted and distinct");
    }
  }
  std::vector<NoiseCell> cells;
  for (double fpr : values) {
    for (double fnr : values) {
      if (fnr <= fpr) cells.push_back(NoiseCell{fpr, fnr});
    }
  }
  return cells;
}

void ExperimentConfig::check() const {
  if (episodes == 0) throw InputError("episodes must be >= 1");
  if (seeds.empty()) throw InputError("at least one seed is required");
  hp.check();
}

std::vector<MetricsRow> run_sweep(const AttackGraph& graph,
                                  std::span<const DefenderKind> defenders,
                                  std::span<const double> values,
                                  const ExperimentConfig& config) {
  require_valid(graph);
  config.check();
  const auto cells = noise_grid(values);
  const auto rewards = default_rewards(graph);
  const AttackerKind attacker = AttackerKind::kDepthFirst;
  const std::size_t seeds = config.seeds.size();
  const std::size_t units = cells.size() * defenders.size() * seeds;

  std::vector<MetricsRow> rows(units);
  parallel_for(units, config.jobs, [&](std::size_t u) {
    const auto& cell = cells[u / (defenders.size() * seeds)];
    const auto kind = defenders[(u / seeds) % defenders.size()];
    const auto seed = config.seeds[u % seeds];
    const NoiseConfig noise{cell.fpr, cell.fnr};

    DefenderSpec spec{kind, nullptr, config.learned_mode};
    double seconds = 0.0;
    if (kind == DefenderKind::kLearned) {
      auto trained = train_policy(graph, attacker, noise, rewards, config, seed);
      spec.params = trained.params;
      seconds = trained.seconds;
    }
    auto eval = evaluate_seed(graph, attacker, spec, noise, rewards, config.episodes, seed);
    MetricsRow row = row_from(eval);
    row.experiment = "sweep";
    row.cell_id = "fpr" + format_rate(cell.fpr) + "-fnr" + format_rate(cell.fnr);
    row.fpr = cell.fpr;
    row.fnr = cell.fnr;
    row.graph_size = graph.num_attack_steps();
    row.train_attacker = kind == DefenderKind::kLearned ? std::string(to_string(attacker)) : "-";
    row.eval_attacker = std::string(to_string(attacker));
    row.defender = std::string(to_string(kind));
    row.seed = seed;
    row.train_seconds = seconds;
    rows[u] = std::move(row);
  });
  return rows;
}

std::vector<MetricsRow> attacker_matrix(const AttackGraph& graph, const NoiseConfig& noise,
                                        const ExperimentConfig& config) {
  require_valid(graph);
  config.check();
  noise.check();
  const auto rewards = default_rewards(graph);
  const std::size_t kinds = std::size(kAllAttackers);
  const std::size_t seeds = config.seeds.size();

  std::vector<MetricsRow> rows(kinds * kinds * seeds);
  parallel_for(kinds * seeds, config.jobs, [&](std::size_t u) {
    const auto train_kind = kAllAttackers[u / seeds];
    const auto seed = config.seeds[u % seeds];
    auto trained = train_policy(graph, train_kind, noise, rewards, config, seed);
    DefenderSpec spec{DefenderKind::kLearned, trained.params, config.learned_mode};
    for (std::size_t e = 0; e < kinds; ++e) {
      const auto eval_kind = kAllAttackers[e];
      auto eval = evaluate_seed(graph, eval_kind, spec, noise, rewards, config.episodes, seed);
      MetricsRow row = row_from(eval);
      row.experiment = "attacker_matrix";
      row.cell_id = "train-" + std::string(to_string(train_kind)) + "/eval-" +
                    std::string(to_string(eval_kind));
      row.fpr = noise.fpr;
      row.fnr = noise.fnr;
      row.graph_size = graph.num_attack_steps();
      row.train_attacker = std::string(to_string(train_kind));
      row.eval_attacker = std::string(to_string(eval_kind));
      row.defender = "learned";
      row.seed = seed;
      row.train_seconds = trained.seconds;
      // Row order: train kind, eval kind, seed.
      rows[((u / seeds) * kinds + e) * seeds + (u % seeds)] = std::move(row);
    }
  });
  return rows;
}

std::vector<MetricsRow> scaling_study(std::span<const std::size_t> sizes,
                                      const NoiseConfig& noise, AttackerKind attacker,
                                      std::uint64_t graph_seed,
                                      const ExperimentConfig& config) {
  config.check();
  noise.check();
  std::vector<AttackGraph> graphs;
  for (auto size : sizes) {
    GenConfig gen;
    gen.num_attack_steps = size;
    gen.seed = graph_seed;
    graphs.push_back(generate_graph(gen));
  }
  const std::size_t seeds = config.seeds.size();

  std::vector<MetricsRow> rows(sizes.size() * 2 * seeds);
  parallel_for(sizes.size() * seeds, config.jobs, [&](std::size_t u) {
    const std::size_t g = u / seeds;
    const auto seed = config.seeds[u % seeds];
    const auto& graph = graphs[g];
    const auto rewards = default_rewards(graph);
    auto trained = train_policy(graph, attacker, noise, rewards, config, seed);

    const DefenderSpec specs[] = {
        DefenderSpec{DefenderKind::kLearned, trained.params, config.learned_mode},
        DefenderSpec{DefenderKind::kTripwire, nullptr, config.learned_mode}};
    for (std::size_t d = 0; d < 2; ++d) {
      auto eval = evaluate_seed(graph, attacker, specs[d], noise, rewards, config.episodes, seed);
      MetricsRow row = row_from(eval);
      row.experiment = "scaling";
      row.cell_id = "size" + std::to_string(sizes[g]);
      row.fpr = noise.fpr;
      row.fnr = noise.fnr;
      row.graph_size = graph.num_attack_steps();
      row.train_attacker = d == 0 ? std::string(to_string(attacker)) : "-";
      row.eval_attacker = std::string(to_string(attacker));
      row.defender = std::string(to_string(specs[d].kind));
      row.seed = seed;
      row.train_seconds = d == 0 ? trained.seconds : 0.0;
      rows[(g * 2 + d) * seeds + (u % seeds)] = std::move(row);
    }
  });
  return rows;
}

std::vector<AggregateRow> aggregate(const std::vector<MetricsRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string, std::string, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<const MetricsRow*>> groups;
  for (const auto& r : rows) {
    Key key{r.experiment, r.cell_id, r.train_attacker, r.eval_attacker, r.defender};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  std::vector<AggregateRow> out;
  for (const auto& key : order) {
    const auto& members = groups[key];
    std::vector<double> rewards, flags, lens;
    for (const auto* m : members) {
      rewards.push_back(m->mean_reward);
      flags.push_back(m->flags_fraction);
      lens.push_back(m->mean_len);
    }
    AggregateRow agg;
    agg.key = *members.front();
    agg.num_seeds = members.size();
    agg.reward_mean = mean(rewards);
    agg.reward_std = stddev(rewards);
    agg.flags_mean = mean(flags);
    agg.flags_std = stddev(flags);
    agg.len_mean = mean(lens);
    out.push_back(agg);
  }
  return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.cell_id << ',' << r.fpr << ',' << r.fnr << ','
        << r.graph_size << ',' << r.train_attacker << ',' << r.eval_attacker << ','
        << r.defender << ',' << r.seed << ',' << r.mean_reward << ',' << r.flags_fraction
        << ',' << r.mean_len << ',' << r.min_len << ',' << r.max_len << ','
        << r.train_seconds << '\n';
  }
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw ParseError("results CSV: unexpected header");
  }
  std::vector<MetricsRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 15) {
      throw ParseError("results CSV line " + std::to_string(lineno) + ": expected 15 fields");
    }
    try {
      MetricsRow r;
      r.experiment = f[0];
      r.cell_id = f[1];
      r.fpr = std::stod(f[2]);
      r.fnr = std::stod(f[3]);
      r.graph_size = std::stoul(f[4]);
      r.train_attacker = f[5];
      r.eval_attacker = f[6];
      r.defender = f[7];
      r.seed = std::stoull(f[8]);
      r.mean_reward = std::stod(f[9]);
      r.flags_fraction = std::stod(f[10]);
      r.mean_len = std::stod(f[11]);
      r.min_len = std::stoul(f[12]);
      r.max_len = std::stoul(f[13]);
      r.train_seconds = std::stod(f[14]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ParseError("results CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "experiment,cell_id,fpr,fnr,graph_size,train_attacker,eval_attacker,defender,"
         "num_seeds,reward_mean,reward_std,flags_mean,flags_std,len_mean\n";
  out << std::setprecision(10);
  for (const auto& a : rows) {
    const auto& k = a.key;
    out << k.experiment << ',' << k.cell_id << ',' << k.fpr << ',' << k.fnr << ','
        << k.graph_size << ',' << k.train_attacker << ',' << k.eval_attacker << ','
        << k.defender << ',' << a.num_seeds << ',' << a.reward_mean << ',' << a.reward_std
        << ',' << a.flags_mean << ',' << a.flags_std << ',' << a.len_mean << '\n';
  }
}

void parallel_for(std::size_t n, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace acsim
