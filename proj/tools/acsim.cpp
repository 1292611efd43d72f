// acsim: attack-defend capture-the-flag simulator command line.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "acsim/attackers.hpp"
#include "acsim/defenders.hpp"
#include "acsim/episode.hpp"
#include "acsim/errors.hpp"
#include "acsim/graph.hpp"
#include "acsim/graph_gen.hpp"
#include "acsim/graph_io.hpp"
#include "acsim/harness.hpp"
#include "acsim/ppo.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

const std::vector<std::string> kAttackerNames = {"random", "bfs", "dfs", "pathfinder",
                                                 "mixture"};
const std::vector<std::string> kDefenderNames = {"random", "tripwire", "learned", "none"};

struct HyperFlags {
  acsim::HyperParams hp;

  void add(CLI::App* app) {
    hp = acsim::desk_scale_hyperparams();
    app->add_option("--k-vf", hp.k_vf, "Value-loss coefficient")->capture_default_str();
    app->add_option("--k-s", hp.k_s, "Entropy coefficient")->capture_default_str();
    app->add_option("--k-kl", hp.k_kl, "KL coefficient")->capture_default_str();
    app->add_option("--train-batch", hp.train_batch, "Environment steps per iteration")
        ->capture_default_str();
    app->add_option("--minibatch", hp.minibatch, "SGD minibatch size")->capture_default_str();
    app->add_option("--vf-clip", hp.vf_clip, "Clip on the squared value error")
        ->capture_default_str();
    app->add_option("--clip-eps", hp.clip_eps, "Policy ratio clip parameter")
        ->capture_default_str();
    app->add_option("--lr", hp.lr, "SGD learning rate (table value 1e-4)")->capture_default_str();
    app->add_option("--hidden", hp.hidden, "Hidden layer widths")
        ->delimiter(',')
        ->capture_default_str();
    app->add_option("--gamma", hp.gamma, "Discount factor")->capture_default_str();
    app->add_option("--gae-lambda", hp.gae_lambda, "GAE smoothing")->capture_default_str();
    app->add_option("--iterations", hp.iterations, "PPO iterations (table value 500)")->capture_default_str();
    app->add_option("--sgd-epochs", hp.sgd_epochs, "Passes over each batch (full-scale default 30)")
        ->capture_default_str();
  }
};

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string metrics_text(const std::vector<acsim::MetricsRow>& rows) {
  std::ostringstream os;
  acsim::write_metrics_csv(os, rows);
  return os.str();
}

ordered_json rows_to_json(const std::vector<acsim::AggregateRow>& rows) {
  ordered_json out = ordered_json::array();
  for (const auto& a : rows) {
    out.push_back(ordered_json{{"experiment", a.key.experiment},
                               {"cell_id", a.key.cell_id},
                               {"train_attacker", a.key.train_attacker},
                               {"eval_attacker", a.key.eval_attacker},
                               {"defender", a.key.defender},
                               {"num_seeds", a.num_seeds},
                               {"reward_mean", a.reward_mean},
                               {"reward_std", a.reward_std},
                               {"flags_mean", a.flags_mean},
                               {"flags_std", a.flags_std},
                               {"len_mean", a.len_mean}});
  }
  return out;
}

void print_summary(const std::vector<acsim::AggregateRow>& rows, bool json) {
  if (json) {
    std::cout << rows_to_json(rows).dump(2) << '\n';
    return;
  }
  std::cout << std::left << std::setw(28) << "cell" << std::setw(10) << "defender"
            << std::setw(12) << "train" << std::setw(12) << "eval" << std::right
            << std::setw(12) << "reward" << std::setw(10) << "+/-" << std::setw(9) << "flags"
            << std::setw(8) << "len" << '\n';
  std::cout << std::fixed << std::setprecision(3);
  for (const auto& a : rows) {
    std::cout << std::left << std::setw(28) << a.key.cell_id << std::setw(10) << a.key.defender
              << std::setw(12) << a.key.train_attacker << std::setw(12) << a.key.eval_attacker
              << std::right << std::setw(12) << a.reward_mean << std::setw(10) << a.reward_std
              << std::setw(9) << a.flags_mean << std::setw(8) << a.len_mean << '\n';
  }
  std::cout.unsetf(std::ios::floatfield);
}

// Writes <dir>/<name>.csv, then rebuilds <dir>/summary.csv from every
// experiment file present in the directory.
void write_experiment(const fs::path& dir, const std::string& name,
                      const std::vector<acsim::MetricsRow>& rows) {
  fs::create_directories(dir);
  write_file(dir / (name + ".csv"), metrics_text(rows));
  std::vector<acsim::MetricsRow> all;
  for (const char* exp : {"sweep", "attacker_matrix", "scaling"}) {
    fs::path p = dir / (std::string(exp) + ".csv");
    if (!fs::exists(p)) continue;
    std::ifstream in(p);
    auto part = acsim::read_metrics_csv(in);
    all.insert(all.end(), part.begin(), part.end());
  }
  std::ostringstream os;
  acsim::write_summary_csv(os, acsim::aggregate(all));
  write_file(dir / "summary.csv", os.str());
}

acsim::DefenderSpec defender_spec(const std::string& name, const std::string& policy_file,
                                  bool greedy, const acsim::AttackGraph& graph) {
  acsim::DefenderSpec spec;
  spec.kind = acsim::parse_defender_kind(name);
  spec.mode = greedy ? acsim::SelectMode::kGreedy : acsim::SelectMode::kSample;
  if (spec.kind == acsim::DefenderKind::kLearned) {
    if (policy_file.empty()) throw acsim::InputError("--defender learned needs --policy-file");
    auto file = acsim::load_policy_file(policy_file);
    if (file.num_attack_steps != graph.num_attack_steps() ||
        file.num_defense_steps != graph.num_defense_steps()) {
      throw acsim::InputError("policy file was trained for a different graph shape");
    }
    spec.params = std::make_shared<const acsim::PolicyParams>(std::move(file.params));
  }
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attack-defend capture-the-flag simulator on attack graphs"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a random attack graph");
  acsim::GenConfig gen_cfg;
  std::string gen_out;
  gen->add_option("--size", gen_cfg.num_attack_steps, "Attack steps (multiple of 20)")
      ->capture_default_str();
  gen->add_option("--seed", gen_cfg.seed, "Generator seed")->capture_default_str();
  gen->add_option("--ttc-min", gen_cfg.ttc_min, "Lowest mean TTC")->capture_default_str();
  gen->add_option("--ttc-max", gen_cfg.ttc_max, "Highest mean TTC")->capture_default_str();
  gen->add_option("--and-fraction", gen_cfg.and_fraction, "AND share of two-parent steps")
      ->capture_default_str();
  gen->add_option("--extra-parent-prob", gen_cfg.extra_parent_prob,
                  "Chance of a second parent")
      ->capture_default_str();
  gen->add_option("--out", gen_out, "Output graph file (stdout if omitted)");

  // shared option storage
  std::string graph_path, attacker_name = "dfs", defender_name = "tripwire", policy_file;
  double fpr = 0.0, fnr = 0.0;
  std::size_t episodes = 100, jobs = 1;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds = {1, 2};
  std::string out_path, trajectory_path, curve_path, out_dir = "results";
  bool json = false, greedy = false, timing = false;

  auto add_attacker = [&](CLI::App* sub, const std::string& def) {
    attacker_name = def;
    sub->add_option("--attacker", attacker_name, "Attacker policy")
        ->check(CLI::IsMember(kAttackerNames))
        ->capture_default_str();
  };
  auto add_noise = [&](CLI::App* sub, double def) {
    fpr = def;
    fnr = def;
    sub->add_option("--fpr", fpr, "IDS false positive rate")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    sub->add_option("--fnr", fnr, "IDS false negative rate")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
  };

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run episodes and print a per-episode summary");
  sim->add_option("--graph", graph_path, "Graph file")->required();
  add_attacker(sim, "dfs");
  sim->add_option("--defender", defender_name, "Defender policy")
      ->check(CLI::IsMember(kDefenderNames))
      ->capture_default_str();
  sim->add_option("--policy-file", policy_file, "Learned policy parameters");
  sim->add_flag("--greedy", greedy, "Learned defender takes the most likely action");
  add_noise(sim, 0.0);
  sim->add_option("--episodes", episodes, "Episode count")->capture_default_str();
  sim->add_option("--seed", seed, "Master seed")->capture_default_str();
  sim->add_option("--out", out_path, "Write the summary CSV here instead of stdout");
  sim->add_option("--trajectory", trajectory_path,
                  "Per-step trajectory file (.csv or .jsonl)");
  sim->add_flag("--json", json, "Machine-readable summary");

  // train
  auto* tr = app.add_subcommand("train", "Train a PPO defender policy");
  HyperFlags train_hp;
  tr->add_option("--graph", graph_path, "Graph file")->required();
  tr->add_option("--attacker", attacker_name, "Training attacker")
      ->check(CLI::IsMember(kAttackerNames))
      ->capture_default_str();
  tr->add_option("--fpr", fpr, "IDS false positive rate")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  tr->add_option("--fnr", fnr, "IDS false negative rate")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  train_hp.add(tr);
  tr->add_option("--seed", seed, "Training seed")->capture_default_str();
  tr->add_option("--out", out_path, "Policy file")->required();
  tr->add_option("--curve", curve_path, "Learning-curve CSV");
  tr->add_flag("--json", json, "Machine-readable summary");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Evaluate a defender over several seeds");
  ev->add_option("--graph", graph_path, "Graph file")->required();
  ev->add_option("--attacker", attacker_name, "Attacker policy")
      ->check(CLI::IsMember(kAttackerNames))
      ->capture_default_str();
  ev->add_option("--defender", defender_name, "Defender policy")
      ->check(CLI::IsMember(kDefenderNames))
      ->capture_default_str();
  ev->add_option("--policy-file", policy_file, "Learned policy parameters");
  ev->add_flag("--greedy", greedy, "Learned defender takes the most likely action");
  ev->add_option("--fpr", fpr, "IDS false positive rate")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  ev->add_option("--fnr", fnr, "IDS false negative rate")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  ev->add_option("--episodes", episodes, "Episodes per seed")->capture_default_str();
  ev->add_option("--seeds", seeds, "Seeds")->delimiter(',')->capture_default_str();
  ev->add_option("--jobs", jobs, "Parallel workers")->capture_default_str();
  ev->add_option("--out", out_path, "Results CSV");
  ev->add_flag("--json", json, "Machine-readable summary");

  // experiments
  std::vector<std::string> defender_list = {"random", "tripwire", "learned"};
  std::vector<double> values = {0.0, 0.125, 0.25, 0.725, 1.0};
  std::vector<std::size_t> sizes = {20, 40, 60, 80};
  std::uint64_t graph_seed = 1;
  HyperFlags exp_hp;
  auto add_experiment = [&](CLI::App* sub) {
    sub->add_option("--episodes", episodes, "Evaluation episodes per seed")
        ->capture_default_str();
    sub->add_option("--seeds", seeds, "Seeds")->delimiter(',')->capture_default_str();
    sub->add_option("--jobs", jobs, "Parallel workers")->capture_default_str();
    sub->add_option("--out-dir", out_dir, "Results directory")->capture_default_str();
    sub->add_flag("--greedy", greedy, "Evaluate learned policies greedily");
    sub->add_flag("--timing", timing, "Record wall-clock training seconds");
    sub->add_flag("--json", json, "Machine-readable summary");
  };

  auto* sw = app.add_subcommand("sweep", "IDS noise sweep against a depth-first attacker");
  sw->add_option("--graph", graph_path, "Graph file")->required();
  sw->add_option("--defenders", defender_list, "Defenders to compare")
      ->delimiter(',')
      ->check(CLI::IsMember(kDefenderNames))
      ->capture_default_str();
  sw->add_option("--values", values, "Noise rates; cells keep fnr <= fpr")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  add_experiment(sw);
  exp_hp.add(sw);

  auto* am = app.add_subcommand("attacker-matrix",
                                "Train against each attacker, evaluate against all");
  am->add_option("--graph", graph_path, "Graph file")->required();
  am->add_option("--fpr", fpr, "IDS false positive rate")
      ->check(CLI::Range(0.0, 1.0))
      ->default_str("0.1");
  am->add_option("--fnr", fnr, "IDS false negative rate")
      ->check(CLI::Range(0.0, 1.0))
      ->default_str("0.1");
  add_experiment(am);
  exp_hp.add(am);

  auto* sc = app.add_subcommand("scaling", "Learned vs tripwire on generated graphs");
  sc->add_option("--sizes", sizes, "Graph sizes")->delimiter(',')->capture_default_str();
  sc->add_option("--graph-seed", graph_seed, "Generator seed")->capture_default_str();
  sc->add_option("--attacker", attacker_name, "Attacker policy")
      ->check(CLI::IsMember(kAttackerNames))
      ->default_str("dfs");
  sc->add_option("--fpr", fpr, "IDS false positive rate")
      ->check(CLI::Range(0.0, 1.0))
      ->default_str("0.1");
  sc->add_option("--fnr", fnr, "IDS false negative rate")
      ->check(CLI::Range(0.0, 1.0))
      ->default_str("0.1");
  add_experiment(sc);
  exp_hp.add(sc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e, std::cerr, std::cerr);
    return 1;
  }
  if ((am->parsed() || sc->parsed())) {
    if (am->count("--fpr") + sc->count("--fpr") == 0) fpr = 0.1;
    if (am->count("--fnr") + sc->count("--fnr") == 0) fnr = 0.1;
  }

  try {
    if (gen->parsed()) {
      auto graph = acsim::generate_graph(gen_cfg);
      auto text = acsim::save_graph(graph);
      if (gen_out.empty()) {
        std::cout << text;
      } else {
        write_file(gen_out, text);
        std::cerr << "wrote " << gen_out << " (" << graph.num_attack_steps()
                  << " attack steps, " << graph.flags().size() << " flags)\n";
      }
      return 0;
    }

    if (sim->parsed()) {
      auto graph = acsim::load_graph_file(graph_path);
      auto attacker = acsim::make_attacker(acsim::parse_attacker_kind(attacker_name));
      auto defender = defender_spec(defender_name, policy_file, greedy, graph).make();
      const acsim::NoiseConfig noise{fpr, fnr};
      const auto rewards = acsim::default_rewards(graph);

      std::ostringstream summary, traj;
      const bool jsonl = trajectory_path.ends_with(".jsonl");
      if (!trajectory_path.empty() && !jsonl) acsim::write_trajectory_header(traj);
      if (!json) summary << "episode,reward,flags_captured,num_flags,length,truncated\n";
      for (std::size_t i = 0; i < episodes; ++i) {
        auto rec = acsim::run_episode(graph, *attacker, *defender, noise, rewards,
                                      acsim::eval_episode_seed(seed, i),
                                      !trajectory_path.empty());
        if (json) {
          summary << ordered_json{{"episode", i},
                                  {"reward", rec.total_reward},
                                  {"flags_captured", rec.flags_captured},
                                  {"num_flags", rec.num_flags},
                                  {"length", rec.length},
                                  {"truncated", rec.truncated}}
                         .dump()
                  << '\n';
        } else {
          summary << i << ',' << rec.total_reward << ',' << rec.flags_captured << ','
                  << rec.num_flags << ',' << rec.length << ',' << (rec.truncated ? 1 : 0)
                  << '\n';
        }
        if (!trajectory_path.empty()) {
          if (jsonl) {
            acsim::write_trajectory_jsonl(traj, graph, rec, i);
          } else {
            acsim::write_trajectory_csv(traj, graph, rec, i);
          }
        }
      }
      if (!trajectory_path.empty()) write_file(trajectory_path, traj.str());
      if (out_path.empty()) {
        std::cout << summary.str();
      } else {
        write_file(out_path, summary.str());
      }
      return 0;
    }

    if (tr->parsed()) {
      auto graph = acsim::load_graph_file(graph_path);
      const acsim::NoiseConfig noise{fpr, fnr};
      auto result = acsim::train(graph, acsim::parse_attacker_kind(attacker_name), noise,
                                 acsim::default_rewards(graph), train_hp.hp, seed);
      acsim::PolicyFile file{result.params, graph.num_attack_steps(),
                             graph.num_defense_steps(), seed, train_hp.hp};
      write_file(out_path, acsim::save_policy(file));
      if (!curve_path.empty()) {
        std::ostringstream os;
        acsim::write_curve_csv(os, result.curve);
        write_file(curve_path, os.str());
      }
      const double last = result.curve.empty() ? 0.0 : result.curve.back().mean_episode_reward;
      if (json) {
        std::cout << ordered_json{{"policy", out_path},
                                  {"iterations", result.curve.size()},
                                  {"final_mean_reward", last}}
                         .dump()
                  << '\n';
      } else {
        std::cout << "trained " << result.curve.size() << " iterations; final mean reward "
                  << last << "; policy written to " << out_path << '\n';
      }
      return 0;
    }

    if (ev->parsed()) {
      acsim::EvalConfig cfg;
      cfg.graph = acsim::load_graph_file(graph_path);
      cfg.attacker = acsim::parse_attacker_kind(attacker_name);
      cfg.defender = defender_spec(defender_name, policy_file, greedy, cfg.graph);
      cfg.noise = acsim::NoiseConfig{fpr, fnr};
      cfg.rewards = acsim::default_rewards(cfg.graph);
      cfg.episodes = episodes;
      cfg.seeds = seeds;
      auto rows = acsim::evaluate(cfg, jobs);
      if (!out_path.empty()) write_file(out_path, metrics_text(rows));
      print_summary(acsim::aggregate(rows), json);
      return 0;
    }

    acsim::ExperimentConfig exp;
    exp.episodes = episodes;
    exp.seeds = seeds;
    exp.hp = exp_hp.hp;
    exp.jobs = jobs;
    exp.record_timing = timing;
    exp.learned_mode = greedy ? acsim::SelectMode::kGreedy : acsim::SelectMode::kSample;

    if (sw->parsed()) {
      auto graph = acsim::load_graph_file(graph_path);
      std::vector<acsim::DefenderKind> defenders;
      for (const auto& d : defender_list) defenders.push_back(acsim::parse_defender_kind(d));
      auto rows = acsim::run_sweep(graph, defenders, values, exp);
      write_experiment(out_dir, "sweep", rows);
      print_summary(acsim::aggregate(rows), json);
      return 0;
    }
    if (am->parsed()) {
      auto graph = acsim::load_graph_file(graph_path);
      auto rows = acsim::attacker_matrix(graph, acsim::NoiseConfig{fpr, fnr}, exp);
      write_experiment(out_dir, "attacker_matrix", rows);
      print_summary(acsim::aggregate(rows), json);
      return 0;
    }
    if (sc->parsed()) {
      auto rows = acsim::scaling_study(sizes, acsim::NoiseConfig{fpr, fnr},
                                       acsim::parse_attacker_kind(attacker_name), graph_seed,
                                       exp);
      write_experiment(out_dir, "scaling", rows);
      print_summary(acsim::aggregate(rows), json);
      return 0;
    }
  } catch (const acsim::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
