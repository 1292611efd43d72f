#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "acsim/attackers.hpp"
#include "acsim/graph.hpp"
#include "acsim/mlp.hpp"
#include "acsim/rng.hpp"
#include "acsim/sim.hpp"

namespace acsim {

/// PPO settings. The first block holds the published table values; gamma and
/// gae_lambda are the usual PPO defaults.
struct HyperParams {
  double k_vf = 1e-3;          // value-loss coefficient
  double k_s = 0.0;            // entropy coefficient
  double k_kl = 1.0;           // KL coefficient
  std::size_t train_batch = 2046;
  std::size_t minibatch = 256;
  double vf_clip = 500.0;      // clip on the squared value error
  double clip_eps = 0.02;      // policy ratio clip
  double lr = 1e-4;            // plain SGD step size
  std::vector<std::size_t> hidden = {128, 128};

  double gamma = 0.99;
  double gae_lambda = 0.95;
  std::size_t iterations = 500;
  std::size_t sgd_epochs = 30;  // passes over the batch per iteration

  void check() const;  // throws InputError
};

// Short-budget preset: 50 iterations, lr 1e-3, 10 SGD epochs. At the table
// learning rate plain SGD barely moves the policy within 50 iterations.
HyperParams desk_scale_hyperparams();

/// One iteration's worth of experience, one column per step.
struct TrajectoryBatch {
  Eigen::MatrixXd observations;        // features x N
  std::vector<std::size_t> actions;    // policy-head index taken
  Eigen::MatrixXd behavior_log_probs;  // actions x N, log pi_old; 0 where masked
  Eigen::MatrixXd masks;               // actions x N, 1 = legal
  std::vector<double> rewards;
  std::vector<double> values;          // V_old(s_t)
  std::vector<std::uint8_t> dones;
  std::vector<double> advantages;
  std::vector<double> returns;         // value targets

  std::size_t size() const { return actions.size(); }
  TrajectoryBatch subset(std::span<const std::size_t> indices) const;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values
};

// Generalized advantage estimation. The recursion restarts at every done
// flag; `last_value` bootstraps a trailing segment that is not done.
GaeResult gae_advantages(std::span<const double> rewards, std::span<const double> values,
                         std::span<const std::uint8_t> dones, double gamma, double lambda,
                         double last_value = 0.0);

// Shifts and scales to zero mean, unit variance (no-op scale for constant input).
void normalize_advantages(std::vector<double>& advantages);

struct LossDiagnostics {
  double loss = 0.0;
  double policy_loss = 0.0;
  double vf_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;  // mean KL(behavior || current)
  double clip_fraction = 0.0;
};

// loss = -mean(min(r A, clip(r, 1-eps, 1+eps) A))
//        + k_vf mean(min((V - R)^2, vf_clip))
//        - k_s mean(H) + k_kl mean(KL(old || new))
LossDiagnostics ppo_loss(const PolicyParams& params, const TrajectoryBatch& batch,
                         const HyperParams& hp);

// Same loss plus its exact gradient by backpropagation. Throws NumericalError
// on non-finite values.
LossDiagnostics ppo_loss_and_gradient(const PolicyParams& params,
                                      const TrajectoryBatch& batch, const HyperParams& hp,
                                      PolicyParams& gradient);

// hp.sgd_epochs shuffled passes, one plain SGD step per minibatch.
void sgd_update(PolicyParams& params, const TrajectoryBatch& batch, const HyperParams& hp,
                Rng& rng);

struct CurvePoint {
  std::size_t iteration = 0;
  double mean_episode_reward = 0.0;
  double mean_flags_captured = 0.0;  // fraction of flags, averaged over episodes
  double approx_kl = 0.0;
  double clip_fraction = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

struct TrainResult {
  PolicyParams params;
  std::vector<CurvePoint> curve;
};

// Collects whole episodes with the current stochastic policy until
// hp.train_batch steps are gathered, then updates. Deterministic in `seed`.
TrainResult train(const AttackGraph& graph, AttackerKind attacker, const NoiseConfig& noise,
                  const RewardConfig& rewards, const HyperParams& hp, std::uint64_t seed);

// Rollout collection used by train(); exposed for tests.
TrajectoryBatch collect_batch(const AttackGraph& graph, AttackerPolicy& attacker,
                              const PolicyParams& params, const NoiseConfig& noise,
                              const RewardConfig& rewards, std::size_t min_steps,
                              std::uint64_t seed, std::vector<double>* episode_rewards = nullptr,
                              std::vector<double>* episode_flags = nullptr);

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

/// Policy file: shape header, flat row-major weights, training provenance.
struct PolicyFile {
  PolicyParams params;
  std::size_t num_attack_steps = 0;
  std::size_t num_defense_steps = 0;
  std::uint64_t seed = 0;
  HyperParams hp;
};

std::string save_policy(const PolicyFile& file);
PolicyFile load_policy(std::string_view text);  // throws ParseError
void save_policy_file(const PolicyFile& file, const std::filesystem::path& path);
PolicyFile load_policy_file(const std::filesystem::path& path);

}  // namespace acsim
