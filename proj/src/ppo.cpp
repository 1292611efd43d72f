#include "acsim/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "acsim/defenders.hpp"
#include "acsim/episode.hpp"
#include "acsim/errors.hpp"

namespace acsim {

namespace {

using nlohmann::ordered_json;

std::string describe(const LossDiagnostics& d) {
  std::ostringstream os;
  os << "loss=" << d.loss << " policy=" << d.policy_loss << " vf=" << d.vf_loss
     << " entropy=" << d.entropy << " kl=" << d.approx_kl
     << " clip_fraction=" << d.clip_fraction;
  return os.str();
}

// Shared body of ppo_loss / ppo_loss_and_gradient.
LossDiagnostics evaluate_loss(const PolicyParams& params, const TrajectoryBatch& batch,
                              const HyperParams& hp, PolicyParams* gradient) {
  const std::size_t n = batch.size();
  if (n == 0) throw InputError("ppo_loss: empty batch");
  const auto cache = forward_batch(params, batch.observations);
  const Eigen::Index k = cache.logits.rows();
  if (batch.masks.rows() != k || batch.behavior_log_probs.rows() != k) {
    throw InputError("ppo_loss: batch action width does not match the policy head");
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(n));
  Eigen::RowVectorXd dvalues = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(n));
  LossDiagnostics diag;
  std::size_t clipped = 0;

  std::vector<bool> legal(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < k; ++j) {
      legal[static_cast<std::size_t>(j)] = batch.masks(j, col) > 0.5;
    }
    const Eigen::VectorXd logp = masked_log_softmax(cache.logits.col(col), legal);
    const auto a = static_cast<Eigen::Index>(batch.actions[i]);
    const double adv = batch.advantages[i];

    // Clipped surrogate.
    const double ratio = std::exp(logp(a) - batch.behavior_log_probs(a, col));
    const double clipped_ratio = std::clamp(ratio, 1.0 - hp.clip_eps, 1.0 + hp.clip_eps);
    const double surr1 = ratio * adv;
    const double surr2 = clipped_ratio * adv;
    diag.policy_loss -= std::min(surr1, surr2) * inv_n;
    const double dsurr_dratio = surr1 <= surr2 ? adv : 0.0;
    if (std::abs(ratio - 1.0) > hp.clip_eps) ++clipped;

    // Entropy and KL(behavior || current), legal actions only.
    double entropy = 0.0;
    double kl = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!legal[static_cast<std::size_t>(j)]) continue;
      const double p = std::exp(logp(j));
      entropy -= p * logp(j);
      const double old_logp = batch.behavior_log_probs(j, col);
      kl += std::exp(old_logp) * (old_logp - logp(j));
    }
    diag.entropy += entropy * inv_n;
    diag.approx_kl += kl * inv_n;

    // Clipped squared value error.
    const double err = cache.values(col) - batch.returns[i];
    const double sq = err * err;
    diag.vf_loss += std::min(sq, hp.vf_clip) * inv_n;

    if (gradient) {
      for (Eigen::Index j = 0; j < k; ++j) {
        if (!legal[static_cast<std::size_t>(j)]) continue;
        const double p = std::exp(logp(j));
        const double q = std::exp(batch.behavior_log_probs(j, col));
        const double onehot = j == a ? 1.0 : 0.0;
        double g = -dsurr_dratio * ratio * (onehot - p);
        g -= hp.k_s * (-p * (logp(j) + entropy));
        g += hp.k_kl * (p - q);
        dlogits(j, col) = g * inv_n;
      }
      dvalues(col) = sq < hp.vf_clip ? hp.k_vf * 2.0 * err * inv_n : 0.0;
    }
  }

  diag.clip_fraction = static_cast<double>(clipped) * inv_n;
  diag.loss = diag.policy_loss + hp.k_vf * diag.vf_loss - hp.k_s * diag.entropy +
              hp.k_kl * diag.approx_kl;
  if (!std::isfinite(diag.loss)) {
    throw NumericalError("non-finite PPO loss: " + describe(diag));
  }
  if (gradient) {
    *gradient = backward(params, cache, dlogits, dvalues);
    if (!gradient->all_finite()) {
      throw NumericalError("non-finite PPO gradient: " + describe(diag));
    }
  }
  return diag;
}

ordered_json layer_to_json(const DenseLayer& layer) {
  ordered_json j;
  j["rows"] = layer.weights.rows();
  j["cols"] = layer.weights.cols();
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(layer.weights.size()));
  for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
  }
  j["weights"] = w;
  j["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
  return j;
}

DenseLayer layer_from_json(const ordered_json& j, const std::string& where) {
  try {
    auto rows = j.at("rows").get<Eigen::Index>();
    auto cols = j.at("cols").get<Eigen::Index>();
    auto w = j.at("weights").get<std::vector<double>>();
    auto b = j.at("bias").get<std::vector<double>>();
    if (rows <= 0 || cols <= 0 || static_cast<Eigen::Index>(w.size()) != rows * cols ||
        static_cast<Eigen::Index>(b.size()) != rows) {
      throw ParseError(where + ": weight array sizes do not match rows/cols");
    }
    DenseLayer layer;
    layer.weights.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        layer.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      }
    }
    layer.bias = Eigen::Map<Eigen::VectorXd>(b.data(), rows);
    return layer;
  } catch (const ordered_json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
}

ordered_json hyperparams_to_json(const HyperParams& hp) {
  ordered_json j;
  j["k_vf"] = hp.k_vf;
  j["k_s"] = hp.k_s;
  j["k_kl"] = hp.k_kl;
  j["train_batch"] = hp.train_batch;
  j["minibatch"] = hp.minibatch;
  j["vf_clip"] = hp.vf_clip;
  j["clip_eps"] = hp.clip_eps;
  j["lr"] = hp.lr;
  j["hidden"] = hp.hidden;
  j["gamma"] = hp.gamma;
  j["gae_lambda"] = hp.gae_lambda;
  j["iterations"] = hp.iterations;
  j["sgd_epochs"] = hp.sgd_epochs;
  return j;
}

HyperParams hyperparams_from_json(const ordered_json& j) {
  HyperParams hp;
  hp.k_vf = j.value("k_vf", hp.k_vf);
  hp.k_s = j.value("k_s", hp.k_s);
  hp.k_kl = j.value("k_kl", hp.k_kl);
  hp.train_batch = j.value("train_batch", hp.train_batch);
  hp.minibatch = j.value("minibatch", hp.minibatch);
  hp.vf_clip = j.value("vf_clip", hp.vf_clip);
  hp.clip_eps = j.value("clip_eps", hp.clip_eps);
  hp.lr = j.value("lr", hp.lr);
  hp.hidden = j.value("hidden", hp.hidden);
  hp.gamma = j.value("gamma", hp.gamma);
  hp.gae_lambda = j.value("gae_lambda", hp.gae_lambda);
  hp.iterations = j.value("iterations", hp.iterations);
  hp.sgd_epochs = j.value("sgd_epochs", hp.sgd_epochs);
  return hp;
}

}  // namespace

HyperParams desk_scale_hyperparams() {
  HyperParams hp;
  hp.iterations = 50;
  hp.lr = 1e-3;
  hp.sgd_epochs = 10;
  return hp;
}

void HyperParams::check() const {
  auto nonneg = [](double v) { return v >= 0.0 && std::isfinite(v); };
  if (!nonneg(k_vf) || !nonneg(k_s) || !nonneg(k_kl)) {
    throw InputError("loss coefficients must be non-negative");
  }
  if (train_batch == 0 || minibatch == 0) throw InputError("batch sizes must be positive");
  if (!(vf_clip > 0.0)) throw InputError("vf_clip must be positive");
  if (!nonneg(clip_eps)) throw InputError("clip_eps must be non-negative");
  if (!nonneg(lr)) throw InputError("lr must be non-negative");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("gamma must be in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw InputError("gae_lambda must be in [0, 1]");
  }
  for (auto h : hidden) {
    if (h == 0) throw InputError("hidden layer width must be positive");
  }
}

TrajectoryBatch TrajectoryBatch::subset(std::span<const std::size_t> indices) const {
  TrajectoryBatch out;
  const auto m = static_cast<Eigen::Index>(indices.size());
  out.observations.resize(observations.rows(), m);
  out.behavior_log_probs.resize(behavior_log_probs.rows(), m);
  out.masks.resize(masks.rows(), m);
  for (Eigen::Index c = 0; c < m; ++c) {
    auto src = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(c)]);
    out.observations.col(c) = observations.col(src);
    out.behavior_log_probs.col(c) = behavior_log_probs.col(src);
    out.masks.col(c) = masks.col(src);
  }
  auto pick = [&indices](const auto& v, auto& dst) {
    if (v.empty()) return;
    dst.reserve(indices.size());
    for (auto i : indices) dst.push_back(v[i]);
  };
  pick(actions, out.actions);
  pick(rewards, out.rewards);
  pick(values, out.values);
  pick(dones, out.dones);
  pick(advantages, out.advantages);
  pick(returns, out.returns);
  return out;
}

GaeResult gae_advantages(std::span<const double> rewards, std::span<const double> values,
                         std::span<const std::uint8_t> dones, double gamma, double lambda,
                         double last_value) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw InputError("gae_advantages: rewards, values and dones differ in length");
  }
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  double next_value = last_value;
  for (std::size_t t = n; t-- > 0;) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * live - values[t];
    running = delta + gamma * lambda * live * running;
    out.advantages[t] = running;
    out.returns[t] = running + values[t];
    next_value = values[t];
  }
  return out;
}

void normalize_advantages(std::vector<double>& advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double var = 0.0;
  for (auto a : advantages) var += (a - mean) * (a - mean);
  var /= n;
  const double scale = var > 0.0 ? 1.0 / (std::sqrt(var) + 1e-8) : 1.0;
  for (auto& a : advantages) a = (a - mean) * scale;
}

LossDiagnostics ppo_loss(const PolicyParams& params, const TrajectoryBatch& batch,
                         const HyperParams& hp) {
  return evaluate_loss(params, batch, hp, nullptr);
}

LossDiagnostics ppo_loss_and_gradient(const PolicyParams& params,
                                      const TrajectoryBatch& batch, const HyperParams& hp,
                                      PolicyParams& gradient) {
  return evaluate_loss(params, batch, hp, &gradient);
}

void sgd_update(PolicyParams& params, const TrajectoryBatch& batch, const HyperParams& hp,
                Rng& rng) {
  const std::size_t n = batch.size();
  std::vector<std::size_t> order(n);
  PolicyParams grad;
  for (std::size_t epoch = 0; epoch < hp.sgd_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += hp.minibatch) {
      const std::size_t stop = std::min(n, start + hp.minibatch);
      auto mb = batch.subset(std::span<const std::size_t>(order).subspan(start, stop - start));
      ppo_loss_and_gradient(params, mb, hp, grad);
      params.add_scaled(grad, -hp.lr);
    }
  }
}

TrajectoryBatch collect_batch(const AttackGraph& graph, AttackerPolicy& attacker,
                              const PolicyParams& params, const NoiseConfig& noise,
                              const RewardConfig& rewards, std::size_t min_steps,
                              std::uint64_t seed, std::vector<double>* episode_rewards,
                              std::vector<double>* episode_flags) {
  const std::size_t defenses = graph.num_defense_steps();
  const std::size_t features = graph.num_attack_steps() + defenses;
  const std::size_t k = defenses + 1;
  const std::size_t cap = episode_step_cap(graph);

  std::vector<std::vector<double>> obs;
  std::vector<Eigen::VectorXd> logps;
  std::vector<std::vector<bool>> masks;
  TrajectoryBatch batch;

  for (std::uint64_t episode = 0; batch.size() < min_steps || batch.size() == 0;
       ++episode) {
    const std::uint64_t ep_seed = derive_seed(seed, Stream::kTrain, {episode});
    Simulator sim(graph, noise, rewards, ep_seed);
    attacker.reset(graph, sim.state(), derive_seed(ep_seed, Stream::kAttacker));
    Rng policy_rng = make_rng(ep_seed, Stream::kDefender);
    const std::size_t first = batch.size();
    double total = 0.0;
    std::size_t captured = 0;

    while (!sim.done() && batch.size() - first < cap) {
      auto x = sim.observation().features();
      auto out = forward(params, x);
      auto mask = action_mask(sim.state().enabled);
      Eigen::VectorXd logp = masked_log_softmax(out.logits, mask);

      double u = uniform01(policy_rng);
      double acc = 0.0;
      std::size_t choice = k - 1;
      for (std::size_t j = 0; j < k; ++j) {
        if (!mask[j]) continue;
        choice = j;
        acc += std::exp(logp(static_cast<Eigen::Index>(j)));
        if (u < acc) break;
      }

      auto surface = sim.attack_surface();
      auto attack = attacker.select(graph, sim.state(), surface);
      auto outcome = sim.step(attack, action_from_index(choice, defenses));
      total += outcome.reward;
      captured += outcome.flags_captured_now.size();

      for (std::size_t j = 0; j < k; ++j) {
        if (!mask[j]) logp(static_cast<Eigen::Index>(j)) = 0.0;
      }
      obs.push_back(std::move(x));
      logps.push_back(std::move(logp));
      masks.push_back(std::move(mask));
      batch.actions.push_back(choice);
      batch.rewards.push_back(outcome.reward);
      batch.values.push_back(out.value);
      batch.dones.push_back(0);
    }
    // Episode boundary; a truncated episode is cut without bootstrapping.
    if (batch.size() > first) batch.dones.back() = 1;
    if (episode_rewards) episode_rewards->push_back(total);
    if (episode_flags && !graph.flags().empty()) {
      episode_flags->push_back(static_cast<double>(captured) /
                               static_cast<double>(graph.flags().size()));
    }
    if (batch.size() == first && episode > 1000) {
      throw InputError("collect_batch: episodes terminate without any steps");
    }
  }

  const auto n = static_cast<Eigen::Index>(batch.size());
  batch.observations.resize(static_cast<Eigen::Index>(features), n);
  batch.behavior_log_probs.resize(static_cast<Eigen::Index>(k), n);
  batch.masks.resize(static_cast<Eigen::Index>(k), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto i = static_cast<std::size_t>(c);
    for (std::size_t f = 0; f < features; ++f) {
      batch.observations(static_cast<Eigen::Index>(f), c) = obs[i][f];
    }
    batch.behavior_log_probs.col(c) = logps[i];
    for (std::size_t j = 0; j < k; ++j) {
      batch.masks(static_cast<Eigen::Index>(j), c) = masks[i][j] ? 1.0 : 0.0;
    }
  }
  return batch;
}

TrainResult train(const AttackGraph& graph, AttackerKind attacker_kind,
                  const NoiseConfig& noise, const RewardConfig& rewards,
                  const HyperParams& hp, std::uint64_t seed) {
  require_valid(graph);
  hp.check();
  noise.check();
  rewards.check();

  TrainResult result;
  result.params = init_policy_params(graph.num_attack_steps() + graph.num_defense_steps(),
                                     hp.hidden, graph.num_defense_steps() + 1, seed);
  auto attacker = make_attacker(attacker_kind);
  Rng shuffle_rng = make_rng(seed, Stream::kShuffle);

  for (std::size_t it = 0; it < hp.iterations; ++it) {
    std::vector<double> ep_rewards;
    std::vector<double> ep_flags;
    auto batch = collect_batch(graph, *attacker, result.params, noise, rewards,
                               hp.train_batch, derive_seed(seed, Stream::kTrain, {it}),
                               &ep_rewards, &ep_flags);
    auto gae = gae_advantages(batch.rewards, batch.values, batch.dones, hp.gamma,
                              hp.gae_lambda);
    batch.advantages = std::move(gae.advantages);
    batch.returns = std::move(gae.returns);
    normalize_advantages(batch.advantages);

    sgd_update(result.params, batch, hp, shuffle_rng);
    auto diag = ppo_loss(result.params, batch, hp);

    CurvePoint point;
    point.iteration = it;
    point.mean_episode_reward =
        std::accumulate(ep_rewards.begin(), ep_rewards.end(), 0.0) /
        static_cast<double>(ep_rewards.size());
    point.mean_flags_captured =
        ep_flags.empty() ? 0.0
                         : std::accumulate(ep_flags.begin(), ep_flags.end(), 0.0) /
                               static_cast<double>(ep_flags.size());
    point.approx_kl = diag.approx_kl;
    point.clip_fraction = diag.clip_fraction;
    result.curve.push_back(point);
  }
  return result;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "iteration,mean_episode_reward,mean_flags_captured,approx_kl,clip_fraction\n";
  for (const auto& p : curve) {
    out << p.iteration << ',' << p.mean_episode_reward << ',' << p.mean_flags_captured << ','
        << p.approx_kl << ',' << p.clip_fraction << '\n';
  }
}

std::string save_policy(const PolicyFile& file) {
  ordered_json doc;
  doc["format"] = "acsim-policy-v1";
  doc["num_attack_steps"] = file.num_attack_steps;
  doc["num_defense_steps"] = file.num_defense_steps;
  std::vector<std::size_t> sizes{file.params.input_size()};
  for (const auto& l : file.params.hidden) sizes.push_back(l.outputs());
  sizes.push_back(file.params.num_actions());
  doc["layer_sizes"] = sizes;
  doc["seed"] = file.seed;
  doc["hyperparams"] = hyperparams_to_json(file.hp);
  doc["hidden"] = ordered_json::array();
  for (const auto& l : file.params.hidden) doc["hidden"].push_back(layer_to_json(l));
  doc["policy_head"] = layer_to_json(file.params.policy_head);
  doc["value_head"] = layer_to_json(file.params.value_head);
  return doc.dump() + "\n";
}

PolicyFile load_policy(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(std::string("policy: malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "acsim-policy-v1") {
    throw ParseError("policy: missing or unknown \"format\" (expected acsim-policy-v1)");
  }
  PolicyFile file;
  try {
    file.num_attack_steps = doc.at("num_attack_steps").get<std::size_t>();
    file.num_defense_steps = doc.at("num_defense_steps").get<std::size_t>();
    file.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("hyperparams")) file.hp = hyperparams_from_json(doc["hyperparams"]);
  } catch (const ordered_json::exception& e) {
    throw ParseError(std::string("policy: ") + e.what());
  }
  if (!doc.contains("hidden") || !doc["hidden"].is_array()) {
    throw ParseError("policy.hidden: expected an array");
  }
  for (std::size_t i = 0; i < doc["hidden"].size(); ++i) {
    file.params.hidden.push_back(
        layer_from_json(doc["hidden"][i], "policy.hidden[" + std::to_string(i) + "]"));
  }
  if (!doc.contains("policy_head") || !doc.contains("value_head")) {
    throw ParseError("policy: missing policy_head or value_head");
  }
  file.params.policy_head = layer_from_json(doc["policy_head"], "policy.policy_head");
  file.params.value_head = layer_from_json(doc["value_head"], "policy.value_head");

  // Shape consistency.
  std::size_t width = file.num_attack_steps + file.num_defense_steps;
  for (const auto& l : file.params.hidden) {
    if (l.inputs() != width) throw ParseError("policy: hidden layer shapes do not chain");
    width = l.outputs();
  }
  if (file.params.policy_head.inputs() != width || file.params.value_head.inputs() != width ||
      file.params.policy_head.outputs() != file.num_defense_steps + 1 ||
      file.params.value_head.outputs() != 1) {
    throw ParseError("policy: head shapes do not match the declared graph");
  }
  if (!file.params.all_finite()) throw ParseError("policy: non-finite weights");
  return file;
}

void save_policy_file(const PolicyFile& file, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write policy file " + path.string());
  out << save_policy(file);
}

PolicyFile load_policy_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open policy file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return load_policy(buf.str());
}

}  // namespace acsim
