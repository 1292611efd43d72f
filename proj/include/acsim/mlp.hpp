#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace acsim {

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out

  std::size_t inputs() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t outputs() const { return static_cast<std::size_t>(weights.rows()); }
};

/// Policy/value network: a tanh trunk shared by a linear policy head (one
/// logit per action) and a linear value head.
struct PolicyParams {
  std::vector<DenseLayer> hidden;
  DenseLayer policy_head;
  DenseLayer value_head;

  std::size_t input_size() const;
  std::size_t num_actions() const { return policy_head.outputs(); }
  std::size_t num_parameters() const;
  bool all_finite() const;

  // Same shapes, all zeros. Used as a gradient accumulator.
  PolicyParams zeros_like() const;
  // params += scale * other
  void add_scaled(const PolicyParams& other, double scale);

  // Row-major weights then bias, layer by layer, policy head, value head.
  Eigen::VectorXd flatten() const;
  void assign_flat(const Eigen::VectorXd& flat);
};

// Orthogonal init: hidden layers with gain sqrt(2), policy head gain 0.01,
// value head gain 1, zero biases.
PolicyParams init_policy_params(std::size_t input_size,
                                std::span<const std::size_t> hidden_sizes,
                                std::size_t num_actions, std::uint64_t seed);

// All weights and biases zero.
PolicyParams zero_policy_params(std::size_t input_size,
                                std::span<const std::size_t> hidden_sizes,
                                std::size_t num_actions);

struct PolicyOutput {
  Eigen::VectorXd logits;
  double value = 0.0;
};

// Throws InputError when the input length does not match.
PolicyOutput forward(const PolicyParams& params, std::span<const double> input);

// Column-per-sample batch pass, keeping the activations for backprop.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // [0] = input, then each hidden layer
  Eigen::MatrixXd logits;                    // actions x batch
  Eigen::RowVectorXd values;                 // 1 x batch
};
ForwardCache forward_batch(const PolicyParams& params, const Eigen::MatrixXd& inputs);

// Gradient of a scalar loss given its derivatives w.r.t. logits and values.
PolicyParams backward(const PolicyParams& params, const ForwardCache& cache,
                      const Eigen::MatrixXd& dlogits, const Eigen::RowVectorXd& dvalues);

// Softmax restricted to legal actions; illegal entries get probability 0 and
// log-probability -inf. Needs at least one legal action.
Eigen::VectorXd masked_log_softmax(const Eigen::VectorXd& logits,
                                   const std::vector<bool>& legal);
Eigen::VectorXd masked_softmax(const Eigen::VectorXd& logits, const std::vector<bool>& legal);

}  // namespace acsim
