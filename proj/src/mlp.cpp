#include "acsim/mlp.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "acsim/errors.hpp"
#include "acsim/rng.hpp"

namespace acsim {

namespace {

Eigen::MatrixXd orthogonal(std::size_t rows, std::size_t cols, double gain, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool tall = rows >= cols;
  const Eigen::Index r = static_cast<Eigen::Index>(tall ? rows : cols);
  const Eigen::Index c = static_cast<Eigen::Index>(tall ? cols : rows);
  Eigen::MatrixXd a(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) a(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(r, c);
  // Sign fix so the distribution is uniform over orthogonal matrices.
  Eigen::MatrixXd upper = qr.matrixQR().topRows(c).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < c; ++j) {
    if (upper(j, j) < 0.0) q.col(j) *= -1.0;
  }
  q *= gain;
  if (tall) return q;
  return q.transpose();
}

DenseLayer make_layer(std::size_t in, std::size_t out, double gain, Rng& rng) {
  DenseLayer layer;
  layer.weights = orthogonal(out, in, gain, rng);
  layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
  return layer;
}

DenseLayer zero_layer(std::size_t in, std::size_t out) {
  DenseLayer layer;
  layer.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out),
                                        static_cast<Eigen::Index>(in));
  layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
  return layer;
}

template <typename Fn>
void for_each_layer(PolicyParams& p, Fn&& fn) {
  for (auto& l : p.hidden) fn(l);
  fn(p.policy_head);
  fn(p.value_head);
}

template <typename Fn>
void for_each_layer(const PolicyParams& p, Fn&& fn) {
  for (const auto& l : p.hidden) fn(l);
  fn(p.policy_head);
  fn(p.value_head);
}

}  // namespace

std::size_t PolicyParams::input_size() const {
  return hidden.empty() ? policy_head.inputs() : hidden.front().inputs();
}

std::size_t PolicyParams::num_parameters() const {
  std::size_t n = 0;
  for_each_layer(*this, [&n](const DenseLayer& l) {
    n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  });
  return n;
}

bool PolicyParams::all_finite() const {
  bool ok = true;
  for_each_layer(*this, [&ok](const DenseLayer& l) {
    ok = ok && l.weights.allFinite() && l.bias.allFinite();
  });
  return ok;
}

PolicyParams PolicyParams::zeros_like() const {
  PolicyParams out = *this;
  for_each_layer(out, [](DenseLayer& l) {
    l.weights.setZero();
    l.bias.setZero();
  });
  return out;
}

void PolicyParams::add_scaled(const PolicyParams& other, double scale) {
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    hidden[i].weights += scale * other.hidden[i].weights;
    hidden[i].bias += scale * other.hidden[i].bias;
  }
  policy_head.weights += scale * other.policy_head.weights;
  policy_head.bias += scale * other.policy_head.bias;
  value_head.weights += scale * other.value_head.weights;
  value_head.bias += scale * other.value_head.bias;
}

Eigen::VectorXd PolicyParams::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(num_parameters()));
  Eigen::Index k = 0;
  for_each_layer(*this, [&](const DenseLayer& l) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) flat(k++) = l.weights(r, c);
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat(k++) = l.bias(r);
  });
  return flat;
}

void PolicyParams::assign_flat(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != num_parameters()) {
    throw InputError("assign_flat: parameter count mismatch");
  }
  Eigen::Index k = 0;
  for_each_layer(*this, [&](DenseLayer& l) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = flat(k++);
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat(k++);
  });
}

PolicyParams init_policy_params(std::size_t input_size,
                                std::span<const std::size_t> hidden_sizes,
                                std::size_t num_actions, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::kInit);
  PolicyParams p;
  std::size_t width = input_size;
  for (auto h : hidden_sizes) {
    p.hidden.push_back(make_layer(width, h, std::sqrt(2.0), rng));
    width = h;
  }
  p.policy_head = make_layer(width, num_actions, 0.01, rng);
  p.value_head = make_layer(width, 1, 1.0, rng);
  return p;
}

PolicyParams zero_policy_params(std::size_t input_size,
                                std::span<const std::size_t> hidden_sizes,
                                std::size_t num_actions) {
  PolicyParams p;
  std::size_t width = input_size;
  for (auto h : hidden_sizes) {
    p.hidden.push_back(zero_layer(width, h));
    width = h;
  }
  p.policy_head = zero_layer(width, num_actions);
  p.value_head = zero_layer(width, 1);
  return p;
}

PolicyOutput forward(const PolicyParams& params, std::span<const double> input) {
  if (input.size() != params.input_size()) {
    throw InputError("policy input has length " + std::to_string(input.size()) +
                     ", network expects " + std::to_string(params.input_size()));
  }
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(
      input.data(), static_cast<Eigen::Index>(input.size()));
  for (const auto& layer : params.hidden) {
    x = (layer.weights * x + layer.bias).array().tanh().matrix();
  }
  PolicyOutput out;
  out.logits = params.policy_head.weights * x + params.policy_head.bias;
  out.value = (params.value_head.weights * x + params.value_head.bias)(0);
  return out;
}

ForwardCache forward_batch(const PolicyParams& params, const Eigen::MatrixXd& inputs) {
  if (static_cast<std::size_t>(inputs.rows()) != params.input_size()) {
    throw InputError("policy batch has the wrong input width");
  }
  ForwardCache cache;
  cache.activations.reserve(params.hidden.size() + 1);
  cache.activations.push_back(inputs);
  for (const auto& layer : params.hidden) {
    Eigen::MatrixXd z = layer.weights * cache.activations.back();
    z.colwise() += layer.bias;
    cache.activations.push_back(z.array().tanh().matrix());
  }
  const auto& top = cache.activations.back();
  cache.logits = params.policy_head.weights * top;
  cache.logits.colwise() += params.policy_head.bias;
  Eigen::MatrixXd v = params.value_head.weights * top;
  v.colwise() += params.value_head.bias;
  cache.values = v.row(0);
  return cache;
}

PolicyParams backward(const PolicyParams& params, const ForwardCache& cache,
                      const Eigen::MatrixXd& dlogits, const Eigen::RowVectorXd& dvalues) {
  PolicyParams grad = params.zeros_like();
  const auto& top = cache.activations.back();

  grad.policy_head.weights = dlogits * top.transpose();
  grad.policy_head.bias = dlogits.rowwise().sum();
  grad.value_head.weights = dvalues * top.transpose();
  grad.value_head.bias = Eigen::VectorXd::Constant(1, dvalues.sum());

  Eigen::MatrixXd delta = params.policy_head.weights.transpose() * dlogits +
                          params.value_head.weights.transpose() * dvalues;
  for (std::size_t k = params.hidden.size(); k-- > 0;) {
    const auto& act = cache.activations[k + 1];
    // d tanh = 1 - tanh^2
    delta = (delta.array() * (1.0 - act.array().square())).matrix();
    grad.hidden[k].weights = delta * cache.activations[k].transpose();
    grad.hidden[k].bias = delta.rowwise().sum();
    if (k > 0) delta = params.hidden[k].weights.transpose() * delta;
  }
  return grad;
}

Eigen::VectorXd masked_log_softmax(const Eigen::VectorXd& logits,
                                   const std::vector<bool>& legal) {
  if (legal.size() != static_cast<std::size_t>(logits.size())) {
    throw InputError("action mask length does not match the policy head");
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double max_logit = kNegInf;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (legal[static_cast<std::size_t>(i)]) max_logit = std::max(max_logit, logits(i));
  }
  if (max_logit == kNegInf) throw InputError("action mask has no legal action");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (legal[static_cast<std::size_t>(i)]) sum += std::exp(logits(i) - max_logit);
  }
  const double log_z = max_logit + std::log(sum);
  Eigen::VectorXd out(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    out(i) = legal[static_cast<std::size_t>(i)] ? logits(i) - log_z : kNegInf;
  }
  return out;
}

Eigen::VectorXd masked_softmax(const Eigen::VectorXd& logits, const std::vector<bool>& legal) {
  return masked_log_softmax(logits, legal).array().exp().matrix();
}

}  // namespace acsim
