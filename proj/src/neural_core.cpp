#include "urllc/neural_core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace urllc {

double penalized_tanh(double x) {
  const double t = std::tanh(x);
  return x > 0.0 ? t : kPenalizedTanhSlope * t;
}

double penalized_tanh_derivative(double x) {
  const double t = std::tanh(x);
  return (x > 0.0 ? 1.0 : kPenalizedTanhSlope) * (1.0 - t * t);
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.biases.size();
  return n;
}

bool NetworkParams::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(layers.begin(), layers.end(), [&](const DenseLayer& l) {
    return std::all_of(l.weights.begin(), l.weights.end(), finite) &&
           std::all_of(l.biases.begin(), l.biases.end(), finite);
  });
}

bool NetworkParams::same_shape(const NetworkParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].rows != other.layers[i].rows || layers[i].cols != other.layers[i].cols) {
      return false;
    }
  }
  return true;
}

std::vector<double> NetworkParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers) {
    flat.insert(flat.end(), l.weights.begin(), l.weights.end());
    flat.insert(flat.end(), l.biases.begin(), l.biases.end());
  }
  return flat;
}

void NetworkParams::assign_flat(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument("assign_flat: size mismatch");
  }
  auto it = flat.begin();
  for (auto& l : layers) {
    std::copy_n(it, l.weights.size(), l.weights.begin());
    it += static_cast<std::ptrdiff_t>(l.weights.size());
    std::copy_n(it, l.biases.size(), l.biases.begin());
    it += static_cast<std::ptrdiff_t>(l.biases.size());
  }
}

NetworkParams zeros_like(const NetworkParams& params) {
  NetworkParams z;
  z.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    z.layers.push_back(DenseLayer{l.rows, l.cols, std::vector<double>(l.weights.size(), 0.0),
                                  std::vector<double>(l.biases.size(), 0.0)});
  }
  return z;
}

NetworkParams make_network(std::size_t input_dim, std::span<const std::size_t> hidden,
                           std::size_t output_dim, Rng& rng) {
  if (input_dim == 0 || output_dim == 0) {
    throw std::invalid_argument("make_network: zero-width input or output");
  }
  std::vector<std::size_t> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(output_dim);

  NetworkParams params;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t cols = widths[i];
    const std::size_t rows = widths[i + 1];
    if (rows == 0) throw std::invalid_argument("make_network: zero-width hidden layer");
    DenseLayer layer{rows, cols, std::vector<double>(rows * cols), std::vector<double>(rows, 0.0)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    for (double& w : layer.weights) w = (2.0 * rng.uniform01() - 1.0) * bound;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

ForwardPass forward(const NetworkParams& params, std::span<const double> input) {
  if (params.layers.empty()) throw std::invalid_argument("forward: empty network");
  if (input.size() != params.input_dim()) {
    throw std::invalid_argument("forward: input width " + std::to_string(input.size()) +
                                " != " + std::to_string(params.input_dim()));
  }
  ForwardPass pass;
  const std::size_t n_layers = params.layers.size();
  pass.pre_activations.resize(n_layers);
  pass.activations.resize(n_layers + 1);
  pass.activations[0].assign(input.begin(), input.end());

  for (std::size_t li = 0; li < n_layers; ++li) {
    const DenseLayer& layer = params.layers[li];
    const std::vector<double>& in = pass.activations[li];
    std::vector<double>& z = pass.pre_activations[li];
    z.resize(layer.rows);
    for (std::size_t r = 0; r < layer.rows; ++r) {
      const double* row = layer.weights.data() + r * layer.cols;
      double acc = layer.biases[r];
      for (std::size_t c = 0; c < layer.cols; ++c) acc += row[c] * in[c];
      z[r] = acc;
    }
    std::vector<double>& a = pass.activations[li + 1];
    if (li + 1 == n_layers) {
      a = z;
    } else {
      a.resize(layer.rows);
      for (std::size_t r = 0; r < layer.rows; ++r) a[r] = penalized_tanh(z[r]);
    }
  }
  return pass;
}

HeadOutput read_head(const QHead& head, std::span<const double> raw_output) {
  if (raw_output.size() != head.output_dim()) {
    throw std::invalid_argument("read_head: output width does not match head");
  }
  HeadOutput out;
  const std::size_t a = head.n_actions;
  out.q.assign(raw_output.begin(), raw_output.begin() + static_cast<std::ptrdiff_t>(a));
  if (head.mode == HeadMode::Gaussian) {
    out.log_sigma.assign(raw_output.begin() + static_cast<std::ptrdiff_t>(a), raw_output.end());
  }
  return out;
}

HeadOutput evaluate(const NetworkParams& params, const QHead& head,
                    std::span<const double> input) {
  return read_head(head, forward(params, input).output());
}

std::vector<double> reparameterize(std::span<const double> mu,
                                   std::span<const double> log_sigma,
                                   std::span<const double> noise) {
  if (mu.size() != log_sigma.size() || mu.size() != noise.size()) {
    throw std::invalid_argument("reparameterize: length mismatch");
  }
  std::vector<double> q(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) q[i] = mu[i] + std::exp(log_sigma[i]) * noise[i];
  return q;
}

GaussianSample sample_gaussian_head(std::span<const double> mu,
                                    std::span<const double> log_sigma, Rng& rng) {
  GaussianSample s;
  s.noise.resize(mu.size());
  for (double& z : s.noise) z = rng.standard_normal();
  s.q = reparameterize(mu, log_sigma, s.noise);
  return s;
}

double gaussian_log_density(double q, double mu, double log_sigma) {
  const double d = q - mu;
  return -log_sigma - 0.5 * std::log(2.0 * std::numbers::pi) -
         d * d / (2.0 * std::exp(2.0 * log_sigma));
}

std::vector<double> gaussian_output_grad(std::span<const double> grad_q,
                                         std::span<const double> grad_mu_direct,
                                         std::span<const double> grad_log_sigma_direct,
                                         std::span<const double> log_sigma,
                                         std::span<const double> noise) {
  const std::size_t a = grad_q.size();
  if (grad_mu_direct.size() != a || grad_log_sigma_direct.size() != a ||
      log_sigma.size() != a || noise.size() != a) {
    throw std::invalid_argument("gaussian_output_grad: length mismatch");
  }
  std::vector<double> g(2 * a);
  for (std::size_t i = 0; i < a; ++i) {
    g[i] = grad_q[i] + grad_mu_direct[i];
    g[a + i] = grad_q[i] * std::exp(log_sigma[i]) * noise[i] + grad_log_sigma_direct[i];
  }
  return g;
}

void backward(const NetworkParams& params, const ForwardPass& pass,
              std::span<const double> output_grad, NetworkParams& grads) {
  if (output_grad.size() != params.output_dim()) {
    throw std::invalid_argument("backward: output gradient width mismatch");
  }
  if (!grads.same_shape(params)) grads = zeros_like(params);

  std::vector<double> delta(output_grad.begin(), output_grad.end());
  std::vector<double> delta_prev;
  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const DenseLayer& layer = params.layers[li];
    DenseLayer& g = grads.layers[li];
    const std::vector<double>& in = pass.activations[li];
    for (std::size_t r = 0; r < layer.rows; ++r) {
      g.biases[r] = delta[r];
      double* grow = g.weights.data() + r * layer.cols;
      const double d = delta[r];
      for (std::size_t c = 0; c < layer.cols; ++c) grow[c] = d * in[c];
    }
    if (li == 0) break;
    delta_prev.assign(layer.cols, 0.0);
    for (std::size_t r = 0; r < layer.rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const double* row = layer.weights.data() + r * layer.cols;
      for (std::size_t c = 0; c < layer.cols; ++c) delta_prev[c] += row[c] * d;
    }
    const std::vector<double>& z = pass.pre_activations[li - 1];
    for (std::size_t c = 0; c < layer.cols; ++c) delta_prev[c] *= penalized_tanh_derivative(z[c]);
    delta.swap(delta_prev);
  }
}

NetworkParams backward(const NetworkParams& params, const ForwardPass& pass,
                       std::span<const double> output_grad) {
  NetworkParams grads = zeros_like(params);
  backward(params, pass, output_grad, grads);
  return grads;
}

AdamState make_adam(const NetworkParams& params, double learning_rate) {
  AdamState s;
  s.first_moment = zeros_like(params);
  s.second_moment = zeros_like(params);
  s.learning_rate = learning_rate;
  return s;
}

namespace {

void adam_block(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                std::vector<double>& v, const AdamState& s, double c1, double c2) {
  const double b1 = s.beta1;
  const double b2 = s.beta2;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    p[i] -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon_hat);
  }
}

}  // namespace

void adam_apply(AdamState& state, NetworkParams& params, const NetworkParams& grads) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
      !params.same_shape(state.second_moment)) {
    throw std::invalid_argument("adam_apply: shape mismatch");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    DenseLayer& p = params.layers[li];
    const DenseLayer& g = grads.layers[li];
    adam_block(p.weights, g.weights, state.first_moment.layers[li].weights,
               state.second_moment.layers[li].weights, state, c1, c2);
    adam_block(p.biases, g.biases, state.first_moment.layers[li].biases,
               state.second_moment.layers[li].biases, state, c1, c2);
  }
}

void polyak_update(NetworkParams& target, const NetworkParams& online, double tau) {
  if (!target.same_shape(online)) throw std::invalid_argument("polyak_update: shape mismatch");
  auto blend = [tau](std::vector<double>& t, const std::vector<double>& o) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = (1.0 - tau) * t[i] + tau * o[i];
  };
  for (std::size_t li = 0; li < target.layers.size(); ++li) {
    blend(target.layers[li].weights, online.layers[li].weights);
    blend(target.layers[li].biases, online.layers[li].biases);
  }
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw std::runtime_error("snapshot truncated");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

constexpr std::uint64_t kMaxLayerWidth = 1U << 20;

}  // namespace

void write_snapshot(std::ostream& out, const NetworkParams& params) {
  put_u64(out, params.layers.size());
  for (const auto& l : params.layers) {
    put_u64(out, l.rows);
    put_u64(out, l.cols);
  }
  for (const auto& l : params.layers) {
    for (double w : l.weights) put_u64(out, std::bit_cast<std::uint64_t>(w));
    for (double b : l.biases) put_u64(out, std::bit_cast<std::uint64_t>(b));
  }
  if (!out) throw std::runtime_error("snapshot write failed");
}

NetworkParams read_snapshot(std::istream& in) {
  const std::uint64_t n_layers = get_u64(in);
  if (n_layers == 0 || n_layers > 64) throw std::runtime_error("snapshot: bad layer count");
  NetworkParams params;
  params.layers.resize(n_layers);
  for (auto& l : params.layers) {
    l.rows = get_u64(in);
    l.cols = get_u64(in);
    if (l.rows == 0 || l.cols == 0 || l.rows > kMaxLayerWidth || l.cols > kMaxLayerWidth) {
      throw std::runtime_error("snapshot: bad layer shape");
    }
  }
  for (std::size_t i = 1; i < params.layers.size(); ++i) {
    if (params.layers[i].cols != params.layers[i - 1].rows) {
      throw std::runtime_error("snapshot: layer shapes do not chain");
    }
  }
  for (auto& l : params.layers) {
    l.weights.resize(l.rows * l.cols);
    l.biases.resize(l.rows);
    for (double& w : l.weights) w = std::bit_cast<double>(get_u64(in));
    for (double& b : l.biases) b = std::bit_cast<double>(get_u64(in));
  }
  return params;
}

}  // namespace urllc
