#pragma once

// Dense feed-forward network with penalized-tanh hidden layers, a linear
// output layer and hand-written reverse-mode gradients.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "urllc/rng.hpp"

namespace urllc {

inline constexpr double kPenalizedTanhSlope = 0.25;

double penalized_tanh(double x);
double penalized_tanh_derivative(double x);

// Row-major weights: weights[r * cols + c] maps input c to output r.
struct DenseLayer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  double& w(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
  double w(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }
};

struct NetworkParams {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().cols; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().rows; }
  std::size_t parameter_count() const;
  bool all_finite() const;
  bool same_shape(const NetworkParams& other) const;

  // Flat view order: per layer, weights then biases.
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> flat);
};

NetworkParams zeros_like(const NetworkParams& params);

// Weights uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
NetworkParams make_network(std::size_t input_dim, std::span<const std::size_t> hidden,
                           std::size_t output_dim, Rng& rng);

enum class HeadMode { Deterministic, Gaussian };

// Gaussian heads emit the N+1 means first, then the N+1 log-std values.
struct QHead {
  HeadMode mode = HeadMode::Deterministic;
  std::size_t n_actions = 0;

  std::size_t output_dim() const {
    return mode == HeadMode::Gaussian ? 2 * n_actions : n_actions;
  }
};

struct HeadOutput {
  std::vector<double> q;  // deterministic estimates, or the means for Gaussian heads
  std::vector<double> log_sigma;  // empty for deterministic heads

  bool gaussian() const { return !log_sigma.empty(); }
  const std::vector<double>& mu() const { return q; }
};

// Activations kept for the backward pass. activations[0] is the input,
// activations.back() the raw network output.
struct ForwardPass {
  std::vector<std::vector<double>> pre_activations;
  std::vector<std::vector<double>> activations;

  const std::vector<double>& output() const { return activations.back(); }
};

// Throws std::invalid_argument on an input of the wrong width.
ForwardPass forward(const NetworkParams& params, std::span<const double> input);

HeadOutput read_head(const QHead& head, std::span<const double> raw_output);
HeadOutput evaluate(const NetworkParams& params, const QHead& head,
                    std::span<const double> input);

struct GaussianSample {
  std::vector<double> q;
  std::vector<double> noise;
};

// q_i = mu_i + exp(log_sigma_i) * noise_i.
std::vector<double> reparameterize(std::span<const double> mu,
                                   std::span<const double> log_sigma,
                                   std::span<const double> noise);
GaussianSample sample_gaussian_head(std::span<const double> mu,
                                    std::span<const double> log_sigma, Rng& rng);

double gaussian_log_density(double q, double mu, double log_sigma);

// Maps loss gradients onto the raw Gaussian-head outputs. grad_q is taken
// with respect to the sampled q and flows through dq/dmu = 1 and
// dq/dlog_sigma = exp(log_sigma) * noise; the direct terms are added as is.
std::vector<double> gaussian_output_grad(std::span<const double> grad_q,
                                         std::span<const double> grad_mu_direct,
                                         std::span<const double> grad_log_sigma_direct,
                                         std::span<const double> log_sigma,
                                         std::span<const double> noise);

// Gradient of a scalar loss w.r.t. every parameter, given dL/d(raw output).
void backward(const NetworkParams& params, const ForwardPass& pass,
              std::span<const double> output_grad, NetworkParams& grads);
NetworkParams backward(const NetworkParams& params, const ForwardPass& pass,
                       std::span<const double> output_grad);

struct AdamState {
  NetworkParams first_moment;
  NetworkParams second_moment;
  std::size_t step_count = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon_hat = 1e-8;
};

AdamState make_adam(const NetworkParams& params, double learning_rate);
void adam_apply(AdamState& state, NetworkParams& params, const NetworkParams& grads);

// target <- (1 - tau) * target + tau * online
void polyak_update(NetworkParams& target, const NetworkParams& online, double tau);

struct TargetPair {
  NetworkParams online;
  NetworkParams target;
  double tau = 1e-4;

  TargetPair(NetworkParams initial, double tau_)
      : online(std::move(initial)), target(online), tau(tau_) {}
  void update() { polyak_update(target, online, tau); }
};

// Snapshot layout, all little-endian: u64 layer count, then (u64 rows,
// u64 cols) per layer, then per layer the row-major weights followed by the
// biases as IEEE-754 doubles.
void write_snapshot(std::ostream& out, const NetworkParams& params);
NetworkParams read_snapshot(std::istream& in);

}  // namespace urllc
