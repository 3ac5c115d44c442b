#pragma once

// Exploration strategies and per-transition loss assembly for the three
// agent kinds:
//   EG  deterministic head, epsilon-greedy action choice, plain TD loss
//   VB  Gaussian head, sampled action choice, TD + w_lp * sum of log densities
//   ME  Gaussian head, sampled action choice, TD -/+ w_me * sum log softmax

#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "urllc/neural_core.hpp"
#include "urllc/rng.hpp"
#include "urllc/sim_env.hpp"

namespace urllc {

enum class AgentKind { EG, VB, ME };

// UniformPrior subtracts the log-softmax sum (pulls estimates together);
// AsWritten adds it.
enum class EntropySign { UniformPrior, AsWritten };

std::string_view to_string(AgentKind kind);
std::optional<AgentKind> parse_agent_kind(std::string_view text);
std::string_view to_string(EntropySign sign);
std::optional<EntropySign> parse_entropy_sign(std::string_view text);

struct AgentSpec {
  AgentKind kind = AgentKind::EG;
  double epsilon_initial = 0.99;
  double epsilon_decay_fraction = 0.5;
  double w_lp = 1e-2;
  double w_me = std::numbers::e;
  double softmax_clip_low = 1e-3;
  double gamma = 0.99;
  EntropySign me_sign = EntropySign::UniformPrior;

  HeadMode head_mode() const {
    return kind == AgentKind::EG ? HeadMode::Deterministic : HeadMode::Gaussian;
  }
  void validate() const;
};

struct Transition {
  StateVector s;
  std::size_t action = 0;
  double reward = 0.0;
  StateVector s_next;
  bool terminal = false;
};

// max(0, eps0 * (1 - step / total_decay_steps)); 0 when total_decay_steps is 0.
double epsilon_at(std::size_t step, std::size_t total_decay_steps, const AgentSpec& spec);

// Lowest index wins ties.
std::size_t argmax(std::span<const double> values);

struct ActionChoice {
  std::size_t action = 0;
  std::vector<double> noise;      // Gaussian heads only
  std::vector<double> sampled_q;  // Gaussian heads only
  bool random = false;            // EG exploratory draw
};

// EG: uniform random action with probability epsilon, else argmax q.
// VB / ME: argmax of a reparameterized sample; epsilon is ignored.
ActionChoice select_action(const AgentSpec& spec, const HeadOutput& head, Rng& rng,
                           double epsilon);

struct TdComponents {
  double prediction = 0.0;
  double bootstrap_target = 0.0;
};

// Bootstrap over the target network's deterministic estimates, or its means
// for Gaussian heads.
double bootstrap_target(const AgentSpec& spec, double reward, const HeadOutput& target_next,
                        bool terminal);
TdComponents td_components(const AgentSpec& spec, const HeadOutput& online,
                           const ActionChoice& choice, const HeadOutput& target_next,
                           const Transition& tr);

// Loss value plus its gradient with respect to the raw network outputs.
struct LossResult {
  double loss = 0.0;
  double td_loss = 0.0;
  double penalty = 0.0;
  std::vector<double> output_grad;
};

// Gradient is nonzero only at the taken action's output.
LossResult loss_eg(double prediction, double bootstrap_target, std::size_t action,
                   std::size_t n_actions);

LossResult loss_vb(double prediction, double bootstrap_target, std::size_t action,
                   std::span<const double> mu, std::span<const double> log_sigma,
                   std::span<const double> noise, const AgentSpec& spec);

// Softmax clamped elementwise to [clip_low, 1], not renormalized.
std::vector<double> softmax_clipped(std::span<const double> q, double clip_low);

LossResult loss_me(double prediction, double bootstrap_target, std::size_t action,
                   std::span<const double> mu, std::span<const double> log_sigma,
                   std::span<const double> noise, const AgentSpec& spec);

// The ME penalty alone, as a function of the sampled q vector.
double entropy_penalty(std::span<const double> q, const AgentSpec& spec);
std::vector<double> entropy_penalty_grad(std::span<const double> q, const AgentSpec& spec);

// Dispatches to the loss of spec.kind.
LossResult assemble_loss(const AgentSpec& spec, const HeadOutput& online,
                         const ActionChoice& choice, double bootstrap_target);

}  // namespace urllc
