#include "urllc/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace urllc {

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::EG: return "eg";
    case AgentKind::VB: return "vb";
    case AgentKind::ME: return "me";
  }
  return "?";
}

std::optional<AgentKind> parse_agent_kind(std::string_view text) {
  if (text == "eg" || text == "EG") return AgentKind::EG;
  if (text == "vb" || text == "VB") return AgentKind::VB;
  if (text == "me" || text == "ME") return AgentKind::ME;
  return std::nullopt;
}

std::string_view to_string(EntropySign sign) {
  return sign == EntropySign::UniformPrior ? "uniform_prior" : "as_written";
}

std::optional<EntropySign> parse_entropy_sign(std::string_view text) {
  if (text == "uniform_prior") return EntropySign::UniformPrior;
  if (text == "as_written") return EntropySign::AsWritten;
  return std::nullopt;
}

void AgentSpec::validate() const {
  if (!(epsilon_initial >= 0.0 && epsilon_initial <= 1.0)) {
    throw std::invalid_argument("epsilon_initial must lie in [0, 1]");
  }
  if (!(epsilon_decay_fraction >= 0.0 && epsilon_decay_fraction <= 1.0)) {
    throw std::invalid_argument("epsilon_decay_fraction must lie in [0, 1]");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (!(softmax_clip_low > 0.0 && softmax_clip_low < 1.0)) {
    throw std::invalid_argument("softmax_clip_low must lie in (0, 1)");
  }
  if (!std::isfinite(w_lp) || !std::isfinite(w_me)) {
    throw std::invalid_argument("penalty weights must be finite");
  }
}

double epsilon_at(std::size_t step, std::size_t total_decay_steps, const AgentSpec& spec) {
  if (total_decay_steps == 0) return 0.0;
  const double frac = static_cast<double>(step) / static_cast<double>(total_decay_steps);
  return std::max(0.0, spec.epsilon_initial * (1.0 - frac));
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax of empty range");
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) -
                                  values.begin());
}

ActionChoice select_action(const AgentSpec& spec, const HeadOutput& head, Rng& rng,
                           double epsilon) {
  ActionChoice choice;
  if (spec.kind == AgentKind::EG) {
    if (epsilon > 0.0 && rng.bernoulli(epsilon)) {
      choice.action = rng.below(head.q.size());
      choice.random = true;
    } else {
      choice.action = argmax(head.q);
    }
    return choice;
  }
  if (!head.gaussian()) throw std::invalid_argument("select_action: agent needs a Gaussian head");
  GaussianSample sample = sample_gaussian_head(head.mu(), head.log_sigma, rng);
  choice.action = argmax(sample.q);
  choice.noise = std::move(sample.noise);
  choice.sampled_q = std::move(sample.q);
  return choice;
}

double bootstrap_target(const AgentSpec& spec, double reward, const HeadOutput& target_next,
                        bool terminal) {
  if (terminal) return reward;
  const double best = *std::max_element(target_next.q.begin(), target_next.q.end());
  return reward + spec.gamma * best;
}

TdComponents td_components(const AgentSpec& spec, const HeadOutput& online,
                           const ActionChoice& choice, const HeadOutput& target_next,
                           const Transition& tr) {
  TdComponents td;
  td.prediction = choice.sampled_q.empty() ? online.q.at(tr.action) : choice.sampled_q.at(tr.action);
  td.bootstrap_target = bootstrap_target(spec, tr.reward, target_next, tr.terminal);
  return td;
}

LossResult loss_eg(double prediction, double bootstrap_target, std::size_t action,
                   std::size_t n_actions) {
  if (action >= n_actions) throw std::out_of_range("loss_eg: action out of range");
  LossResult r;
  const double diff = prediction - bootstrap_target;
  r.td_loss = diff * diff;
  r.loss = r.td_loss;
  r.output_grad.assign(n_actions, 0.0);
  r.output_grad[action] = 2.0 * diff;
  return r;
}

namespace {

void check_gaussian_args(std::size_t action, std::span<const double> mu,
                         std::span<const double> log_sigma, std::span<const double> noise) {
  if (mu.size() != log_sigma.size() || mu.size() != noise.size()) {
    throw std::invalid_argument("Gaussian loss: length mismatch");
  }
  if (action >= mu.size()) throw std::out_of_range("Gaussian loss: action out of range");
}

}  // namespace

LossResult loss_vb(double prediction, double bootstrap_target, std::size_t action,
                   std::span<const double> mu, std::span<const double> log_sigma,
                   std::span<const double> noise, const AgentSpec& spec) {
  check_gaussian_args(action, mu, log_sigma, noise);
  const std::size_t n = mu.size();
  const std::vector<double> q = reparameterize(mu, log_sigma, noise);

  LossResult r;
  const double diff = prediction - bootstrap_target;
  r.td_loss = diff * diff;

  std::vector<double> grad_q(n, 0.0);
  std::vector<double> grad_mu(n, 0.0);
  std::vector<double> grad_ls(n, 0.0);
  grad_q[action] += 2.0 * diff;

  double lp_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lp_sum += gaussian_log_density(q[i], mu[i], log_sigma[i]);
    // Partials of lp(q; mu, log_sigma) in each argument.
    const double inv_var = std::exp(-2.0 * log_sigma[i]);
    const double d = q[i] - mu[i];
    grad_q[i] += spec.w_lp * (-d * inv_var);
    grad_mu[i] += spec.w_lp * (d * inv_var);
    grad_ls[i] += spec.w_lp * (-1.0 + d * d * inv_var);
  }
  r.penalty = spec.w_lp * lp_sum;
  r.loss = r.td_loss + r.penalty;
  r.output_grad = gaussian_output_grad(grad_q, grad_mu, grad_ls, log_sigma, noise);
  return r;
}

std::vector<double> softmax_clipped(std::span<const double> q, double clip_low) {
  if (q.empty()) return {};
  const double top = *std::max_element(q.begin(), q.end());
  std::vector<double> sm(q.size());
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    sm[i] = std::exp(q[i] - top);
    total += sm[i];
  }
  for (double& v : sm) v = std::clamp(v / total, clip_low, 1.0);
  return sm;
}

namespace {

double penalty_sign(const AgentSpec& spec) {
  return spec.me_sign == EntropySign::UniformPrior ? -1.0 : 1.0;
}

std::vector<double> softmax_raw(std::span<const double> q) {
  const double top = *std::max_element(q.begin(), q.end());
  std::vector<double> sm(q.size());
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    sm[i] = std::exp(q[i] - top);
    total += sm[i];
  }
  for (double& v : sm) v /= total;
  return sm;
}

}  // namespace

double entropy_penalty(std::span<const double> q, const AgentSpec& spec) {
  double log_sum = 0.0;
  for (double v : softmax_clipped(q, spec.softmax_clip_low)) log_sum += std::log(v);
  return penalty_sign(spec) * spec.w_me * log_sum;
}

std::vector<double> entropy_penalty_grad(std::span<const double> q, const AgentSpec& spec) {
  // d log sm_i / d q_j = delta_ij - sm_j for components inside the clip
  // range; clamped components are constant.
  const std::vector<double> sm = softmax_raw(q);
  const double scale = penalty_sign(spec) * spec.w_me;
  std::vector<double> active(q.size(), 0.0);
  double n_active = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (sm[i] >= spec.softmax_clip_low && sm[i] <= 1.0) {
      active[i] = 1.0;
      n_active += 1.0;
    }
  }
  std::vector<double> grad(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) grad[j] = scale * (active[j] - n_active * sm[j]);
  return grad;
}

LossResult loss_me(double prediction, double bootstrap_target, std::size_t action,
                   std::span<const double> mu, std::span<const double> log_sigma,
                   std::span<const double> noise, const AgentSpec& spec) {
  check_gaussian_args(action, mu, log_sigma, noise);
  const std::size_t n = mu.size();
  const std::vector<double> q = reparameterize(mu, log_sigma, noise);

  LossResult r;
  const double diff = prediction - bootstrap_target;
  r.td_loss = diff * diff;
  r.penalty = entropy_penalty(q, spec);
  r.loss = r.td_loss + r.penalty;

  std::vector<double> grad_q = entropy_penalty_grad(q, spec);
  grad_q[action] += 2.0 * diff;
  const std::vector<double> zeros(n, 0.0);
  r.output_grad = gaussian_output_grad(grad_q, zeros, zeros, log_sigma, noise);
  return r;
}

LossResult assemble_loss(const AgentSpec& spec, const HeadOutput& online,
                         const ActionChoice& choice, double bootstrap_target) {
  switch (spec.kind) {
    case AgentKind::EG:
      return loss_eg(online.q.at(choice.action), bootstrap_target, choice.action,
                     online.q.size());
    case AgentKind::VB:
      return loss_vb(choice.sampled_q.at(choice.action), bootstrap_target, choice.action,
                     online.mu(), online.log_sigma, choice.noise, spec);
    case AgentKind::ME:
      return loss_me(choice.sampled_q.at(choice.action), bootstrap_target, choice.action,
                     online.mu(), online.log_sigma, choice.noise, spec);
  }
  throw std::logic_error("assemble_loss: unknown agent kind");
}

}  // namespace urllc
