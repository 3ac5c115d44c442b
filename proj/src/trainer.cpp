#include "urllc/trainer.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace urllc {

void TrainConfig::validate() const {
  sim.validate();
  agent.validate();
  if (steps_per_episode < 1) throw std::invalid_argument("steps_per_episode must be >= 1");
  if (!(network.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(network.tau >= 0.0 && network.tau <= 1.0)) {
    throw std::invalid_argument("tau must lie in [0, 1]");
  }
}

std::size_t TrainConfig::epsilon_decay_steps() const {
  return static_cast<std::size_t>(std::llround(agent.epsilon_decay_fraction *
                                               static_cast<double>(episodes) *
                                               static_cast<double>(steps_per_episode)));
}

EpisodeMetrics summarize_episode(std::size_t episode, const EpisodeCounters& c,
                                 double epsilon_end) {
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  EpisodeMetrics m;
  m.episode = episode;
  m.sum_reward = c.sum_reward;
  m.tx_interrupted_ratio = ratio(c.tx_interrupted, c.transmissions_started);
  m.urllc_missed_ratio = ratio(c.urllc_missed, c.urllc_arrived);
  m.critical_missed_ratio = ratio(c.critical_missed, c.critical_arrived);
  m.epsilon_end = epsilon_end;
  m.counters = c;
  return m;
}

QHead head_for(const AgentSpec& spec, const SimConfig& sim) {
  return QHead{spec.head_mode(), sim.n_actions()};
}

NetworkParams initial_network(const TrainConfig& cfg) {
  Rng init = make_stream(cfg.seed, "network-init");
  const QHead head = head_for(cfg.agent, cfg.sim);
  return make_network(cfg.sim.state_dim(), cfg.network.hidden, head.output_dim(), init);
}

Learner::Learner(AgentSpec spec, QHead head, NetworkParams initial, const NetworkConfig& net)
    : spec_(spec), head_(head), pair_(std::move(initial), net.tau),
      adam_(make_adam(pair_.online, net.learning_rate)), grads_(zeros_like(pair_.online)) {
  if (pair_.online.output_dim() != head_.output_dim()) {
    throw std::invalid_argument("Learner: network output does not match the agent head");
  }
}

Learner::Decision Learner::decide(const StateVector& s, Rng& rng, double epsilon) const {
  Decision d;
  d.pass = forward(pair_.online, s);
  d.head = read_head(head_, d.pass.output());
  d.choice = select_action(spec_, d.head, rng, epsilon);
  return d;
}

LossResult Learner::learn(const Decision& decision, double reward, const StateVector& s_next,
                          bool terminal) {
  double target_value = reward;
  if (!terminal) {
    const HeadOutput next = evaluate(pair_.target, head_, s_next);
    target_value = bootstrap_target(spec_, reward, next, false);
  }
  LossResult loss = assemble_loss(spec_, decision.head, decision.choice, target_value);
  if (!std::isfinite(loss.loss)) {
    throw DivergenceError("non-finite loss after " + std::to_string(adam_.step_count) +
                          " optimizer steps");
  }
  backward(pair_.online, decision.pass, loss.output_grad, grads_);
  adam_apply(adam_, pair_.online, grads_);
  pair_.update();
  return loss;
}

namespace {

// Counts what the decision state exposes: transmissions when a sub-frame
// starts and requests in their arrival slot.
void tally_decision_state(EpisodeCounters& c, const SimState& state) {
  if (state.slot_index == 0) {
    for (const auto& res : state.resources) {
      if (res.remaining_slots > 0) ++c.transmissions_started;
    }
  }
  if (state.request.pending() && state.request.age_slots == 0) {
    ++c.urllc_arrived;
    if (state.request.kind == RequestKind::Critical) ++c.critical_arrived;
  }
}

// A normal request still pending at truncation is dropped by the reset
// without a verdict, so it is not counted as an arrival.
void close_episode(EpisodeCounters& c, const SimState& state) {
  if (state.request.pending() && state.request.age_slots > 0) --c.urllc_arrived;
}

void tally(EpisodeCounters& c, const StepOutcome& out, std::size_t action) {
  c.sum_reward += out.reward.r_total;
  if (action > 0 && out.events.scheduled) ++c.punctures;
  if (out.events.tx_interrupted) ++c.tx_interrupted;
  if (out.events.scheduled) ++c.urllc_scheduled;
  if (out.events.normal_missed || out.events.critical_missed) ++c.urllc_missed;
  if (out.events.critical_missed) ++c.critical_missed;
}

}  // namespace

RunResult train(const TrainConfig& cfg, const CheckpointSink& sink) {
  cfg.validate();
  return train(cfg, initial_network(cfg), sink);
}

RunResult train(const TrainConfig& cfg, NetworkParams initial, const CheckpointSink& sink) {
  cfg.validate();
  const QHead head = head_for(cfg.agent, cfg.sim);
  if (initial.input_dim() != cfg.sim.state_dim() || initial.output_dim() != head.output_dim())
    throw std::invalid_argument("initial network does not match the configuration");
  RunResult result;
  Learner learner(cfg.agent, head, std::move(initial), cfg.network);
  Environment env(cfg.sim, derive_seed(cfg.seed, "environment"));
  Rng action_rng = make_stream(cfg.seed, "action-noise");
  const std::size_t decay_steps = cfg.epsilon_decay_steps();

  std::size_t global_step = 0;
  for (std::size_t ep = 1; ep <= cfg.episodes; ++ep) {
    EpisodeCounters counters;
    env.reset();
    StateVector s = env.observe();
    double epsilon = 0.0;
    for (std::size_t t = 0; t < cfg.steps_per_episode; ++t, ++global_step) {
      epsilon = cfg.agent.kind == AgentKind::EG ? epsilon_at(global_step, decay_steps, cfg.agent)
                                                : 0.0;
      tally_decision_state(counters, env.state());
      const Learner::Decision decision = learner.decide(s, action_rng, epsilon);
      const StepOutcome out = env.step(decision.choice.action);
      tally(counters, out, decision.choice.action);
      StateVector s_next = env.observe();
      // Episodes truncate an ongoing process: the last transition bootstraps.
      learner.learn(decision, out.reward.r_total, s_next, false);
      s = std::move(s_next);
    }
    close_episode(counters, env.state());
    if (!learner.online().all_finite()) {
      throw DivergenceError("non-finite network parameter in episode " + std::to_string(ep));
    }
    result.episodes.push_back(summarize_episode(ep, counters, epsilon));
    if (sink && cfg.checkpoint_every > 0 && ep % cfg.checkpoint_every == 0) {
      sink(ep, global_step, learner.online());
    }
  }
  result.total_steps = global_step;
  result.snapshot = learner.online();
  return result;
}

namespace {

std::size_t least_occupied(const SimState& state) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < state.resources.size(); ++k) {
    if (state.resources[k].remaining_slots < state.resources[best].remaining_slots) best = k;
  }
  return best;
}

}  // namespace

std::size_t manual_action(const SimState& state, const SimConfig& cfg) {
  if (!state.request.pending()) return 0;
  const std::size_t target = least_occupied(state);
  if (state.request.kind == RequestKind::Critical) return target + 1;
  if (state.resources[target].remaining_slots == 0) return target + 1;
  const std::size_t slots_left = cfg.slots_per_subframe - state.slot_index;
  if (state.resources[target].remaining_slots < slots_left) return 0;
  return target + 1;
}

RunResult manual_baseline(const TrainConfig& cfg) {
  cfg.validate();
  RunResult result;
  Environment env(cfg.sim, derive_seed(cfg.seed, "environment"));
  for (std::size_t ep = 1; ep <= cfg.episodes; ++ep) {
    EpisodeCounters counters;
    env.reset();
    for (std::size_t t = 0; t < cfg.steps_per_episode; ++t) {
      tally_decision_state(counters, env.state());
      const std::size_t action = manual_action(env.state(), cfg.sim);
      const StepOutcome out = env.step(action);
      tally(counters, out, action);
      ++result.total_steps;
    }
    close_episode(counters, env.state());
    result.episodes.push_back(summarize_episode(ep, counters, 0.0));
  }
  return result;
}

SimState probe_sim_state(const SimConfig& cfg, double gain) {
  SimState s = initial_state(cfg, 0);
  s.slot_index = 0;
  for (auto& res : s.resources) {
    res.remaining_slots = cfg.slots_per_subframe;
    res.gain = gain;
  }
  s.request.kind = RequestKind::Critical;
  s.request.age_slots = 0;
  return s;
}

Transition probe_transition(const SimConfig& cfg, bool terminal) {
  SimState state = probe_sim_state(cfg, kProbeGain);
  Transition tr;
  tr.s = observe(state, cfg);
  tr.action = 0;
  tr.reward = step(state, 0, cfg).reward.r_total;
  tr.s_next = observe(state, cfg);
  tr.terminal = terminal;
  return tr;
}

std::optional<double> magnitude_difference(std::span<const double> q) {
  if (q.size() < 2) return std::nullopt;
  double sum = 0.0;
  for (std::size_t i = 1; i < q.size(); ++i) sum += q[i];
  const double denom = sum / static_cast<double>(q.size() - 1);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  return q[0] / denom;
}

ProbeReaction probe_reaction(const NetworkParams& snapshot, const AgentSpec& spec,
                             const SimConfig& sim) {
  const QHead head = head_for(spec, sim);
  const StateVector s = observe(probe_sim_state(sim, kProbeGain), sim);
  const HeadOutput out = evaluate(snapshot, head, s);
  ProbeReaction r;
  r.md = magnitude_difference(out.q);
  r.preferred_action = argmax(out.q);
  if (out.gaussian()) {
    r.logstd_wait = out.log_sigma[0];
    double sum = 0.0;
    for (std::size_t i = 1; i < out.log_sigma.size(); ++i) sum += out.log_sigma[i];
    r.mean_logstd_punct = sum / static_cast<double>(out.log_sigma.size() - 1);
  }
  return r;
}

std::size_t probe_adaptation(const NetworkParams& snapshot, const AgentSpec& spec,
                             const SimConfig& sim, const NetworkConfig& net, std::size_t cap,
                             Rng& rng, bool terminal) {
  Learner learner(spec, head_for(spec, sim), snapshot, net);
  const Transition tr = probe_transition(sim, terminal);
  for (std::size_t count = 1; count <= cap; ++count) {
    // Trained EG agents act greedily.
    const Learner::Decision d = learner.decide(tr.s, rng, 0.0);
    if (d.choice.action != 0) return count;
    learner.learn(d, tr.reward, tr.s_next, tr.terminal);
  }
  return cap;
}

}  // namespace urllc
