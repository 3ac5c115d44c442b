#pragma once

// Online one-step DQN training, the manual scheduling baseline, and the two
// probe experiments run on trained snapshots.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "urllc/agents.hpp"
#include "urllc/neural_core.hpp"
#include "urllc/sim_env.hpp"

namespace urllc {

struct NetworkConfig {
  std::vector<std::size_t> hidden = {128, 128};
  double learning_rate = 1e-4;
  double tau = 1e-4;
};

struct TrainConfig {
  std::size_t episodes = 30;
  std::size_t steps_per_episode = 3000;
  std::uint64_t seed = 0;
  AgentSpec agent;
  SimConfig sim;
  NetworkConfig network;
  std::size_t checkpoint_every = 0;  // episodes; 0 = off

  void validate() const;
  std::size_t epsilon_decay_steps() const;
};

// Raw per-episode counters; ratios are derived from them.
struct EpisodeCounters {
  double sum_reward = 0.0;
  std::size_t transmissions_started = 0;
  std::size_t tx_interrupted = 0;
  std::size_t punctures = 0;
  std::size_t urllc_arrived = 0;
  std::size_t urllc_scheduled = 0;
  std::size_t urllc_missed = 0;
  std::size_t critical_arrived = 0;
  std::size_t critical_missed = 0;
};

struct EpisodeMetrics {
  std::size_t episode = 0;  // 1-based
  double sum_reward = 0.0;
  double tx_interrupted_ratio = 0.0;
  double urllc_missed_ratio = 0.0;
  double critical_missed_ratio = 0.0;
  double epsilon_end = 0.0;
  EpisodeCounters counters;
};

EpisodeMetrics summarize_episode(std::size_t episode, const EpisodeCounters& c,
                                 double epsilon_end);

struct RunResult {
  std::vector<EpisodeMetrics> episodes;
  NetworkParams snapshot;  // empty for the manual baseline
  std::size_t total_steps = 0;
};

// Raised when any parameter or loss becomes non-finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

QHead head_for(const AgentSpec& spec, const SimConfig& sim);
NetworkParams initial_network(const TrainConfig& cfg);

// Online network, slowly tracking target network and optimizer state.
class Learner {
 public:
  Learner(AgentSpec spec, QHead head, NetworkParams initial, const NetworkConfig& net);

  struct Decision {
    ForwardPass pass;
    HeadOutput head;
    ActionChoice choice;
  };

  Decision decide(const StateVector& s, Rng& rng, double epsilon) const;
  // One loss / Adam / Polyak step on the transition taken in `decision`.
  LossResult learn(const Decision& decision, double reward, const StateVector& s_next,
                   bool terminal);

  const NetworkParams& online() const { return pair_.online; }
  const NetworkParams& target() const { return pair_.target; }
  const AgentSpec& spec() const { return spec_; }
  const QHead& head() const { return head_; }

 private:
  AgentSpec spec_;
  QHead head_;
  TargetPair pair_;
  AdamState adam_;
  NetworkParams grads_;
};

// Called after every `checkpoint_every`-th episode with (episode, online params).
using CheckpointSink = std::function<void(std::size_t, std::size_t, const NetworkParams&)>;

RunResult train(const TrainConfig& cfg, const CheckpointSink& sink = {});
// Same, starting from the given parameters instead of the seeded initialization.
RunResult train(const TrainConfig& cfg, NetworkParams initial, const CheckpointSink& sink = {});

// Heuristic scheduler: critical requests go to the resource with the least
// remaining occupation; normal requests take a free resource, else wait while
// some transmission ends within the sub-frame, else puncture the resource
// with the least remaining occupation. Ties go to the lowest index.
std::size_t manual_action(const SimState& state, const SimConfig& cfg);
RunResult manual_baseline(const TrainConfig& cfg);

// A critical request in the first mini-slot with every resource fully occupied.
SimState probe_sim_state(const SimConfig& cfg, double gain);
inline constexpr double kProbeGain = 2.0;

// The transition used by the adaptation probe: wait on the probe state,
// evaluated through the simulator. s_next is the following mini-slot with no
// request. By default it bootstraps like any training transition.
Transition probe_transition(const SimConfig& cfg, bool terminal = false);

struct ProbeReaction {
  std::optional<double> md;  // empty when the denominator is ~0
  std::optional<double> logstd_wait;
  std::optional<double> mean_logstd_punct;
  std::size_t preferred_action = 0;
};

// md = Q(wait) / mean(Q(puncture k)), using the means for Gaussian heads.
std::optional<double> magnitude_difference(std::span<const double> q);
ProbeReaction probe_reaction(const NetworkParams& snapshot, const AgentSpec& spec,
                             const SimConfig& sim);

inline constexpr std::size_t kDefaultAdaptationCap = 10000;

// Confronts the agent with the probe state until it picks a puncturing
// action, training on each wait. Returns the 1-based confrontation count,
// or `cap` if it never explores.
std::size_t probe_adaptation(const NetworkParams& snapshot, const AgentSpec& spec,
                             const SimConfig& sim, const NetworkConfig& net, std::size_t cap,
                             Rng& rng, bool terminal = false);

}  // namespace urllc
