#pragma once

// Mini-slot puncturing environment: N orthogonal resources carrying
// background transmissions, redrawn at every sub-frame, and URLLC requests
// that must be placed into one of them.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "urllc/rng.hpp"

namespace urllc {

using StateVector = std::vector<double>;

struct SimConfig {
  std::size_t n_resources = 2;
  std::size_t slots_per_subframe = 7;
  double p_occupy = 0.7;
  std::size_t occupy_len_min = 5;
  std::size_t occupy_len_max = 7;
  double p_request = 0.1;
  double p_critical = 0.0;
  double rayleigh_sigma = 1.0;
  double w_capacity = 1.0;
  double w_discard = 5.0;
  double w_discard_critical = 5.0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  std::size_t n_actions() const { return n_resources + 1; }
  std::size_t state_dim() const { return n_resources + 3; }
};

struct ResourceState {
  std::size_t remaining_slots = 0;
  double gain = 0.0;
};

enum class RequestKind { None, Normal, Critical };

struct RequestState {
  RequestKind kind = RequestKind::None;
  std::size_t age_slots = 0;

  bool pending() const { return kind != RequestKind::None; }
};

struct SimState {
  std::size_t slot_index = 0;
  std::size_t subframe_index = 0;
  std::vector<ResourceState> resources;
  RequestState request;
  Rng rng;
};

struct RewardBreakdown {
  double r_capacity = 0.0;
  double r_discard = 0.0;
  double r_discard_critical = 0.0;
  double r_total = 0.0;
};

struct EventFlags {
  bool scheduled = false;
  bool tx_interrupted = false;
  bool normal_missed = false;
  bool critical_missed = false;
  RequestKind request_kind = RequestKind::None;  // request pending at decision time
};

struct StepOutcome {
  RewardBreakdown reward;
  EventFlags events;
};

// g = |h|^2 with |h| = sigma * sqrt(-2 ln u), u in (0, 1].
double gain_from_uniform(double u, double sigma);
double sample_channel_gain(Rng& rng, double sigma);

// Weighted reward sum from its three components.
RewardBreakdown compose_reward(double r_capacity, double r_discard,
                               double r_discard_critical, const SimConfig& cfg);

SimState initial_state(const SimConfig& cfg, std::uint64_t seed);

// Fills every resource with probability p_occupy for a uniform length in
// [occupy_len_min, occupy_len_max] and redraws every gain. Returns the number
// of transmissions started.
std::size_t begin_subframe(SimState& state, const SimConfig& cfg);

// Spawns a request with probability p_request if none is pending. Returns
// true on arrival.
bool maybe_spawn_request(SimState& state, const SimConfig& cfg);

// Applies action (0 = wait, k = puncture resource k-1), computes the reward
// of the current mini-slot and advances by one mini-slot. The slot index
// wraps to 0 at the end of a sub-frame; the caller then runs begin_subframe.
// Throws std::out_of_range for an action outside [0, N].
StepOutcome step(SimState& state, std::size_t action, const SimConfig& cfg);

StateVector observe(const SimState& state, const SimConfig& cfg);

struct SlotStart {
  bool new_subframe = false;
  std::size_t transmissions_started = 0;
  bool request_arrived = false;
};

// Sequences the per-slot operations: sub-frame start when the slot index is
// 0, then request arrival, so that observe() reflects the decision state.
class Environment {
 public:
  Environment(SimConfig cfg, std::uint64_t seed);

  // Starts a fresh sub-frame at slot 0. The generator keeps running.
  SlotStart reset();
  StepOutcome step(std::size_t action);
  StateVector observe() const { return urllc::observe(state_, cfg_); }

  const SimState& state() const { return state_; }
  const SimConfig& config() const { return cfg_; }
  // Events of the slot preparation that produced the current state.
  const SlotStart& last_slot_start() const { return last_start_; }

 private:
  SlotStart prepare_slot();

  SimConfig cfg_;
  SimState state_;
  SlotStart last_start_;
};

}  // namespace urllc
