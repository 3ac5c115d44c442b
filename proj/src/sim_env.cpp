#include "urllc/sim_env.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace urllc {

namespace {

void require_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
  }
}

}  // namespace

void SimConfig::validate() const {
  if (n_resources < 1) throw std::invalid_argument("n_resources must be >= 1");
  if (slots_per_subframe < 2) {
    throw std::invalid_argument("slots_per_subframe must be >= 2");
  }
  require_probability(p_occupy, "p_occupy");
  require_probability(p_request, "p_request");
  require_probability(p_critical, "p_critical");
  if (occupy_len_min < 1 || occupy_len_min > occupy_len_max ||
      occupy_len_max > slots_per_subframe) {
    throw std::invalid_argument(
        "occupation lengths must satisfy 1 <= min <= max <= slots_per_subframe");
  }
  if (!(rayleigh_sigma > 0.0) || !std::isfinite(rayleigh_sigma)) {
    throw std::invalid_argument("rayleigh_sigma must be positive");
  }
  if (!std::isfinite(w_capacity) || !std::isfinite(w_discard) ||
      !std::isfinite(w_discard_critical)) {
    throw std::invalid_argument("reward weights must be finite");
  }
}

double gain_from_uniform(double u, double sigma) {
  const double magnitude = sigma * std::sqrt(-2.0 * std::log(u));
  return magnitude * magnitude;
}

double sample_channel_gain(Rng& rng, double sigma) {
  return gain_from_uniform(rng.uniform_open_closed(), sigma);
}

RewardBreakdown compose_reward(double r_capacity, double r_discard,
                               double r_discard_critical, const SimConfig& cfg) {
  RewardBreakdown r;
  r.r_capacity = r_capacity;
  r.r_discard = r_discard;
  r.r_discard_critical = r_discard_critical;
  r.r_total = cfg.w_capacity * r_capacity + cfg.w_discard * r_discard +
              cfg.w_discard_critical * r_discard_critical;
  return r;
}

SimState initial_state(const SimConfig& cfg, std::uint64_t seed) {
  SimState s;
  s.rng = Rng(seed);
  s.resources.assign(cfg.n_resources, ResourceState{});
  return s;
}

std::size_t begin_subframe(SimState& state, const SimConfig& cfg) {
  std::size_t started = 0;
  for (auto& res : state.resources) {
    // Fixed draw order per resource: occupancy, length, gain.
    if (state.rng.bernoulli(cfg.p_occupy)) {
      res.remaining_slots = state.rng.between(cfg.occupy_len_min, cfg.occupy_len_max);
      ++started;
    } else {
      res.remaining_slots = 0;
    }
    res.gain = sample_channel_gain(state.rng, cfg.rayleigh_sigma);
  }
  return started;
}

bool maybe_spawn_request(SimState& state, const SimConfig& cfg) {
  if (state.request.pending()) return false;
  if (!state.rng.bernoulli(cfg.p_request)) return false;
  const bool critical = state.rng.bernoulli(cfg.p_critical);
  state.request.kind = critical ? RequestKind::Critical : RequestKind::Normal;
  state.request.age_slots = 0;
  return true;
}

StepOutcome step(SimState& state, std::size_t action, const SimConfig& cfg) {
  if (action > cfg.n_resources) {
    throw std::out_of_range("action " + std::to_string(action) +
                            " outside [0, " + std::to_string(cfg.n_resources) + "]");
  }
  StepOutcome out;
  EventFlags& ev = out.events;
  ev.request_kind = state.request.kind;

  // Puncturing without a pending request is a wait.
  if (action > 0 && state.request.pending()) {
    auto& res = state.resources[action - 1];
    ev.scheduled = true;
    ev.tx_interrupted = res.remaining_slots > 0;
    res.remaining_slots = 0;
  }

  double r_capacity = 0.0;
  for (const auto& res : state.resources) {
    if (res.remaining_slots > 0) r_capacity += std::log1p(res.gain);
  }

  double r_discard = 0.0;
  double r_discard_critical = 0.0;
  const bool last_slot = state.slot_index + 1 == cfg.slots_per_subframe;
  if (state.request.pending() && !ev.scheduled) {
    if (state.request.kind == RequestKind::Critical) {
      r_discard_critical = -1.0;
      ev.critical_missed = true;
    } else if (last_slot) {
      r_discard = -1.0;
      ev.normal_missed = true;
    }
  }
  if (ev.scheduled || ev.critical_missed || ev.normal_missed) {
    state.request = RequestState{};
  } else if (state.request.pending()) {
    ++state.request.age_slots;
  }

  for (auto& res : state.resources) {
    if (res.remaining_slots > 0) --res.remaining_slots;
  }
  if (last_slot) {
    state.slot_index = 0;
    ++state.subframe_index;
  } else {
    ++state.slot_index;
  }

  out.reward = compose_reward(r_capacity, r_discard, r_discard_critical, cfg);
  return out;
}

StateVector observe(const SimState& state, const SimConfig& cfg) {
  StateVector s(cfg.state_dim(), 0.0);
  s[0] = static_cast<double>(state.slot_index) /
         static_cast<double>(cfg.slots_per_subframe - 1);
  s[1] = state.request.pending() ? 1.0 : 0.0;
  s[2] = state.request.kind == RequestKind::Critical ? 1.0 : 0.0;
  for (std::size_t k = 0; k < cfg.n_resources; ++k) {
    s[3 + k] = static_cast<double>(state.resources[k].remaining_slots) /
               static_cast<double>(cfg.slots_per_subframe);
  }
  return s;
}

Environment::Environment(SimConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), state_(initial_state(cfg_, seed)) {
  cfg_.validate();
  reset();
}

SlotStart Environment::reset() {
  state_.slot_index = 0;
  state_.request = RequestState{};
  last_start_ = prepare_slot();
  return last_start_;
}

StepOutcome Environment::step(std::size_t action) {
  StepOutcome out = urllc::step(state_, action, cfg_);
  last_start_ = prepare_slot();
  return out;
}

SlotStart Environment::prepare_slot() {
  SlotStart start;
  if (state_.slot_index == 0) {
    start.new_subframe = true;
    start.transmissions_started = begin_subframe(state_, cfg_);
  }
  start.request_arrived = maybe_spawn_request(state_, cfg_);
  return start;
}

}  // namespace urllc
