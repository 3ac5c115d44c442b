#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "urllc/checkpoint.hpp"
#include "urllc/trainer.hpp"

using namespace urllc;

namespace {

TrainConfig small_config(AgentKind kind, std::uint64_t seed = 0) {
  TrainConfig cfg;
  cfg.episodes = 3;
  cfg.steps_per_episode = 200;
  cfg.seed = seed;
  cfg.agent.kind = kind;
  cfg.network.hidden = {8, 8};
  return cfg;
}

SimState state_with(const SimConfig& cfg, std::size_t slot, std::size_t rem0, std::size_t rem1,
                    RequestKind kind) {
  SimState s = initial_state(cfg, 0);
  s.slot_index = slot;
  s.resources[0].remaining_slots = rem0;
  s.resources[1].remaining_slots = rem1;
  s.request.kind = kind;
  return s;
}

}  // namespace

TEST_CASE("zero episodes") {
  TrainConfig cfg = small_config(AgentKind::EG);
  cfg.episodes = 0;
  const RunResult r = train(cfg);
  CHECK(r.episodes.empty());
  CHECK(r.total_steps == 0);
  CHECK(r.snapshot.flatten() == initial_network(cfg).flatten());
}

TEST_CASE("null environment") {
  TrainConfig cfg = small_config(AgentKind::EG);
  cfg.sim.p_occupy = 0.0;
  cfg.sim.p_request = 0.0;
  SUBCASE("nothing happens, nothing is missed") {
    const RunResult r = train(cfg);
    for (const auto& ep : r.episodes) {
      CHECK(ep.sum_reward == 0.0);
      CHECK(ep.tx_interrupted_ratio == 0.0);
      CHECK(ep.urllc_missed_ratio == 0.0);
      CHECK(ep.critical_missed_ratio == 0.0);
    }
  }
  SUBCASE("a zero-output network receives zero gradients and stays put") {
    const NetworkParams zero = zeros_like(initial_network(cfg));
    const RunResult r = train(cfg, zero);
    CHECK(r.snapshot.flatten() == zero.flatten());
  }
  SUBCASE("mismatched initial network is rejected") {
    Rng rng(0);
    const std::size_t hidden[] = {4};
    CHECK_THROWS_AS(train(cfg, make_network(3, hidden, 3, rng)), std::invalid_argument);
  }
}

TEST_CASE("training is deterministic") {
  for (AgentKind kind : {AgentKind::EG, AgentKind::VB, AgentKind::ME}) {
    const RunResult a = train(small_config(kind, 4));
    const RunResult b = train(small_config(kind, 4));
    REQUIRE(a.episodes.size() == b.episodes.size());
    for (std::size_t i = 0; i < a.episodes.size(); ++i) {
      CHECK(a.episodes[i].sum_reward == b.episodes[i].sum_reward);
      CHECK(a.episodes[i].epsilon_end == b.episodes[i].epsilon_end);
    }
    CHECK(a.snapshot.flatten() == b.snapshot.flatten());
    const RunResult c = train(small_config(kind, 5));
    CHECK(c.snapshot.flatten() != a.snapshot.flatten());
  }
}

TEST_CASE("episode counters are consistent") {
  for (AgentKind kind : {AgentKind::EG, AgentKind::VB, AgentKind::ME}) {
    TrainConfig cfg = small_config(kind, 7);
    cfg.sim.p_critical = 0.3;
    cfg.sim.p_request = 0.3;
    const RunResult r = train(cfg);
    REQUIRE(r.episodes.size() == 3);
    for (std::size_t i = 0; i < r.episodes.size(); ++i) {
      const EpisodeMetrics& m = r.episodes[i];
      const EpisodeCounters& c = m.counters;
      CHECK(m.episode == i + 1);
      CHECK(c.urllc_missed + c.urllc_scheduled == c.urllc_arrived);
      CHECK(c.tx_interrupted <= c.punctures);
      CHECK(c.critical_missed <= c.critical_arrived);
      CHECK(c.critical_arrived <= c.urllc_arrived);
      for (double v : {m.tx_interrupted_ratio, m.urllc_missed_ratio, m.critical_missed_ratio}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("epsilon decays across episodes for EG only") {
  TrainConfig cfg = small_config(AgentKind::EG);
  cfg.episodes = 4;
  const RunResult r = train(cfg);
  CHECK(r.episodes[0].epsilon_end > r.episodes[1].epsilon_end);
  // 400 decay steps: the last step of episode 2 is step 399.
  CHECK(r.episodes[1].epsilon_end == doctest::Approx(0.99 / 400));
  CHECK(r.episodes[2].epsilon_end == 0.0);
  CHECK(r.episodes[3].epsilon_end == 0.0);
  const RunResult v = train(small_config(AgentKind::VB));
  for (const auto& ep : v.episodes) CHECK(ep.epsilon_end == 0.0);
}

TEST_CASE("divergence is reported") {
  TrainConfig cfg = small_config(AgentKind::EG);
  cfg.sim.w_capacity = 1e300;
  cfg.sim.p_occupy = 1.0;
  CHECK_THROWS_AS(train(cfg), DivergenceError);
}

TEST_CASE("manual scheduler decisions") {
  SimConfig cfg;
  // Normal request, resource 1 free.
  CHECK(manual_action(state_with(cfg, 3, 0, 4, RequestKind::Normal), cfg) == 1);
  // Normal request at slot 0, both busy; nothing ends within the sub-frame.
  CHECK(manual_action(state_with(cfg, 0, 7, 7, RequestKind::Normal), cfg) == 1);
  // Normal request at slot 0, a transmission ends within the sub-frame: wait.
  CHECK(manual_action(state_with(cfg, 0, 5, 7, RequestKind::Normal), cfg) == 0);
  // Critical request goes to the least occupied resource.
  CHECK(manual_action(state_with(cfg, 0, 3, 6, RequestKind::Critical), cfg) == 1);
  CHECK(manual_action(state_with(cfg, 0, 6, 3, RequestKind::Critical), cfg) == 2);
  CHECK(manual_action(state_with(cfg, 0, 3, 6, RequestKind::None), cfg) == 0);
}

TEST_CASE("manual baseline never misses a request") {
  TrainConfig cfg;
  cfg.episodes = 5;
  cfg.steps_per_episode = 20000;
  for (double pc : {0.0, 0.5, 1.0}) {
    cfg.sim.p_critical = pc;
    const RunResult r = manual_baseline(cfg);
    CHECK(r.snapshot.layers.empty());
    for (const auto& ep : r.episodes) {
      CHECK(ep.counters.urllc_missed == 0);
      CHECK(ep.critical_missed_ratio == 0.0);
      CHECK(ep.counters.urllc_arrived > 0);
    }
  }
  cfg.sim.p_request = 0.0;
  for (const auto& ep : manual_baseline(cfg).episodes) CHECK(ep.urllc_missed_ratio == 0.0);
}

TEST_CASE("probe transition") {
  const SimConfig cfg;
  const Transition tr = probe_transition(cfg);
  CHECK(tr.s == StateVector{0, 1, 1, 1, 1});
  CHECK(tr.action == 0);
  // Two undisturbed transmissions at gain 2 and a missed critical request.
  CHECK(tr.reward == doctest::Approx(cfg.w_capacity * 2 * std::log(3.0) - cfg.w_discard_critical));
  CHECK(tr.s_next[0] == doctest::Approx(1.0 / 6.0));
  CHECK(tr.s_next[1] == 0.0);
  CHECK_FALSE(tr.terminal);
  CHECK(probe_transition(cfg, true).terminal);
}

TEST_CASE("magnitude difference") {
  const double a[] = {4.0, 1.0, 3.0};
  CHECK(*magnitude_difference(a) == doctest::Approx(2.0));
  const double b[] = {2.5, 2.5, 2.5};
  CHECK(*magnitude_difference(b) == doctest::Approx(1.0));
  const double c[] = {1.0, 1.0, -1.0};
  CHECK_FALSE(magnitude_difference(c).has_value());
}

TEST_CASE("probe reaction fields per head type") {
  const TrainConfig eg = small_config(AgentKind::EG);
  const ProbeReaction r = probe_reaction(initial_network(eg), eg.agent, eg.sim);
  CHECK_FALSE(r.logstd_wait.has_value());
  CHECK_FALSE(r.mean_logstd_punct.has_value());

  const TrainConfig vb = small_config(AgentKind::VB);
  NetworkParams p = initial_network(vb);
  auto& out = p.layers.back();
  for (double& w : out.weights) w = 0.0;
  out.biases = {4.0, 2.0, 2.0, -1.0, -2.0, -3.0};
  const ProbeReaction g = probe_reaction(p, vb.agent, vb.sim);
  CHECK(*g.md == doctest::Approx(2.0));
  CHECK(*g.logstd_wait == doctest::Approx(-1.0));
  CHECK(*g.mean_logstd_punct == doctest::Approx(-2.5));
  CHECK(g.preferred_action == 0);
}

TEST_CASE("probe adaptation") {
  const TrainConfig cfg = small_config(AgentKind::EG);
  NetworkParams p = initial_network(cfg);
  auto& out = p.layers.back();
  for (double& w : out.weights) w = 0.0;
  Rng rng(1);
  SUBCASE("an agent already preferring to puncture explores at once") {
    out.biases = {0.0, 1.0, 0.0};
    CHECK(probe_adaptation(p, cfg.agent, cfg.sim, cfg.network, 100, rng) == 1);
  }
  SUBCASE("a strongly wait-biased agent hits the cap") {
    out.biases = {1e6, 0.0, 0.0};
    CHECK(probe_adaptation(p, cfg.agent, cfg.sim, cfg.network, 10, rng) == 10);
  }
  SUBCASE("never exceeds the cap") {
    const TrainConfig vb = small_config(AgentKind::VB);
    const NetworkParams q = initial_network(vb);
    for (int rep = 0; rep < 5; ++rep) {
      const std::size_t n = probe_adaptation(q, vb.agent, vb.sim, vb.network, 10, rng);
      CHECK(n >= 1);
      CHECK(n <= 10);
    }
  }
}

TEST_CASE("checkpoint round trip") {
  const TrainConfig cfg = small_config(AgentKind::ME, 3);
  Checkpoint ck{AgentKind::ME, 3, 600, initial_network(cfg)};
  const auto dir = std::filesystem::temp_directory_path() / "urllc_test_ckpt";
  std::filesystem::create_directories(dir);
  const auto path = dir / "me.ckpt";
  save_checkpoint(path, ck);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.agent == AgentKind::ME);
  CHECK(back.seed == 3);
  CHECK(back.step_count == 600);
  CHECK(back.params.flatten() == ck.params.flatten());

  const auto bytes = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, bytes - 3);
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), std::runtime_error);
  std::filesystem::remove_all(dir);
}
