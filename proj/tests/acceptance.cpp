// Runs every acceptance criterion at full reference scale and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "urllc/agents.hpp"
#include "urllc/metrics_io.hpp"
#include "urllc/neural_core.hpp"
#include "urllc/sim_env.hpp"
#include "urllc/trainer.hpp"

using namespace urllc;
namespace fs = std::filesystem;

namespace {

// Tolerances and thresholds.
constexpr double kBaselineFraction = 0.95;
constexpr std::size_t kFastEpisodes = 5;
constexpr std::size_t kEgEarliestEpisode = 10;
constexpr double kMeanStepsMaxME = 200;
constexpr double kMeanStepsMaxVB = 1000;
constexpr double kMeanStepsMinEG = 1500;
constexpr double kMdExcessRatio = 10.0;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradAbsFloor = 1e-8;
constexpr double kFdStep = 1e-5;
constexpr double kGainMeanLo = 1.9, kGainMeanHi = 2.1;
constexpr double kOccupancyTol = 0.01;
constexpr double kArrivalTol = 0.005;
constexpr double kReductionTol = 1e-10;
constexpr double kUniformTol = 1e-3;
constexpr double kRunBudgetSeconds = 300.0;

constexpr std::uint64_t kSeeds[] = {0, 1, 2};
constexpr AgentKind kAgents[] = {AgentKind::EG, AgentKind::VB, AgentKind::ME};
constexpr std::size_t kAdaptReps = 10;

struct Verdict {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Verdict> verdicts;

void record(int id, std::string name, bool pass, std::string detail) {
  std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << name << "  ["
            << detail << "]" << std::endl;
  verdicts.push_back({id, std::move(name), pass, std::move(detail)});
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct TrainedRun {
  AgentKind agent;
  std::uint64_t seed;
  RunResult result;
  double seconds;
};

std::vector<TrainedRun> train_all() {
  std::vector<TrainedRun> runs;
  for (AgentKind agent : kAgents) {
    for (std::uint64_t seed : kSeeds) {
      TrainConfig cfg;
      cfg.agent.kind = agent;
      cfg.seed = seed;
      const auto t0 = std::chrono::steady_clock::now();
      RunResult r = train(cfg);
      const double secs = seconds_since(t0);
      std::cout << "  trained " << to_string(agent) << " seed " << seed << " in " << fmt(secs, 3)
                << " s" << std::endl;
      runs.push_back({agent, seed, std::move(r), secs});
    }
  }
  return runs;
}

std::vector<double> mean_curve(const std::vector<TrainedRun>& runs, AgentKind agent) {
  std::vector<double> curve;
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (r.agent != agent) continue;
    if (curve.empty()) curve.assign(r.result.episodes.size(), 0.0);
    for (std::size_t i = 0; i < curve.size(); ++i) curve[i] += r.result.episodes[i].sum_reward;
    ++n;
  }
  for (double& v : curve) v /= static_cast<double>(n);
  return curve;
}

// 1-based index of the first episode at or above the threshold, 0 if none.
std::size_t first_reaching(const std::vector<double>& curve, double threshold) {
  for (std::size_t i = 0; i < curve.size(); ++i)
    if (curve[i] >= threshold) return i + 1;
  return 0;
}

void criterion_fig1(const std::vector<TrainedRun>& runs) {
  double baseline_sum = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed : kSeeds) {
    TrainConfig cfg;
    cfg.seed = seed;
    for (const auto& ep : manual_baseline(cfg).episodes) {
      baseline_sum += ep.sum_reward;
      ++count;
    }
  }
  const double baseline = baseline_sum / static_cast<double>(count);
  const double threshold = kBaselineFraction * baseline;
  const std::size_t eg = first_reaching(mean_curve(runs, AgentKind::EG), threshold);
  const std::size_t vb = first_reaching(mean_curve(runs, AgentKind::VB), threshold);
  const std::size_t me = first_reaching(mean_curve(runs, AgentKind::ME), threshold);
  const bool fast = vb >= 1 && vb <= kFastEpisodes && me >= 1 && me <= kFastEpisodes;
  const bool eg_late = eg == 0 || eg >= kEgEarliestEpisode;
  record(2, "reward curves vs manual baseline", fast && eg_late,
         "baseline mean " + fmt(baseline, 6) + ", first episode >= 95%: EG " +
             std::to_string(eg) + " VB " + std::to_string(vb) + " ME " + std::to_string(me));
}

void criterion_table3(const std::vector<TrainedRun>& runs) {
  const SimConfig sim;
  const NetworkConfig net;
  double means[3] = {};
  std::size_t capped[3] = {};
  for (const auto& r : runs) {
    AgentSpec spec;
    spec.kind = r.agent;
    const std::string run_id =
        std::string(to_string(r.agent)) + "-s" + std::to_string(r.seed);
    const std::uint64_t base = derive_seed(0, "probe-adapt/" + run_id);
    const auto k = static_cast<std::size_t>(r.agent);
    for (std::size_t rep = 0; rep < kAdaptReps; ++rep) {
      Rng rng = make_stream(base, "rep-" + std::to_string(rep));
      const std::size_t steps =
          probe_adaptation(r.result.snapshot, spec, sim, net, kDefaultAdaptationCap, rng);
      means[k] += static_cast<double>(steps);
      if (steps == kDefaultAdaptationCap) ++capped[k];
    }
  }
  const double n = static_cast<double>(std::size(kSeeds) * kAdaptReps);
  for (double& m : means) m /= n;
  const double eg = means[0], vb = means[1], me = means[2];
  // "frequently capped": at least half the EG adaptations hit the cap.
  const bool eg_slow = eg >= kMeanStepsMinEG || 2 * capped[0] >= static_cast<std::size_t>(n);
  const bool pass = me < vb && vb < eg && me <= kMeanStepsMaxME && vb <= kMeanStepsMaxVB && eg_slow;
  record(1, "steps until exploring the probe event", pass,
         "mean EG " + fmt(eg) + " (" + std::to_string(capped[0]) + " capped) VB " + fmt(vb) +
             " ME " + fmt(me));
}

void criterion_table2(const std::vector<TrainedRun>& runs) {
  const SimConfig sim;
  double md_sum[3] = {};
  std::size_t md_n[3] = {};
  bool all_wait = true;
  std::string prefs;
  for (const auto& r : runs) {
    AgentSpec spec;
    spec.kind = r.agent;
    const ProbeReaction p = probe_reaction(r.result.snapshot, spec, sim);
    const auto k = static_cast<std::size_t>(r.agent);
    if (p.preferred_action != 0) all_wait = false;
    prefs += std::string(to_string(r.agent)) + std::to_string(r.seed) + ":" +
             std::to_string(p.preferred_action) + "/" + (p.md ? fmt(*p.md) : "undef") + " ";
    if (p.md) {
      md_sum[k] += *p.md;
      ++md_n[k];
    }
  }
  bool defined = true;
  double md[3] = {};
  for (std::size_t k = 0; k < 3; ++k) {
    if (md_n[k] != std::size(kSeeds)) defined = false;
    md[k] = md_n[k] ? md_sum[k] / static_cast<double>(md_n[k]) : std::nan("");
  }
  // Magnitude differences are compared as excess over parity, MD - 1.
  const double ex_eg = md[0] - 1.0, ex_vb = md[1] - 1.0, ex_me = md[2] - 1.0;
  const bool ordered = defined && ex_eg >= kMdExcessRatio * ex_vb && ex_vb >= ex_me && ex_me >= 0.0;
  record(3, "probe preference and magnitude differences", all_wait && ordered,
         "mean MD EG " + fmt(md[0]) + " VB " + fmt(md[1]) + " ME " + fmt(md[2]) +
             "; argmax/MD per run: " + prefs);
}

// Independent loss evaluation used by the finite-difference oracle.
double reference_loss(const AgentSpec& spec, const NetworkParams& p, const StateVector& s,
                      std::size_t action, const std::vector<double>& noise, double target) {
  const ForwardPass fp = forward(p, s);
  const std::vector<double>& o = fp.output();
  const std::size_t n = spec.kind == AgentKind::EG ? o.size() : o.size() / 2;
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i)
    q[i] = spec.kind == AgentKind::EG ? o[i] : o[i] + std::exp(o[n + i]) * noise[i];
  double loss = (q[action] - target) * (q[action] - target);
  if (spec.kind == AgentKind::VB) {
    for (std::size_t i = 0; i < n; ++i) {
      const double sigma = std::exp(o[n + i]);
      const double z = (q[i] - o[i]) / sigma;
      loss += spec.w_lp * (-0.5 * z * z - std::log(sigma) - 0.5 * std::log(2 * std::numbers::pi));
    }
  }
  if (spec.kind == AgentKind::ME) {
    double top = q[0];
    for (double v : q) top = std::max(top, v);
    double total = 0.0;
    for (double v : q) total += std::exp(v - top);
    double log_sum = 0.0;
    for (double v : q)
      log_sum += std::log(std::clamp(std::exp(v - top) / total, spec.softmax_clip_low, 1.0));
    const double sign = spec.me_sign == EntropySign::UniformPrior ? -1.0 : 1.0;
    loss += sign * spec.w_me * log_sum;
  }
  return loss;
}

void criterion_gradients() {
  Rng rng(20240601);
  std::size_t checked = 0, bad = 0;
  double worst = 0.0;
  for (int net_i = 0; net_i < 100; ++net_i) {
    for (AgentKind kind : kAgents) {
      AgentSpec spec;
      spec.kind = kind;
      const QHead head{spec.head_mode(), 3};
      const std::size_t hidden[] = {1 + rng.below(6), 1 + rng.below(6)};
      NetworkParams p = make_network(5, hidden, head.output_dim(), rng);
      for (auto& l : p.layers)
        for (double& b : l.biases) b = rng.uniform01() - 0.5;
      StateVector s(5);
      for (double& v : s) v = rng.uniform01();
      const ForwardPass fp = forward(p, s);
      const HeadOutput h = read_head(head, fp.output());
      ActionChoice c = select_action(spec, h, rng, 0.5);
      const double target = 4.0 * (rng.uniform01() - 0.5);
      const LossResult lr = assemble_loss(spec, h, c, target);
      const std::vector<double> analytic = backward(p, fp, lr.output_grad).flatten();
      std::vector<double> flat = p.flatten();
      for (std::size_t i = 0; i < flat.size(); ++i) {
        const double keep = flat[i];
        flat[i] = keep + kFdStep;
        p.assign_flat(flat);
        const double up = reference_loss(spec, p, s, c.action, c.noise, target);
        flat[i] = keep - kFdStep;
        p.assign_flat(flat);
        const double down = reference_loss(spec, p, s, c.action, c.noise, target);
        flat[i] = keep;
        p.assign_flat(flat);
        const double numeric = (up - down) / (2 * kFdStep);
        const double err = std::abs(numeric - analytic[i]);
        const double scale = std::max(std::abs(numeric), std::abs(analytic[i]));
        ++checked;
        if (err > kGradRelTol * scale + kGradAbsFloor) ++bad;
        if (scale > 1e-6) worst = std::max(worst, err / scale);
      }
    }
  }
  record(4, "analytic gradients vs central differences", bad == 0,
         std::to_string(checked) + " partials, " + std::to_string(bad) +
             " outside tolerance, worst relative error " + fmt(worst, 3));
}

void criterion_distributions() {
  SimConfig cfg;
  SimState s = initial_state(cfg, 777);
  double gain_sum = 0.0, occupied = 0.0, resources = 0.0;
  constexpr int kSubframes = 100'000;
  for (int i = 0; i < kSubframes; ++i) {
    begin_subframe(s, cfg);
    for (const auto& r : s.resources) {
      gain_sum += r.gain;
      occupied += r.remaining_slots > 0 ? 1.0 : 0.0;
      resources += 1.0;
    }
  }
  std::size_t arrivals = 0;
  constexpr int kFreeSlots = 1'000'000;
  for (int i = 0; i < kFreeSlots; ++i) {
    s.request = RequestState{};
    if (maybe_spawn_request(s, cfg)) ++arrivals;
  }
  const double gain_mean = gain_sum / resources;
  const double occ = occupied / resources;
  const double arr = static_cast<double>(arrivals) / kFreeSlots;
  const bool pass = gain_mean >= kGainMeanLo && gain_mean <= kGainMeanHi &&
                    std::abs(occ - cfg.p_occupy) <= kOccupancyTol &&
                    std::abs(arr - cfg.p_request) <= kArrivalTol;
  record(5, "environment distributions", pass,
         "gain mean " + fmt(gain_mean) + ", occupancy " + fmt(occ) + ", arrival rate " + fmt(arr));
}

void criterion_vb_reduction() {
  AgentSpec spec;
  spec.kind = AgentKind::VB;
  Rng rng(99);
  double worst = 0.0, worst_mu = 0.0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> mu(3), ls(3), z(3);
    for (std::size_t i = 0; i < 3; ++i) {
      mu[i] = 10.0 * (rng.uniform01() - 0.5);
      ls[i] = 6.0 * (rng.uniform01() - 0.5);
      z[i] = rng.standard_normal();
    }
    const std::vector<double> q = reparameterize(mu, ls, z);
    const std::size_t a = rng.below(3);
    // Zero TD error isolates the log-density term.
    const LossResult r = loss_vb(q[a], q[a], a, mu, ls, z, spec);
    for (std::size_t i = 0; i < 3; ++i) {
      worst = std::max(worst, std::abs(r.output_grad[3 + i] / spec.w_lp - (-1.0)));
      worst_mu = std::max(worst_mu, std::abs(r.output_grad[i]));
    }
  }
  record(6, "log-density gradient reduces to -w_lp per log-std", worst <= kReductionTol &&
                                                                     worst_mu <= kReductionTol,
         "max |dLP/dlogsigma + 1| = " + fmt(worst, 3) + ", max |dLP/dmu| = " + fmt(worst_mu, 3));
}

void criterion_me_minimizer() {
  AgentSpec spec;
  spec.kind = AgentKind::ME;
  Rng rng(123);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    // Starts inside the clip range: a clamped component has zero gradient.
    std::vector<double> q(3);
    for (double& v : q) v = 4.0 * (rng.uniform01() - 0.5);
    for (int it = 0; it < 20000; ++it) {
      const std::vector<double> g = entropy_penalty_grad(q, spec);
      for (std::size_t i = 0; i < 3; ++i) q[i] -= 0.05 * g[i];
    }
    for (double v : softmax_clipped(q, spec.softmax_clip_low))
      worst = std::max(worst, std::abs(v - 1.0 / 3.0));
  }
  record(7, "entropy penalty descent reaches the uniform softmax", worst <= kUniformTol,
         "max |softmax - 1/3| = " + fmt(worst, 3));
}

void criterion_determinism() {
  const fs::path root = fs::current_path() / "acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  std::string files[2];
  bool ok = true;
  for (int i = 0; i < 2; ++i) {
    const fs::path out = root / ("run" + std::to_string(i));
    const std::string cmd = std::string("\"") + URLLC_LAB_EXE +
                            "\" train --agent me --seed 7 --reps 1 --out \"" + out.string() +
                            "\" > \"" + (root / "log.txt").string() + "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) ok = false;
    try {
      files[i] = read_text_file(out / "episodes.csv");
    } catch (const std::exception&) {
      ok = false;
    }
  }
  const bool same = ok && !files[0].empty() && files[0] == files[1];
  record(8, "repeated train invocations are byte-identical", same,
         std::to_string(files[0].size()) + " bytes of episodes.csv");
  fs::remove_all(root);
}

void criterion_runtime(const std::vector<TrainedRun>& runs) {
  double slowest = 0.0;
  for (const auto& r : runs) slowest = std::max(slowest, r.seconds);
  record(9, "one full training run within budget", slowest <= kRunBudgetSeconds,
         "slowest of " + std::to_string(runs.size()) + " runs: " + fmt(slowest, 3) + " s");
}

}  // namespace

int main() {
  std::cout << "acceptance: training 3 agents x 3 seeds at reference scale" << std::endl;
  const std::vector<TrainedRun> runs = train_all();
  criterion_table3(runs);
  criterion_fig1(runs);
  criterion_table2(runs);
  criterion_gradients();
  criterion_distributions();
  criterion_vb_reduction();
  criterion_me_minimizer();
  criterion_determinism();
  criterion_runtime(runs);

  std::sort(verdicts.begin(), verdicts.end(),
            [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
  std::size_t failed = 0;
  std::cout << "\nsummary" << std::endl;
  for (const auto& v : verdicts) {
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << v.id << ": " << v.name
              << std::endl;
    if (!v.pass) ++failed;
  }
  std::cout << verdicts.size() - failed << "/" << verdicts.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
