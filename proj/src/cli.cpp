#include "urllc/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "urllc/checkpoint.hpp"
#include "urllc/config.hpp"
#include "urllc/metrics_io.hpp"
#include "urllc/svg_chart.hpp"
#include "urllc/trainer.hpp"

namespace fs = std::filesystem;

namespace urllc {

void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& task) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string run_id_for(AgentKind kind, std::uint64_t seed) {
  return std::string(to_string(kind)) + "-s" + std::to_string(seed);
}

EpisodeRow to_row(const std::string& run_id, std::string_view agent, std::uint64_t seed,
                  const EpisodeMetrics& m) {
  return EpisodeRow{run_id,
                    std::string(agent),
                    seed,
                    m.episode,
                    m.sum_reward,
                    m.tx_interrupted_ratio,
                    m.urllc_missed_ratio,
                    m.critical_missed_ratio,
                    m.epsilon_end};
}

CliConfig resolve_config(const std::string& path) {
  if (path.empty()) return CliConfig{};
  try {
    return load_config(path);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string agent;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> parallel;
  std::string out;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  CliConfig cfg = resolve_config(a.config);
  if (!a.agent.empty()) cfg.train.agent.kind = *parse_agent_kind(a.agent);
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.reps) cfg.reps = *a.reps;
  if (a.parallel) cfg.parallel = *a.parallel;
  if (cfg.reps < 1) throw UsageError("--reps must be >= 1");

  const fs::path dir(a.out);
  const fs::path ckpt_dir = dir / "checkpoints";
  fs::create_directories(ckpt_dir);
  write_text_file(dir / "manifest.ini", to_config_text(cfg));

  std::vector<std::vector<EpisodeRow>> per_rep(cfg.reps);
  parallel_for(cfg.reps, cfg.parallel, [&](std::size_t rep) {
    TrainConfig tc = cfg.train;
    tc.seed = cfg.train.seed + rep;
    const std::string run_id = run_id_for(tc.agent.kind, tc.seed);
    auto sink = [&](std::size_t episode, std::size_t steps, const NetworkParams& params) {
      save_checkpoint(ckpt_dir / (run_id + "-ep" + std::to_string(episode) + ".ckpt"),
                      Checkpoint{tc.agent.kind, tc.seed, steps, params});
    };
    const RunResult result = train(tc, sink);
    save_checkpoint(ckpt_dir / (run_id + "-final.ckpt"),
                    Checkpoint{tc.agent.kind, tc.seed, result.total_steps, result.snapshot});
    for (const auto& m : result.episodes) {
      per_rep[rep].push_back(to_row(run_id, to_string(tc.agent.kind), tc.seed, m));
    }
  });

  std::vector<EpisodeRow> rows;
  for (auto& r : per_rep) rows.insert(rows.end(), r.begin(), r.end());
  write_csv(rows, dir / "episodes.csv");
  out << "wrote " << rows.size() << " episode rows to " << (dir / "episodes.csv").string() << '\n';
  return kExitOk;
}

// ---- baseline ------------------------------------------------------------

struct BaselineArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> episodes;
  std::string out;
};

int cmd_baseline(const BaselineArgs& a, std::ostream& out) {
  CliConfig cfg = resolve_config(a.config);
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.episodes) cfg.train.episodes = *a.episodes;
  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_text_file(dir / "manifest.ini", to_config_text(cfg));

  const RunResult result = manual_baseline(cfg.train);
  const std::string run_id = "manual-s" + std::to_string(cfg.train.seed);
  std::vector<EpisodeRow> rows;
  for (const auto& m : result.episodes) rows.push_back(to_row(run_id, "manual", cfg.train.seed, m));
  write_csv(rows, dir / "episodes.csv");
  out << "wrote " << rows.size() << " baseline rows to " << (dir / "episodes.csv").string() << '\n';
  return kExitOk;
}

// ---- probe ---------------------------------------------------------------

struct ProbeArgs {
  std::string checkpoints;
  std::string mode;
  std::string config;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> cap;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> parallel;
  std::string out;
};

// The training manifest sits next to (or one level above) the checkpoints.
std::string find_manifest(const fs::path& ckpt_dir) {
  for (const fs::path& p : {ckpt_dir / "manifest.ini", ckpt_dir.parent_path() / "manifest.ini"}) {
    if (fs::is_regular_file(p)) return p.string();
  }
  return {};
}

int cmd_probe(const ProbeArgs& a, std::ostream& out) {
  const fs::path dir(a.checkpoints);
  if (!fs::is_directory(dir)) throw std::runtime_error("checkpoint directory not found: " + a.checkpoints);
  CliConfig cfg = resolve_config(a.config.empty() ? find_manifest(dir) : a.config);
  if (a.reps) cfg.probe.reps = *a.reps;
  if (a.cap) cfg.probe.cap = *a.cap;
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.parallel) cfg.parallel = *a.parallel;
  if (cfg.probe.cap < 1) throw UsageError("--cap must be >= 1");

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.ends_with("-final.ckpt")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no *-final.ckpt checkpoints in " + a.checkpoints);

  const bool adapt = a.mode == "adapt";
  std::vector<std::vector<ProbeRow>> per_file(files.size());
  parallel_for(files.size(), cfg.parallel, [&](std::size_t i) {
    const Checkpoint ckpt = load_checkpoint(files[i]);
    AgentSpec spec = cfg.train.agent;
    spec.kind = ckpt.agent;
    std::string run_id = files[i].filename().string();
    run_id.resize(run_id.size() - std::string_view("-final.ckpt").size());
    const std::string agent(to_string(ckpt.agent));
    if (!adapt) {
      const ProbeReaction r = probe_reaction(ckpt.params, spec, cfg.train.sim);
      per_file[i].push_back(ProbeRow{run_id, agent, 0, r.md, r.logstd_wait, r.mean_logstd_punct,
                                     std::nullopt});
      return;
    }
    const std::uint64_t base = derive_seed(cfg.train.seed, "probe-adapt/" + run_id);
    for (std::size_t rep = 0; rep < cfg.probe.reps; ++rep) {
      Rng rng = make_stream(base, "rep-" + std::to_string(rep));
      const std::size_t steps = probe_adaptation(ckpt.params, spec, cfg.train.sim,
                                                 cfg.train.network, cfg.probe.cap, rng,
                                                 cfg.probe.terminal);
      per_file[i].push_back(
          ProbeRow{run_id, agent, rep, std::nullopt, std::nullopt, std::nullopt, steps});
    }
  });

  const fs::path out_dir = a.out.empty() ? dir : fs::path(a.out);
  fs::create_directories(out_dir);
  const fs::path csv = out_dir / "probes.csv";
  // Reaction and adaptation rows share one file; rerunning a mode replaces its rows.
  std::vector<ProbeRow> rows;
  if (fs::is_regular_file(csv)) {
    for (auto& r : parse_probe_csv(read_text_file(csv))) {
      if (r.steps_until_explore.has_value() != adapt) rows.push_back(std::move(r));
    }
  }
  for (auto& v : per_file) rows.insert(rows.end(), v.begin(), v.end());
  write_csv(rows, csv);
  out << "wrote " << rows.size() << " probe rows to " << csv.string() << '\n';
  return kExitOk;
}

// ---- report --------------------------------------------------------------

struct ReportArgs {
  std::string in;
  std::string out;
};

const std::vector<std::string> kAgentOrder = {"eg", "vb", "me"};

std::string pm(const std::optional<Stats>& s, int precision) {
  if (!s) return "-";
  std::ostringstream o;
  o << std::fixed << std::setprecision(precision) << s->mean << " +- " << s->std;
  return o.str();
}

LineChart chart_for(std::span<const SummaryRow> summary, const std::string& metric,
                    const std::string& title, const std::string& y_label,
                    std::optional<double> baseline) {
  LineChart chart{title, "episode", y_label, {}, baseline};
  std::map<std::string, ChartSeries> series;
  for (const auto& row : summary) {
    if (row.metric != metric || row.agent == "manual") continue;
    ChartSeries& s = series[row.agent];
    s.name = row.agent;
    s.x.push_back(static_cast<double>(row.episode));
    s.mean.push_back(row.stats.mean);
    s.lo.push_back(row.stats.min);
    s.hi.push_back(row.stats.max);
  }
  for (auto& [name, s] : series) chart.series.push_back(std::move(s));
  return chart;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const fs::path in(a.in);
  if (!fs::is_directory(in)) throw std::runtime_error("input directory not found: " + a.in);
  std::vector<fs::path> episode_files;
  std::vector<fs::path> probe_files;
  for (const auto& entry : fs::recursive_directory_iterator(in)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name == "episodes.csv") episode_files.push_back(entry.path());
    if (name == "probes.csv") probe_files.push_back(entry.path());
  }
  std::sort(episode_files.begin(), episode_files.end());
  std::sort(probe_files.begin(), probe_files.end());

  std::vector<EpisodeRow> episodes;
  for (const auto& f : episode_files) {
    auto rows = parse_episode_csv(read_text_file(f));
    episodes.insert(episodes.end(), rows.begin(), rows.end());
  }
  std::vector<ProbeRow> probes;
  for (const auto& f : probe_files) {
    auto rows = parse_probe_csv(read_text_file(f));
    probes.insert(probes.end(), rows.begin(), rows.end());
  }
  if (episodes.empty() && probes.empty()) throw std::runtime_error("no runs found in " + a.in);

  const fs::path dir(a.out);
  fs::create_directories(dir);

  if (!episodes.empty()) {
    const auto summary = summarize_episodes(episodes);
    write_text_file(dir / "summary.csv", summary_csv(summary));

    auto baseline_of = [&](std::string_view metric) -> std::optional<double> {
      std::vector<double> v;
      for (const auto& r : episodes) {
        if (r.agent == "manual") v.push_back(episode_metric(r, metric));
      }
      if (v.empty()) return std::nullopt;
      return aggregate(v).mean;
    };
    write_linechart_svg(chart_for(summary, "sum_reward", "Sum reward per episode", "sum reward",
                                  baseline_of("sum_reward")),
                        dir / "rewards.svg");
    write_linechart_svg(chart_for(summary, "tx_interrupted_ratio", "Transmissions interrupted",
                                  "ratio", baseline_of("tx_interrupted_ratio")),
                        dir / "tx_interrupted.svg");
    write_linechart_svg(chart_for(summary, "urllc_missed_ratio", "URLLC requests missed",
                                  "ratio", baseline_of("urllc_missed_ratio")),
                        dir / "urllc_missed.svg");

    out << "Episode sum reward (mean +- std over runs)\n";
    out << std::left << std::setw(8) << "agent" << std::setw(8) << "runs" << std::setw(24)
        << "episodes 1-5" << "last 5 episodes\n";
    std::map<std::string, std::vector<const EpisodeRow*>> by_agent;
    for (const auto& r : episodes) by_agent[r.agent].push_back(&r);
    for (const auto& [agent, rows] : by_agent) {
      std::size_t last = 0;
      std::map<std::string, int> runs;
      for (const auto* r : rows) {
        last = std::max(last, r->episode);
        runs[r->run_id] = 1;
      }
      std::vector<double> early;
      std::vector<double> late;
      for (const auto* r : rows) {
        if (r->episode <= 5) early.push_back(r->sum_reward);
        if (r->episode + 5 > last) late.push_back(r->sum_reward);
      }
      out << std::left << std::setw(8) << agent << std::setw(8) << runs.size() << std::setw(24)
          << pm(early.empty() ? std::nullopt : std::optional(aggregate(early)), 1)
          << pm(late.empty() ? std::nullopt : std::optional(aggregate(late)), 1) << '\n';
    }
    out << '\n';
  }

  if (!probes.empty()) {
    const auto summary = summarize_probes(probes);
    write_text_file(dir / "probe_summary.csv", probe_summary_csv(summary));
    auto find = [&](const std::string& agent, const std::string& metric) -> std::optional<Stats> {
      for (const auto& r : summary) {
        if (r.agent == agent && r.metric == metric) return r.stats;
      }
      return std::nullopt;
    };
    out << "Reaction to new event (mean +- std over snapshots)\n";
    out << std::left << std::setw(24) << "" << std::setw(24) << "EG" << std::setw(24) << "VB"
        << "ME\n";
    const std::pair<const char*, const char*> lines[] = {{"MD", "md"},
                                                         {"log std wait", "logstd_wait"},
                                                         {"log std puncture", "mean_logstd_punct"},
                                                         {"steps until exploring",
                                                          "steps_until_explore"}};
    for (const auto& [label, metric] : lines) {
      out << std::left << std::setw(24) << label;
      for (const auto& agent : kAgentOrder) {
        const int precision = std::string(metric) == "steps_until_explore" ? 0 : 4;
        out << std::setw(24) << pm(find(agent, metric), precision);
      }
      out << '\n';
    }
  }
  out << "report written to " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"URLLC puncturing exploration lab"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train agents and write episodes.csv");
  train_cmd->add_option("--config", train_args.config, "configuration file")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--agent", train_args.agent, "agent kind")
      ->check(CLI::IsMember({"eg", "vb", "me"}));
  train_cmd->add_option("--seed", train_args.seed, "base seed; repetitions use seed+k");
  train_cmd->add_option("--reps", train_args.reps, "training repetitions");
  train_cmd->add_option("--parallel", train_args.parallel, "worker threads");
  train_cmd->add_option("--out", train_args.out, "output directory")->required();

  ProbeArgs probe_args;
  auto* probe_cmd = app.add_subcommand("probe", "probe trained snapshots");
  probe_cmd->add_option("--checkpoints", probe_args.checkpoints, "checkpoint directory")
      ->required();
  probe_cmd->add_option("--mode", probe_args.mode, "reaction or adapt")
      ->required()
      ->check(CLI::IsMember({"reaction", "adapt"}));
  probe_cmd->add_option("--config", probe_args.config, "configuration file")
      ->check(CLI::ExistingFile);
  probe_cmd->add_option("--reps", probe_args.reps, "adaptation repetitions per snapshot");
  probe_cmd->add_option("--cap", probe_args.cap, "adaptation step cap (default 10000)");
  probe_cmd->add_option("--seed", probe_args.seed, "probe seed");
  probe_cmd->add_option("--parallel", probe_args.parallel, "worker threads");
  probe_cmd->add_option("--out", probe_args.out, "output directory (default: checkpoints)");

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "aggregate runs into tables and charts");
  report_cmd->add_option("--in", report_args.in, "directory searched for CSV files")->required();
  report_cmd->add_option("--out", report_args.out, "output directory")->required();

  BaselineArgs baseline_args;
  auto* baseline_cmd = app.add_subcommand("baseline", "evaluate the manual scheduler");
  baseline_cmd->add_option("--config", baseline_args.config, "configuration file")
      ->check(CLI::ExistingFile);
  baseline_cmd->add_option("--seed", baseline_args.seed, "seed");
  baseline_cmd->add_option("--episodes", baseline_args.episodes, "episodes to evaluate");
  baseline_cmd->add_option("--out", baseline_args.out, "output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_args, out);
    if (*probe_cmd) return cmd_probe(probe_args, out);
    if (*report_cmd) return cmd_report(report_args, out);
    if (*baseline_cmd) return cmd_baseline(baseline_args, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace urllc
