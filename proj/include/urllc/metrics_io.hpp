#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace urllc {

struct EpisodeRow {
  std::string run_id;
  std::string agent;
  std::uint64_t seed = 0;
  std::size_t episode = 0;
  double sum_reward = 0.0;
  double tx_interrupted_ratio = 0.0;
  double urllc_missed_ratio = 0.0;
  double critical_missed_ratio = 0.0;
  double epsilon_end = 0.0;
};

struct ProbeRow {
  std::string run_id;
  std::string agent;
  std::size_t repetition = 0;
  std::optional<double> md;  // empty: undefined or not measured
  std::optional<double> logstd_wait;
  std::optional<double> mean_logstd_punct;
  std::optional<std::size_t> steps_until_explore;
};

inline constexpr std::string_view kEpisodeHeader =
    "run_id,agent,seed,episode,sum_reward,tx_interrupted_ratio,urllc_missed_ratio,"
    "critical_missed_ratio,epsilon_end";
inline constexpr std::string_view kProbeHeader =
    "run_id,agent,repetition,md,logstd_wait,mean_logstd_punct,steps_until_explore";

// Shortest round-trip text with at most 17 significant digits, '.' decimal
// point regardless of locale.
std::string format_double(double v);
double parse_double(std::string_view text);

std::string episode_csv(std::span<const EpisodeRow> rows);
std::string probe_csv(std::span<const ProbeRow> rows);
std::vector<EpisodeRow> parse_episode_csv(std::string_view text);
std::vector<ProbeRow> parse_probe_csv(std::string_view text);

// I/O failures raise std::runtime_error naming the path.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);
void write_csv(std::span<const EpisodeRow> rows, const std::filesystem::path& path);
void write_csv(std::span<const ProbeRow> rows, const std::filesystem::path& path);

struct Stats {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1) deviation, 0 for n = 1
  double min = 0.0;
  double max = 0.0;
};

// Throws std::invalid_argument on an empty input.
Stats aggregate(std::span<const double> values);

// Per agent and episode, for each episode metric.
struct SummaryRow {
  std::string agent;
  std::string metric;
  std::size_t episode = 0;
  Stats stats;
};

inline constexpr std::string_view kSummaryHeader = "agent,metric,episode,n,mean,std,min,max";
inline constexpr std::string_view kProbeSummaryHeader = "agent,metric,n,mean,std,min,max";

inline constexpr std::string_view kEpisodeMetrics[] = {
    "sum_reward", "tx_interrupted_ratio", "urllc_missed_ratio", "critical_missed_ratio"};

double episode_metric(const EpisodeRow& row, std::string_view metric);

// Sorted by (agent, metric, episode).
std::vector<SummaryRow> summarize_episodes(std::span<const EpisodeRow> rows);
std::string summary_csv(std::span<const SummaryRow> rows);

struct ProbeSummaryRow {
  std::string agent;
  std::string metric;
  Stats stats;
};

// Rows lacking a metric are skipped for that metric.
std::vector<ProbeSummaryRow> summarize_probes(std::span<const ProbeRow> rows);
std::string probe_summary_csv(std::span<const ProbeSummaryRow> rows);

}  // namespace urllc
