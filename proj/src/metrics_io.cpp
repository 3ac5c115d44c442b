#include "urllc/metrics_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace urllc {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return v;
}

namespace {

std::uint64_t parse_unsigned(std::string_view text) {
  std::uint64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("not an unsigned integer: '" + std::string(text) + "'");
  }
  return v;
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

// Run ids and agent names are written as-is; commas would break the format.
void check_field(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    throw std::invalid_argument("CSV field contains a separator: '" + s + "'");
  }
}

template <typename Row, typename ParseRow>
std::vector<Row> parse_csv(std::string_view text, std::string_view header, std::size_t n_fields,
                           ParseRow parse_row) {
  std::vector<Row> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    if (!seen_header) {
      if (line != header) throw std::invalid_argument("unexpected CSV header: " + std::string(line));
      seen_header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != n_fields) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(n_fields) + " fields");
    }
    try {
      rows.push_back(parse_row(fields));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!seen_header) throw std::invalid_argument("empty CSV");
  return rows;
}

std::optional<double> parse_opt(std::string_view f) {
  if (f.empty()) return std::nullopt;
  return parse_double(f);
}

}  // namespace

std::string episode_csv(std::span<const EpisodeRow> rows) {
  std::ostringstream out;
  out << kEpisodeHeader << '\n';
  for (const auto& r : rows) {
    check_field(r.run_id);
    check_field(r.agent);
    out << r.run_id << ',' << r.agent << ',' << r.seed << ',' << r.episode << ','
        << format_double(r.sum_reward) << ',' << format_double(r.tx_interrupted_ratio) << ','
        << format_double(r.urllc_missed_ratio) << ',' << format_double(r.critical_missed_ratio)
        << ',' << format_double(r.epsilon_end) << '\n';
  }
  return out.str();
}

std::string probe_csv(std::span<const ProbeRow> rows) {
  std::ostringstream out;
  out << kProbeHeader << '\n';
  for (const auto& r : rows) {
    check_field(r.run_id);
    check_field(r.agent);
    out << r.run_id << ',' << r.agent << ',' << r.repetition << ',' << opt(r.md) << ','
        << opt(r.logstd_wait) << ',' << opt(r.mean_logstd_punct) << ',';
    if (r.steps_until_explore) out << *r.steps_until_explore;
    out << '\n';
  }
  return out.str();
}

std::vector<EpisodeRow> parse_episode_csv(std::string_view text) {
  return parse_csv<EpisodeRow>(text, kEpisodeHeader, 9, [](const auto& f) {
    EpisodeRow r;
    r.run_id = std::string(f[0]);
    r.agent = std::string(f[1]);
    r.seed = parse_unsigned(f[2]);
    r.episode = parse_unsigned(f[3]);
    r.sum_reward = parse_double(f[4]);
    r.tx_interrupted_ratio = parse_double(f[5]);
    r.urllc_missed_ratio = parse_double(f[6]);
    r.critical_missed_ratio = parse_double(f[7]);
    r.epsilon_end = parse_double(f[8]);
    return r;
  });
}

std::vector<ProbeRow> parse_probe_csv(std::string_view text) {
  return parse_csv<ProbeRow>(text, kProbeHeader, 7, [](const auto& f) {
    ProbeRow r;
    r.run_id = std::string(f[0]);
    r.agent = std::string(f[1]);
    r.repetition = parse_unsigned(f[2]);
    r.md = parse_opt(f[3]);
    r.logstd_wait = parse_opt(f[4]);
    r.mean_logstd_punct = parse_opt(f[5]);
    if (!f[6].empty()) r.steps_until_explore = parse_unsigned(f[6]);
    return r;
  });
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out.flush()) throw std::runtime_error("cannot write " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_csv(std::span<const EpisodeRow> rows, const std::filesystem::path& path) {
  write_text_file(path, episode_csv(rows));
}

void write_csv(std::span<const ProbeRow> rows, const std::filesystem::path& path) {
  write_text_file(path, probe_csv(rows));
}

Stats aggregate(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("aggregate: empty group");
  // Sorting first makes the floating-point sums independent of input order.
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  Stats s;
  s.n = v.size();
  s.min = v.front();
  s.max = v.back();
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

double episode_metric(const EpisodeRow& row, std::string_view metric) {
  if (metric == "sum_reward") return row.sum_reward;
  if (metric == "tx_interrupted_ratio") return row.tx_interrupted_ratio;
  if (metric == "urllc_missed_ratio") return row.urllc_missed_ratio;
  if (metric == "critical_missed_ratio") return row.critical_missed_ratio;
  if (metric == "epsilon_end") return row.epsilon_end;
  throw std::invalid_argument("unknown episode metric: " + std::string(metric));
}

std::vector<SummaryRow> summarize_episodes(std::span<const EpisodeRow> rows) {
  std::map<std::tuple<std::string, std::string, std::size_t>, std::vector<double>> groups;
  for (const auto& r : rows) {
    for (std::string_view metric : kEpisodeMetrics) {
      groups[{r.agent, std::string(metric), r.episode}].push_back(episode_metric(r, metric));
    }
  }
  std::vector<SummaryRow> out;
  out.reserve(groups.size());
  for (const auto& [key, values] : groups) {
    out.push_back(SummaryRow{std::get<0>(key), std::get<1>(key), std::get<2>(key),
                             aggregate(values)});
  }
  return out;
}

namespace {

void write_stats(std::ostream& out, const Stats& s) {
  out << s.n << ',' << format_double(s.mean) << ',' << format_double(s.std) << ','
      << format_double(s.min) << ',' << format_double(s.max) << '\n';
}

}  // namespace

std::string summary_csv(std::span<const SummaryRow> rows) {
  std::ostringstream out;
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.agent << ',' << r.metric << ',' << r.episode << ',';
    write_stats(out, r.stats);
  }
  return out.str();
}

std::vector<ProbeSummaryRow> summarize_probes(std::span<const ProbeRow> rows) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : rows) {
    if (r.md) groups[{r.agent, "md"}].push_back(*r.md);
    if (r.logstd_wait) groups[{r.agent, "logstd_wait"}].push_back(*r.logstd_wait);
    if (r.mean_logstd_punct) {
      groups[{r.agent, "mean_logstd_punct"}].push_back(*r.mean_logstd_punct);
    }
    if (r.steps_until_explore) {
      groups[{r.agent, "steps_until_explore"}].push_back(
          static_cast<double>(*r.steps_until_explore));
    }
  }
  std::vector<ProbeSummaryRow> out;
  for (const auto& [key, values] : groups) {
    out.push_back(ProbeSummaryRow{key.first, key.second, aggregate(values)});
  }
  return out;
}

std::string probe_summary_csv(std::span<const ProbeSummaryRow> rows) {
  std::ostringstream out;
  out << kProbeSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.agent << ',' << r.metric << ',';
    write_stats(out, r.stats);
  }
  return out.str();
}

}  // namespace urllc
