#include "urllc/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "urllc/metrics_io.hpp"

namespace urllc {

ConfigError::ConfigError(const std::string& source, std::size_t line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::size_t to_count(std::string_view v) {
  std::size_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw std::invalid_argument("expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t to_u64(std::string_view v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw std::invalid_argument("expected an unsigned 64-bit integer, got '" + std::string(v) + "'");
  }
  return out;
}

double to_real(std::string_view v) {
  // "e" is accepted as Euler's number for the entropy weight.
  if (v == "e") return std::numbers::e;
  return parse_double(v);
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(v) + "'");
}

std::vector<std::size_t> to_widths(std::string_view v) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const std::size_t comma = std::min(v.find(',', start), v.size());
    const std::size_t w = to_count(trim(v.substr(start, comma - start)));
    if (w == 0) throw std::invalid_argument("hidden layer widths must be positive");
    out.push_back(w);
    start = comma + 1;
  }
  return out;
}

using Setter = std::function<void(CliConfig&, std::string_view)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"sim",
       {
           {"n_resources", [](CliConfig& c, auto v) { c.train.sim.n_resources = to_count(v); }},
           {"slots_per_subframe",
            [](CliConfig& c, auto v) { c.train.sim.slots_per_subframe = to_count(v); }},
           {"p_occupy", [](CliConfig& c, auto v) { c.train.sim.p_occupy = to_real(v); }},
           {"occupy_len_min",
            [](CliConfig& c, auto v) { c.train.sim.occupy_len_min = to_count(v); }},
           {"occupy_len_max",
            [](CliConfig& c, auto v) { c.train.sim.occupy_len_max = to_count(v); }},
           {"p_request", [](CliConfig& c, auto v) { c.train.sim.p_request = to_real(v); }},
           {"p_critical", [](CliConfig& c, auto v) { c.train.sim.p_critical = to_real(v); }},
           {"rayleigh_sigma",
            [](CliConfig& c, auto v) { c.train.sim.rayleigh_sigma = to_real(v); }},
           {"w_capacity", [](CliConfig& c, auto v) { c.train.sim.w_capacity = to_real(v); }},
           {"w_discard", [](CliConfig& c, auto v) { c.train.sim.w_discard = to_real(v); }},
           {"w_discard_critical",
            [](CliConfig& c, auto v) { c.train.sim.w_discard_critical = to_real(v); }},
       }},
      {"agent",
       {
           {"kind",
            [](CliConfig& c, auto v) {
              auto k = parse_agent_kind(v);
              if (!k) throw std::invalid_argument("agent kind must be eg, vb or me");
              c.train.agent.kind = *k;
            }},
           {"epsilon_initial",
            [](CliConfig& c, auto v) { c.train.agent.epsilon_initial = to_real(v); }},
           {"epsilon_decay_fraction",
            [](CliConfig& c, auto v) { c.train.agent.epsilon_decay_fraction = to_real(v); }},
           {"w_lp", [](CliConfig& c, auto v) { c.train.agent.w_lp = to_real(v); }},
           {"w_me", [](CliConfig& c, auto v) { c.train.agent.w_me = to_real(v); }},
           {"softmax_clip_low",
            [](CliConfig& c, auto v) { c.train.agent.softmax_clip_low = to_real(v); }},
           {"gamma", [](CliConfig& c, auto v) { c.train.agent.gamma = to_real(v); }},
           {"me_sign",
            [](CliConfig& c, auto v) {
              auto s = parse_entropy_sign(v);
              if (!s) throw std::invalid_argument("me_sign must be uniform_prior or as_written");
              c.train.agent.me_sign = *s;
            }},
       }},
      {"network",
       {
           {"hidden", [](CliConfig& c, auto v) { c.train.network.hidden = to_widths(v); }},
           {"learning_rate",
            [](CliConfig& c, auto v) { c.train.network.learning_rate = to_real(v); }},
           {"target_update", [](CliConfig& c, auto v) { c.train.network.tau = to_real(v); }},
       }},
      {"train",
       {
           {"episodes", [](CliConfig& c, auto v) { c.train.episodes = to_count(v); }},
           {"steps_per_episode",
            [](CliConfig& c, auto v) { c.train.steps_per_episode = to_count(v); }},
           {"seed", [](CliConfig& c, auto v) { c.train.seed = to_u64(v); }},
           {"reps", [](CliConfig& c, auto v) { c.reps = to_count(v); }},
           {"parallel", [](CliConfig& c, auto v) { c.parallel = to_count(v); }},
           {"checkpoint_every",
            [](CliConfig& c, auto v) { c.train.checkpoint_every = to_count(v); }},
       }},
      {"probe",
       {
           {"reps", [](CliConfig& c, auto v) { c.probe.reps = to_count(v); }},
           {"cap", [](CliConfig& c, auto v) { c.probe.cap = to_count(v); }},
           {"terminal", [](CliConfig& c, auto v) { c.probe.terminal = to_bool(v); }},
       }},
  };
  return s;
}

}  // namespace

CliConfig parse_config(std::string_view text, std::string_view source) {
  const std::string src(source);
  CliConfig cfg;
  std::string section;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    // '#' starts a comment anywhere; no value contains it.
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(src, line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!schema().contains(section)) {
        throw ConfigError(src, line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(src, line_no, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(src, line_no, "key '" + key + "' outside a section");
    const auto& keys = schema().at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) {
      throw ConfigError(src, line_no, "unknown key '" + key + "' in [" + section + "]");
    }
    if (!seen.insert({section, key}).second) {
      throw ConfigError(src, line_no, "duplicate key '" + key + "' in [" + section + "]");
    }
    try {
      it->second(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(src, line_no, key + ": " + e.what());
    }
  }
  try {
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(src, line_no, e.what());
  }
  if (cfg.train.episodes < 1) throw ConfigError(src, line_no, "episodes must be >= 1");
  if (cfg.reps < 1) throw ConfigError(src, line_no, "reps must be >= 1");
  if (cfg.probe.cap < 1) throw ConfigError(src, line_no, "probe cap must be >= 1");
  return cfg;
}

CliConfig load_config(const std::string& path) {
  return parse_config(read_text_file(path), path);
}

std::string to_config_text(const CliConfig& c) {
  const auto& sim = c.train.sim;
  const auto& ag = c.train.agent;
  const auto& net = c.train.network;
  std::ostringstream out;
  out << "[sim]\n"
      << "n_resources = " << sim.n_resources << '\n'
      << "slots_per_subframe = " << sim.slots_per_subframe << '\n'
      << "p_occupy = " << format_double(sim.p_occupy) << '\n'
      << "occupy_len_min = " << sim.occupy_len_min << '\n'
      << "occupy_len_max = " << sim.occupy_len_max << '\n'
      << "p_request = " << format_double(sim.p_request) << '\n'
      << "p_critical = " << format_double(sim.p_critical) << '\n'
      << "rayleigh_sigma = " << format_double(sim.rayleigh_sigma) << '\n'
      << "w_capacity = " << format_double(sim.w_capacity) << '\n'
      << "w_discard = " << format_double(sim.w_discard) << '\n'
      << "w_discard_critical = " << format_double(sim.w_discard_critical) << '\n'
      << "\n[agent]\n"
      << "kind = " << to_string(ag.kind) << '\n'
      << "epsilon_initial = " << format_double(ag.epsilon_initial) << '\n'
      << "epsilon_decay_fraction = " << format_double(ag.epsilon_decay_fraction) << '\n'
      << "w_lp = " << format_double(ag.w_lp) << '\n'
      << "w_me = " << format_double(ag.w_me) << '\n'
      << "softmax_clip_low = " << format_double(ag.softmax_clip_low) << '\n'
      << "gamma = " << format_double(ag.gamma) << '\n'
      << "me_sign = " << to_string(ag.me_sign) << '\n'
      << "\n[network]\n"
      << "hidden = ";
  for (std::size_t i = 0; i < net.hidden.size(); ++i) out << (i ? "," : "") << net.hidden[i];
  out << '\n'
      << "learning_rate = " << format_double(net.learning_rate) << '\n'
      << "target_update = " << format_double(net.tau) << '\n'
      << "\n[train]\n"
      << "episodes = " << c.train.episodes << '\n'
      << "steps_per_episode = " << c.train.steps_per_episode << '\n'
      << "seed = " << c.train.seed << '\n'
      << "reps = " << c.reps << '\n'
      << "parallel = " << c.parallel << '\n'
      << "checkpoint_every = " << c.train.checkpoint_every << '\n'
      << "\n[probe]\n"
      << "reps = " << c.probe.reps << '\n'
      << "cap = " << c.probe.cap << '\n'
      << "terminal = " << (c.probe.terminal ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace urllc
