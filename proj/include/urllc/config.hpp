#pragma once

// Sectioned key-value configuration:
//
//   # comment
//   [sim]
//   p_occupy = 0.7
//
// Every key defaults to the reference training configuration; unknown
// sections and keys are rejected with the offending line number.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "urllc/trainer.hpp"

namespace urllc {

struct ProbeSettings {
  std::size_t reps = 10;
  std::size_t cap = kDefaultAdaptationCap;
  bool terminal = false;
};

struct CliConfig {
  TrainConfig train;
  std::size_t reps = 3;      // training repetitions, seeds seed..seed+reps-1
  std::size_t parallel = 1;  // worker threads for repetitions
  ProbeSettings probe;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// `source` names the input in error messages.
CliConfig parse_config(std::string_view text, std::string_view source = "<config>");
CliConfig load_config(const std::string& path);

// Emits every key, so parse_config(to_config_text(c)) reproduces c exactly.
std::string to_config_text(const CliConfig& cfg);

}  // namespace urllc
