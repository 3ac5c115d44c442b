#pragma once

#include <cstdint>
#include <filesystem>

#include "urllc/agents.hpp"
#include "urllc/neural_core.hpp"

namespace urllc {

// File layout (little-endian): 8-byte magic "URLLCKPT", u32 format version,
// u32 agent kind (0 = EG, 1 = VB, 2 = ME), u64 seed, u64 optimizer step
// count, then the network snapshot (see write_snapshot).
struct Checkpoint {
  AgentKind agent = AgentKind::EG;
  std::uint64_t seed = 0;
  std::uint64_t step_count = 0;
  NetworkParams params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws std::runtime_error on a missing, truncated or malformed file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace urllc
