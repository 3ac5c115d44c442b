#include "urllc/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace urllc {

namespace {

constexpr std::array<char, 8> kMagic = {'U', 'R', 'L', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T v) {
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xffU);
  }
  out.write(bytes, sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw std::runtime_error("checkpoint header truncated");
  }
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.agent));
  put_le<std::uint64_t>(out, ckpt.seed);
  put_le<std::uint64_t>(out, ckpt.step_count);
  write_snapshot(out, ckpt.params);
  if (!out.flush()) throw std::runtime_error("cannot write checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error(path.string() + ": not a checkpoint file");
  }
  if (get_le<std::uint32_t>(in) != kVersion) {
    throw std::runtime_error(path.string() + ": unsupported checkpoint version");
  }
  const auto kind = get_le<std::uint32_t>(in);
  if (kind > 2) throw std::runtime_error(path.string() + ": unknown agent kind");
  Checkpoint ckpt;
  ckpt.agent = static_cast<AgentKind>(kind);
  ckpt.seed = get_le<std::uint64_t>(in);
  ckpt.step_count = get_le<std::uint64_t>(in);
  ckpt.params = read_snapshot(in);
  return ckpt;
}

}  // namespace urllc
