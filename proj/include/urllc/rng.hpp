#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace urllc {

// Seedable generator with hand-rolled distribution transforms, so a given
// seed yields the same stream regardless of the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform01();
  // Uniform on (0, 1]; never returns 0.
  double uniform_open_closed();
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  // Uniform integer in [lo, hi], inclusive.
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi);
  bool bernoulli(double p) { return uniform01() < p; }
  double standard_normal();

 private:
  std::mt19937_64 engine_;
};

// Derives an independent sub-stream seed from (seed, stream name). Adding a
// new stream name never changes the seeds of existing ones.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

inline Rng make_stream(std::uint64_t seed, std::string_view stream) {
  return Rng(derive_seed(seed, stream));
}

}  // namespace urllc
