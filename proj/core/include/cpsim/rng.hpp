#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cpsim {

// One deterministic random stream. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the distributions are implemented here
// rather than with <random> distributions, which are implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();

  // Uniform integer on [lo, hi], unbiased.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);

  // Standard normal via Box-Muller; consumes exactly two uniforms per call.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Exponential with the given mean.
  double exponential(double mean);

 private:
  std::mt19937_64 engine_;
};

// Seed of a named sub-stream: splitmix64(master ^ fnv1a64(name)). Adding a new
// name never changes the seed of an existing one.
std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::string_view name);

struct RngStreams {
  explicit RngStreams(std::uint64_t master_seed)
      : mobility(derive_stream_seed(master_seed, "mobility")),
        sensor(derive_stream_seed(master_seed, "sensor")),
        mac_backoff(derive_stream_seed(master_seed, "mac-backoff")) {}

  RngStream mobility;
  RngStream sensor;
  RngStream mac_backoff;
};

}  // namespace cpsim
