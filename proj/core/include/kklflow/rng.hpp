#pragma once

#include <cstdint>

namespace kklflow {

/// Counter-based pseudo-random stream (splitmix64 finalizer over an
/// incrementing counter). A stream is fully determined by (seed, stream_id),
/// so runs dispatched to worker threads reproduce the exact same draws no
/// matter how they are scheduled.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t next_u64();

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (two uniforms per draw).
  double normal();

  /// Uniform integer in {0, ..., n-1}, n >= 1.
  int uniform_int(int n);

 private:
  std::uint64_t state_;
};

/// Stable mixing of a seed with a stream index (used to derive per-run seeds).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_id);

}  // namespace kklflow
