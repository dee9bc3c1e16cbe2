#include "kklflow/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace kklflow {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix64_finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_id) {
  return splitmix64_finalize(seed + kGolden * (stream_id + 1));
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : state_(mix_seed(seed, stream_id)) {}

std::uint64_t RngStream::next_u64() {
  state_ += kGolden;
  return splitmix64_finalize(state_);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() {
  // Box-Muller; u1 shifted away from 0 so the log is finite.
  double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int RngStream::uniform_int(int n) {
  if (n < 1) throw std::invalid_argument("uniform_int: n must be >= 1");
  return static_cast<int>(uniform() * n) % n;
}

}  // namespace kklflow
