// SPDX-License-Identifier: Apache-2.0
#pragma once

// Counter-based pseudo-random substreams.
//
// Every draw is a pure function of (master_seed, trial_index, role_tag,
// counter), so trials can be evaluated in any order, on any number of
// threads, and still reproduce bit-for-bit. The mixing core is SplitMix64,
// which passes standard statistical batteries and needs no warm-up.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace metagibbs {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Role tags separating independent substreams within one trial.
enum class StreamRole : std::uint64_t {
  TaskDraw = 1,
  SampleDraw = 2,
  TestTaskDraw = 3,
  TaskMean = 4,
  Noise = 5,
  HypothesisDraw = 6,
};

/// One independent substream keyed by (master_seed, trial_index, role).
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t master_seed, std::uint64_t trial_index, StreamRole role)
      : key_(detail::splitmix64(detail::splitmix64(master_seed) ^
                                detail::splitmix64(trial_index * 0x9e3779b97f4a7c15ULL + 1) ^
                                detail::splitmix64(static_cast<std::uint64_t>(role) << 17))),
        counter_(0) {}

  std::uint64_t next_u64() { return detail::splitmix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform double in [0,1) with 53 random bits; bit-exact across platforms.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Inverse-CDF draw from a finite probability vector.
  int draw_index(std::span<const double> probs) {
    const double u = next_double();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  /// Standard normal via Box-Muller on two fixed counter slots.
  double next_normal() {
    // Consume two uniforms unconditionally to keep the counter advance fixed.
    double u1 = next_double();
    const double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Rademacher sign (+1/-1).
  double next_sign() { return (next_u64() & 1u) ? 1.0 : -1.0; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Fixed-order pairwise summation: deterministic regardless of how the
/// values were produced, and more accurate than naive accumulation.
inline double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace metagibbs
