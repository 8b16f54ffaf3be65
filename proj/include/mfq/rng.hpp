#pragma once

#include <cmath>
#include <cstdint>

namespace mfq {

/// Counter-based 64-bit generator: SplitMix64 run in counter mode,
///   out_n = mix64(key + n * GAMMA).
/// Replication streams are keyed by derive_stream(base_seed, index), so two
/// streams with distinct indices never share a counter sequence. Everything
/// is integer arithmetic plus libm, bit-reproducible across platforms.
class Rng {
 public:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t derive_stream(std::uint64_t base_seed, std::uint64_t index) {
    return mix64(base_seed ^ mix64(index + 1));
  }

  explicit Rng(std::uint64_t key) : key_(key) {}
  Rng(std::uint64_t base_seed, std::uint64_t stream_index)
      : key_(derive_stream(base_seed, stream_index)) {}

  std::uint64_t next_u64() {
    counter_ += kGamma;
    return mix64(key_ + counter_);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Exponential by inversion; -log1p(-u) keeps u == 0 safe.
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  /// Standard normal, Box-Muller; the second variate of a pair is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    // 1-u in (0, 1] so the log is finite.
    const double r = std::sqrt(-2.0 * std::log1p(-uniform()));
    const double a = 2.0 * M_PI * uniform();
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace mfq
