#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sdr {

/// Purpose tags used to derive independent streams from one run seed.
enum class StreamId : std::uint64_t {
  init = 1,
  interior = 2,
  boundary = 3,
  stochastic = 4,
  eval = 5,
  direction = 6,
  cli = 7,
};

/// A seeded random stream identified by (seed, stream_id).
///
/// The engine is mt19937_64 (period 2^19937-1) initialised through
/// std::seed_seq from all 128 bits of (seed, stream_id). Both the engine and
/// seed_seq are fully specified by the standard, and the uniform and normal
/// transforms below are written out here rather than taken from
/// <random>'s distributions, so a given (seed, stream_id, call sequence)
/// produces the same numbers on every conforming toolchain.
///
/// A stream is single-owner. Draw from distinct streams to go concurrent.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x5d2b1e9fu};
    engine_.seed(seq);
  }

  RngStream(std::uint64_t seed, StreamId id) : RngStream(seed, static_cast<std::uint64_t>(id)) {}

  /// Derive the stream (seed, id + offset), used for families such as
  /// numbered test directions.
  static RngStream derived(std::uint64_t seed, StreamId id, std::uint64_t offset) {
    return RngStream(seed, (static_cast<std::uint64_t>(id) << 32) + offset);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1): 53-bit mantissa, midpoint-shifted.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform on (a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n) by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = n * (UINT64_MAX / n);
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  /// Standard normal, Marsaglia polar method. The second variate of each pair
  /// is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sdr
