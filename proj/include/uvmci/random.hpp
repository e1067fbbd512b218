// Seeded, splittable random streams.
#pragma once

#include <cstdint>
#include <random>

namespace uvmci {

/// A reproducible random stream identified by (seed, stream_id).
///
/// Every stream is an independent std::mt19937_64 whose state is expanded
/// from both 64-bit keys through std::seed_seq, so any (seed, id) pair can be
/// opened directly without stepping through earlier streams.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32)};
    engine_.seed(seq);
  }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1), never touching either end point.
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

enum class StreamPurpose : std::uint64_t { power = 1, conventional = 2, synthetic = 3 };

/// Packs (purpose, a, b) into a stream id: 8 bits purpose, 16 bits a, 40 bits b.
constexpr std::uint64_t make_stream_id(StreamPurpose purpose, std::uint64_t a, std::uint64_t b) {
  return (static_cast<std::uint64_t>(purpose) << 56) | ((a & 0xFFFFu) << 40) | (b & 0xFF'FFFF'FFFFull);
}

/// Seed for the i-th independent run derived from a base seed; row 0 keeps the base seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return seed ^ (index * 0x9E3779B97F4A7C15ull);
}

}  // namespace uvmci
