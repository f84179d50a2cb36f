#pragma once

#include <array>
#include <cstdint>

namespace covsync {

/// splitmix64 finalizer; used to derive keys and stream ids.
std::uint64_t mix64(std::uint64_t x);

/// Combine a master seed with stream coordinates (image index, coefficient
/// index, ...) into an independent stream id.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// Philox4x32-10 counter-based generator.  A stream is addressed by
// (seed, stream id); draws within a stream are addressed by a 64-bit
// counter, so any coefficient can be generated independently of
// processing order or thread count.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform in [0,1), 53-bit resolution (0 is a possible value).
  double next_unit();
  /// Uniform in (0,1), never returns an endpoint.
  double next_unit_open();
  /// Standard normal draw via the inverse CDF (one uniform per draw).
  double next_gaussian();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_;
  int pos_;
};

}  // namespace covsync
