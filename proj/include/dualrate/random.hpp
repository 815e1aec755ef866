#pragma once

#include <array>
#include <cstdint>

namespace dualrate {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// A block is a pure function of (counter, key).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key);
};

/// Identifies an independent noise substream: (study seed, replication, purpose).
struct StreamId {
  std::uint64_t seed = 0;
  std::uint32_t replication = 0;
  std::uint32_t purpose = 0;
};

/// Sequential standard-normal variates drawn from one Philox substream.
/// Each 128-bit block yields two uniforms of 53 bits and, through Box-Muller,
/// two normals. Bit-identical across platforms with IEEE doubles and a
/// conforming libm.
class NormalStream {
 public:
  explicit NormalStream(StreamId id);

  double next();
  std::uint64_t consumed() const { return consumed_; }

 private:
  void refill();

  Philox4x32::Key key_;
  Philox4x32::Counter counter_;
  std::array<double, 2> cache_{};
  int cached_ = 0;
  std::uint64_t consumed_ = 0;
};

}  // namespace dualrate
