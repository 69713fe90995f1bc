#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace san {

/// Philox4x32-10 counter-based generator. The seed is the key; the stream
/// id fills the upper half of the counter, so streams never overlap.
/// Distributions are implemented here rather than taken from <random>,
/// whose algorithms differ between standard libraries.
class Rng {
 public:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  /// Ten Philox rounds over one counter block.
  static Block philox(Block counter, Key key);

  /// Independent generator for `stream`, same seed.
  Rng split(std::uint64_t stream) const { return Rng(seed_, stream); }

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double normal();
  double exponential();
  /// Gamma(shape, 1), Marsaglia-Tsang.
  double gamma(double shape);
  double beta(double a, double b);
  /// Index drawn with probability proportional to `weights` (nonnegative,
  /// positive total).
  int categorical(std::span<const double> weights);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  Block buffer_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace san
