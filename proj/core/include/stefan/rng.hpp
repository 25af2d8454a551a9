#pragma once

#include <array>
#include <cstdint>

namespace stefan {

// Philox4x32-10.
//
// A draw is a pure function of (key, counter), so every particle, path and
// time step owns an independent stream addressed by its indices. Results do
// not depend on evaluation order or on how work is split across threads.
class Philox4x32 {
public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

// Stream purposes; distinct purposes never share counters.
enum class StreamPurpose : std::uint32_t {
  particle_increment = 1,
  picard_path = 2,
  y_samples = 3,
  gaussian_density = 4,
  bounds_mc = 5,
  supremum_u = 6,
};

// Two uniforms on the open interval (0,1), 53-bit resolution.
struct UniformPair {
  double first;
  double second;
};

// Seeded family of Philox streams addressed by (purpose, index, step).
class CounterRng {
public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  [[nodiscard]] UniformPair uniforms(StreamPurpose purpose, std::uint64_t index,
                                     std::uint32_t step) const noexcept {
    const auto out = Philox4x32::generate(
        {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), step,
         static_cast<std::uint32_t>(purpose)},
        key_);
    return {to_open_unit(out[0], out[1]), to_open_unit(out[2], out[3])};
  }

  // Standard normal by inverse CDF of the first uniform; the second uniform
  // is returned alongside for callers that need an extra draw.
  struct NormalAndUniform {
    double normal;
    double uniform;
  };
  [[nodiscard]] NormalAndUniform normal_and_uniform(StreamPurpose purpose, std::uint64_t index,
                                                    std::uint32_t step) const noexcept;

  [[nodiscard]] double normal(StreamPurpose purpose, std::uint64_t index,
                              std::uint32_t step) const noexcept {
    return normal_and_uniform(purpose, index, step).normal;
  }

  static constexpr double to_open_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

private:
  Philox4x32::Key key_;
};

// Inverse of the standard normal CDF on (0,1).
double normal_quantile(double u) noexcept;

// Standard normal CDF.
double normal_cdf(double x) noexcept;

inline CounterRng::NormalAndUniform CounterRng::normal_and_uniform(
    StreamPurpose purpose, std::uint64_t index, std::uint32_t step) const noexcept {
  const auto u = uniforms(purpose, index, step);
  return {normal_quantile(u.first), u.second};
}

}  // namespace stefan
