#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace emgm {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// Every draw is a pure function of (key, counter), so a stream can be
/// addressed by (seed, replicate, sample index) without any shared state.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}
  explicit Philox4x32(Key key) noexcept : key_(key) {}

  [[nodiscard]] Counter operator()(Counter ctr) const noexcept;

  [[nodiscard]] Key key() const noexcept { return key_; }

 private:
  Key key_;
};

/// SplitMix64 finalizer; used to derive child seeds.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for child stream `index` of `parent`. Chain it to key by several
/// coordinates, e.g. derive_seed(derive_seed(master, grid_point), replicate).
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(mix64(parent) ^ (index * 0xD6E8FEB86659FD93ULL + 0x632BE59BD9B4E019ULL));
}

/// Maps 64 random bits to a double in the open interval (0, 1).
[[nodiscard]] constexpr double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Addressable stream of standard normals and uniforms.
///
/// Counter layout: (row low 32 bits, row high 32 bits, block, tag). One
/// block yields two uniforms, which the Box-Muller transform turns into the
/// normal pair (r cos 2πu₂, r sin 2πu₂) with r = √(−2 log u₁).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed, std::uint32_t tag = 0) noexcept : gen_(seed), tag_(tag) {}

  [[nodiscard]] std::array<double, 2> uniform_pair(std::uint64_t row, std::uint32_t block) const noexcept;
  [[nodiscard]] std::array<double, 2> normal_pair(std::uint64_t row, std::uint32_t block) const noexcept;

  /// Fills `out[0..count)` with standard normals for `row`, using ⌈count/2⌉ blocks.
  void normals(std::uint64_t row, double* out, std::size_t count) const noexcept;

  /// Fair sign drawn from `block` of `row`.
  [[nodiscard]] double sign(std::uint64_t row, std::uint32_t block) const noexcept;

 private:
  Philox4x32 gen_;
  std::uint32_t tag_;
};

}  // namespace emgm
