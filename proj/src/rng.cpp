#include "emgm/rng.hpp"

#include <cmath>
#include <numbers>

namespace emgm {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32::Counter Philox4x32::operator()(Counter ctr) const noexcept {
  Key k = key_;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return ctr;
}

std::array<double, 2> NormalStream::uniform_pair(std::uint64_t row, std::uint32_t block) const noexcept {
  const auto out = gen_({static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(row >> 32), block, tag_});
  const std::uint64_t a = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  const std::uint64_t b = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  return {to_open_unit(a), to_open_unit(b)};
}

std::array<double, 2> NormalStream::normal_pair(std::uint64_t row, std::uint32_t block) const noexcept {
  const auto [u1, u2] = uniform_pair(row, block);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(angle), r * std::sin(angle)};
}

void NormalStream::normals(std::uint64_t row, double* out, std::size_t count) const noexcept {
  std::uint32_t block = 0;
  std::size_t j = 0;
  for (; j + 1 < count; j += 2, ++block) {
    const auto z = normal_pair(row, block);
    out[j] = z[0];
    out[j + 1] = z[1];
  }
  if (j < count) out[j] = normal_pair(row, block)[0];
}

double NormalStream::sign(std::uint64_t row, std::uint32_t block) const noexcept {
  const auto out = gen_({static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(row >> 32), block, tag_});
  return (out[0] & 1u) ? 1.0 : -1.0;
}

}  // namespace emgm
