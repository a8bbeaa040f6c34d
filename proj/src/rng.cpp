#include "divgauge/rng.hpp"

#include <cmath>
#include <numbers>

namespace divgauge {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

std::uint64_t mix_stream_id(std::uint64_t role, std::uint64_t sub) {
  // role in the top byte, sub id below it
  return (role << 56) ^ (sub & 0x00FFFFFFFFFFFFFFull);
}

}  // namespace

Philox4x32::Counter Philox4x32::apply(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kMul0, ctr[0], lo0, hi0);
    mulhilo(kMul1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

Stream::Stream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {}

Stream::Stream(std::uint64_t seed, StreamRole role, std::uint64_t sub_id)
    : Stream(seed, mix_stream_id(static_cast<std::uint64_t>(role), sub_id)) {}

void Stream::refill() {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                static_cast<std::uint32_t>(stream_id_),
                                static_cast<std::uint32_t>(stream_id_ >> 32)};
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  buffer_ = Philox4x32::apply(ctr, key);
  buffered_ = 4;
  ++block_;
}

std::uint64_t Stream::next_u64() {
  if (buffered_ < 2) refill();
  const std::uint64_t hi = buffer_[4 - buffered_];
  const std::uint64_t lo = buffer_[5 - buffered_];
  buffered_ -= 2;
  return (hi << 32) | lo;
}

double Stream::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_normal_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Stream::below(std::uint64_t n) {
  // Lemire's multiply-shift with rejection
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  std::uint64_t low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

void Stream::fill_normal(std::span<double> out) {
  for (double& v : out) v = normal();
}

Stream Stream::split(std::uint64_t child) const {
  // New key from the parent key and child index; stream id preserved.
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(child), static_cast<std::uint32_t>(child >> 32),
                                static_cast<std::uint32_t>(stream_id_),
                                static_cast<std::uint32_t>(stream_id_ >> 32) ^ 0x5A5A5A5Au};
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  const auto out = Philox4x32::apply(ctr, key);
  const std::uint64_t child_seed = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  return Stream(child_seed, stream_id_);
}

std::vector<std::size_t> random_permutation(std::size_t n, Stream& stream) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(stream.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace divgauge
