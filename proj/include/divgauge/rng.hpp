#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace divgauge {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// Output block = philox(counter, key); no internal state besides the counter.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key);
};

// Fixed stream roles so that every run splits its randomness the same way.
enum class StreamRole : std::uint32_t {
  kQSampling = 1,
  kPSampling = 2,
  kInit = 3,
  kEvalQ = 4,
  kEvalP = 5,
  kPermutation = 6,
  kAux = 7,
};

// A single independent random stream: key = seed, counter high words =
// stream id. Streams with distinct ids never share a counter block.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream_id);
  Stream(std::uint64_t seed, StreamRole role, std::uint64_t sub_id = 0);

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  void fill_normal(std::span<double> out);

  // Derive an independent child stream (used for repeat/worker splitting).
  Stream split(std::uint64_t child) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// Fisher-Yates shuffle of 0..n-1, reproducible across standard libraries.
std::vector<std::size_t> random_permutation(std::size_t n, Stream& stream);

}  // namespace divgauge
