#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string_view>

namespace rbmc {

// Counter-based generator (philox4x32-10). A stream is addressed by
// (seed, stream-id, counter); draws never touch shared state, so replicas,
// cells and MC batches can each own an independent stream and results do
// not depend on thread scheduling.
inline constexpr const char* kRngName = "philox4x32-10";

namespace detail {

struct PhiloxBlock {
  std::uint32_t w[4];
};

inline PhiloxBlock philox4x32_10(std::uint32_t c0, std::uint32_t c1,
                                 std::uint32_t c2, std::uint32_t c3,
                                 std::uint32_t k0, std::uint32_t k1) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kBump0 = 0x9E3779B9u;
  constexpr std::uint32_t kBump1 = 0xBB67AE85u;
  for (int round = 0;; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t n0 = hi1 ^ c1 ^ k0;
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ c3 ^ k1;
    const std::uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    if (round == 9) break;
    k0 += kBump0;
    k1 += kBump1;
  }
  return PhiloxBlock{{c0, c1, c2, c3}};
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

// Stream id for a named purpose plus an index (replica number, batch number...).
inline std::uint64_t substream(std::string_view purpose, std::uint64_t index = 0) {
  return detail::fnv1a64_u64(index, detail::fnv1a64(purpose));
}

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {}
  RngStream(std::uint64_t seed, std::string_view purpose, std::uint64_t index = 0)
      : RngStream(seed, substream(purpose, index)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64() {
    if (have_ == 0) refill();
    --have_;
    const std::uint64_t v = buf_[have_];
    return v;
  }

  // [0,1), 53-bit resolution
  double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0,1): never returns an endpoint, safe under log()
  double u01_open() {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

  double normal() {
    const double u = u01_open();
    const double v = u01_open();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925286766559 * v);
  }

  // Exp(rate); strictly positive
  double exponential(double rate) { return -std::log(u01_open()) / rate; }

  // uniform over {0,...,n-1}, rejection-free modulo bias negligible for n << 2^64
  std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

 private:
  void refill() {
    const auto b = detail::philox4x32_10(
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
        static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32));
    buf_[0] = (static_cast<std::uint64_t>(b.w[1]) << 32) | b.w[0];
    buf_[1] = (static_cast<std::uint64_t>(b.w[3]) << 32) | b.w[2];
    have_ = 2;
    ++block_;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::uint64_t buf_[2] = {0, 0};
  int have_ = 0;
};

}  // namespace rbmc
