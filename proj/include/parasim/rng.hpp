#pragma once

// Counter-based random streams.
//
// Every stochastic driver in the library draws from a DriverStream keyed by
// (master seed, purpose tag, replicate index). The generator is Philox4x32-10:
// the key is derived from the seed and purpose, the replicate index occupies
// the upper half of the 128-bit counter and the draw position the lower half,
// so distinct replicates never share counter space and any stream can be
// rebuilt from its id alone.

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>

namespace parasim {

/// 64-bit FNV-1a, used to turn purpose tags into key material.
constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct StreamId {
  std::uint64_t master_seed = 0;
  std::string purpose;
  std::uint64_t replicate = 0;

  /// Philox key for this (seed, purpose) pair.
  std::uint64_t key() const noexcept {
    return splitmix64(master_seed ^ splitmix64(fnv1a(purpose)));
  }
};

class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  static Block generate(Block counter, std::uint64_t key) noexcept {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * counter[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * counter[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      counter = {hi1 ^ counter[1] ^ k0, lo1, hi0 ^ counter[3] ^ k1, lo0};
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return counter;
  }
};

/// A reproducible stream of random variates. Satisfies
/// UniformRandomBitGenerator so it can drive <random> distributions.
class DriverStream {
 public:
  using result_type = std::uint64_t;

  DriverStream(std::uint64_t master_seed, std::string_view purpose, std::uint64_t replicate)
      : id_{master_seed, std::string(purpose), replicate}, key_(id_.key()) {}
  explicit DriverStream(StreamId id) : id_(std::move(id)), key_(id_.key()) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (buffered_ == 0) refill();
    --buffered_;
    return buffer_[buffered_];
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_(*this); }

  /// Standard exponential.
  double exponential() noexcept;

  /// Poisson count with the given mean. Small means use inversion with a
  /// single uniform, which keeps the common "no event" case at one draw.
  std::uint64_t poisson(double mean);

  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(*this); }

  const StreamId& id() const noexcept { return id_; }
  /// Number of 128-bit blocks consumed so far.
  std::uint64_t position() const noexcept { return block_; }

 private:
  void refill() noexcept {
    const Philox4x32::Block counter{
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(id_.replicate),
        static_cast<std::uint32_t>(id_.replicate >> 32)};
    const auto out = Philox4x32::generate(counter, key_);
    ++block_;
    buffer_[1] = (std::uint64_t{out[0]} << 32) | out[1];
    buffer_[0] = (std::uint64_t{out[2]} << 32) | out[3];
    buffered_ = 2;
  }

  StreamId id_;
  std::uint64_t key_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace parasim
