#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace ssft {

// Seedable, portable PRNG (xoshiro256++) with explicit substream derivation.
//
// All randomness in the library flows through this class so that results are
// bit-identical across platforms and independent of evaluation order. The
// substream scheme: a stream is addressed by a path of 64-bit tags under a
// root seed, e.g. Rng::from_path(seed, {kSplitA, kNoise, example_index}).
// Derivation is a splitmix64 fold over the path, so distinct paths yield
// statistically independent streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    // Expand the seed into four non-zero state words via splitmix64.
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
    have_spare_normal_ = false;
  }

  static Rng from_path(std::uint64_t root_seed,
                       std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = root_seed;
    for (std::uint64_t tag : path) {
      std::uint64_t t = tag + 0x632BE59BD9B4E019ULL;
      s = splitmix64(t) ^ splitmix64(s);
    }
    return Rng(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound), bound > 0. Rejection sampling, unbiased.
  std::uint64_t uniform_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal via Box-Muller (cached spare), then scaled.
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (have_spare_normal_) {
      have_spare_normal_ = false;
      return mean + stddev * spare_normal_;
    }
    // u1 in (0, 1] so that log(u1) is finite.
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_normal_ = radius * std::sin(angle);
    have_spare_normal_ = true;
    return mean + stddev * radius * std::cos(angle);
  }

  void fill_normal(std::span<double> out, double mean = 0.0,
                   double stddev = 1.0) {
    for (double& v : out) v = normal(mean, stddev);
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4]{};
  double spare_normal_ = 0.0;
  bool have_spare_normal_ = false;
};

// Stream tags used across the library. Kept in one place so substream
// addressing stays collision-free and auditable.
namespace stream {
constexpr std::uint64_t kSplitA = 0xA;
constexpr std::uint64_t kSplitB = 0xB;
constexpr std::uint64_t kGroupAssign = 0x10;
constexpr std::uint64_t kNoise = 0x20;
constexpr std::uint64_t kLabelFlip = 0x30;
constexpr std::uint64_t kZipfOrder = 0x40;
constexpr std::uint64_t kModelInit = 0x50;
constexpr std::uint64_t kEpochShuffle = 0x60;
constexpr std::uint64_t kTrial = 0x70;
constexpr std::uint64_t kEvalSet = 0x80;
constexpr std::uint64_t kRemoval = 0x90;
}  // namespace stream

}  // namespace ssft
