#pragma once

// Splittable 64-bit random number generation.
//
// Every random quantity in the library is drawn from a stream identified by
// (master seed, path...), where the path names the replication index and the
// role of the draw. Streams are seeded by hashing the path with SplitMix64
// and run xoshiro256**. Because a stream depends only on its path, results do
// not depend on scheduling or thread count.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace bnest {

/// Role tags used as the second path component of derived streams.
namespace stream {
inline constexpr std::uint64_t kSample = 0x5341'4d50;    // observed counts
inline constexpr std::uint64_t kPopulation = 0x504f'5055;  // per-observation n_i
inline constexpr std::uint64_t kSuccess = 0x5355'4343;   // per-replication p0
inline constexpr std::uint64_t kBleach = 0x424c'4541;    // survival process
inline constexpr std::uint64_t kTrace = 0x5452'4143;     // blink traces
}  // namespace stream

std::uint64_t splitmix64(std::uint64_t& state);

/// Hash a master seed and a path into a stream seed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static Rng substream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    return Rng(derive_seed(master, path));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  /// Uniform double in (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

 private:
  std::array<std::uint64_t, 4> s_;
};

double normal_variate(Rng& rng);
double gamma_variate(double shape, Rng& rng);
double beta_variate(double a, double b, Rng& rng);

/// Exact Bin(n, p) draw: inversion when n*min(p,1-p) < 10, otherwise
/// transformed rejection with squeeze (BTRS).
std::int64_t binomial_sampler(std::int64_t n, double p, Rng& rng);

}  // namespace bnest
