#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "microgan/error.hpp"

namespace microgan {

// splitmix64 finalizer; used to spread seeds and derive substreams.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Deterministic random source around mt19937_64. Normals are produced with
// Box-Muller instead of std::normal_distribution because the latter caches a
// second variate in unspecified state, which would not survive textual
// serialization; here every normal() consumes exactly two engine steps.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1), 53-bit resolution
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // uniform in [lo, hi]; always consumes one draw, even when lo == hi
  double uniform_in(double lo, double hi) {
    return lo + (hi - lo) * uniform();
  }

  // standard normal via Box-Muller; u1 is shifted into (0, 1] so the log is
  // always finite
  double normal() {
    double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTau * u2);
  }

  // uniform integer in [0, n), rejection sampled to avoid modulo bias
  int64_t below(int64_t n) {
    if (n < 1) fail(ErrorKind::Spec, "Rng::below requires n >= 1");
    uint64_t un = static_cast<uint64_t>(n);
    uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<int64_t>(x % un);
  }

  // mt19937_64's textual state; round-trips through set_state exactly
  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
    if (!is) fail(ErrorKind::Load, "malformed RNG state string");
  }

  // independent substream of a base seed (per-item, per-epoch, probe, ...)
  static Rng from_stream(uint64_t seed, uint64_t stream) {
    return Rng(splitmix64(seed ^ splitmix64(stream)));
  }

 private:
  static constexpr double kTau = 6.283185307179586476925286766559;
  std::mt19937_64 engine_;
};

}  // namespace microgan
