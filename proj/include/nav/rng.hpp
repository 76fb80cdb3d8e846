// Seeded random streams with explicitly implemented samplers so that
// draws are bit-reproducible across standard library versions.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace nav {

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Independent per-(stream, index) seed from one master seed.
inline uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t index) {
  uint64_t s = master ^ (0xa0761d6478bd642full * (stream + 1));
  splitmix64(s);
  s ^= 0xe7037ed1a0b428dbull * (index + 1);
  return splitmix64(s);
}

class RngStream {
 public:
  explicit RngStream(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // [0, 1), 53-bit resolution
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // [0, n), unbiased via rejection
  uint64_t uniform_int(uint64_t n) {
    if (n <= 1) return 0;
    uint64_t mask = ~uint64_t{0} >> std::countl_zero(n - 1);
    for (;;) {
      uint64_t v = eng_() & mask;
      if (v < n) return v;
    }
  }

  // Box-Muller without the cached spare; one value per call keeps the
  // stream state a pure function of the draw count.
  double gaussian() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::string state_string() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void restore(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace nav
