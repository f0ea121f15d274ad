#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

namespace chaoswave {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic per-sample stream: stream i of a run is a pure function of
/// (seed, i), so samples can be generated on any worker in any order.
class SampleRng {
 public:
  SampleRng(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    const std::uint64_t a = splitmix64(s);
    const std::uint64_t b = splitmix64(s);
    engine_.seed(a ^ (b << 1));
  }

  double uniform() {  // (0, 1]
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // Box-Muller; std::normal_distribution is implementation-defined and
    // would break byte-stable reports.
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * 3.14159265358979323846 * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Halton points in [0,1)^dim (first six prime bases), with an optional
/// Cranley-Patterson shift for randomized-QMC error estimates.
class Halton {
 public:
  explicit Halton(int dim) : dim_(dim) {}

  std::array<double, 6> point(std::uint64_t index,
                              const std::array<double, 6>& shift) const {
    static constexpr int bases[6] = {2, 3, 5, 7, 11, 13};
    std::array<double, 6> x{};
    for (int d = 0; d < dim_; ++d) {
      x[d] = radical_inverse(index + 1, bases[d]) + shift[d];
      x[d] -= std::floor(x[d]);
    }
    return x;
  }

  static std::array<double, 6> random_shift(std::uint64_t seed, int replicate) {
    std::uint64_t s = seed ^ 0xda3e39cb94b95bdbULL;
    s ^= 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(replicate) + 7);
    std::array<double, 6> out{};
    for (auto& v : out)
      v = static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
    return out;
  }

 private:
  static double radical_inverse(std::uint64_t i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
      f /= base;
      r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
      i /= static_cast<std::uint64_t>(base);
    }
    return r;
  }

  int dim_;
};

}  // namespace chaoswave
