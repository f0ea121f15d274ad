#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace chaoswave {

inline constexpr double kPi = 3.14159265358979323846;

/// Thrown when an adaptive scheme exhausts its refinement budget.
struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a covariance matrix is not PSD within the clipping slack.
struct NotPositiveSemiDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Compensated accumulator; sums of many small panel contributions must not
/// drift above the 1e-12 identity tolerances.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Process-wide worker cap (CLI --threads). 0 means hardware concurrency.
void set_max_threads(int n);
int max_threads();

/// Runs fn(lo, hi) over disjoint chunks of [0, n). Chunk boundaries depend
/// only on n and the thread cap, so reductions done per chunk and merged in
/// chunk order are deterministic.
void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace chaoswave
