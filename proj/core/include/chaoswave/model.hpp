#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "chaoswave/common.hpp"

namespace chaoswave {

enum class SpatialMode { riesz, white };

/// Noise law of the driving field: temporal covariance
///   gamma(t) = H(2H-1)|t|^(2H-2),  1/2 < H < 1,
/// and either the Riesz spatial covariance f(x) = |x|^(alpha-1), 0 < alpha < 1,
/// with spectral density g(xi) = c_alpha |xi|^(-alpha), or the white spatial
/// fixture (f a Dirac mass, spectral measure Lebesgue/2pi).
///
/// Spectral measures: mu(dxi) = (2pi)^-1 g(xi) dxi, nu(dtau) = (2pi)^-1 h(tau) dtau
/// with h(tau) = |tau|^(2H-1).
class CovarianceModel {
 public:
  static CovarianceModel riesz(double hurst, double alpha);
  static CovarianceModel white(double hurst);

  double hurst() const { return hurst_; }
  double riesz_alpha() const { return alpha_; }
  double riesz_constant() const { return c_alpha_; }
  SpatialMode spatial_mode() const { return mode_; }
  bool is_white() const { return mode_ == SpatialMode::white; }

  /// gamma(t); t = 0 is a kernel singularity (callers integrate around it).
  double gamma(double t) const;

  /// f(x) in riesz mode; white mode has no pointwise spatial covariance.
  double f(double x) const;

  /// Density of nu: h(tau) = H(2H-1) c_{2H-1} |tau|^(1-2H), the Fourier
  /// transform pair of gamma.
  double spectral_h(double tau) const;
  double spectral_g(double xi) const;
  /// Fourier-pair constant of |t|^(2H-2), i.e. c_a at a = 2H-1.
  double temporal_riesz_constant() const;

  /// Gamma_t = 2 * int_0^t gamma = 2H t^(2H-1), exact antiderivative.
  double big_gamma(double t) const;

  /// K_M = int (M^2 + 4 xi^2)^-1 mu(dxi), by spectral quadrature.
  double KM(double M) const;

  /// c_0 = (4/3) int (1 + xi^2)^-1 mu(dxi).
  double c0() const;

  /// The Dalang integral int (1+xi^2)^-1 mu(dxi); finite by construction.
  double dalang_integral() const;

  /// Smallest k <= 4 for which the slow-growth integral of 1/(h g) against
  /// (1 + tau^2 + xi^2)^-k converges, along with its value.
  struct SlowGrowth {
    int k = 0;
    double value = 0.0;
  };
  SlowGrowth assumption_a() const { return slow_growth_; }

 private:
  CovarianceModel() = default;
  void validate_construction();

  double hurst_ = 0.0;
  double alpha_ = 0.0;
  double c_alpha_ = 0.0;
  SpatialMode mode_ = SpatialMode::riesz;
  double dalang_ = 0.0;
  SlowGrowth slow_growth_;
};

/// Fundamental solution of the 1-d wave equation and its Fourier transform.
struct WaveKernel {
  /// G(t,x) = 1/2 on {|x| < t}, 0 otherwise (and 0 for t <= 0).
  static double G(double t, double x) {
    return (t > 0.0 && std::abs(x) < t) ? 0.5 : 0.0;
  }

  /// FG(t, xi) = sin(t xi)/xi, with the removable value t at xi = 0.
  static double FG(double t, double xi);

  /// Exact average of G(t - s, x - y) over the cell [s0,s1] x [y0,y1].
  /// The cone boundary is piecewise linear in s, so the average reduces to
  /// trapezoid terms between breakpoints.
  static double cell_average(double t, double x, double s0, double s1,
                             double y0, double y1);

  /// Exact fraction of the cell covered by the cone {|x-y| < t-s}.
  static double cone_fraction(double t, double x, double s0, double s1,
                              double y0, double y1);
};

/// I_beta^w(xi) = int_0^inf e^(-beta t) sin^2(t|xi|)/|xi|^2 dt
///              = (2/beta) (beta^2 + 4 xi^2)^-1.
double I_beta_w(double beta, double xi);

/// int_R |FG(s,.)(xi)|^2 dxi = pi s (Plancherel), exact.
double l2_norm_FG(double s);

/// Derived scalars used by every bound; the Malliavin entries are filled by
/// the kernels module and C_T_star by the solver module.
struct ConstantsTable {
  double T = 0.0;
  double big_gamma_T = 0.0;
  double c0 = 0.0;
  double M_T = 0.0;
  double M_T_prime = 0.0;
  double C_T = 0.0;
  double C_T_prime = 0.0;
  double C_T_dprime = 0.0;
  double C_T_star = 0.0;
};

}  // namespace chaoswave
