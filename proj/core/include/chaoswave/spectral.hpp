#pragma once

#include <functional>

#include "chaoswave/model.hpp"
#include "chaoswave/quadrature.hpp"

namespace chaoswave {

/// Integrand description for integrals against the spectral measures.
/// W is given on all of R and folded internally.  For large |xi| the folded
/// integrand must behave like dc_over_xi2 / xi^2 plus an oscillatory part at
/// frequency osc_freq (0 for monotone-type integrands); the dc part of the
/// tail is added in closed form and the oscillatory remainder is bounded by
/// the truncation choice.
struct SpectralIntegrand {
  std::function<double(double)> W;
  double osc_freq = 0.0;
  double dc_over_xi2 = 0.0;
  double abs_tol = 1e-10;
  double head = 1.0;          // head cut; the measure singularity is substituted on [0, head]
  double min_trunc = 64.0;    // lower bound for the truncation point
};

/// ∫_R W(xi) mu(dxi).
double mu_integral(const CovarianceModel& model, const SpectralIntegrand& s);

/// ∫_R W(tau) nu(dtau).
double nu_integral(const CovarianceModel& model, const SpectralIntegrand& s);

/// ∫_{|xi| > A} xi^-2 mu(dxi), closed form.
double mu_tail_inv_sq(const CovarianceModel& model, double A);
double nu_tail_inv_sq(const CovarianceModel& model, double A);

/// ||G(a)||_0^2 = ∫ sin^2(a xi)/xi^2 mu(dxi), by spectral quadrature.
double S0_spectral(const CovarianceModel& model, double a);

/// ∫ sin(a xi) sin(b xi) / xi^2 mu(dxi).
double p0_cross_spectral(const CovarianceModel& model, double a, double b);

/// m(eta) = ∫ |FG(t)(xi + eta)|^2 mu(dxi).
double max_principle_m(const CovarianceModel& model, double t, double eta);

/// psi_0(t) = ∫_0^t ∫ |FG(r)(xi)|^2 mu(dxi) dr, by nested quadrature.
double psi0_quadrature(const CovarianceModel& model, double t);

/// Truncated quadrature of ∫ sin^2(s xi)/xi^2 dxi (Lebesgue), for the pi*s
/// identity checks.
double l2_norm_FG_quadrature(double s);

/// K_M and c_0 by the production spectral scheme.
double KM_spectral(const CovarianceModel& model, double M);
double c0_spectral(const CovarianceModel& model);
double dalang_spectral(const CovarianceModel& model);

/// ∫∫ (1 + tau^2 + xi^2)^-k / (h g) dtau dxi over {h g > 0}; returns the value
/// on a growing truncation together with a convergence flag.
struct SlowGrowthProbe {
  double value = 0.0;
  bool converged = false;
};
SlowGrowthProbe slow_growth_integral(double hurst, double alpha, bool white,
                                     double c_alpha, int k);

}  // namespace chaoswave
