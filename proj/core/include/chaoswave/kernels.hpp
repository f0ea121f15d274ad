#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chaoswave/model.hpp"

namespace chaoswave {

// ---------------------------------------------------------------------------
// Closed-form spatial profiles.  All repeated spatial integrals against the
// Riesz kernel reduce to combinations of the double primitive P (P'' = f),
// the box-smoothed kernel F_a = f * G(a,.), the twice-smoothed
// V_ab = f * G(a,.) * G(b,.), and interval overlaps.  White mode replaces f
// by a Dirac mass and each profile by its indicator analogue.
// ---------------------------------------------------------------------------

/// P(u) with P''(u) = f(u): |u|^(1+alpha) / (alpha (1+alpha)).
double double_primitive(const CovarianceModel& model, double u);

/// (f * G(a,.))(z); white mode: (1/2) 1{|z| < a}.
double smoothed_f(const CovarianceModel& model, double a, double z);

/// (f * G(a,.) * G(b,.))(z); white mode: (1/4) overlap_lambda(a, b, z).
double smoothed_f_pair(const CovarianceModel& model, double a, double b,
                       double z);

/// |[-a,a] ∩ [d-b, d+b]|.
double overlap_lambda(double a, double b, double d);

/// ∫ overlap_lambda(a, b, e) de over [lo, hi], exact (piecewise linear).
double overlap_lambda_integral(double a, double b, double lo, double hi);

/// <G(a,.), G(b,.)>_0 in closed form: (P(a+b) - P(|a-b|)) / 2, white min(a,b)/2.
double p0_pair(const CovarianceModel& model, double a, double b);

// ---------------------------------------------------------------------------
// Chaos kernels.
// ---------------------------------------------------------------------------

struct SpaceTimePoint {
  double t;
  double x;
};

/// f_n(z_1..z_n, t, x): product of Green factors on the time simplex.
double f_n_eval(int n, std::span<const SpaceTimePoint> args, double t,
                double x);

/// Symmetrization of f_n over its n arguments (n <= 3 by enumeration).
double f_tilde_eval(int n, std::span<const SpaceTimePoint> args, double t,
                    double x);

/// h_j^(n)(z_1..z_{n-1}, (r,z), t, x): symmetrization of f_j^(n).
double h_j_eval(int n, int j, std::span<const SpaceTimePoint> args,
                SpaceTimePoint rz, double t, double x);

/// f~_n(z_1..z_{n-1}, (r,z), t, x) = (1/n) sum_j h_j^(n).
double f_tilde_rz_eval(int n, std::span<const SpaceTimePoint> args,
                       SpaceTimePoint rz, double t, double x);

// ---------------------------------------------------------------------------
// psi_n pair kernels and alpha_n.
// ---------------------------------------------------------------------------

/// psi_n(t-nodes, s-nodes) = <g_t^(n), g_s^(n)>_{P0 tensor n} for n = 1,2,3;
/// arbitrary node positions in (0, t).
double psi_pair(const CovarianceModel& model, std::span<const double> t_nodes,
                std::span<const double> s_nodes, double t);

double psi_exact(double t);                    // t^2/4
double psi_grid(double t, int cells_per_axis); // grid integration of G^2

/// psi_0(t) by spectral quadrature (the r-integral of ||G(r)||_0^2).
double psi0(const CovarianceModel& model, double t);

/// phi(t) = alpha_1(t) by the physical route (double primitive profiles; no
/// Fourier anywhere).
double phi(const CovarianceModel& model, double t);

/// alpha_1 by the spectral route (Fourier representation of psi_1).
double alpha1(const CovarianceModel& model, double t);

/// alpha_2 by exact gamma cell masses + midpoint in time, Richardson over
/// (cells, 2*cells).
double alpha2(const CovarianceModel& model, double t, int cells = 16);

struct QmcEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int replicates = 0;
  std::uint64_t points = 0;
};

/// alpha_3 by randomized QMC over the time variables (gamma substituted away
/// pairwise), with the psi_3 spatial pairing evaluated deterministically.
QmcEstimate alpha3(const CovarianceModel& model, double t,
                   int log2_points = 14, std::uint64_t seed = 777);

/// Dispatch for n in {1, 2, 3} (n = 3 returns the QMC value).
double alpha_n(const CovarianceModel& model, int n, double t);

// ---------------------------------------------------------------------------
// Bound reports.
// ---------------------------------------------------------------------------

struct AlphaReport {
  double t = 0.0;
  int N = 0;
  std::vector<double> alpha;          // alpha[n], n = 0..N, alpha[0] = 1
  double alpha3_std_error = 0.0;
  std::vector<double> M_scan;
  std::vector<std::vector<double>> bound;  // bound[idx_n][idx_M]
  bool bounds_hold = true;
  double offending_M = 0.0;
  double partial_sum = 0.0;           // sum alpha_n / n!
  double tail_bound = 0.0;
  double tail_M = 0.0;
};

/// Checks alpha_n(t) <= e^(M t) n! (2 Gamma_t K_M / M)^n over the scan.
AlphaReport alpha_bound_check(const CovarianceModel& model, int n, double t,
                              std::span<const double> M_scan);

/// Partial sum of E|u(t,x)|^2 = sum alpha_n / n! with a geometric tail bound
/// at the best M found by a doubling scan.
AlphaReport second_moment_series(const CovarianceModel& model, double t, int N);

struct MalliavinBoundReport {
  double T = 0.0;
  double M = 0.0;        // selected rate
  double C = 0.0;        // C_T (first derivative) or C_T'' (second)
  double C_prime = 0.0;  // C_T' (second derivative in H tensor L2), d2 only
  double ratio = 0.0;           // selection ratio at M
  double ratio_at_half_M = 0.0; // minimality witness (fails for M/2)
  // Per-order diagnostics at t = T, r = T/2 (n <= 2).
  double first_chaos_value = 0.0;  // ∫ G^2(t-r, x-z) dz = (t-r)/2
  double first_chaos_bound = 0.0;  // pi t e^(2Mt)
  std::vector<double> H_values;    // H_j^(2), j = 1, 2
  std::vector<double> H_bounds;    // e^(2Mt) (2 K_M / M)^(n-1)
};

/// First-derivative norm constants: smallest doubling-scan M with
/// e^2 Gamma_T (2/M) K_M < 1/2, C_T = 2 pi T e^(2 M T) e^2.
MalliavinBoundReport d_norm_constant(const CovarianceModel& model, double T);

/// Second-derivative constants: e^3 criterion, C_T'' = 2 pi T e^(2 M' T) e^3,
/// C_T' = 8 (pi T)^2 e^(3 M' T).
MalliavinBoundReport d2_norm_constant(const CovarianceModel& model, double T);

/// Fills the scalar table used by the CLI and the density experiment
/// (C_T_star is left to the solver).
ConstantsTable make_constants(const CovarianceModel& model, double T);

}  // namespace chaoswave
