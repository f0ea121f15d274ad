#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "chaoswave/kernels.hpp"
#include "chaoswave/model.hpp"
#include "chaoswave/noise.hpp"

namespace chaoswave {

/// Discrete chaos representation of u_N(t, x): for each order n a symmetric
/// cell tensor of f~_n averages, transformed to the orthonormal noise
/// coordinates, with every repeated-index entry zeroed.  The reported squared
/// tensor norm carries the chaos multiplicity: tensor_norm2(n) = n! * Frob^2,
/// which is the exact variance of the discrete order-n integral, so
/// n! * tensor_norm2(n) estimates alpha_n.
struct ChaosCoefficients {
  GridSpec grid;
  double t = 0.0, x = 0.0;
  int N = 0;
  int m = 0;

  Eigen::VectorXd c1;        // order 1 (orthonormal coordinates)
  Eigen::MatrixXd V2;        // order 2, symmetric, zero diagonal
  std::vector<double> T3;    // order 3, m^3, flattened i*m*m + j*m + k

  // Cell-level tensors (pre-transform), kept for the Picard identity.
  Eigen::MatrixXd cells1;    // nt x nx exact cone averages
  Eigen::MatrixXd cells2;    // m x m symmetrized averages
  std::vector<double> cells3;

  double tensor_norm2(int n) const;
  double alpha_estimate(int n) const;
};

/// Cell-averaged symmetrized kernels, mapped through the transposed noise
/// factor; diagonal zeroing applied last.
ChaosCoefficients project_kernels(const CovarianceModel& model,
                                  const CellCovariance& cov, double t, double x,
                                  int N);

struct SolutionSample {
  double value = 0.0;
  std::array<double, 4> chaos{};  // chaos[n] = I_n, chaos[0] = 1
};

/// Wick monomial evaluation: I_n is the diagonal-free symmetric contraction
/// of the order-n tensor with the normal coordinates.
SolutionSample sample_solution(const ChaosCoefficients& coeffs,
                               const Eigen::VectorXd& zeta);

struct MalliavinSample {
  Eigen::VectorXd gradient;   // d u_N / d zeta
  Eigen::MatrixXd density;    // D_{r,z} u_N as cell densities (nt x nx)
  double Q = 0.0;             // sum |D|^2 dt dx
};

MalliavinSample malliavin_sample(const ChaosCoefficients& coeffs,
                                 const CellCovariance& cov,
                                 const Eigen::VectorXd& zeta);

/// Max relative defect of the coefficient-level Picard step: the order-n cell
/// tensor must equal one discrete G-smoothing of the order-(n-1) family.
double picard_consistency(const CovarianceModel& model,
                          const CellCovariance& cov, double t, double x, int N);

struct MomentReport {
  long nsamples = 0;
  double mc_mean = 0.0;
  double mc_second = 0.0;
  double mc_second_se = 0.0;
  double discrete_second = 0.0;   // 1 + sum_n tensor_norm2(n), exact
  double continuum_second = 0.0;  // kernels::second_moment_series partial sum
  double continuum_tail = 0.0;
};

MomentReport mc_second_moment(const CovarianceModel& model,
                              const ChaosCoefficients& coeffs,
                              const CellCovariance& cov, long nsamples,
                              std::uint64_t seed);

/// Per-order MC law diagnostics over a common sample set.
struct ChaosLawStudy {
  long nsamples = 0;
  std::array<double, 4> var{};       // sample Var(I_n)
  std::array<double, 4> var_se{};
  std::array<double, 4> exact_var{}; // tensor_norm2(n)
  double cov12 = 0.0, cov13 = 0.0, cov23 = 0.0;
  double cov12_se = 0.0, cov13_se = 0.0, cov23_se = 0.0;
};

ChaosLawStudy chaos_law_study(const ChaosCoefficients& coeffs,
                              const CellCovariance& cov, long nsamples,
                              std::uint64_t seed);

struct DensityReport {
  long nsamples = 0;
  double bandwidth = 0.0;
  std::vector<double> kde_x, kde_density;
  double atom_width = 0.0;
  double atom_mass_max = 0.0;
  std::vector<double> truncation_mass;  // P(|u| <= 1/m), m = 1..m_max
  double ks_vs_gaussian = -1.0;         // filled when the exact N=1 law is given
  double ks_critical_5pct = 0.0;
};

/// KDE away from zero, atom scan, and the Omega_m truncation ladder;
/// exact_sigma > 0 adds the Kolmogorov-Smirnov comparison against
/// Gaussian(1, exact_sigma^2).
DensityReport density_report(const std::vector<double>& samples,
                             double bandwidth, int m_max, double atom_width,
                             double exact_sigma);

/// MC estimate of sup over the delta-neighborhood grid of
/// (E|u_N(t,x) - u_N(s,y)|^2)^(1/2).
double modulus_g(const CovarianceModel& model, const CellCovariance& cov,
                 double t, double x, int N, double delta, long nsamples,
                 std::uint64_t seed);

struct SixReport {
  double t = 0.0, x = 0.0;
  int m_level = 0;
  double eps = 1e-8;
  long nsamples = 0;
  std::vector<double> delta_grid;
  std::vector<double> big_gamma_delta;
  std::vector<double> g_estimate;
  std::vector<double> rhs;
  double p_hat = 0.0;  // empirical P({Q < eps} ∩ Omega_m)
  ConstantsTable constants;
};

SixReport delta_scan(const CovarianceModel& model, const CellCovariance& cov,
                     double t, double x, int N, int m_level,
                     const std::vector<double>& delta_grid, long nsamples,
                     std::uint64_t seed);

struct PartitionLevel {
  int m = 0;
  double delta = 0.0;       // calibrated partition diameter
  double threshold = 0.0;   // 2^-m
  double exceedance = 0.0;  // empirical P(|X_m - X| > 2^-m)
};

/// Exceedance of the anchored partition approximant for one level, given
/// field samples on a rectangular grid of points.
double partition_exceedance(const std::vector<Eigen::MatrixXd>& fields,
                            const std::vector<double>& t_grid,
                            const std::vector<double>& x_grid, double delta,
                            double threshold);

/// Builds the order-1 solution field on a fine target grid, calibrates the
/// per-level partition diameter from the exact Gaussian modulus, and reports
/// the exceedance ladder.
std::vector<PartitionLevel> partition_approximant_study(
    const CovarianceModel& model, const CellCovariance& cov, double t_max,
    double x_halfwidth, int targets_t, int targets_x,
    const std::vector<int>& levels, long nsamples, std::uint64_t seed);

}  // namespace chaoswave
