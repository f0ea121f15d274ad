#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "chaoswave/model.hpp"

namespace chaoswave {

struct GridSpec {
  double T = 1.0;   // time horizon
  double L = 1.0;   // spatial half-width: space is [-L, L]
  int nt = 16;
  int nx = 16;

  double dt() const { return T / nt; }
  double dx() const { return 2.0 * L / nx; }
  int cells() const { return nt * nx; }
  void validate() const;
};

/// C_time[i][j] = ∫∫ gamma over the cell pair, exact via second differences
/// of the fBm covariance R(s,u).
Eigen::MatrixXd temporal_cell_cov(const CovarianceModel& model,
                                  const GridSpec& grid);

/// C_space[k][l]: riesz mode second differences of the double primitive of f;
/// white mode dx on the diagonal.
Eigen::MatrixXd spatial_cell_cov(const CovarianceModel& model,
                                 const GridSpec& grid);

/// Square-root factor of a symmetric PSD matrix: Cholesky when it succeeds,
/// otherwise a symmetric eigen square root with negative eigenvalues above
/// -slack_tol * trace clipped to zero.
struct Factor {
  Eigen::MatrixXd L;      // C = L L^T
  bool cholesky = false;  // triangular factor (else symmetric eigen root)
  double psd_slack = 0.0; // most negative clipped eigenvalue, as a magnitude
  // For the eigen path, kept for pseudo-inverse application.
  Eigen::MatrixXd eigvecs;
  Eigen::VectorXd sqrt_eigs;

  Eigen::MatrixXd solve_transposed(const Eigen::MatrixXd& rhs) const;
};

struct CellCovariance {
  GridSpec grid;
  Eigen::MatrixXd C_time, C_space;
  Factor F_time, F_space;
  bool factorized = false;
};

CellCovariance build_covariance(const CovarianceModel& model,
                                const GridSpec& grid);

/// Computes the square-root factors; throws NotPositiveSemiDefinite when an
/// eigenvalue is below -1e-10 * trace.
void factorize(CellCovariance& cov);

struct NoiseSample {
  Eigen::VectorXd zeta;        // nt*nx standard normals (time-major)
  Eigen::MatrixXd increments;  // nt x nx, (L_time Z L_space^T)
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
};

/// Deterministic sampler: sample(i) depends only on (seed, i), so consumers
/// may generate in parallel and reduce in index order.
class NoiseGenerator {
 public:
  NoiseGenerator(const CellCovariance& cov, std::uint64_t seed);

  NoiseSample sample(std::uint64_t index) const;
  /// Normal coordinates only (no Kronecker application).
  Eigen::VectorXd normals(std::uint64_t index) const;

  const CellCovariance& covariance() const { return *cov_; }
  std::uint64_t seed() const { return seed_; }

 private:
  const CellCovariance* cov_;
  std::uint64_t seed_;
};

/// Binary sample dump: 32-byte header (magic "CWNS", u32 version, u32 nt,
/// u32 nx, u64 count, u64 seed, 4 zero bytes), then count nt*nx little-endian
/// doubles, row-major in time-major order.
void write_noise_dump(const std::string& path, const NoiseGenerator& gen,
                      std::uint64_t count);
struct NoiseDumpHeader {
  std::uint32_t version = 1;
  std::uint32_t nt = 0;
  std::uint32_t nx = 0;
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
};
NoiseDumpHeader read_noise_dump_header(const std::string& path);

}  // namespace chaoswave
