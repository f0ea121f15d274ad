#include "chaoswave/noise.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "chaoswave/kernels.hpp"
#include "chaoswave/rng.hpp"

namespace chaoswave {

void GridSpec::validate() const {
  if (!(T > 0.0) || !(L > 0.0))
    throw std::invalid_argument("grid: T and L must be positive");
  if (nt < 1 || nx < 1) throw std::invalid_argument("grid: nt, nx >= 1");
  if (static_cast<long>(nt) * nx > 100000)
    throw std::invalid_argument("grid: nt*nx exceeds the 1e5 budget guard");
}

Eigen::MatrixXd temporal_cell_cov(const CovarianceModel& model,
                                  const GridSpec& grid) {
  grid.validate();
  const double two_h = 2.0 * model.hurst();
  const double dt = grid.dt();
  auto R = [two_h](double s, double u) {
    return 0.5 * (std::pow(s, two_h) + std::pow(u, two_h) -
                  std::pow(std::abs(s - u), two_h));
  };
  Eigen::MatrixXd C(grid.nt, grid.nt);
  for (int i = 0; i < grid.nt; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double a = i * dt, b = (i + 1) * dt;
      const double c = j * dt, d = (j + 1) * dt;
      const double v = R(b, d) - R(b, c) - R(a, d) + R(a, c);
      C(i, j) = v;
      C(j, i) = v;
    }
  }
  return C;
}

Eigen::MatrixXd spatial_cell_cov(const CovarianceModel& model,
                                 const GridSpec& grid) {
  grid.validate();
  const double dx = grid.dx();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(grid.nx, grid.nx);
  if (model.is_white()) {
    C.diagonal().setConstant(dx);
    return C;
  }
  // Toeplitz: the entry depends only on |k - l|.
  for (int lag = 0; lag < grid.nx; ++lag) {
    const double e0 = lag * dx;
    const double v = double_primitive(model, e0 + dx) -
                     2.0 * double_primitive(model, e0) +
                     double_primitive(model, std::abs(e0 - dx));
    for (int k = lag; k < grid.nx; ++k) {
      C(k, k - lag) = v;
      C(k - lag, k) = v;
    }
  }
  return C;
}

namespace {

Factor factor_of(const Eigen::MatrixXd& C) {
  Factor f;
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() == Eigen::Success) {
    f.L = llt.matrixL();
    f.cholesky = true;
    return f;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  const double slack_tol = 1e-10 * C.trace();
  Eigen::VectorXd lam = es.eigenvalues();
  double worst = 0.0;
  for (int i = 0; i < lam.size(); ++i) {
    if (lam(i) < 0.0) {
      worst = std::max(worst, -lam(i));
      lam(i) = 0.0;
    }
  }
  if (worst > slack_tol)
    throw NotPositiveSemiDefinite(
        "not positive semidefinite: eigenvalue deficit " +
        std::to_string(worst) + " exceeds slack " + std::to_string(slack_tol));
  f.cholesky = false;
  f.psd_slack = worst;
  f.eigvecs = es.eigenvectors();
  f.sqrt_eigs = lam.cwiseSqrt();
  f.L = f.eigvecs * f.sqrt_eigs.asDiagonal() * f.eigvecs.transpose();
  return f;
}

}  // namespace

Eigen::MatrixXd Factor::solve_transposed(const Eigen::MatrixXd& rhs) const {
  if (cholesky)
    return L.transpose()
        .triangularView<Eigen::Upper>()
        .solve(rhs);
  // Symmetric eigen root: pseudo-inverse through the spectral data.
  Eigen::VectorXd inv = sqrt_eigs;
  for (int i = 0; i < inv.size(); ++i)
    inv(i) = inv(i) > 1e-300 ? 1.0 / inv(i) : 0.0;
  return eigvecs * inv.asDiagonal() * eigvecs.transpose() * rhs;
}

CellCovariance build_covariance(const CovarianceModel& model,
                                const GridSpec& grid) {
  CellCovariance cov;
  cov.grid = grid;
  cov.C_time = temporal_cell_cov(model, grid);
  cov.C_space = spatial_cell_cov(model, grid);
  return cov;
}

void factorize(CellCovariance& cov) {
  cov.F_time = factor_of(cov.C_time);
  cov.F_space = factor_of(cov.C_space);
  cov.factorized = true;
}

NoiseGenerator::NoiseGenerator(const CellCovariance& cov, std::uint64_t seed)
    : cov_(&cov), seed_(seed) {
  if (!cov.factorized)
    throw std::logic_error("NoiseGenerator requires a factorized covariance");
}

Eigen::VectorXd NoiseGenerator::normals(std::uint64_t index) const {
  const int m = cov_->grid.cells();
  SampleRng rng(seed_, index);
  Eigen::VectorXd z(m);
  for (int i = 0; i < m; ++i) z(i) = rng.normal();
  return z;
}

NoiseSample NoiseGenerator::sample(std::uint64_t index) const {
  NoiseSample s;
  s.seed = seed_;
  s.index = index;
  s.zeta = normals(index);
  const int nt = cov_->grid.nt, nx = cov_->grid.nx;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      Z(s.zeta.data(), nt, nx);
  // Kronecker application without materializing the product.
  s.increments = cov_->F_time.L * Z * cov_->F_space.L.transpose();
  return s;
}

void write_noise_dump(const std::string& path, const NoiseGenerator& gen,
                      std::uint64_t count) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  const GridSpec& g = gen.covariance().grid;
  char header[32] = {0};
  std::memcpy(header, "CWNS", 4);
  const std::uint32_t version = 1, nt = g.nt, nx = g.nx;
  const std::uint64_t cnt = count, seed = gen.seed();
  std::memcpy(header + 4, &version, 4);
  std::memcpy(header + 8, &nt, 4);
  std::memcpy(header + 12, &nx, 4);
  std::memcpy(header + 16, &cnt, 8);
  std::memcpy(header + 24, &seed, 8);
  out.write(header, sizeof(header));
  for (std::uint64_t i = 0; i < count; ++i) {
    const NoiseSample s = gen.sample(i);
    for (int it = 0; it < g.nt; ++it)
      for (int ix = 0; ix < g.nx; ++ix) {
        const double v = s.increments(it, ix);
        out.write(reinterpret_cast<const char*>(&v), sizeof(double));
      }
  }
}

NoiseDumpHeader read_noise_dump_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char header[32];
  in.read(header, sizeof(header));
  if (in.gcount() != sizeof(header) || std::memcmp(header, "CWNS", 4) != 0)
    throw std::runtime_error("bad noise dump header in " + path);
  NoiseDumpHeader h;
  std::memcpy(&h.version, header + 4, 4);
  std::memcpy(&h.nt, header + 8, 4);
  std::memcpy(&h.nx, header + 12, 4);
  std::memcpy(&h.count, header + 16, 8);
  std::memcpy(&h.seed, header + 24, 8);
  return h;
}

}  // namespace chaoswave
