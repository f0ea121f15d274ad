#include <doctest.h>

#include <chaoswave/kernels.hpp>
#include <chaoswave/noise.hpp>
#include <chaoswave/stats.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "oracles.hpp"

using namespace chaoswave;

namespace {
const CovarianceModel& riesz_default() {
  static CovarianceModel m = CovarianceModel::riesz(0.75, 0.5);
  return m;
}
}  // namespace

TEST_CASE("grid validation") {
  GridSpec bad{0.0, 1.0, 8, 8};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  GridSpec big{1.0, 1.0, 1000, 1000};
  CHECK_THROWS_AS(big.validate(), std::invalid_argument);
}

TEST_CASE("temporal cell covariance") {
  GridSpec g{2.0, 1.0, 2, 2};  // two unit cells in time
  const Eigen::MatrixXd C = temporal_cell_cov(riesz_default(), g);
  // adjacent unit cells: R-second-difference = sqrt(2) - 1
  CHECK(C(0, 1) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-13));
  // same cell [0,1]^2: R(1,1) = 1
  CHECK(C(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(C(1, 0) == C(0, 1));

  // far-apart cells match direct quadrature of gamma over the box
  GridSpec gf{11.0, 1.0, 11, 1};
  const Eigen::MatrixXd Cf = temporal_cell_cov(riesz_default(), gf);
  const double H = 0.75;
  const double quad = oracles::simpson(
      [&](double s) {
        return oracles::simpson(
            [&](double u) {
              return H * (2.0 * H - 1.0) * std::pow(std::abs(s - u), 2.0 * H - 2.0);
            },
            10.0, 11.0, 1e-12);
      },
      0.0, 1.0, 1e-11);
  CHECK(Cf(0, 10) == doctest::Approx(quad).epsilon(1e-6));
  // stationarity of increments: constant diagonal
  for (int i = 1; i < gf.nt; ++i)
    CHECK(Cf(i, i) == doctest::Approx(Cf(0, 0)).epsilon(1e-12));
}

TEST_CASE("spatial cell covariance") {
  // white: dx on the diagonal
  GridSpec g{1.0, 1.0, 1, 8};
  const CovarianceModel w = CovarianceModel::white(0.75);
  const Eigen::MatrixXd Cw = spatial_cell_cov(w, g);
  CHECK(Cw(3, 3) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(Cw(3, 4) == 0.0);

  // riesz same unit cell: 2 P(1) = 8/3
  GridSpec g1{1.0, 1.0, 1, 2};  // dx = 1
  const Eigen::MatrixXd Cr = spatial_cell_cov(riesz_default(), g1);
  CHECK(Cr(0, 0) == doctest::Approx(8.0 / 3.0).epsilon(1e-13));
  // against box quadrature of |x - y|^(alpha - 1)
  const double quad = oracles::power_weighted(
      [&](double u) { return overlap_lambda(0.5, 0.5, u); }, 0.5, -1.5, 1.5);
  CHECK(Cr(0, 0) == doctest::Approx(quad).epsilon(1e-8));

  // Toeplitz structure
  GridSpec g8{1.0, 1.0, 1, 8};
  const Eigen::MatrixXd C8 = spatial_cell_cov(riesz_default(), g8);
  for (int k = 0; k < 8; ++k)
    for (int l = 0; l < 8; ++l)
      CHECK(C8(k, l) == doctest::Approx(C8(std::abs(k - l), 0)).epsilon(1e-12));
}

TEST_CASE("factorize") {
  // identity factors to identity
  CellCovariance cov;
  cov.grid = GridSpec{1.0, 1.0, 3, 3};
  cov.C_time = Eigen::MatrixXd::Identity(3, 3);
  cov.C_space = Eigen::MatrixXd::Identity(3, 3);
  factorize(cov);
  CHECK((cov.F_time.L - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-14);

  // fractional matrix at nt = 16: reconstruction within 1e-10 of the trace
  GridSpec g{1.0, 1.0, 16, 16};
  CellCovariance c2 = build_covariance(riesz_default(), g);
  factorize(c2);
  const double tol_t = 1e-10 * c2.C_time.trace();
  CHECK((c2.F_time.L * c2.F_time.L.transpose() - c2.C_time)
            .cwiseAbs()
            .maxCoeff() < std::max(tol_t, 1e-14));
  const double tol_x = 1e-10 * c2.C_space.trace();
  CHECK((c2.F_space.L * c2.F_space.L.transpose() - c2.C_space)
            .cwiseAbs()
            .maxCoeff() < std::max(tol_x, 1e-12));

  // deliberately corrupted non-PSD matrix errors out
  CellCovariance bad;
  bad.grid = GridSpec{1.0, 1.0, 2, 2};
  bad.C_time = Eigen::MatrixXd::Identity(2, 2);
  bad.C_time(0, 0) = -1.0;
  bad.C_space = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(factorize(bad), NotPositiveSemiDefinite);

  // a singular-but-PSD matrix goes through the eigen-clip path
  CellCovariance rank1;
  rank1.grid = GridSpec{1.0, 1.0, 2, 2};
  rank1.C_time.setConstant(2, 2, 1.0);  // rank 1
  rank1.C_space = Eigen::MatrixXd::Identity(2, 2);
  factorize(rank1);
  CHECK_FALSE(rank1.F_time.cholesky);
  CHECK((rank1.F_time.L * rank1.F_time.L.transpose() - rank1.C_time).norm() <
        1e-12);
}

TEST_CASE("sampling determinism and law") {
  GridSpec g{1.0, 1.0, 8, 8};
  CellCovariance cov = build_covariance(riesz_default(), g);
  factorize(cov);
  NoiseGenerator gen(cov, 12345);

  const NoiseSample a = gen.sample(7);
  const NoiseSample b = gen.sample(7);
  CHECK((a.increments - b.increments).norm() == 0.0);
  const NoiseSample c = gen.sample(8);
  CHECK((a.increments - c.increments).norm() > 0.0);

  // Kronecker identity: three covariance entries against the product of
  // independent 2D quadratures (gamma-box times f-box)
  const double H = 0.75;
  auto gamma_box = [&](int i, int j) {
    const double dt = g.dt();
    return oracles::fbm_cov(H, (i + 1) * dt, (j + 1) * dt) -
           oracles::fbm_cov(H, (i + 1) * dt, j * dt) -
           oracles::fbm_cov(H, i * dt, (j + 1) * dt) +
           oracles::fbm_cov(H, i * dt, j * dt);
  };
  auto f_box = [&](int k, int l) {
    const double dx = g.dx();
    return oracles::power_weighted(
        [&](double u) {
          return overlap_lambda(0.5 * dx, 0.5 * dx, u - (k - l) * dx);
        },
        0.5, (k - l) * dx - dx, (k - l) * dx + dx);
  };
  for (auto [i, j, k, l] :
       {std::array<int, 4>{0, 1, 2, 2}, {3, 3, 0, 4}, {1, 6, 5, 3}}) {
    const double exact = cov.C_time(i, j) * cov.C_space(k, l);
    const double oracle = gamma_box(i, j) * f_box(k, l);
    CHECK(exact == doctest::Approx(oracle).epsilon(1e-5));
  }

  // empirical covariance over 1e5 samples within 4 SE entrywise
  const long n = 100000;
  const int m = g.cells();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(m, m);
  std::vector<double> lin(static_cast<std::size_t>(n));
  Eigen::VectorXd v(m);
  for (long s = 0; s < n; ++s) {
    const NoiseSample ns = gen.sample(static_cast<std::uint64_t>(s));
    for (int it = 0; it < g.nt; ++it)
      for (int ix = 0; ix < g.nx; ++ix)
        v(it * g.nx + ix) = ns.increments(it, ix);
    sum.noalias() += v * v.transpose();
    lin[static_cast<std::size_t>(s)] = v.sum();
  }
  const Eigen::MatrixXd emp = sum / static_cast<double>(n);
  double worst = 0.0;
  for (int a2 = 0; a2 < m; ++a2)
    for (int b2 = 0; b2 < m; ++b2) {
      const double exact = cov.C_time(a2 / g.nx, b2 / g.nx) *
                           cov.C_space(a2 % g.nx, b2 % g.nx);
      const double se =
          std::sqrt((cov.C_time(a2 / g.nx, a2 / g.nx) *
                         cov.C_space(a2 % g.nx, a2 % g.nx) *
                         cov.C_time(b2 / g.nx, b2 / g.nx) *
                         cov.C_space(b2 % g.nx, b2 % g.nx) +
                     exact * exact) /
                    n);
      worst = std::max(worst, std::abs(emp(a2, b2) - exact) / se);
    }
  CHECK(worst <= 4.0);

  // linear functional skewness within 4 SE of zero
  const Moments mo = compute_moments(lin);
  CHECK(std::abs(mo.skewness) <= 4.0 * std::sqrt(6.0 / n));
}

TEST_CASE("white spatial mode: distinct columns uncorrelated") {
  GridSpec g{1.0, 1.0, 4, 8};
  const CovarianceModel w = CovarianceModel::white(0.75);
  CellCovariance cov = build_covariance(w, g);
  factorize(cov);
  NoiseGenerator gen(cov, 777);
  const long n = 100000;
  double cross = 0.0, var0 = 0.0, var1 = 0.0;
  for (long s = 0; s < n; ++s) {
    const NoiseSample ns = gen.sample(static_cast<std::uint64_t>(s));
    const double a = ns.increments.col(2).sum();
    const double b = ns.increments.col(5).sum();
    cross += a * b;
    var0 += a * a;
    var1 += b * b;
  }
  cross /= n;
  var0 /= n;
  var1 /= n;
  const double se = std::sqrt(var0 * var1 / n);
  CHECK(std::abs(cross) <= 4.0 * se);
}

TEST_CASE("binary dump round trip") {
  GridSpec g{1.0, 1.0, 4, 4};
  CellCovariance cov = build_covariance(riesz_default(), g);
  factorize(cov);
  NoiseGenerator gen(cov, 99);
  const std::string path = "noise_dump_test.cwns";
  write_noise_dump(path, gen, 5);
  const NoiseDumpHeader h = read_noise_dump_header(path);
  CHECK(h.version == 1);
  CHECK(h.nt == 4);
  CHECK(h.nx == 4);
  CHECK(h.count == 5);
  CHECK(h.seed == 99);
  CHECK(std::filesystem::file_size(path) == 32 + 5 * 4 * 4 * 8);
  std::filesystem::remove(path);
}
