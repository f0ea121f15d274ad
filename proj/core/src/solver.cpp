#include "chaoswave/solver.hpp"

#include <algorithm>
#include <cmath>

#include "chaoswave/quadrature.hpp"
#include "chaoswave/rng.hpp"
#include "chaoswave/stats.hpp"

namespace chaoswave {

namespace {

constexpr int kCellGauss = 5;  // per-dimension rule for outer cell averages

struct CellGeometry {
  GridSpec grid;
  double t0(int it) const { return it * grid.dt(); }
  double x0(int ix) const { return -grid.L + ix * grid.dx(); }
  int it_of(int c) const { return c / grid.nx; }
  int ix_of(int c) const { return c % grid.nx; }
};

/// Recursive cell-averaged chain kernels: level n averages
/// G(target - z_n) * level_{n-1}(..., z_n) over cell c_n, with the innermost
/// level the exact cone average.
class ChainBuilder {
 public:
  ChainBuilder(const GridSpec& grid) : geo_{grid} {
    const GaussRule& r = gauss_rule(kCellGauss);
    nodes_ = r.nodes;
    weights_ = r.weights;
  }

  double level1(int c, double tau, double chi) const {
    const int it = geo_.it_of(c), ix = geo_.ix_of(c);
    return WaveKernel::cell_average(tau, chi, geo_.t0(it), geo_.t0(it + 1),
                                    geo_.x0(ix), geo_.x0(ix + 1));
  }

  template <typename Inner>
  double smooth(int c, double tau, double chi, Inner&& inner) const {
    const int it = geo_.it_of(c), ix = geo_.ix_of(c);
    const double ta = geo_.t0(it), tb = geo_.t0(it + 1);
    const double xa = geo_.x0(ix), xb = geo_.x0(ix + 1);
    const double tm = 0.5 * (ta + tb), th = 0.5 * (tb - ta);
    const double xm = 0.5 * (xa + xb), xh = 0.5 * (xb - xa);
    double acc = 0.0;
    for (int i = 0; i < kCellGauss; ++i) {
      const double tt = tm + th * nodes_[i];
      double row = 0.0;
      for (int j = 0; j < kCellGauss; ++j) {
        const double xx = xm + xh * nodes_[j];
        const double g = WaveKernel::G(tau - tt, chi - xx);
        if (g != 0.0) row += weights_[j] * g * inner(tt, xx);
      }
      acc += weights_[i] * row;
    }
    return acc * 0.25;  // Gauss weights integrate to 2 per dimension
  }

  double level2(int c, int d, double tau, double chi) const {
    if (geo_.it_of(c) > geo_.it_of(d)) return 0.0;
    return smooth(d, tau, chi,
                  [&](double tt, double xx) { return level1(c, tt, xx); });
  }

  double level3(int c, int d, int e, double tau, double chi) const {
    if (geo_.it_of(c) > geo_.it_of(d) || geo_.it_of(d) > geo_.it_of(e))
      return 0.0;
    return smooth(e, tau, chi,
                  [&](double tt, double xx) { return level2(c, d, tt, xx); });
  }

  const CellGeometry& geometry() const { return geo_; }

 private:
  CellGeometry geo_;
  std::vector<double> nodes_, weights_;
};

Eigen::MatrixXd kron_factor(const Factor& ft, const Factor& fx, int nt,
                            int nx) {
  const int m = nt * nx;
  Eigen::MatrixXd W(m, m);
  for (int it = 0; it < nt; ++it)
    for (int ix = 0; ix < nx; ++ix)
      for (int jt = 0; jt < nt; ++jt)
        for (int jx = 0; jx < nx; ++jx)
          W(it * nx + ix, jt * nx + jx) = ft.L(it, jt) * fx.L(ix, jx);
  return W;
}

}  // namespace

double ChaosCoefficients::tensor_norm2(int n) const {
  switch (n) {
    case 1:
      return N >= 1 ? c1.squaredNorm() : 0.0;
    case 2:
      return N >= 2 ? 2.0 * V2.squaredNorm() : 0.0;
    case 3: {
      if (N < 3) return 0.0;
      double s = 0.0;
      for (double v : T3) s += v * v;
      return 6.0 * s;
    }
    default:
      throw std::invalid_argument("tensor_norm2: n in {1,2,3}");
  }
}

double ChaosCoefficients::alpha_estimate(int n) const {
  double fact = 1.0;
  for (int k = 2; k <= n; ++k) fact *= k;
  return fact * tensor_norm2(n);
}

ChaosCoefficients project_kernels(const CovarianceModel& model,
                                  const CellCovariance& cov, double t, double x,
                                  int N) {
  (void)model;
  if (!cov.factorized)
    throw std::logic_error("project_kernels requires a factorized covariance");
  if (N < 0 || N > 3) throw std::invalid_argument("project_kernels: N <= 3");
  const GridSpec& grid = cov.grid;
  if (!(t > 0.0) || !(t <= grid.T) || !(std::abs(x) <= grid.L))
    throw std::invalid_argument("project_kernels: target outside the grid");
  if (N >= 3 && (grid.nt > 10 || grid.nx > 10))
    throw std::invalid_argument(
        "project_kernels: order-3 tensors restricted to nt, nx <= 10");

  ChaosCoefficients co;
  co.grid = grid;
  co.t = t;
  co.x = x;
  co.N = N;
  co.m = grid.cells();
  const int m = co.m;
  const int nt = grid.nt, nx = grid.nx;

  ChainBuilder chain(grid);

  if (N >= 1) {
    co.cells1.resize(nt, nx);
    for (int it = 0; it < nt; ++it)
      for (int ix = 0; ix < nx; ++ix)
        co.cells1(it, ix) = chain.level1(it * nx + ix, t, x);
    // c1 = (L_t (x) L_x)^T cells, applied as L_t^T Phi L_x.
    const Eigen::MatrixXd v = cov.F_time.L.transpose() * co.cells1 * cov.F_space.L;
    co.c1.resize(m);
    for (int it = 0; it < nt; ++it)
      for (int ix = 0; ix < nx; ++ix) co.c1(it * nx + ix) = v(it, ix);
  }

  if (N >= 2) {
    co.cells2 = Eigen::MatrixXd::Zero(m, m);
    std::vector<double> b(static_cast<std::size_t>(m) * m, 0.0);
    parallel_chunks(static_cast<std::size_t>(m), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t c = lo; c < hi; ++c)
        for (int d = 0; d < m; ++d)
          b[c * m + d] = chain.level2(static_cast<int>(c), d, t, x);
    });
    for (int c = 0; c < m; ++c)
      for (int d = 0; d < m; ++d)
        co.cells2(c, d) = 0.5 * (b[static_cast<std::size_t>(c) * m + d] +
                                 b[static_cast<std::size_t>(d) * m + c]);
    const Eigen::MatrixXd W =
        kron_factor(cov.F_time, cov.F_space, nt, nx);
    co.V2 = W.transpose() * co.cells2 * W;
    co.V2.diagonal().setZero();
  }

  if (N >= 3) {
    const std::size_t mm = static_cast<std::size_t>(m);
    co.cells3.assign(mm * mm * mm, 0.0);
    // Ordered evaluations of f_3 averaged over cell triples, then
    // symmetrized into every index permutation.
    parallel_chunks(mm, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t c = lo; c < hi; ++c) {
        for (std::size_t d = 0; d < mm; ++d) {
          if (chain.geometry().it_of(static_cast<int>(c)) >
              chain.geometry().it_of(static_cast<int>(d)))
            continue;
          for (std::size_t e = 0; e < mm; ++e) {
            const double v = chain.level3(static_cast<int>(c),
                                          static_cast<int>(d),
                                          static_cast<int>(e), t, x);
            if (v != 0.0) co.cells3[(c * mm + d) * mm + e] = v;
          }
        }
      }
    });
    // Symmetrize: f~_3 = mean over argument permutations, computed once per
    // sorted triple and copied so the tensor is bit-exactly symmetric.
    std::vector<double> sym(mm * mm * mm, 0.0);
    auto scatter = [&](std::vector<double>& dst, std::size_t c, std::size_t d,
                       std::size_t e, double v) {
      dst[(c * mm + d) * mm + e] = v;
      dst[(c * mm + e) * mm + d] = v;
      dst[(d * mm + c) * mm + e] = v;
      dst[(d * mm + e) * mm + c] = v;
      dst[(e * mm + c) * mm + d] = v;
      dst[(e * mm + d) * mm + c] = v;
    };
    for (std::size_t c = 0; c < mm; ++c)
      for (std::size_t d = c; d < mm; ++d)
        for (std::size_t e = d; e < mm; ++e) {
          const double s =
              (co.cells3[(c * mm + d) * mm + e] + co.cells3[(c * mm + e) * mm + d] +
               co.cells3[(d * mm + c) * mm + e] + co.cells3[(d * mm + e) * mm + c] +
               co.cells3[(e * mm + c) * mm + d] + co.cells3[(e * mm + d) * mm + c]) /
              6.0;
          scatter(sym, c, d, e, s);
        }
    co.cells3.swap(sym);

    const Eigen::MatrixXd W =
        kron_factor(cov.F_time, cov.F_space, nt, nx);
    // Mode products with W^T: T x_k W^T for each mode.
    std::vector<double> tmp(mm * mm * mm, 0.0);
    auto mode_apply = [&](const std::vector<double>& in,
                          std::vector<double>& out, int mode) {
      // out[..., p, ...] = sum_q W(q, p) in[..., q, ...]
      std::fill(out.begin(), out.end(), 0.0);
      for (std::size_t a = 0; a < mm; ++a)
        for (std::size_t bq = 0; bq < mm; ++bq)
          for (std::size_t cq = 0; cq < mm; ++cq) {
            const double v = in[(a * mm + bq) * mm + cq];
            if (v == 0.0) continue;
            switch (mode) {
              case 0:
                for (std::size_t p = 0; p < mm; ++p)
                  out[(p * mm + bq) * mm + cq] += W(a, p) * v;
                break;
              case 1:
                for (std::size_t p = 0; p < mm; ++p)
                  out[(a * mm + p) * mm + cq] += W(bq, p) * v;
                break;
              default:
                for (std::size_t p = 0; p < mm; ++p)
                  out[(a * mm + bq) * mm + p] += W(cq, p) * v;
            }
          }
    };
    co.T3.assign(mm * mm * mm, 0.0);
    mode_apply(co.cells3, tmp, 0);
    std::vector<double> tmp2(mm * mm * mm, 0.0);
    mode_apply(tmp, tmp2, 1);
    mode_apply(tmp2, co.T3, 2);
    // The mode products are symmetric only up to accumulation order;
    // canonicalize from the sorted-index representative, then zero every
    // repeated-index entry.
    for (std::size_t i = 0; i < mm; ++i)
      for (std::size_t j = i; j < mm; ++j)
        for (std::size_t k = j; k < mm; ++k) {
          const double v = co.T3[(i * mm + j) * mm + k];
          co.T3[(i * mm + k) * mm + j] = v;
          co.T3[(j * mm + i) * mm + k] = v;
          co.T3[(j * mm + k) * mm + i] = v;
          co.T3[(k * mm + i) * mm + j] = v;
          co.T3[(k * mm + j) * mm + i] = v;
        }
    for (std::size_t i = 0; i < mm; ++i)
      for (std::size_t j = 0; j < mm; ++j) {
        co.T3[(i * mm + i) * mm + j] = 0.0;
        co.T3[(i * mm + j) * mm + i] = 0.0;
        co.T3[(j * mm + i) * mm + i] = 0.0;
      }
  }
  return co;
}

SolutionSample sample_solution(const ChaosCoefficients& coeffs,
                               const Eigen::VectorXd& zeta) {
  if (zeta.size() != coeffs.m)
    throw std::invalid_argument("sample_solution: coordinate size mismatch");
  SolutionSample s;
  s.chaos[0] = 1.0;
  double value = 1.0;
  if (coeffs.N >= 1) {
    s.chaos[1] = coeffs.c1.dot(zeta);
    value += s.chaos[1];
  }
  if (coeffs.N >= 2) {
    s.chaos[2] = zeta.dot(coeffs.V2 * zeta);
    value += s.chaos[2];
  }
  if (coeffs.N >= 3) {
    const std::size_t m = static_cast<std::size_t>(coeffs.m);
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(coeffs.m, coeffs.m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        const double* row = &coeffs.T3[(i * m + j) * m];
        for (std::size_t k = 0; k < m; ++k) acc += row[k] * zeta(static_cast<long>(k));
        Y(static_cast<long>(i), static_cast<long>(j)) = acc;
      }
    s.chaos[3] = zeta.dot(Y * zeta);
    value += s.chaos[3];
  }
  s.value = value;
  return s;
}

MalliavinSample malliavin_sample(const ChaosCoefficients& coeffs,
                                 const CellCovariance& cov,
                                 const Eigen::VectorXd& zeta) {
  MalliavinSample out;
  const int m = coeffs.m;
  out.gradient = Eigen::VectorXd::Zero(m);
  if (coeffs.N >= 1) out.gradient += coeffs.c1;
  if (coeffs.N >= 2) out.gradient += 2.0 * (coeffs.V2 * zeta);
  if (coeffs.N >= 3) {
    const std::size_t mm = static_cast<std::size_t>(m);
    Eigen::MatrixXd Y(m, m);
    for (std::size_t i = 0; i < mm; ++i)
      for (std::size_t j = 0; j < mm; ++j) {
        double acc = 0.0;
        const double* row = &coeffs.T3[(i * mm + j) * mm];
        for (std::size_t k = 0; k < mm; ++k) acc += row[k] * zeta(static_cast<long>(k));
        Y(static_cast<long>(i), static_cast<long>(j)) = acc;
      }
    out.gradient += 3.0 * (Y * zeta);
  }
  // Map back through the transposed factor: cell averages of D_{r,z} u_N.
  const int nt = coeffs.grid.nt, nx = coeffs.grid.nx;
  Eigen::MatrixXd G(nt, nx);
  for (int it = 0; it < nt; ++it)
    for (int ix = 0; ix < nx; ++ix) G(it, ix) = out.gradient(it * nx + ix);
  const Eigen::MatrixXd half = cov.F_time.solve_transposed(G);
  out.density = cov.F_space.solve_transposed(half.transpose()).transpose();
  out.Q = out.density.squaredNorm() * coeffs.grid.dt() * coeffs.grid.dx();
  return out;
}

double picard_consistency(const CovarianceModel& model,
                          const CellCovariance& cov, double t, double x,
                          int N) {
  const ChaosCoefficients co = project_kernels(model, cov, t, x, N);
  ChainBuilder chain(cov.grid);
  const int m = co.m;
  double defect = 0.0;
  double scale = 1e-300;

  // n = 1: the stored tensor must be the order-1 smoothing of the constant 1
  // (the exact cone average against G).
  for (int c = 0; c < m; ++c) {
    const double direct = co.cells1(chain.geometry().it_of(c),
                                    chain.geometry().ix_of(c));
    const double smoothed = chain.level1(c, t, x);
    defect = std::max(defect, std::abs(direct - smoothed));
    scale = std::max(scale, std::abs(direct));
  }

  if (N >= 2) {
    // The unsymmetrized order-2 chain must factor through the order-1 family
    // by one smoothing step, and the stored tensor must be its symmetrization.
    Eigen::MatrixXd B(m, m);
    for (int c = 0; c < m; ++c)
      for (int d = 0; d < m; ++d) {
        B(c, d) = (chain.geometry().it_of(c) > chain.geometry().it_of(d))
                      ? 0.0
                      : chain.smooth(d, t, x, [&](double tt, double xx) {
                          return chain.level1(c, tt, xx);
                        });
        const double direct = chain.level2(c, d, t, x);
        defect = std::max(defect, std::abs(direct - B(c, d)));
        scale = std::max(scale, std::abs(direct));
      }
    const double sym_defect =
        (co.cells2 - 0.5 * (B + B.transpose())).cwiseAbs().maxCoeff();
    defect = std::max(defect, sym_defect);
  }
  if (N >= 3) {
    const std::size_t mm = static_cast<std::size_t>(m);
    for (std::size_t c = 0; c < mm; c += 3)
      for (std::size_t d = 0; d < mm; d += 3)
        for (std::size_t e = 0; e < mm; e += 3) {
          const double direct = chain.level3(static_cast<int>(c),
                                             static_cast<int>(d),
                                             static_cast<int>(e), t, x);
          const double smoothed =
              (chain.geometry().it_of(static_cast<int>(d)) >
               chain.geometry().it_of(static_cast<int>(e)))
                  ? 0.0
                  : chain.smooth(static_cast<int>(e), t, x,
                                 [&](double tt, double xx) {
                                   return chain.level2(static_cast<int>(c),
                                                       static_cast<int>(d), tt,
                                                       xx);
                                 });
          defect = std::max(defect, std::abs(direct - smoothed));
          scale = std::max(scale, std::abs(direct));
        }
  }
  return defect / scale;
}

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

std::vector<std::array<double, 4>> evaluate_block(const ChaosCoefficients& co,
                                                  const Eigen::MatrixXd& Z) {
  const long B = Z.cols();
  std::vector<std::array<double, 4>> out(static_cast<std::size_t>(B),
                                         {1.0, 0.0, 0.0, 0.0});
  if (co.N >= 1) {
    const Eigen::RowVectorXd i1 = co.c1.transpose() * Z;
    for (long b = 0; b < B; ++b) out[static_cast<std::size_t>(b)][1] = i1(b);
  }
  if (co.N >= 2) {
    const Eigen::MatrixXd Y = co.V2 * Z;
    for (long b = 0; b < B; ++b)
      out[static_cast<std::size_t>(b)][2] = Z.col(b).dot(Y.col(b));
  }
  if (co.N >= 3) {
    const long m = co.m;
    RowMajorMap M3(co.T3.data(), m * m, m);  // (i*m + j, k) layout
    const Eigen::MatrixXd Wb = M3 * Z;       // (m^2) x B
    for (long b = 0; b < B; ++b) {
      // T3 is fully symmetric, so the (i,j) layout of the column is immaterial.
      Eigen::Map<const Eigen::MatrixXd> Yb(Wb.col(b).data(), m, m);
      out[static_cast<std::size_t>(b)][3] = Z.col(b).dot(Yb * Z.col(b));
    }
  }
  return out;
}

/// Deterministic parallel sampling of the per-order chaos values; results are
/// index-addressed, so the worker layout cannot change them.
std::vector<std::array<double, 4>> sample_chaos_values(
    const ChaosCoefficients& co, const NoiseGenerator& gen, long nsamples) {
  std::vector<std::array<double, 4>> all(static_cast<std::size_t>(nsamples));
  const long block = 256;
  const long nblocks = (nsamples + block - 1) / block;
  parallel_chunks(static_cast<std::size_t>(nblocks),
                  [&](std::size_t blo, std::size_t bhi) {
                    Eigen::MatrixXd Z(co.m, block);
                    for (std::size_t bk = blo; bk < bhi; ++bk) {
                      const long start = static_cast<long>(bk) * block;
                      const long B = std::min(block, nsamples - start);
                      for (long b = 0; b < B; ++b)
                        Z.col(b) = gen.normals(
                            static_cast<std::uint64_t>(start + b));
                      const auto ev = evaluate_block(co, Z.leftCols(B));
                      for (long b = 0; b < B; ++b)
                        all[static_cast<std::size_t>(start + b)] =
                            ev[static_cast<std::size_t>(b)];
                    }
                  });
  return all;
}

}  // namespace

MomentReport mc_second_moment(const CovarianceModel& model,
                              const ChaosCoefficients& coeffs,
                              const CellCovariance& cov, long nsamples,
                              std::uint64_t seed) {
  MomentReport rep;
  rep.nsamples = nsamples;
  rep.discrete_second = 1.0;
  for (int n = 1; n <= coeffs.N; ++n)
    rep.discrete_second += coeffs.tensor_norm2(n);
  const AlphaReport series = second_moment_series(model, coeffs.t, coeffs.N);
  rep.continuum_second = series.partial_sum;
  rep.continuum_tail = series.tail_bound;
  if (nsamples <= 0) return rep;

  NoiseGenerator gen(cov, seed);
  const auto all = sample_chaos_values(coeffs, gen, nsamples);
  std::vector<double> sq(all.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const double u = all[i][0] + all[i][1] + all[i][2] + all[i][3];
    sq[i] = u * u;
    mean += u;
  }
  rep.mc_mean = mean / nsamples;
  const Moments m = compute_moments(sq);
  rep.mc_second = m.mean;
  rep.mc_second_se = m.mean_se;
  return rep;
}

ChaosLawStudy chaos_law_study(const ChaosCoefficients& coeffs,
                              const CellCovariance& cov, long nsamples,
                              std::uint64_t seed) {
  ChaosLawStudy st;
  st.nsamples = nsamples;
  NoiseGenerator gen(cov, seed);
  const auto all = sample_chaos_values(coeffs, gen, nsamples);
  for (int n = 1; n <= coeffs.N; ++n) {
    std::vector<double> xs(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) xs[i] = all[i][static_cast<std::size_t>(n)];
    const Moments m = compute_moments(xs);
    st.var[static_cast<std::size_t>(n)] = m.variance;
    st.var_se[static_cast<std::size_t>(n)] = m.variance_se;
    st.exact_var[static_cast<std::size_t>(n)] = coeffs.tensor_norm2(n);
  }
  auto cov_pair = [&](int a, int b, double* se) {
    double ma = 0.0, mb = 0.0;
    for (const auto& ch : all) {
      ma += ch[static_cast<std::size_t>(a)];
      mb += ch[static_cast<std::size_t>(b)];
    }
    ma /= nsamples;
    mb /= nsamples;
    std::vector<double> prod(all.size());
    for (std::size_t i = 0; i < all.size(); ++i)
      prod[i] = (all[i][static_cast<std::size_t>(a)] - ma) *
                (all[i][static_cast<std::size_t>(b)] - mb);
    const Moments m = compute_moments(prod);
    *se = m.mean_se;
    return m.mean;
  };
  if (coeffs.N >= 2) st.cov12 = cov_pair(1, 2, &st.cov12_se);
  if (coeffs.N >= 3) {
    st.cov13 = cov_pair(1, 3, &st.cov13_se);
    st.cov23 = cov_pair(2, 3, &st.cov23_se);
  }
  return st;
}

DensityReport density_report(const std::vector<double>& samples,
                             double bandwidth, int m_max, double atom_width,
                             double exact_sigma) {
  if (samples.size() < 2)
    throw std::invalid_argument("density_report: need samples");
  DensityReport rep;
  rep.nsamples = static_cast<long>(samples.size());
  rep.bandwidth = bandwidth;
  rep.atom_width = atom_width;

  const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *mn_it - 3.0 * bandwidth, hi = *mx_it + 3.0 * bandwidth;
  const int grid_points = 257;
  for (int i = 0; i < grid_points; ++i) {
    const double xq = lo + (hi - lo) * i / (grid_points - 1);
    if (std::abs(xq) < bandwidth) continue;  // density is reported off zero
    rep.kde_x.push_back(xq);
  }
  rep.kde_density = kde_gaussian(samples, bandwidth, rep.kde_x);

  rep.atom_mass_max = atom_scan(samples, atom_width, bandwidth);

  rep.truncation_mass.assign(static_cast<std::size_t>(m_max), 0.0);
  for (double v : samples)
    for (int m = 1; m <= m_max; ++m)
      if (std::abs(v) <= 1.0 / m) rep.truncation_mass[static_cast<std::size_t>(m - 1)] += 1.0;
  for (auto& v : rep.truncation_mass) v /= static_cast<double>(samples.size());

  rep.ks_critical_5pct = 1.36 / std::sqrt(static_cast<double>(samples.size()));
  if (exact_sigma > 0.0) {
    rep.ks_vs_gaussian = ks_statistic(samples, [exact_sigma](double v) {
      return normal_cdf((v - 1.0) / exact_sigma);
    });
  }
  return rep;
}

namespace {

// Mean squared coupled difference E|u(t,x) - u(s,y)|^2 per neighborhood
// point, over a common sample set.
std::vector<double> coupled_square_diffs(
    const ChaosCoefficients& base, const std::vector<ChaosCoefficients>& others,
    const CellCovariance& cov, long nsamples, std::uint64_t seed) {
  NoiseGenerator gen(cov, seed);
  const auto base_vals = sample_chaos_values(base, gen, nsamples);
  std::vector<double> acc(others.size(), 0.0);
  for (std::size_t p = 0; p < others.size(); ++p) {
    const auto other_vals = sample_chaos_values(others[p], gen, nsamples);
    double s = 0.0;
    for (std::size_t i = 0; i < base_vals.size(); ++i) {
      const auto& c0 = base_vals[i];
      const auto& c1 = other_vals[i];
      const double d = (c0[1] + c0[2] + c0[3]) - (c1[1] + c1[2] + c1[3]);
      s += d * d;
    }
    acc[p] = s / static_cast<double>(nsamples);
  }
  return acc;
}

std::vector<std::pair<double, double>> neighborhood_points(
    const GridSpec& grid, double t, double x, double delta) {
  std::vector<std::pair<double, double>> pts;
  const double fr[3] = {1.0, 0.5, 0.25};
  for (double ft : fr)
    for (double fx : fr) {
      for (double st : {-1.0}) {
        for (double sx : {-1.0, 0.0, 1.0}) {
          const double s = t + st * ft * delta;
          const double y = x + sx * fx * delta;
          if (!(s > 0.0) || s > grid.T || std::abs(y) > grid.L) continue;
          if (st * ft == 0.0 && sx * fx == 0.0) continue;
          pts.emplace_back(s, y);
        }
      }
    }
  // Pure spatial displacements at the same time slice.
  for (double fx : fr) {
    for (double sx : {-1.0, 1.0}) {
      const double y = x + sx * fx * delta;
      if (std::abs(y) > grid.L) continue;
      pts.emplace_back(t, y);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

}  // namespace

double modulus_g(const CovarianceModel& model, const CellCovariance& cov,
                 double t, double x, int N, double delta, long nsamples,
                 std::uint64_t seed) {
  if (delta == 0.0) return 0.0;
  if (!(delta > 0.0)) throw std::invalid_argument("modulus_g: delta >= 0");
  const ChaosCoefficients base = project_kernels(model, cov, t, x, N);
  const auto pts = neighborhood_points(cov.grid, t, x, delta);
  std::vector<ChaosCoefficients> others;
  others.reserve(pts.size());
  for (const auto& [s, y] : pts)
    others.push_back(project_kernels(model, cov, s, y, N));
  const auto d2 = coupled_square_diffs(base, others, cov, nsamples, seed);
  double worst = 0.0;
  for (double v : d2) worst = std::max(worst, v);
  return std::sqrt(worst);
}

SixReport delta_scan(const CovarianceModel& model, const CellCovariance& cov,
                     double t, double x, int N, int m_level,
                     const std::vector<double>& delta_grid, long nsamples,
                     std::uint64_t seed) {
  SixReport rep;
  rep.t = t;
  rep.x = x;
  rep.m_level = m_level;
  rep.nsamples = nsamples;
  rep.delta_grid = delta_grid;

  rep.constants = make_constants(model, t);
  const AlphaReport series = second_moment_series(model, t, std::min(N, 3));
  rep.constants.C_T_star = series.partial_sum + series.tail_bound;

  // One nested candidate-point set: g(delta) = max over points inside the
  // delta-box, so the estimates are monotone in delta by construction.
  double dmax = 0.0;
  for (double d : delta_grid) dmax = std::max(dmax, d);
  std::vector<std::pair<double, double>> pts;
  for (double d : delta_grid) {
    const auto p = neighborhood_points(cov.grid, t, x, d);
    pts.insert(pts.end(), p.begin(), p.end());
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  const ChaosCoefficients base = project_kernels(model, cov, t, x, N);
  std::vector<ChaosCoefficients> others;
  others.reserve(pts.size());
  for (const auto& [s, y] : pts)
    others.push_back(project_kernels(model, cov, s, y, N));
  const auto d2 = coupled_square_diffs(base, others, cov, nsamples, seed);

  rep.big_gamma_delta.resize(delta_grid.size());
  rep.g_estimate.resize(delta_grid.size());
  rep.rhs.resize(delta_grid.size());
  for (std::size_t i = 0; i < delta_grid.size(); ++i) {
    const double delta = delta_grid[i];
    rep.big_gamma_delta[i] = model.big_gamma(delta);
    double worst = 0.0;
    for (std::size_t p = 0; p < pts.size(); ++p) {
      if (std::abs(pts[p].first - t) <= delta + 1e-12 &&
          std::abs(pts[p].second - x) <= delta + 1e-12)
        worst = std::max(worst, d2[p]);
    }
    rep.g_estimate[i] = std::sqrt(worst);
    rep.rhs[i] = 8.0 * m_level * m_level *
                 (rep.constants.c0 *
                      (rep.constants.C_T + rep.constants.C_T_dprime) *
                      rep.big_gamma_delta[i] +
                  0.25 * rep.constants.C_T_star * rep.g_estimate[i]);
  }

  // Empirical P({Q < eps} ∩ Omega_m).
  NoiseGenerator gen(cov, seed ^ 0x5bf03635ULL);
  long hits = 0;
  for (long i = 0; i < nsamples; ++i) {
    const Eigen::VectorXd zeta = gen.normals(static_cast<std::uint64_t>(i));
    const SolutionSample s = sample_solution(base, zeta);
    if (std::abs(s.value) <= 1.0 / m_level) continue;  // outside Omega_m
    const MalliavinSample ms = malliavin_sample(base, cov, zeta);
    if (ms.Q < rep.eps) ++hits;
  }
  rep.p_hat = static_cast<double>(hits) / static_cast<double>(nsamples);
  return rep;
}

double partition_exceedance(const std::vector<Eigen::MatrixXd>& fields,
                            const std::vector<double>& t_grid,
                            const std::vector<double>& x_grid, double delta,
                            double threshold) {
  if (fields.empty()) throw std::invalid_argument("partition: no samples");
  const long nt = static_cast<long>(t_grid.size());
  const long nx = static_cast<long>(x_grid.size());
  const double ht = nt > 1 ? t_grid[1] - t_grid[0] : 1.0;
  const double hx = nx > 1 ? x_grid[1] - x_grid[0] : 1.0;
  // Anchor stride: partition cells group k consecutive grid points so that
  // the cell diameter stays below delta.
  const long kt = std::max<long>(1, static_cast<long>(std::floor(delta / ht)));
  const long kx = std::max<long>(1, static_cast<long>(std::floor(delta / hx)));
  long exceed = 0, total = 0;
  for (const auto& f : fields) {
    for (long i = 0; i < nt; ++i) {
      const long ai = (i / kt) * kt;
      for (long j = 0; j < nx; ++j) {
        const long aj = (j / kx) * kx;
        const double diff = std::abs(f(i, j) - f(ai, aj));
        if (diff > threshold) ++exceed;
        ++total;
      }
    }
  }
  return static_cast<double>(exceed) / static_cast<double>(total);
}

std::vector<PartitionLevel> partition_approximant_study(
    const CovarianceModel& model, const CellCovariance& cov, double t_max,
    double x_halfwidth, int targets_t, int targets_x,
    const std::vector<int>& levels, long nsamples, std::uint64_t seed) {
  // Order-1 field: u_1(s, y) = 1 + <c1(s,y), zeta>, Gaussian, so the exact
  // L2 modulus is available from the coefficient vectors.
  std::vector<double> t_grid(static_cast<std::size_t>(targets_t));
  std::vector<double> x_grid(static_cast<std::size_t>(targets_x));
  for (int i = 0; i < targets_t; ++i)
    t_grid[static_cast<std::size_t>(i)] =
        t_max * (0.2 + 0.8 * i / std::max(1, targets_t - 1));
  for (int j = 0; j < targets_x; ++j)
    x_grid[static_cast<std::size_t>(j)] =
        -x_halfwidth + 2.0 * x_halfwidth * j / std::max(1, targets_x - 1);

  std::vector<Eigen::VectorXd> c1s;
  c1s.reserve(t_grid.size() * x_grid.size());
  for (double s : t_grid)
    for (double y : x_grid)
      c1s.push_back(project_kernels(model, cov, s, y, 1).c1);

  const long nt = static_cast<long>(t_grid.size());
  const long nx = static_cast<long>(x_grid.size());
  const double ht = nt > 1 ? t_grid[1] - t_grid[0] : 1.0;
  const double hx = nx > 1 ? x_grid[1] - x_grid[0] : 1.0;
  auto sigma_between = [&](long i0, long j0, long i1, long j1) {
    return (c1s[static_cast<std::size_t>(i0 * nx + j0)] -
            c1s[static_cast<std::size_t>(i1 * nx + j1)])
        .norm();
  };
  // Exact Gaussian modulus of the sampled field within partition cells of
  // the given diameter.
  auto sigma_of_delta = [&](double delta) {
    const long st = std::max<long>(1, static_cast<long>(std::floor(delta / ht)));
    const long sx = std::max<long>(1, static_cast<long>(std::floor(delta / hx)));
    double worst = 0.0;
    for (long i = 0; i < nt; ++i)
      for (long j = 0; j < nx; ++j) {
        const long ai = (i / st) * st;
        const long aj = (j / sx) * sx;
        worst = std::max(worst, sigma_between(i, j, ai, aj));
      }
    return worst;
  };

  // Sample the Gaussian field.
  NoiseGenerator gen(cov, seed);
  std::vector<Eigen::MatrixXd> fields;
  fields.reserve(static_cast<std::size_t>(nsamples));
  for (long k = 0; k < nsamples; ++k) {
    const Eigen::VectorXd zeta = gen.normals(static_cast<std::uint64_t>(k));
    Eigen::MatrixXd f(nt, nx);
    for (long i = 0; i < nt; ++i)
      for (long j = 0; j < nx; ++j)
        f(i, j) = 1.0 + c1s[static_cast<std::size_t>(i * nx + j)].dot(zeta);
    fields.push_back(std::move(f));
  }

  std::vector<PartitionLevel> out;
  const double h_min = std::min(ht, hx);
  const double delta_max =
      std::max(t_grid.back() - t_grid.front(), x_grid.back() - x_grid.front());
  for (int m : levels) {
    PartitionLevel lvl;
    lvl.m = m;
    lvl.threshold = std::pow(2.0, -m);
    // Diameter from uniform stochastic continuity: the Gaussian tail bound
    // must give P(|X_m - X| > 2^-m) <= 2^-m / 4 with margin.
    const double z = -normal_quantile(std::pow(2.0, -m) / 16.0);
    const double sigma_needed = lvl.threshold / z;
    double delta = h_min * 0.5;  // anchors coincide with points: diff = 0
    for (double cand = delta_max; cand >= h_min; cand -= h_min) {
      if (sigma_of_delta(cand) <= sigma_needed) {
        delta = cand;
        break;
      }
    }
    lvl.delta = delta;
    lvl.exceedance =
        partition_exceedance(fields, t_grid, x_grid, lvl.delta, lvl.threshold);
    out.push_back(lvl);
  }
  return out;
}

}  // namespace chaoswave
