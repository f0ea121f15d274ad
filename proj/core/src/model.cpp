#include "chaoswave/model.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "chaoswave/quadrature.hpp"
#include "chaoswave/spectral.hpp"

namespace chaoswave {

namespace {

double riesz_constant_formula(double alpha) {
  // g(xi) = c_alpha |xi|^(-alpha) is the spectral density of f(x) = |x|^(alpha-1):
  // c_alpha = 2^alpha sqrt(pi) Gamma(alpha/2) / Gamma((1-alpha)/2).
  return std::pow(2.0, alpha) * std::sqrt(kPi) * std::tgamma(0.5 * alpha) /
         std::tgamma(0.5 * (1.0 - alpha));
}

// Dual-route Parseval check of c_alpha on the standard Gaussian density:
// both sides evaluated by quadrature, nothing analytic shared between them.
void validate_riesz_constant(double alpha, double c_alpha) {
  // Direct: ∫ |u|^(alpha-1) * N(0,2)-density(u) du.
  auto density = [](double u) {
    return std::exp(-0.25 * u * u) / (2.0 * std::sqrt(kPi));
  };
  const double direct =
      integrate_abs_power_weight(density, 0.0, alpha, -40.0, 40.0,
                                 {1e-12, 1e-11, 1000000});
  // Spectral: (2pi)^-1 c_alpha ∫ e^(-xi^2) |xi|^(-alpha) dxi.
  auto gaussian_sq = [](double xi) { return std::exp(-xi * xi); };
  const double spectral =
      c_alpha / (2.0 * kPi) *
      integrate_abs_power_weight(gaussian_sq, 0.0, 1.0 - alpha, -12.0, 12.0,
                                 {1e-12, 1e-11, 1000000});
  const double gap = std::abs(direct - spectral);
  if (gap > 1e-6 * (1.0 + std::abs(direct)))
    throw std::invalid_argument(
        "riesz constant fails the Parseval validation: gap " +
        std::to_string(gap));
}

struct ModelChecks {
  double dalang;
  CovarianceModel::SlowGrowth slow_growth;
};

const ModelChecks& cached_checks(double hurst, double alpha, bool white,
                                 double c_alpha,
                                 const CovarianceModel& model) {
  static std::map<std::tuple<double, double, bool>, ModelChecks> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_tuple(hurst, alpha, white);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  ModelChecks checks;
  checks.dalang = dalang_spectral(model);
  if (!(checks.dalang > 0.0) || !std::isfinite(checks.dalang))
    throw std::invalid_argument("Dalang integral is not finite");

  checks.slow_growth.k = 0;
  for (int k = 1; k <= 4; ++k) {
    const SlowGrowthProbe probe =
        slow_growth_integral(hurst, alpha, white, c_alpha, k);
    if (probe.converged) {
      checks.slow_growth.k = k;
      checks.slow_growth.value = probe.value;
      break;
    }
  }
  if (checks.slow_growth.k == 0)
    throw std::invalid_argument(
        "slow-growth integral diverges for every k <= 4");
  return cache.emplace(key, checks).first->second;
}

}  // namespace

CovarianceModel CovarianceModel::riesz(double hurst, double alpha) {
  if (!(hurst > 0.5 && hurst < 1.0))
    throw std::invalid_argument("hurst must lie in (1/2, 1)");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("riesz_alpha must lie in (0, 1)");
  CovarianceModel m;
  m.hurst_ = hurst;
  m.alpha_ = alpha;
  m.mode_ = SpatialMode::riesz;
  m.c_alpha_ = riesz_constant_formula(alpha);
  validate_riesz_constant(alpha, m.c_alpha_);
  m.validate_construction();
  return m;
}

CovarianceModel CovarianceModel::white(double hurst) {
  if (!(hurst > 0.5 && hurst < 1.0))
    throw std::invalid_argument("hurst must lie in (1/2, 1)");
  CovarianceModel m;
  m.hurst_ = hurst;
  m.alpha_ = 0.0;
  m.mode_ = SpatialMode::white;
  m.c_alpha_ = 0.0;
  m.validate_construction();
  return m;
}

void CovarianceModel::validate_construction() {
  const ModelChecks& checks =
      cached_checks(hurst_, alpha_, is_white(), c_alpha_, *this);
  dalang_ = checks.dalang;
  slow_growth_ = checks.slow_growth;
}

double CovarianceModel::gamma(double t) const {
  if (t == 0.0) throw std::domain_error("kernel singularity: gamma at t = 0");
  return hurst_ * (2.0 * hurst_ - 1.0) *
         std::pow(std::abs(t), 2.0 * hurst_ - 2.0);
}

double CovarianceModel::f(double x) const {
  if (is_white())
    throw std::domain_error("f is not a function in white mode");
  if (x == 0.0) throw std::domain_error("kernel singularity: f at x = 0");
  return std::pow(std::abs(x), alpha_ - 1.0);
}

double CovarianceModel::spectral_h(double tau) const {
  if (tau == 0.0)
    throw std::domain_error("density singularity: h at tau = 0");
  // gamma = F nu requires h(tau) = H(2H-1) c_{2H-1} |tau|^(1-2H); this is the
  // unique density for which the temporal Parseval identity holds.
  return hurst_ * (2.0 * hurst_ - 1.0) * temporal_riesz_constant() *
         std::pow(std::abs(tau), 1.0 - 2.0 * hurst_);
}

double CovarianceModel::temporal_riesz_constant() const {
  // c_a for a = 2H - 1: the Fourier-pair constant of |t|^(a-1).
  const double a = 2.0 * hurst_ - 1.0;
  return std::pow(2.0, a) * std::sqrt(kPi) * std::tgamma(0.5 * a) /
         std::tgamma(0.5 * (1.0 - a));
}

double CovarianceModel::spectral_g(double xi) const {
  if (is_white()) return 1.0;
  if (xi == 0.0) throw std::domain_error("density singularity: g at xi = 0");
  return c_alpha_ * std::pow(std::abs(xi), -alpha_);
}

double CovarianceModel::big_gamma(double t) const {
  if (t < 0.0) throw std::domain_error("big_gamma requires t >= 0");
  if (t == 0.0) return 0.0;
  return 2.0 * hurst_ * std::pow(t, 2.0 * hurst_ - 1.0);
}

double CovarianceModel::KM(double M) const { return KM_spectral(*this, M); }

double CovarianceModel::c0() const { return c0_spectral(*this); }

double CovarianceModel::dalang_integral() const { return dalang_; }

double WaveKernel::FG(double t, double xi) {
  if (t <= 0.0) return 0.0;
  const double z = t * xi;
  if (std::abs(z) < 1e-6) return t * (1.0 - z * z / 6.0);
  return std::sin(z) / xi;
}

double WaveKernel::cone_fraction(double t, double x, double s0, double s1,
                                 double y0, double y1) {
  const double s_hi = std::min(s1, t);
  if (!(s_hi > s0) || !(y1 > y0)) return 0.0;

  auto width = [&](double s) {
    const double r = t - s;
    if (r <= 0.0) return 0.0;
    const double lo = std::max(y0, x - r);
    const double hi = std::min(y1, x + r);
    return std::max(0.0, hi - lo);
  };

  // The covered width is piecewise linear in s between edge crossings.
  double breaks_raw[5] = {t - (y1 - x), t - (x - y0), t - (y0 - x),
                          t - (x - y1), t};
  double edges[7];
  int ne = 0;
  edges[ne++] = s0;
  for (double b : breaks_raw)
    if (b > s0 && b < s_hi) edges[ne++] = b;
  edges[ne++] = s_hi;
  // insertion sort (tiny)
  for (int i = 1; i < ne; ++i)
    for (int j = i; j > 0 && edges[j] < edges[j - 1]; --j)
      std::swap(edges[j], edges[j - 1]);

  double area = 0.0;
  for (int i = 0; i + 1 < ne; ++i) {
    const double a = edges[i], b = edges[i + 1];
    if (!(b > a)) continue;
    area += 0.5 * (width(a) + width(b)) * (b - a);
  }
  return area / ((s1 - s0) * (y1 - y0));
}

double WaveKernel::cell_average(double t, double x, double s0, double s1,
                                double y0, double y1) {
  return 0.5 * cone_fraction(t, x, s0, s1, y0, y1);
}

double I_beta_w(double beta, double xi) {
  if (!(beta > 0.0)) throw std::domain_error("I_beta_w requires beta > 0");
  return (2.0 / beta) / (beta * beta + 4.0 * xi * xi);
}

double l2_norm_FG(double s) {
  if (s < 0.0) throw std::domain_error("l2_norm_FG requires s >= 0");
  return kPi * s;
}

}  // namespace chaoswave
