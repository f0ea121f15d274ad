#include "chaoswave/hilbert.hpp"

#include <algorithm>
#include <cmath>

#include "chaoswave/quadrature.hpp"
#include "chaoswave/spectral.hpp"

namespace chaoswave {

namespace {

constexpr double kGaussianSupportSigmas = 12.0;

}  // namespace

TestFunction TestFunction::gaussian(double mean, double sigma, double amp) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian: sigma > 0");
  TestFunction f;
  f.comps_.push_back({Component::Kind::gaussian, mean, sigma, Complex(amp, 0.0), 0.0});
  f.lo_ = mean - kGaussianSupportSigmas * sigma;
  f.hi_ = mean + kGaussianSupportSigmas * sigma;
  return f;
}

TestFunction TestFunction::indicator(double a, double b, double amp) {
  if (!(b > a)) throw std::invalid_argument("indicator: b > a");
  TestFunction f;
  f.comps_.push_back({Component::Kind::indicator, a, b, Complex(amp, 0.0), 0.0});
  f.lo_ = a;
  f.hi_ = b;
  return f;
}

TestFunction TestFunction::cone(double t) {
  if (!(t > 0.0)) throw std::invalid_argument("cone: t > 0");
  return indicator(-t, t, 0.5);
}

TestFunction TestFunction::modulated(double eta) const {
  TestFunction f = *this;
  for (auto& c : f.comps_) c.modulation += eta;
  return f;
}

TestFunction TestFunction::scaled(Complex amp) const {
  TestFunction f = *this;
  for (auto& c : f.comps_) c.amp *= amp;
  return f;
}

TestFunction TestFunction::plus(const TestFunction& other) const {
  TestFunction f = *this;
  f.comps_.insert(f.comps_.end(), other.comps_.begin(), other.comps_.end());
  f.lo_ = std::min(f.lo_, other.lo_);
  f.hi_ = std::max(f.hi_, other.hi_);
  return f;
}

Complex TestFunction::eval(double x) const {
  Complex v(0.0, 0.0);
  for (const auto& c : comps_) {
    double base = 0.0;
    if (c.kind == Component::Kind::gaussian) {
      const double z = (x - c.p1) / c.p2;
      base = std::exp(-0.5 * z * z);
    } else {
      base = (x >= c.p1 && x < c.p2) ? 1.0 : 0.0;
    }
    if (base == 0.0) continue;
    Complex term = c.amp * base;
    if (c.modulation != 0.0)
      term *= std::polar(1.0, -c.modulation * x);
    v += term;
  }
  return v;
}

Complex TestFunction::fourier(double xi) const {
  Complex v(0.0, 0.0);
  for (const auto& c : comps_) {
    const double z = xi + c.modulation;
    if (c.kind == Component::Kind::gaussian) {
      const double mag = c.p2 * std::sqrt(2.0 * kPi) *
                         std::exp(-0.5 * c.p2 * c.p2 * z * z);
      v += c.amp * mag * std::polar(1.0, -z * c.p1);
    } else {
      // ∫_a^b e^(-i z x) dx
      if (std::abs(z) * std::max(std::abs(c.p1), std::abs(c.p2)) < 1e-8) {
        const double w = c.p2 - c.p1;
        const double m = 0.5 * (c.p1 + c.p2);
        v += c.amp * w * Complex(1.0, -z * m);
      } else {
        const Complex iz(0.0, z);
        v += c.amp * (std::exp(-iz * c.p1) - std::exp(-iz * c.p2)) / iz;
      }
    }
  }
  return v;
}

bool TestFunction::is_real() const {
  for (const auto& c : comps_)
    if (c.modulation != 0.0 || c.amp.imag() != 0.0) return false;
  return true;
}

bool TestFunction::has_indicator() const {
  for (const auto& c : comps_)
    if (c.kind == Component::Kind::indicator) return true;
  return false;
}

double TestFunction::max_modulation() const {
  double m = 0.0;
  for (const auto& c : comps_) m = std::max(m, std::abs(c.modulation));
  return m;
}

// ---------------------------------------------------------------------------
// Direct (physical) side.
// ---------------------------------------------------------------------------

namespace {

Complex cross_correlation(const TestFunction& phi, const TestFunction& psi,
                          bool conj_psi, double u) {
  const double lo = std::max(phi.support_lo(), psi.support_lo() + u);
  const double hi = std::min(phi.support_hi(), psi.support_hi() + u);
  if (!(hi > lo)) return {0.0, 0.0};
  QuadratureOptions opt{1e-12, 1e-10, 200000};
  auto re = [&](double x) {
    const Complex p = psi.eval(x - u);
    const Complex q = phi.eval(x) * (conj_psi ? std::conj(p) : p);
    return q.real();
  };
  auto im = [&](double x) {
    const Complex p = psi.eval(x - u);
    const Complex q = phi.eval(x) * (conj_psi ? std::conj(p) : p);
    return q.imag();
  };
  // Split at indicator edges shifted into the window.
  std::vector<double> breaks;
  for (const auto& c : phi.components())
    if (c.kind == TestFunction::Component::Kind::indicator) {
      breaks.push_back(c.p1);
      breaks.push_back(c.p2);
    }
  for (const auto& c : psi.components())
    if (c.kind == TestFunction::Component::Kind::indicator) {
      breaks.push_back(c.p1 + u);
      breaks.push_back(c.p2 + u);
    }
  const double r = integrate_adaptive_split(re, lo, hi, breaks, opt).value;
  const double i = integrate_adaptive_split(im, lo, hi, breaks, opt).value;
  return {r, i};
}

// ∫∫ f(x-y) phi(x) [conj] psi(y) dx dy = ∫ f(u) C(u) du with
// C(u) = ∫ phi(x) [conj] psi(x-u) dx; the kernel weight is substituted away.
Complex direct_pair(const CovarianceModel& model, const TestFunction& phi,
                    const TestFunction& psi, bool conj_psi) {
  if (model.is_white()) return cross_correlation(phi, psi, conj_psi, 0.0);
  const double lo = phi.support_lo() - psi.support_hi();
  const double hi = phi.support_hi() - psi.support_lo();
  QuadratureOptions opt{1e-11, 1e-9, 400000};
  const double alpha = model.riesz_alpha();
  auto re = [&](double u) {
    return cross_correlation(phi, psi, conj_psi, u).real();
  };
  const double vr = integrate_abs_power_weight(re, 0.0, alpha, lo, hi, opt);
  double vi = 0.0;
  if (!(phi.is_real() && psi.is_real())) {
    auto im = [&](double u) {
      return cross_correlation(phi, psi, conj_psi, u).imag();
    };
    vi = integrate_abs_power_weight(im, 0.0, alpha, lo, hi, opt);
  }
  return {vr, vi};
}

Complex direct_abs_pair(const CovarianceModel& model, const TestFunction& phi,
                        const TestFunction& psi) {
  auto corr_abs = [&](double u) {
    const double lo = std::max(phi.support_lo(), psi.support_lo() + u);
    const double hi = std::min(phi.support_hi(), psi.support_hi() + u);
    if (!(hi > lo)) return 0.0;
    auto f = [&](double x) {
      return std::abs(phi.eval(x)) * std::abs(psi.eval(x - u));
    };
    return integrate_adaptive(f, lo, hi, {1e-12, 1e-9, 200000}).value;
  };
  if (model.is_white()) return {corr_abs(0.0), 0.0};
  const double lo = phi.support_lo() - psi.support_hi();
  const double hi = phi.support_hi() - psi.support_lo();
  const double v = integrate_abs_power_weight(corr_abs, 0.0,
                                              model.riesz_alpha(), lo, hi,
                                              {1e-11, 1e-9, 400000});
  return {v, 0.0};
}

// ---------------------------------------------------------------------------
// Spectral side.
// ---------------------------------------------------------------------------

// Closed-form dc coefficient of Re(F phi conj F psi) at large |xi|: only
// matching indicator endpoints survive averaging.
double pair_dc_one_side(const TestFunction& phi, const TestFunction& psi) {
  using Kind = TestFunction::Component::Kind;
  double dc = 0.0;
  for (const auto& c1 : phi.components()) {
    if (c1.kind != Kind::indicator) continue;
    for (const auto& c2 : psi.components()) {
      if (c2.kind != Kind::indicator) continue;
      const double s1[2] = {c1.p1, c1.p2};
      const double s2[2] = {c2.p1, c2.p2};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          if (std::abs(s1[i] - s2[j]) > 1e-13) continue;
          const double sign = (i == j) ? 1.0 : -1.0;
          const Complex phase =
              std::polar(1.0, (c2.modulation - c1.modulation) * s1[i]);
          dc += sign * (c1.amp * std::conj(c2.amp) * phase).real();
        }
    }
  }
  return dc;
}

double spectral_pair(const CovarianceModel& model, const TestFunction& phi,
                     const TestFunction& psi, bool time_side) {
  SpectralIntegrand s;
  s.W = [&](double xi) {
    return (phi.fourier(xi) * std::conj(psi.fourier(xi))).real();
  };
  const bool osc = phi.has_indicator() && psi.has_indicator();
  if (osc) {
    const double span1 = phi.support_hi() - phi.support_lo();
    const double span2 = psi.support_hi() - psi.support_lo();
    s.osc_freq = span1 + span2 + phi.max_modulation() + psi.max_modulation();
    s.dc_over_xi2 = 2.0 * pair_dc_one_side(phi, psi);
  } else {
    s.osc_freq = 0.0;
    s.dc_over_xi2 = 0.0;
  }
  s.abs_tol = 1e-11;
  s.min_trunc =
      std::max(64.0, 16.0 * (1.0 + phi.max_modulation() + psi.max_modulation()));
  return time_side ? nu_integral(model, s) : mu_integral(model, s);
}

EnergyReport make_report(double direct, double spectral) {
  EnergyReport r;
  r.direct_value = direct;
  r.spectral_value = spectral;
  r.abs_gap = std::abs(direct - spectral);
  return r;
}

}  // namespace

EnergyReport energy_f(const CovarianceModel& model, const TestFunction& phi) {
  if (!phi.is_real())
    throw std::invalid_argument("energy_f expects a real function");
  const double direct = direct_pair(model, phi, phi, false).real();
  const double spectral = spectral_pair(model, phi, phi, false);
  return make_report(direct, spectral);
}

EnergyReport energy_pair(const CovarianceModel& model, const TestFunction& phi,
                         const TestFunction& psi, bool complex_conjugate) {
  const Complex direct = direct_pair(model, phi, psi, complex_conjugate);
  const double spectral = spectral_pair(model, phi, psi, false);
  return make_report(direct.real(), spectral);
}

double energy_abs_direct(const CovarianceModel& model, const TestFunction& phi,
                         const TestFunction& psi) {
  return direct_abs_pair(model, phi, psi).real();
}

EnergyReport inner_P0(const CovarianceModel& model, const TestFunction& phi,
                      const TestFunction& psi) {
  return energy_pair(model, phi, psi, true);
}

EnergyReport inner_H(const CovarianceModel& model, const SpaceTimeProduct& f1,
                     const SpaceTimeProduct& f2) {
  // gamma is itself a power-weight; substitute it like the spatial kernel.
  const double H = model.hurst();
  auto time_corr = [&](double v) {
    return cross_correlation(f1.time, f2.time, true, v).real();
  };
  const double lo = f1.time.support_lo() - f2.time.support_hi();
  const double hi = f1.time.support_hi() - f2.time.support_lo();
  const double time_direct =
      H * (2.0 * H - 1.0) *
      integrate_abs_power_weight(time_corr, 0.0, 2.0 * H - 1.0, lo, hi,
                                 {1e-11, 1e-9, 400000});
  const double space_direct = direct_pair(model, f1.space, f2.space, true).real();

  const double time_spectral = spectral_pair(model, f1.time, f2.time, true);
  const double space_spectral = spectral_pair(model, f1.space, f2.space, false);

  return make_report(time_direct * space_direct,
                     time_spectral * space_spectral);
}

double inner_H_abs(const CovarianceModel& model, const SpaceTimeProduct& f1,
                   const SpaceTimeProduct& f2) {
  const double H = model.hurst();
  auto corr_abs = [&](double v) {
    const double lo =
        std::max(f1.time.support_lo(), f2.time.support_lo() + v);
    const double hi =
        std::min(f1.time.support_hi(), f2.time.support_hi() + v);
    if (!(hi > lo)) return 0.0;
    auto f = [&](double x) {
      return std::abs(f1.time.eval(x)) * std::abs(f2.time.eval(x - v));
    };
    return integrate_adaptive(f, lo, hi, {1e-12, 1e-9, 200000}).value;
  };
  const double lo = f1.time.support_lo() - f2.time.support_hi();
  const double hi = f1.time.support_hi() - f2.time.support_lo();
  const double time_abs =
      H * (2.0 * H - 1.0) *
      integrate_abs_power_weight(corr_abs, 0.0, 2.0 * H - 1.0, lo, hi,
                                 {1e-11, 1e-9, 400000});
  const double space_abs =
      direct_abs_pair(model, f1.space, f2.space).real();
  return time_abs * space_abs;
}

std::vector<double> max_principle_scan(const CovarianceModel& model, double t,
                                       const std::vector<double>& eta_grid) {
  if (!(t > 0.0)) throw std::domain_error("max_principle_scan requires t > 0");
  std::vector<double> out(eta_grid.size());
  parallel_chunks(eta_grid.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      out[i] = max_principle_m(model, t, eta_grid[i]);
  });
  return out;
}

double hermiticity_check(const Eigen::MatrixXd& grid) {
  const long nt = grid.rows(), nx = grid.cols();
  Eigen::MatrixXcd ft(nt, nt), fx(nx, nx);
  for (long p = 0; p < nt; ++p)
    for (long j = 0; j < nt; ++j)
      ft(p, j) = std::polar(1.0, -2.0 * kPi * static_cast<double>(p * j) / nt);
  for (long q = 0; q < nx; ++q)
    for (long k = 0; k < nx; ++k)
      fx(q, k) = std::polar(1.0, -2.0 * kPi * static_cast<double>(q * k) / nx);
  const Eigen::MatrixXcd hat = ft * grid.cast<Complex>() * fx.transpose();
  double dev = 0.0;
  for (long p = 0; p < nt; ++p)
    for (long q = 0; q < nx; ++q) {
      const Complex mirrored = hat((nt - p) % nt, (nx - q) % nx);
      dev = std::max(dev, std::abs(mirrored - std::conj(hat(p, q))));
    }
  return dev;
}

}  // namespace chaoswave
