#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "chaoswave/model.hpp"

namespace chaoswave {

using Complex = std::complex<double>;

/// Spatial test function: a finite sum of Gaussian and indicator components,
/// optionally modulated by e^(-i eta x).  Every member of the suite carries a
/// closed-form Fourier transform (F phi(xi) = ∫ e^(-i xi x) phi(x) dx), which
/// the hilbert tests check against discrete Fourier evaluation.
class TestFunction {
 public:
  struct Component {
    enum class Kind { gaussian, indicator };
    Kind kind;
    double p1;  // gaussian: mean; indicator: left endpoint
    double p2;  // gaussian: sigma; indicator: right endpoint
    Complex amp;
    double modulation;  // multiplies the component by e^(-i modulation x)
  };

  static TestFunction gaussian(double mean, double sigma, double amp = 1.0);
  static TestFunction indicator(double a, double b, double amp = 1.0);
  /// G(t, .) = (1/2) 1{|x| < t}.
  static TestFunction cone(double t);

  TestFunction modulated(double eta) const;
  TestFunction scaled(Complex amp) const;
  TestFunction plus(const TestFunction& other) const;

  Complex eval(double x) const;
  Complex fourier(double xi) const;

  double support_lo() const { return lo_; }
  double support_hi() const { return hi_; }
  bool is_real() const;
  bool has_indicator() const;
  double max_modulation() const;

  const std::vector<Component>& components() const { return comps_; }

 private:
  std::vector<Component> comps_;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

struct EnergyReport {
  double direct_value = 0.0;
  double spectral_value = 0.0;
  double abs_gap = 0.0;
};

/// Energy of a real function against f: direct double integral vs
/// (2pi)^-1 ∫ |F phi|^2 g.
EnergyReport energy_f(const CovarianceModel& model, const TestFunction& phi);

/// Bilinear energy; complex_conjugate selects the complex-valued identity
/// (conjugate on psi) instead of the real one.
EnergyReport energy_pair(const CovarianceModel& model, const TestFunction& phi,
                         const TestFunction& psi, bool complex_conjugate);

/// E_f(|phi|, |psi|), direct side only (the |H|-type majorant).
double energy_abs_direct(const CovarianceModel& model, const TestFunction& phi,
                         const TestFunction& psi);

/// <phi, psi>_0 for spatial functions, both routes.
EnergyReport inner_P0(const CovarianceModel& model, const TestFunction& phi,
                      const TestFunction& psi);

/// Space-time test functions in product form phi(t, x) = a(t) b(x).
struct SpaceTimeProduct {
  TestFunction time;
  TestFunction space;
};

/// <phi1, phi2>_H: gamma/f double integral vs the nu x mu spectral integral.
EnergyReport inner_H(const CovarianceModel& model, const SpaceTimeProduct& f1,
                     const SpaceTimeProduct& f2);

/// ||phi1||-type majorant |H| norm squared of the pair (absolute values).
double inner_H_abs(const CovarianceModel& model, const SpaceTimeProduct& f1,
                   const SpaceTimeProduct& f2);

/// m(eta) = ∫ |FG(t)(xi + eta)|^2 mu(dxi) for each eta in the grid.
std::vector<double> max_principle_scan(const CovarianceModel& model, double t,
                                       const std::vector<double>& eta_grid);

/// Largest violation of FS(-tau, -xi) = conj FS(tau, xi) over the discrete
/// Fourier transform of a real space-time grid sample.
double hermiticity_check(const Eigen::MatrixXd& grid);

}  // namespace chaoswave
