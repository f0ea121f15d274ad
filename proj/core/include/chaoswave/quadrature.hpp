#pragma once

#include <functional>
#include <vector>

#include "chaoswave/common.hpp"

namespace chaoswave {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// Gauss-Legendre rule of order n, generated once by Newton iteration on the
/// Legendre recurrence and cached. No hard-coded node tables.
const GaussRule& gauss_rule(int n);

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;    // estimate
  long evals = 0;
};

struct QuadratureOptions {
  double abs_tol = 1e-9;
  double rel_tol = 1e-8;
  long max_evals = 1000000;
};

using Fn1D = std::function<double(double)>;

/// Fixed-order Gauss-Legendre on [a, b].
double integrate_gl(const Fn1D& f, double a, double b, int order);

/// Adaptive bisection with embedded GL(10)/GL(20) error estimates.
QuadratureResult integrate_adaptive(const Fn1D& f, double a, double b,
                                    const QuadratureOptions& opt = {});

/// Same, but the interval is pre-split at the given interior breakpoints
/// (integrand kinks the subdivision heuristic should not have to discover).
QuadratureResult integrate_adaptive_split(const Fn1D& f, double a, double b,
                                          const std::vector<double>& breaks,
                                          const QuadratureOptions& opt = {});

/// ∫_lo^hi h(w) |w - c|^(p-1) dw with p in (0,1].  The weight is absorbed
/// exactly by the substitution m = sign(w-c)|w-c|^p / p on each side of c, so
/// the integrand handed to the adaptive scheme is bounded.  h must be
/// continuous.
double integrate_abs_power_weight(const Fn1D& h, double c, double p, double lo,
                                  double hi, const QuadratureOptions& opt = {});

/// Composite Gauss over panels of fixed width (oscillatory integrands are
/// integrated with a couple of panels per period and a per-panel rule that is
/// exact at machine precision on that scale).
double integrate_blocked(const Fn1D& f, double a, double b, double panel_width,
                         int order = 15);

}  // namespace chaoswave
