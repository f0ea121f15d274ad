#include "chaoswave/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "chaoswave/quadrature.hpp"
#include "chaoswave/rng.hpp"
#include "chaoswave/spectral.hpp"

namespace chaoswave {

namespace {

// Fixed rule sizes for the psi_n pair kernels: psi_2 sits inside an N^4 cell
// sweep and psi_3 inside the QMC loop, so these stay non-adaptive.
constexpr int kPsi2Line = 12;
constexpr int kPsi2Smooth = 16;
constexpr int kPsi3Line = 8;
constexpr int kPsi3Smooth = 8;

double pow_abs(double u, double p) { return std::pow(std::abs(u), p); }

}  // namespace

double double_primitive(const CovarianceModel& model, double u) {
  const double a = model.riesz_alpha();
  return pow_abs(u, 1.0 + a) / (a * (1.0 + a));
}

double smoothed_f(const CovarianceModel& model, double a, double z) {
  if (!(a > 0.0)) return 0.0;
  if (model.is_white()) return std::abs(z) < a ? 0.5 : 0.0;
  const double al = model.riesz_alpha();
  auto first_primitive = [al](double u) {
    return std::copysign(pow_abs(u, al) / al, u);
  };
  return 0.5 * (first_primitive(z + a) - first_primitive(z - a));
}

double smoothed_f_pair(const CovarianceModel& model, double a, double b,
                       double z) {
  if (!(a > 0.0) || !(b > 0.0)) return 0.0;
  if (model.is_white()) return 0.25 * overlap_lambda(a, b, z);
  return 0.25 * (double_primitive(model, z + a + b) -
                 double_primitive(model, z + a - b) -
                 double_primitive(model, z - a + b) +
                 double_primitive(model, z - a - b));
}

double overlap_lambda(double a, double b, double d) {
  if (!(a > 0.0) || !(b > 0.0)) return 0.0;
  return std::max(0.0, std::min(a, d + b) - std::max(-a, d - b));
}

double overlap_lambda_integral(double a, double b, double lo, double hi) {
  if (!(a > 0.0) || !(b > 0.0) || !(hi > lo)) return 0.0;
  std::array<double, 6> edges = {lo,           -(a + b),       -std::abs(a - b),
                                 std::abs(a - b), a + b,       hi};
  std::sort(edges.begin(), edges.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double x0 = std::max(lo, edges[i]);
    const double x1 = std::min(hi, edges[i + 1]);
    if (!(x1 > x0)) continue;
    total += 0.5 * (overlap_lambda(a, b, x0) + overlap_lambda(a, b, x1)) *
             (x1 - x0);
  }
  return total;
}

double p0_pair(const CovarianceModel& model, double a, double b) {
  return smoothed_f_pair(model, a, b, 0.0);
}

// ---------------------------------------------------------------------------
// Chaos kernels.
// ---------------------------------------------------------------------------

double f_n_eval(int n, std::span<const SpaceTimePoint> args, double t,
                double x) {
  if (n < 1 || static_cast<int>(args.size()) != n)
    throw std::invalid_argument("f_n_eval: argument count mismatch");
  if (!(args[0].t > 0.0)) return 0.0;
  double value = 1.0;
  for (int i = 1; i < n; ++i) {
    value *= WaveKernel::G(args[i].t - args[i - 1].t, args[i].x - args[i - 1].x);
    if (value == 0.0) return 0.0;
  }
  value *= WaveKernel::G(t - args[n - 1].t, x - args[n - 1].x);
  return value;
}

namespace {

template <typename Fn>
double average_over_permutations(int n, Fn&& fn) {
  std::array<int, 3> idx = {0, 1, 2};
  double sum = 0.0;
  int count = 0;
  do {
    sum += fn(idx);
    ++count;
  } while (std::next_permutation(idx.begin(), idx.begin() + n));
  return sum / count;
}

}  // namespace

double f_tilde_eval(int n, std::span<const SpaceTimePoint> args, double t,
                    double x) {
  if (n < 1 || n > 3) throw std::invalid_argument("f_tilde_eval: n <= 3 only");
  return average_over_permutations(n, [&](const std::array<int, 3>& idx) {
    std::array<SpaceTimePoint, 3> perm{};
    for (int i = 0; i < n; ++i) perm[i] = args[idx[i]];
    return f_n_eval(n, std::span<const SpaceTimePoint>(perm.data(), n), t, x);
  });
}

double h_j_eval(int n, int j, std::span<const SpaceTimePoint> args,
                SpaceTimePoint rz, double t, double x) {
  if (n < 1 || n > 3 || j < 1 || j > n)
    throw std::invalid_argument("h_j_eval: bad (n, j)");
  if (static_cast<int>(args.size()) != n - 1)
    throw std::invalid_argument("h_j_eval: argument count mismatch");
  if (n == 1) return f_n_eval(1, std::span<const SpaceTimePoint>(&rz, 1), t, x);
  return average_over_permutations(n - 1, [&](const std::array<int, 3>& idx) {
    std::array<SpaceTimePoint, 3> seq{};
    int pos = 0;
    for (int slot = 0; slot < n; ++slot) {
      if (slot == j - 1)
        seq[slot] = rz;
      else
        seq[slot] = args[idx[pos++]];
    }
    return f_n_eval(n, std::span<const SpaceTimePoint>(seq.data(), n), t, x);
  });
}

double f_tilde_rz_eval(int n, std::span<const SpaceTimePoint> args,
                       SpaceTimePoint rz, double t, double x) {
  double sum = 0.0;
  for (int j = 1; j <= n; ++j) sum += h_j_eval(n, j, args, rz, t, x);
  return sum / n;
}

// ---------------------------------------------------------------------------
// psi_n pair kernels via the chain-transfer reduction.  Writing the squared
// P0-tensor pairing in chain-relative spatial coordinates, the leaf variables
// (those hit by exactly one kernel link) integrate to the closed-form
// profiles F_a and V_ab; what remains is a one- or two-dimensional integral
// whose only singular factor is a single f, absorbed by substitution.
// ---------------------------------------------------------------------------

namespace {

// ∫_lo^hi h(w) f(w) dw; Dirac collapse in white mode, substituted fixed
// Gauss per side in riesz mode.
template <typename Fn>
double f_line_integral(const CovarianceModel& model, Fn&& h, double lo,
                       double hi, int order) {
  if (!(hi > lo)) return 0.0;
  if (model.is_white()) return (lo < 0.0 && 0.0 < hi) ? h(0.0) : 0.0;
  const double p = model.riesz_alpha();
  const GaussRule& rule = gauss_rule(order);
  auto side = [&](double from, double to) {
    if (!(to > from)) return 0.0;
    const double m0 = std::copysign(pow_abs(from, p) / p, from);
    const double m1 = std::copysign(pow_abs(to, p) / p, to);
    const double mid = 0.5 * (m0 + m1), half = 0.5 * (m1 - m0);
    double s = 0.0;
    for (int i = 0; i < order; ++i) {
      const double m = mid + half * rule.nodes[i];
      const double w = std::copysign(std::pow(p * std::abs(m), 1.0 / p), m);
      s += rule.weights[i] * h(w);
    }
    return s * half;
  };
  if (hi <= 0.0 || lo >= 0.0) return side(lo, hi);
  return side(lo, 0.0) + side(0.0, hi);
}

template <typename Fn>
double panel_integral(Fn&& h, double lo, double hi,
                      std::initializer_list<double> breaks, int order) {
  if (!(hi > lo)) return 0.0;
  std::array<double, 12> edges{};
  int ne = 0;
  edges[ne++] = lo;
  for (double b : breaks)
    if (b > lo && b < hi) edges[ne++] = b;
  edges[ne++] = hi;
  std::sort(edges.begin(), edges.begin() + ne);
  const GaussRule& rule = gauss_rule(order);
  double total = 0.0;
  for (int e = 0; e + 1 < ne; ++e) {
    const double a = edges[e], b = edges[e + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < order; ++i)
      s += rule.weights[i] * h(mid + half * rule.nodes[i]);
    total += s * half;
  }
  return total;
}

struct Chains {
  std::array<double, 3> a{};  // x-chain gaps; a[n-1] is the gap up to t
  std::array<double, 3> b{};  // y-chain gaps
  std::array<int, 3> pi{};    // pi[t-rank] = s-rank of the paired node
};

Chains make_chains(std::span<const double> t_nodes,
                   std::span<const double> s_nodes, double t) {
  const int n = static_cast<int>(t_nodes.size());
  std::array<int, 3> t_order = {0, 1, 2}, s_order = {0, 1, 2};
  std::sort(t_order.begin(), t_order.begin() + n,
            [&](int i, int j) { return t_nodes[i] < t_nodes[j]; });
  std::sort(s_order.begin(), s_order.begin() + n,
            [&](int i, int j) { return s_nodes[i] < s_nodes[j]; });
  Chains c;
  std::array<double, 3> ts{}, ss{};
  for (int i = 0; i < n; ++i) {
    ts[i] = t_nodes[t_order[i]];
    ss[i] = s_nodes[s_order[i]];
  }
  for (int i = 0; i + 1 < n; ++i) {
    c.a[i] = ts[i + 1] - ts[i];
    c.b[i] = ss[i + 1] - ss[i];
  }
  c.a[n - 1] = t - ts[n - 1];
  c.b[n - 1] = t - ss[n - 1];
  std::array<int, 3> s_rank{};
  for (int r = 0; r < n; ++r) s_rank[s_order[r]] = r;
  for (int r = 0; r < n; ++r) c.pi[r] = s_rank[t_order[r]];
  return c;
}

double psi2_from_chains(const CovarianceModel& model, const Chains& c) {
  const double a0 = c.a[0], a1 = c.a[1], b0 = c.b[0], b1 = c.b[1];
  if (!(a0 > 0.0 && a1 > 0.0 && b0 > 0.0 && b1 > 0.0)) return 0.0;
  const double E = a1 + b1;
  if (c.pi[0] == 0) {
    // aligned: (1/4) ∫ lambda_{a1 b1}(e) f(e) V_{a0 b0}(e) de
    return 0.25 * f_line_integral(
                      model,
                      [&](double e) {
                        return overlap_lambda(a1, b1, e) *
                               smoothed_f_pair(model, a0, b0, e);
                      },
                      -E, E, kPsi2Line);
  }
  // crossed: (1/4) ∫ lambda_{a1 b1}(e) F_{a0}(e) F_{b0}(e) de
  return 0.25 *
         panel_integral(
             [&](double e) {
               return overlap_lambda(a1, b1, e) * smoothed_f(model, a0, e) *
                      smoothed_f(model, b0, e);
             },
             -E, E,
             {-a0, a0, -b0, b0, -std::abs(a1 - b1), std::abs(a1 - b1), 0.0},
             kPsi2Smooth);
}

double psi3_from_chains(const CovarianceModel& model, const Chains& c) {
  const double a0 = c.a[0], a1 = c.a[1], a2 = c.a[2];
  const double b0 = c.b[0], b1 = c.b[1], b2 = c.b[2];
  if (!(a0 > 0.0 && a1 > 0.0 && a2 > 0.0 && b0 > 0.0 && b1 > 0.0 && b2 > 0.0))
    return 0.0;
  const double E = a2 + b2;
  const int code = c.pi[0] * 100 + c.pi[1] * 10 + c.pi[2];
  auto lam_top = [&](double e) { return overlap_lambda(a2, b2, e); };
  const std::initializer_list<double> e_breaks = {
      0.0, -std::abs(a2 - b2), std::abs(a2 - b2)};

  switch (code) {
    case 12: {  // (0,1,2): f(e) f(w) V0(w) with w - e weighted by lambda_mid
      auto inner = [&](double e) {
        const double D = a1 + b1;
        return f_line_integral(
            model,
            [&](double w) {
              return overlap_lambda(a1, b1, w - e) *
                     smoothed_f_pair(model, a0, b0, w);
            },
            e - D, e + D, kPsi3Line);
      };
      return (1.0 / 16.0) *
             f_line_integral(model,
                             [&](double e) { return lam_top(e) * inner(e); },
                             -E, E, kPsi3Line);
    }
    case 102: {  // (1,0,2): f(e) F_{a0}(e+d) F_{b0}(e+d)
      auto inner = [&](double e) {
        const double D = a1 + b1;
        return panel_integral(
            [&](double d) {
              const double w = e + d;
              return overlap_lambda(a1, b1, d) * smoothed_f(model, a0, w) *
                     smoothed_f(model, b0, w);
            },
            -D, D, {-e - a0, -e + a0, -e - b0, -e + b0}, kPsi3Smooth);
      };
      return (1.0 / 16.0) *
             f_line_integral(model,
                             [&](double e) { return lam_top(e) * inner(e); },
                             -E, E, kPsi3Line);
    }
    case 21: {  // (0,2,1): ∫∫ f(w') f(w) V0(w + w' - e)
      auto inner2 = [&](double e) {
        return f_line_integral(
            model,
            [&](double wp) {
              return f_line_integral(
                  model,
                  [&](double w) {
                    return smoothed_f_pair(model, a0, b0, w + wp - e);
                  },
                  e - b1, e + b1, kPsi3Line);
            },
            e - a1, e + a1, kPsi3Line);
      };
      return (1.0 / 16.0) *
             panel_integral([&](double e) { return lam_top(e) * inner2(e); },
                            -E, E, e_breaks, kPsi3Smooth);
    }
    case 210: {  // (2,1,0): F_{a0}(e-r) f(e+s-r) F_{b0}(e+s)
      auto inner2 = [&](double e) {
        return f_line_integral(
            model,
            [&](double ew) {  // ew = e + (s - r)
              const double d = ew - e;
              const double rlo = std::max(-a1, -b1 - d);
              const double rhi = std::min(a1, b1 - d);
              return panel_integral(
                  [&](double r) {
                    return smoothed_f(model, a0, e - r) *
                           smoothed_f(model, b0, ew + r);
                  },
                  rlo, rhi, {e - a0, e + a0, -ew - b0, -ew + b0}, kPsi3Smooth);
            },
            e - (a1 + b1), e + (a1 + b1), kPsi3Line);
      };
      return (1.0 / 16.0) *
             panel_integral([&](double e) { return lam_top(e) * inner2(e); },
                            -E, E, e_breaks, kPsi3Smooth);
    }
    case 120: {  // (1,2,0): F_{a0}(w'+s) f(e-r)=f(w') F_{b0}(e+s)
      auto inner2 = [&](double e) {
        return f_line_integral(
            model,
            [&](double wp) {
              return panel_integral(
                  [&](double s) {
                    return smoothed_f(model, a0, wp + s) *
                           smoothed_f(model, b0, e + s);
                  },
                  -b1, b1, {-wp - a0, -wp + a0, -e - b0, -e + b0}, kPsi3Smooth);
            },
            e - a1, e + a1, kPsi3Line);
      };
      return (1.0 / 16.0) *
             panel_integral([&](double e) { return lam_top(e) * inner2(e); },
                            -E, E, e_breaks, kPsi3Smooth);
    }
    case 201: {  // (2,0,1): F_{a0}(e-r) F_{b0}(w-r) f(e+s)=f(w)
      auto inner2 = [&](double e) {
        return f_line_integral(
            model,
            [&](double w) {
              return panel_integral(
                  [&](double r) {
                    return smoothed_f(model, a0, e - r) *
                           smoothed_f(model, b0, w - r);
                  },
                  -a1, a1, {e - a0, e + a0, w - b0, w + b0}, kPsi3Smooth);
            },
            e - b1, e + b1, kPsi3Line);
      };
      return (1.0 / 16.0) *
             panel_integral([&](double e) { return lam_top(e) * inner2(e); },
                            -E, E, e_breaks, kPsi3Smooth);
    }
    default:
      throw std::logic_error("psi3: unreachable pairing code");
  }
}

}  // namespace

double psi_pair(const CovarianceModel& model, std::span<const double> t_nodes,
                std::span<const double> s_nodes, double t) {
  const int n = static_cast<int>(t_nodes.size());
  if (n != static_cast<int>(s_nodes.size()) || n < 1 || n > 3)
    throw std::invalid_argument("psi_pair: n must be 1..3");
  const Chains c = make_chains(t_nodes, s_nodes, t);
  if (n == 1) return smoothed_f_pair(model, c.a[0], c.b[0], 0.0);
  if (n == 2) return psi2_from_chains(model, c);
  return psi3_from_chains(model, c);
}

double psi_exact(double t) {
  if (t < 0.0) throw std::domain_error("psi requires t >= 0");
  return 0.25 * t * t;
}

double psi_grid(double t, int cells_per_axis) {
  if (t == 0.0) return 0.0;
  const int n = cells_per_axis;
  const double ds = t / n;
  const double dz = 2.0 * t / n;
  KahanSum sum;
  for (int i = 0; i < n; ++i) {
    const double s0 = i * ds, s1 = (i + 1) * ds;
    for (int j = 0; j < n; ++j) {
      const double z0 = -t + j * dz, z1 = -t + (j + 1) * dz;
      // {(r,z): |z| < r, r < t} is the cone {|z| < t - s} under s = t - r.
      const double frac = WaveKernel::cone_fraction(t, 0.0, s0, s1, z0, z1);
      sum.add(0.25 * frac * ds * dz);
    }
  }
  return sum.value();
}

double psi0(const CovarianceModel& model, double t) {
  return psi0_quadrature(model, t);
}

namespace {

// ∫∫_{[0,t]^2} gamma(u - v) W(u, v) du dv for symmetric W:
// 2 H (2H-1) ∫_0^t w^(2H-2) S(w) dw with S(w) = ∫_w^t W(u, u-w) du, and the
// gamma singularity absorbed by the power-weight substitution.
double gamma_double_integral(const CovarianceModel& model,
                             const std::function<double(double, double)>& W,
                             double t) {
  const double H = model.hurst();
  auto S = [&](double w) {
    if (!(w < t)) return 0.0;
    return integrate_adaptive([&](double u) { return W(u, u - w); }, w, t,
                              {1e-11, 1e-9, 200000})
        .value;
  };
  const double val = integrate_abs_power_weight(S, 0.0, 2.0 * H - 1.0, 0.0, t,
                                                {1e-11, 1e-9, 400000});
  return 2.0 * H * (2.0 * H - 1.0) * val;
}

double spectral_s2_unit(const CovarianceModel& model) {
  // S2(1) = ∫ (1 - cos xi)/xi^2 mu(dxi); S2(c) = c^(1+alpha) S2(1) by exact
  // scaling (exponent 1 in white mode).  1 - cos xi is evaluated as
  // 2 sin^2(xi/2), which is cancellation-free.
  SpectralIntegrand s;
  s.W = [](double xi) {
    if (std::abs(xi) < 1e-8) return 0.5;
    const double h = std::sin(0.5 * xi);
    return 2.0 * h * h / (xi * xi);
  };
  s.osc_freq = 1.0;
  s.dc_over_xi2 = 2.0;
  s.abs_tol = 1e-12;
  return mu_integral(model, s);
}

double cached_s2_unit(const CovarianceModel& model) {
  static std::map<std::pair<double, bool>, double> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_pair(model.riesz_alpha(), model.is_white());
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, spectral_s2_unit(model)).first;
  return it->second;
}

}  // namespace

double phi(const CovarianceModel& model, double t) {
  if (!(t > 0.0)) throw std::domain_error("phi requires t > 0");
  return gamma_double_integral(
      model, [&](double u, double v) { return p0_pair(model, u, v); }, t);
}

double alpha1(const CovarianceModel& model, double t) {
  if (!(t > 0.0)) throw std::domain_error("alpha1 requires t > 0");
  const double s2 = cached_s2_unit(model);
  const double expo = model.is_white() ? 1.0 : 1.0 + model.riesz_alpha();
  auto psi1 = [&](double u, double v) {
    // <G(u), G(v)>_0 = (S2(u+v) - S2(|u-v|)) / 2 in the Fourier representation.
    return 0.5 * s2 * (std::pow(u + v, expo) - pow_abs(u - v, expo));
  };
  return gamma_double_integral(model, psi1, t);
}

// ---------------------------------------------------------------------------
// alpha_2: exact gamma cell masses and gamma-weighted centroids in time,
// midpoint in the psi_2 argument, Richardson over (cells, 2*cells).
// ---------------------------------------------------------------------------

namespace {

struct CellMassGrid {
  int n = 0;
  std::vector<double> mass;
  std::vector<double> centroid_t;
  std::vector<double> centroid_s;
};

CellMassGrid gamma_cell_grid(const CovarianceModel& model, double t, int n) {
  const double H = model.hurst();
  const double two_h = 2.0 * H;
  CellMassGrid g;
  g.n = n;
  const double delta = t / n;
  g.mass.assign(static_cast<std::size_t>(n) * n, 0.0);
  g.centroid_t.assign(g.mass.size(), 0.0);
  g.centroid_s.assign(g.mass.size(), 0.0);

  auto R = [two_h](double s, double u) {
    return 0.5 *
           (std::pow(s, two_h) + std::pow(u, two_h) - pow_abs(s - u, two_h));
  };
  // Antiderivative of s |-> s * sgn(s-e)|s-e|^(2H-1):
  //   sgn(w)|w|^(2H+1)/(2H+1) + e |w|^(2H)/(2H),  w = s - e.
  auto moment_prim = [two_h](double s, double e) {
    const double w = s - e;
    return std::copysign(pow_abs(w, two_h + 1.0) / (two_h + 1.0), w) +
           e * pow_abs(w, two_h) / two_h;
  };

  for (int i = 0; i < n; ++i) {
    const double a = i * delta, b = (i + 1) * delta;
    for (int j = 0; j < n; ++j) {
      const double c = j * delta, d = (j + 1) * delta;
      const std::size_t idx = static_cast<std::size_t>(i) * n + j;
      const double mass = R(b, d) - R(b, c) - R(a, d) + R(a, c);
      g.mass[idx] = mass;
      if (!(mass > 0.0)) {
        g.centroid_t[idx] = 0.5 * (a + b);
        g.centroid_s[idx] = 0.5 * (c + d);
        continue;
      }
      const double mt =
          H * (moment_prim(b, c) - moment_prim(a, c) -
               (moment_prim(b, d) - moment_prim(a, d)));
      const double ms =
          H * (moment_prim(d, a) - moment_prim(c, a) -
               (moment_prim(d, b) - moment_prim(c, b)));
      g.centroid_t[idx] = std::min(b, std::max(a, mt / mass));
      g.centroid_s[idx] = std::min(d, std::max(c, ms / mass));
    }
  }
  return g;
}

double alpha2_sweep(const CovarianceModel& model, double t, int n) {
  const CellMassGrid g = gamma_cell_grid(model, t, n);
  const std::size_t P = g.mass.size();
  std::vector<double> partial(P, 0.0);
  parallel_chunks(P, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      const double qp = g.mass[p];
      if (!(qp > 0.0)) continue;
      KahanSum acc;
      for (std::size_t q = p; q < P; ++q) {
        const double qq = g.mass[q];
        if (!(qq > 0.0)) continue;
        const double tn[2] = {g.centroid_t[p], g.centroid_t[q]};
        const double sn[2] = {g.centroid_s[p], g.centroid_s[q]};
        const Chains c = make_chains(std::span<const double>(tn, 2),
                                     std::span<const double>(sn, 2), t);
        const double w = (q == p) ? 1.0 : 2.0;
        acc.add(w * qp * qq * psi2_from_chains(model, c));
      }
      partial[p] = acc.value();
    }
  });
  KahanSum total;
  for (double v : partial) total.add(v);
  return total.value();
}

}  // namespace

double alpha2(const CovarianceModel& model, double t, int cells) {
  if (!(t > 0.0)) throw std::domain_error("alpha2 requires t > 0");
  const double coarse = alpha2_sweep(model, t, cells);
  const double fine = alpha2_sweep(model, t, 2 * cells);
  return (4.0 * fine - coarse) / 3.0;
}

QmcEstimate alpha3(const CovarianceModel& model, double t, int log2_points,
                   std::uint64_t seed) {
  if (!(t > 0.0)) throw std::domain_error("alpha3 requires t > 0");
  if (log2_points < 6 || log2_points > 22)
    throw std::invalid_argument("alpha3: log2_points out of range");
  constexpr int kReplicates = 8;
  const std::uint64_t per_rep = 1ULL << (log2_points - 3);
  const double H = model.hurst();
  const double q = 2.0 * H - 1.0;
  Halton halton(6);

  std::array<double, kReplicates> means{};
  parallel_chunks(kReplicates, [&](std::size_t rlo, std::size_t rhi) {
    for (std::size_t rep = rlo; rep < rhi; ++rep) {
      const auto shift = Halton::random_shift(seed, static_cast<int>(rep));
      KahanSum acc;
      for (std::uint64_t k = 0; k < per_rep; ++k) {
        const auto u = halton.point(rep * per_rep + k, shift);
        double tn[3], sn[3];
        double weight = t * t * t;
        for (int j = 0; j < 3; ++j) {
          tn[j] = t * u[j];
          const double w_lo = -std::pow(t - tn[j], q);
          const double w_hi = std::pow(tn[j], q);
          const double w = w_lo + u[3 + j] * (w_hi - w_lo);
          const double v = std::copysign(std::pow(std::abs(w), 1.0 / q), w);
          sn[j] = std::min(t, std::max(0.0, tn[j] - v));
          weight *= H * (w_hi - w_lo);
        }
        acc.add(weight * psi_pair(model, std::span<const double>(tn, 3),
                                  std::span<const double>(sn, 3), t));
      }
      means[rep] = acc.value() / static_cast<double>(per_rep);
    }
  });

  QmcEstimate est;
  est.replicates = kReplicates;
  est.points = per_rep * kReplicates;
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= kReplicates;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= (kReplicates - 1);
  est.value = mean;
  est.std_error = std::sqrt(var / kReplicates);
  return est;
}

double alpha_n(const CovarianceModel& model, int n, double t) {
  switch (n) {
    case 1:
      return alpha1(model, t);
    case 2:
      return alpha2(model, t);
    case 3:
      return alpha3(model, t).value;
    default:
      throw std::invalid_argument("alpha_n supports n in {1, 2, 3}");
  }
}

// ---------------------------------------------------------------------------
// Bound reports.
// ---------------------------------------------------------------------------

AlphaReport alpha_bound_check(const CovarianceModel& model, int n, double t,
                              std::span<const double> M_scan) {
  AlphaReport rep;
  rep.t = t;
  rep.N = n;
  rep.alpha.assign(n + 1, 0.0);
  rep.alpha[0] = 1.0;
  for (int k = 1; k <= n; ++k) {
    if (k == 3) {
      const QmcEstimate est = alpha3(model, t);
      rep.alpha[k] = est.value;
      rep.alpha3_std_error = est.std_error;
    } else {
      rep.alpha[k] = alpha_n(model, k, t);
    }
  }
  rep.M_scan.assign(M_scan.begin(), M_scan.end());
  rep.bound.assign(n, {});
  const double gt = model.big_gamma(t);
  double fact = 1.0;
  for (int k = 1; k <= n; ++k) {
    fact *= k;
    rep.bound[k - 1].resize(M_scan.size());
    for (std::size_t mi = 0; mi < M_scan.size(); ++mi) {
      const double M = M_scan[mi];
      const double b =
          std::exp(M * t) * fact * std::pow(2.0 * gt * model.KM(M) / M, k);
      rep.bound[k - 1][mi] = b;
      if (rep.alpha[k] > b) {
        rep.bounds_hold = false;
        rep.offending_M = M;
      }
    }
  }
  return rep;
}

AlphaReport second_moment_series(const CovarianceModel& model, double t,
                                 int N) {
  if (N < 0 || N > 3)
    throw std::invalid_argument("second_moment_series: N <= 3");
  AlphaReport rep;
  rep.t = t;
  rep.N = N;
  rep.alpha.assign(N + 1, 0.0);
  rep.alpha[0] = 1.0;
  double fact = 1.0;
  rep.partial_sum = 1.0;
  for (int k = 1; k <= N; ++k) {
    fact *= k;
    if (k == 3) {
      const QmcEstimate est = alpha3(model, t);
      rep.alpha[k] = est.value;
      rep.alpha3_std_error = est.std_error;
    } else {
      rep.alpha[k] = alpha_n(model, k, t);
    }
    rep.partial_sum += rep.alpha[k] / fact;
  }
  rep.tail_bound = std::numeric_limits<double>::infinity();
  const double gt = model.big_gamma(t);
  for (double M = 2.0; M <= 1048576.0; M *= 2.0) {
    const double qq = 2.0 * gt * model.KM(M) / M;
    if (!(qq < 1.0)) continue;
    const double tail = std::exp(M * t) * std::pow(qq, N + 1) / (1.0 - qq);
    if (tail < rep.tail_bound) {
      rep.tail_bound = tail;
      rep.tail_M = M;
    }
  }
  return rep;
}

namespace {

double scan_smallest_M(const CovarianceModel& model, double T, double factor,
                       double* ratio, double* ratio_prev) {
  const double gt = model.big_gamma(T);
  for (double M = 2.0; M <= 2097152.0; M *= 2.0) {
    const double r = factor * gt * (2.0 / M) * model.KM(M);
    if (r < 0.5) {
      *ratio = r;
      const double half = 0.5 * M;
      *ratio_prev = factor * gt * (2.0 / half) * model.KM(half);
      return M;
    }
  }
  throw QuadratureError("no admissible M in the doubling scan");
}

}  // namespace

MalliavinBoundReport d_norm_constant(const CovarianceModel& model, double T) {
  if (!(T > 0.0)) throw std::domain_error("d_norm_constant requires T > 0");
  MalliavinBoundReport rep;
  rep.T = T;
  const double e2 = std::exp(2.0);
  rep.M = scan_smallest_M(model, T, e2, &rep.ratio, &rep.ratio_at_half_M);
  rep.C = 2.0 * kPi * T * std::exp(2.0 * rep.M * T) * e2;

  // Per-order diagnostics at t = T, r = T/2: the n = 1 chaos contributes
  // ∫ G^2(t-r, x-z) dz = (t-r)/2 exactly, and the n = 2 per-position values
  // are H_1^(2) = psi_0(t-r), H_2^(2) = psi_0(r).
  const double t = T, r = 0.5 * T;
  rep.first_chaos_value = 0.5 * (t - r);
  rep.first_chaos_bound = kPi * t * std::exp(2.0 * rep.M * t);
  rep.H_values = {psi0(model, t - r), psi0(model, r)};
  const double hb = std::exp(2.0 * rep.M * t) * (2.0 * model.KM(rep.M) / rep.M);
  rep.H_bounds = {hb, hb};
  return rep;
}

MalliavinBoundReport d2_norm_constant(const CovarianceModel& model, double T) {
  if (!(T > 0.0)) throw std::domain_error("d2_norm_constant requires T > 0");
  MalliavinBoundReport rep;
  rep.T = T;
  const double e3 = std::exp(3.0);
  rep.M = scan_smallest_M(model, T, e3, &rep.ratio, &rep.ratio_at_half_M);
  rep.C = 2.0 * kPi * T * std::exp(2.0 * rep.M * T) * e3;
  // Geometric series with [n(n-1)]^2 <= 4 e^(3(n-2)): once the selection
  // ratio is < 1/2 the series sums below 8.
  rep.C_prime = 8.0 * kPi * kPi * T * T * std::exp(3.0 * rep.M * T);
  return rep;
}

ConstantsTable make_constants(const CovarianceModel& model, double T) {
  ConstantsTable c;
  c.T = T;
  c.big_gamma_T = model.big_gamma(T);
  c.c0 = model.c0();
  const MalliavinBoundReport d1 = d_norm_constant(model, T);
  const MalliavinBoundReport d2 = d2_norm_constant(model, T);
  c.M_T = d1.M;
  c.C_T = d1.C;
  c.M_T_prime = d2.M;
  c.C_T_dprime = d2.C;
  c.C_T_prime = d2.C_prime;
  return c;
}

}  // namespace chaoswave
