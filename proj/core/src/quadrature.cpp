#include "chaoswave/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace chaoswave {

namespace {

GaussRule make_rule(int n) {
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int k = 0; k < (n + 1) / 2; ++k) {
    double x = std::cos(kPi * (k + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[k] = -x;
    r.nodes[n - 1 - k] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.weights[k] = w;
    r.weights[n - 1 - k] = w;
  }
  return r;
}

}  // namespace

const GaussRule& gauss_rule(int n) {
  static std::map<int, GaussRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_rule(n)).first;
  return it->second;
}

double integrate_gl(const Fn1D& f, double a, double b, int order) {
  const GaussRule& r = gauss_rule(order);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  KahanSum s;
  for (int i = 0; i < order; ++i)
    s.add(r.weights[i] * f(mid + half * r.nodes[i]));
  return s.value() * half;
}

namespace {

struct Panel {
  double a, b, coarse, fine, err;
};

Panel make_panel(const Fn1D& f, double a, double b, long& evals) {
  Panel p;
  p.a = a;
  p.b = b;
  p.coarse = integrate_gl(f, a, b, 10);
  p.fine = integrate_gl(f, a, b, 20);
  p.err = std::abs(p.fine - p.coarse);
  evals += 30;
  return p;
}

}  // namespace

QuadratureResult integrate_adaptive_split(const Fn1D& f, double a, double b,
                                          const std::vector<double>& breaks,
                                          const QuadratureOptions& opt) {
  QuadratureResult out;
  if (!(b > a)) return out;

  std::vector<double> edges{a};
  for (double x : breaks)
    if (x > a && x < b) edges.push_back(x);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::vector<Panel> stack;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    stack.push_back(make_panel(f, edges[i], edges[i + 1], out.evals));

  std::vector<Panel> done;
  while (!stack.empty()) {
    // Total over everything currently known, to scale the tolerance.
    double total = 0.0, err = 0.0;
    for (const Panel& p : done) {
      total += p.fine;
      err += p.err;
    }
    for (const Panel& p : stack) {
      total += p.fine;
      err += p.err;
    }
    const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
    if (err <= tol) break;

    // Split the worst panel.
    std::size_t worst = 0;
    for (std::size_t i = 1; i < stack.size(); ++i)
      if (stack[i].err > stack[worst].err) worst = i;
    Panel p = stack[worst];
    stack.erase(stack.begin() + static_cast<long>(worst));
    if (p.err <= 1e-16 * (1.0 + std::abs(p.fine)) ||
        (p.b - p.a) < 1e-14 * (std::abs(p.a) + std::abs(p.b) + 1.0)) {
      done.push_back(p);
      continue;
    }
    if (out.evals > opt.max_evals)
      throw QuadratureError("quadrature failure: refinement budget exhausted");
    const double mid = 0.5 * (p.a + p.b);
    stack.push_back(make_panel(f, p.a, mid, out.evals));
    stack.push_back(make_panel(f, mid, p.b, out.evals));
  }

  KahanSum sum;
  double err = 0.0;
  // Deterministic order: sort by left endpoint.
  std::vector<Panel> all = done;
  all.insert(all.end(), stack.begin(), stack.end());
  std::sort(all.begin(), all.end(),
            [](const Panel& x, const Panel& y) { return x.a < y.a; });
  for (const Panel& p : all) {
    sum.add(p.fine);
    err += p.err;
  }
  out.value = sum.value();
  out.error = err;
  return out;
}

QuadratureResult integrate_adaptive(const Fn1D& f, double a, double b,
                                    const QuadratureOptions& opt) {
  return integrate_adaptive_split(f, a, b, {}, opt);
}

double integrate_abs_power_weight(const Fn1D& h, double c, double p, double lo,
                                  double hi, const QuadratureOptions& opt) {
  // w(m) = c + sign(m) (p |m|)^(1/p);  dw |w-c|^(p-1) = dm.
  auto side = [&](double from, double to) -> double {
    if (!(to > from)) return 0.0;
    const double m_from = std::copysign(std::pow(std::abs(from - c), p) / p,
                                        from - c);
    const double m_to = std::copysign(std::pow(std::abs(to - c), p) / p,
                                      to - c);
    auto g = [&](double m) {
      const double w = c + std::copysign(std::pow(p * std::abs(m), 1.0 / p), m);
      return h(w);
    };
    return integrate_adaptive(g, m_from, m_to, opt).value;
  };
  if (hi <= c) return side(lo, hi);
  if (lo >= c) return side(lo, hi);
  return side(lo, c) + side(c, hi);
}

double integrate_blocked(const Fn1D& f, double a, double b, double panel_width,
                         int order) {
  if (!(b > a)) return 0.0;
  const GaussRule& r = gauss_rule(order);
  KahanSum s;
  double lo = a;
  while (lo < b) {
    // Cap panels both by the oscillation scale and geometrically, so that a
    // power-law factor cannot decay by orders of magnitude inside one panel.
    double hi = std::min(b, lo + panel_width);
    if (lo > 0.0) hi = std::min(hi, 2.0 * lo);
    if (!(hi > lo)) break;
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double panel = 0.0;
    for (int k = 0; k < order; ++k)
      panel += r.weights[k] * f(mid + half * r.nodes[k]);
    s.add(panel * half);
    lo = hi;
  }
  return s.value();
}

}  // namespace chaoswave
