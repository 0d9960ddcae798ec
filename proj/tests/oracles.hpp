// Independent reference computations for the tests. Nothing here calls into
// the library; closed forms are re-derived and integrals use a separate
// adaptive Simpson rule.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
constexpr double pi = std::numbers::pi;

namespace detail {
template <class T>
T simpson_step(const std::function<T(double)>& f, double a, double b, T fa, T fm, T fb, T whole, double tol,
               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const T flm = f(lm), frm = f(rm);
  const T left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const T right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const T diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson on [a, b], started from 16 panels.
template <class T>
T integrate(const std::function<T(double)>& f, double a, double b, double tol = 1e-13) {
  const int panels = 16;
  T total{};
  const double h = (b - a) / panels;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * h, hi = lo + h;
    const T fa = f(lo), fm = f(0.5 * (lo + hi)), fb = f(hi);
    total += detail::simpson_step<T>(f, lo, hi, fa, fm, fb, h / 6.0 * (fa + 4.0 * fm + fb), tol / panels, 40);
  }
  return total;
}

/// sqrt with the cut placed so that the result behaves like z at infinity.
inline cplx sqrt_outward(cplx z2_minus_c, cplx z) {
  cplx s = std::sqrt(z2_minus_c);
  if (std::real(std::conj(s) * z) < 0.0) s = -s;
  return s;
}

inline double semicircle_density(double t, double x) {
  const double r2 = 4.0 * t - x * x;
  return r2 > 0.0 ? std::sqrt(r2) / (2.0 * pi * t) : 0.0;
}

/// G of the variance-t semicircle, (z - sqrt(z^2 - 4t)) / (2t).
inline cplx semicircle_g(double t, cplx z) { return (z - sqrt_outward(z * z - 4.0 * t, z)) / (2.0 * t); }

/// Marchenko-Pastur with ratio c and scale s: density on s(1 -+ sqrt c)^2.
inline double mp_density(double c, double s, double x) {
  const double a = s * (1.0 - std::sqrt(c)) * (1.0 - std::sqrt(c));
  const double b = s * (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
  if (x <= a || x >= b) return 0.0;
  return std::sqrt((b - x) * (x - a)) / (2.0 * pi * c * s * x);
}

/// G of a density on [a, b] with square-root edges, integrated in the angle
/// variable x = m + r cos(phi) so the integrand is smooth.
inline cplx cauchy_of_edge_density(const std::function<double(double)>& density, double a, double b, cplx z) {
  const double m = 0.5 * (a + b), r = 0.5 * (b - a);
  std::function<cplx(double)> f = [&](double phi) {
    const double x = m + r * std::cos(phi);
    return density(x) * r * std::sin(phi) / (z - x);
  };
  return integrate<cplx>(f, 0.0, pi);
}

inline cplx semicircle_g_by_quadrature(double t, cplx z) {
  const double e = 2.0 * std::sqrt(t);
  return cauchy_of_edge_density([t](double x) { return semicircle_density(t, x); }, -e, e, z);
}

inline cplx mp_g_by_quadrature(double c, double s, cplx z) {
  const double a = s * (1.0 - std::sqrt(c)) * (1.0 - std::sqrt(c));
  const double b = s * (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
  cplx g = cauchy_of_edge_density([c, s](double x) { return mp_density(c, s, x); }, a, b, z);
  if (c > 1.0) g += (1.0 - 1.0 / c) / z;
  return g;
}

inline cplx atomic_g(const std::vector<std::pair<double, double>>& atoms, cplx z) {
  cplx g = 0.0;
  for (const auto& [x, w] : atoms) g += w / (z - x);
  return g;
}

/// Coefficients (highest degree first) of det(lambda I - H) by Faddeev-LeVerrier.
inline std::vector<cplx> characteristic_polynomial(const std::vector<std::vector<cplx>>& h) {
  const std::size_t n = h.size();
  using Mat = std::vector<std::vector<cplx>>;
  auto mul = [n](const Mat& a, const Mat& b) {
    Mat c(n, std::vector<cplx>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
  };
  std::vector<cplx> coef(n + 1);
  coef[0] = 1.0;
  Mat m(n, std::vector<cplx>(n));  // M_0 = 0
  for (std::size_t k = 1; k <= n; ++k) {
    Mat am = mul(h, m);
    for (std::size_t i = 0; i < n; ++i) am[i][i] += coef[k - 1];
    m = am;  // M_k = H M_{k-1} + c_{k-1} I
    const Mat hm = mul(h, m);
    cplx tr = 0.0;
    for (std::size_t i = 0; i < n; ++i) tr += hm[i][i];
    coef[k] = -tr / static_cast<double>(k);
  }
  return coef;
}

/// All roots of a monic polynomial by Durand-Kerner, polished by Newton.
inline std::vector<cplx> polynomial_roots(const std::vector<cplx>& coef) {
  const std::size_t n = coef.size() - 1;
  auto eval = [&](cplx x) {
    cplx v = 0.0;
    for (const auto& c : coef) v = v * x + c;
    return v;
  };
  auto deriv = [&](cplx x) {
    cplx v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v = v * x + coef[i] * static_cast<double>(n - i);
    return v;
  };
  double bound = 0.0;
  for (std::size_t i = 1; i <= n; ++i) bound = std::max(bound, std::abs(coef[i]));
  bound += 1.0;
  std::vector<cplx> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = bound * std::polar(1.0, 0.4 + 2.0 * pi * static_cast<double>(i) / n);
  for (int it = 0; it < 5000; ++it) {
    double move = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cplx den = 1.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) den *= z[i] - z[j];
      const cplx step = eval(z[i]) / den;
      z[i] -= step;
      move = std::max(move, std::abs(step));
    }
    if (move < 1e-15 * bound) break;
  }
  for (auto& r : z) {
    for (int it = 0; it < 3; ++it) {
      const cplx d = deriv(r);
      if (std::abs(d) > 0.0) r -= eval(r) / d;
    }
  }
  return z;
}

/// Density of semicircle(t) boxplus symmetric Bernoulli at real x. Adding the
/// R-transforms t g and (sqrt(1 + 4 g^2) - 1) / (2 g) and clearing the root
/// gives the cubic t^2 g^3 - 2 t x g^2 + (x^2 + t - 1) g - x = 0 for G; the
/// density is -Im g / pi for the root in the lower half plane.
inline double semicircle_bernoulli_density(double t, double x) {
  const std::vector<cplx> coef{1.0, -2.0 * x / t, (x * x + t - 1.0) / (t * t), -x / (t * t)};
  double best = 0.0;
  for (const cplx& g : polynomial_roots(coef)) best = std::max(best, -g.imag());
  return best < 1e-7 ? 0.0 : best / pi;
}

/// Discriminant of the cubic above; negative exactly on the support interior.
inline double semicircle_bernoulli_discriminant(double t, double x) {
  const double a = t * t, b = -2.0 * t * x, c = x * x + t - 1.0, d = -x;
  return 18 * a * b * c * d - 4 * b * b * b * d + b * b * c * c - 4 * a * c * c * c - 27 * a * a * d * d;
}

/// Density of the arcsine law on [-2, 2] (Bernoulli boxplus Bernoulli).
inline double arcsine_density(double x) { return std::abs(x) < 2.0 ? 1.0 / (pi * std::sqrt(4.0 - x * x)) : 0.0; }

/// Edges of {x : f(x) > 0} on [lo, hi], scanned with n points and bisected.
inline std::vector<double> positivity_edges(const std::function<double(double)>& f, double lo, double hi, int n) {
  std::vector<double> edges;
  double prev_x = lo;
  bool prev = f(lo) > 0.0;
  for (int i = 1; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    const bool cur = f(x) > 0.0;
    if (cur != prev) {
      double a = prev_x, b = x;
      for (int k = 0; k < 60; ++k) {
        const double m = 0.5 * (a + b);
        ((f(m) > 0.0) == prev ? a : b) = m;
      }
      edges.push_back(0.5 * (a + b));
    }
    prev = cur;
    prev_x = x;
  }
  return edges;
}

/// Random point with Im in [im_lo, im_hi] and Re in [-re_span, re_span].
inline cplx random_upper(std::mt19937_64& rng, double re_span, double im_lo, double im_hi) {
  std::uniform_real_distribution<double> re(-re_span, re_span), im(im_lo, im_hi);
  return {re(rng), im(rng)};
}

}  // namespace oracle
