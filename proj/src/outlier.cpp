#include "outlier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "errors.hpp"

namespace freeconv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double edge_inset(const SpectralMeasure& tau) { return 1e-12 * std::max(1.0, tau.radius()); }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

double real_g(const SpectralMeasure& tau, double x) { return cauchy_transform(tau, cplx(x, 0.0)).real(); }

/// Connected components of R \ supp(nu), further split at the poles of F_nu.
/// Open intervals; the outer two are unbounded.
std::vector<Interval> analytic_pieces(const SpectralMeasure& nu) {
  const SupportSet s = support(nu);
  std::vector<Interval> pieces;
  pieces.push_back({-kInf, s.intervals().front().lo});
  for (const auto& gap : s.bounded_gaps()) pieces.push_back(gap);
  pieces.push_back({s.intervals().back().hi, kInf});
  std::vector<Interval> out;
  const auto poles = reciprocal_poles(nu);
  for (const auto& p : pieces) {
    double lo = p.lo;
    for (double pole : poles) {
      if (pole > p.lo && pole < p.hi) {
        out.push_back({lo, pole});
        lo = pole;
      }
    }
    out.push_back({lo, p.hi});
  }
  return out;
}

/// Removes the closed set `k` from the open interval (lo, hi).
std::vector<Interval> subtract(double lo, double hi, const SupportSet& k) {
  std::vector<Interval> out;
  double cur = lo;
  for (const auto& iv : k.intervals()) {
    if (iv.hi <= cur) continue;
    if (iv.lo >= hi) break;
    if (iv.lo > cur) out.push_back({cur, iv.lo});
    cur = std::max(cur, iv.hi);
    if (cur >= hi) break;
  }
  if (cur < hi) out.push_back({cur, hi});
  return out;
}

/// Root of an increasing function on [a, b] with f(a) < 0 < f(b), by Newton
/// steps that fall back to bisection when they leave the bracket.
template <class F>
double safeguarded_newton(F&& eval, double a, double b, double tol, double* residual) {
  double x = 0.5 * (a + b);
  double r = 0.0;
  for (int it = 0; it < 300; ++it) {
    double d = 0.0;
    r = eval(x, &d);
    if (std::abs(r) < tol) break;
    if (r < 0) {
      a = x;
    } else {
      b = x;
    }
    if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) break;
    double xn = d > 0 && std::isfinite(d) ? x - r / d : a - 1.0;
    if (!(xn > a && xn < b)) xn = 0.5 * (a + b);
    x = xn;
  }
  *residual = r;
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------

SpikeSet::SpikeSet(std::vector<Spike> spikes) : spikes_(std::move(spikes)) {
  for (const auto& s : spikes_) {
    if (!std::isfinite(s.theta)) throw DomainError("spike theta must be finite");
    if (s.multiplicity < 1) throw DomainError("spike multiplicity must be a positive integer");
  }
  std::sort(spikes_.begin(), spikes_.end(), [](const Spike& a, const Spike& b) { return a.theta > b.theta; });
  for (std::size_t i = 1; i < spikes_.size(); ++i) {
    if (spikes_[i].theta == spikes_[i - 1].theta) {
      throw DomainError("spike values must be distinct; merge them into one multiplicity");
    }
  }
}

int SpikeSet::rank() const noexcept {
  int r = 0;
  for (const auto& s : spikes_) r += s.multiplicity;
  return r;
}

std::vector<double> SpikeSet::expanded() const {
  std::vector<double> out;
  for (const auto& s : spikes_) out.insert(out.end(), static_cast<std::size_t>(s.multiplicity), s.theta);
  return out;
}

void SpikeSet::check_outside(const SpectralMeasure& mu, double margin) const {
  for (const auto& s : spikes_) {
    if (mu.touches_support(s.theta, margin)) {
      throw DomainError("spike theta = " + fmt(s.theta) + " lies within " + fmt(margin) + " of supp(mu)");
    }
  }
}

double spike_residual(const SpectralMeasure& mu, const SpectralMeasure& nu, double theta, double rho,
                      const TransformOptions& opt) {
  const double s = h_transform(mu, cplx(theta, 0.0), opt).real();
  return h_transform(nu, cplx(s + rho, 0.0), opt).real() - theta + rho;
}

double derivative_product(const SpectralMeasure& mu, const SpectralMeasure& nu, double theta, double rho,
                          const TransformOptions& opt) {
  const HValue hm = h_with_derivative(mu, cplx(theta, 0.0), opt);
  return hm.dh.real() * h_derivative(nu, cplx(hm.h.real() + rho, 0.0), opt).real();
}

std::vector<double> reciprocal_poles(const SpectralMeasure& nu) {
  std::vector<double> poles;
  if (nu.point_mass_location()) return poles;
  const double inset = edge_inset(nu);
  for (const auto& gap : support(nu).bounded_gaps()) {
    double a = gap.lo + inset;
    double b = gap.hi - inset;
    if (!(a < b)) continue;
    double ga = 0.0;
    double gb = 0.0;
    try {
      ga = real_g(nu, a);
      gb = real_g(nu, b);
    } catch (const Error&) {
      continue;
    }
    // G is strictly decreasing on a gap, so there is at most one zero.
    if (!(ga > 0.0 && gb < 0.0)) continue;
    for (int it = 0; it < 200 && b - a > 2.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a));
         ++it) {
      const double m = 0.5 * (a + b);
      (real_g(nu, m) > 0.0 ? a : b) = m;
    }
    poles.push_back(0.5 * (a + b));
  }
  return poles;
}

EdgeThresholds edge_thresholds(const SpectralMeasure& nu) {
  // Square-root edges: G(b + d) = G(b) - c sqrt(d) + O(d), so 2 G(b + d) - G(b + 4d) = G(b) + O(d).
  const Interval h = support(nu).hull();
  const double d = 1e-10 * std::max(1.0, nu.radius());
  const double upper = 2.0 * real_g(nu, h.hi + d) - real_g(nu, h.hi + 4.0 * d);
  const double lower = 2.0 * real_g(nu, h.lo - d) - real_g(nu, h.lo - 4.0 * d);
  return {1.0 / upper, 1.0 / lower};
}

InfDivDerivative infdiv_derivative(const SpectralMeasure& mu, const SpectralMeasure& nu, double theta) {
  if (!nu.has_closed_form_r()) throw FamilyError("no closed-form R-transform for " + nu.describe());
  const auto H = [&](double x) { return x + closed_form_r(nu, cauchy_transform(mu, cplx(x, 0.0))).real(); };
  const CauchyValue g = cauchy_with_derivative(mu, cplx(theta, 0.0));
  const double analytic = 1.0 + (closed_form_r_derivative(nu, g.g) * g.dg).real();
  constexpr double h = 1e-7;
  return {analytic, (H(theta + h) - H(theta - h)) / (2.0 * h)};
}

std::optional<double> outliers_infdiv(const SpectralMeasure& mu, const SpectralMeasure& nu, double theta) {
  if (!nu.has_closed_form_r()) throw FamilyError("no closed-form R-transform for " + nu.describe());
  if (const auto a = nu.point_mass_location()) return theta + *a;
  const cplx g = cauchy_transform(mu, cplx(theta, 0.0));
  if (nu.family() == Family::MarchenkoPastur &&
      std::abs(1.0 - nu.mp_ratio() * nu.mp_scale() * g.real()) < 1e-12) {
    return std::nullopt;
  }
  const InfDivDerivative d = infdiv_derivative(mu, nu, theta);
  if (std::abs(d.analytic - d.finite_difference) > 1e-6 * std::max(1.0, std::abs(d.analytic))) {
    throw ConvergenceError("H'(theta) analytic " + fmt(d.analytic) + " disagrees with finite difference " +
                           fmt(d.finite_difference));
  }
  if (!(d.analytic > 0.0)) return std::nullopt;
  return theta + closed_form_r(nu, g).real();
}

std::vector<OutlierPrediction> outliers_point_mass(const SpectralMeasure& nu, const std::vector<Spike>& gammas,
                                                   std::vector<std::string>* dropped) {
  std::vector<OutlierPrediction> out;
  const SupportSet supp = support(nu);
  const auto pieces = analytic_pieces(nu);
  const double inset = edge_inset(nu);
  const double reach = nu.radius() + std::abs(nu.mean()) + 1.0;
  const auto F = [&](double x) { return reciprocal_cauchy(nu, cplx(x, 0.0)).real(); };
  const auto log = [&](const std::string& line) {
    if (dropped) dropped->push_back(line);
  };

  for (const auto& sp : gammas) {
    const double gamma = sp.theta;
    if (gamma == 0.0) throw DomainError("finite-rank spike gamma must be nonzero");
    bool found = false;
    for (const auto& p : pieces) {
      // F_nu increases on each piece; bracket F = gamma from both ends.
      double a = p.lo + inset;
      double b = p.hi - inset;
      if (std::isinf(p.lo)) {
        a = std::min(p.hi, gamma) - reach;
        while (F(a) >= gamma) a -= 2.0 * (p.hi - a);
      }
      if (std::isinf(p.hi)) {
        b = std::max(p.lo, gamma) + reach;
        while (F(b) <= gamma) b += 2.0 * (b - p.lo);
      }
      if (!(a < b)) continue;
      double fa = 0.0;
      double fb = 0.0;
      try {
        fa = F(a) - gamma;
        fb = F(b) - gamma;
      } catch (const Error&) {
        continue;
      }
      if (!(fa < 0.0 && fb > 0.0)) continue;
      double residual = 0.0;
      const double rho = safeguarded_newton(
          [&](double x, double* d) {
            const CauchyValue g = cauchy_with_derivative(nu, cplx(x, 0.0));
            *d = (-g.dg / (g.g * g.g)).real();
            return (1.0 / g.g).real() - gamma;
          },
          a, b, 1e-12 * std::max(1.0, std::abs(gamma)), &residual);
      const double dist = supp.distance(rho);
      if (dist <= 1e-6) {
        log("gamma=" + fmt(gamma) + ": root " + fmt(rho) + " within 1e-6 of supp(nu), rejected");
        continue;
      }
      out.push_back({rho, gamma, sp.multiplicity, 0.0, residual, dist});
      found = true;
    }
    if (!found) {
      const auto t = edge_thresholds(nu);
      log("gamma=" + fmt(gamma) + ": no solution of F_nu(rho) = gamma (edge thresholds " + fmt(t.lower) + ", " +
          fmt(t.upper) + ")");
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.rho < y.rho; });
  return out;
}

OutlierResult solve_outliers(const SpectralMeasure& mu, const SpectralMeasure& nu, const SpikeSet& spikes,
                             const OutlierOptions& opt) {
  OutlierResult result;
  spikes.check_outside(mu);
  result.support = opt.support ? *opt.support : convolution_support(mu, nu, opt.support_options);
  const SupportSet& K = result.support;
  const Interval hull = K.hull();
  const double diam = hull.length() > 0.0 ? hull.length() : 1.0;
  result.window = opt.window ? *opt.window : Interval{hull.lo - 3.0 * diam, hull.hi + 3.0 * diam};
  if (!(result.window.lo < result.window.hi)) throw ConfigError("outlier search window must have lo < hi");
  const double step = opt.grid_step > 0.0 ? opt.grid_step : diam / 2000.0;

  auto& preds = result.predictions;
  auto& dropped = result.dropped;
  if (spikes.empty()) return result;

  if (const auto a = nu.point_mass_location()) {
    // X = A + aI: the spectrum is shifted, every spike moves by a.
    for (const auto& s : spikes.spikes()) {
      const double rho = s.theta + *a;
      preds.push_back({rho, s.theta, s.multiplicity, 0.0, spike_residual(mu, nu, s.theta, rho), K.distance(rho)});
    }
    std::sort(preds.begin(), preds.end(), [](const auto& x, const auto& y) { return x.rho < y.rho; });
    return result;
  }
  if (const auto a = mu.point_mass_location()) {
    std::vector<Spike> gammas;
    for (const auto& s : spikes.spikes()) gammas.push_back({s.theta - *a, s.multiplicity});
    preds = outliers_point_mass(nu, gammas, &dropped);
    for (auto& p : preds) {
      p.rho += *a;
      p.theta += *a;
      p.distance_to_support = K.distance(p.rho);
    }
    return result;
  }

  const SupportSet k_delta = K.enlarged(opt.support_margin);
  const auto pieces = analytic_pieces(nu);
  const double inset = 1e-12 * std::max(1.0, std::max(std::abs(result.window.lo), std::abs(result.window.hi)));

  for (const auto& spike : spikes.spikes()) {
    const double theta = spike.theta;
    HValue hm;
    try {
      hm = h_with_derivative(mu, cplx(theta, 0.0));
    } catch (const PoleError&) {
      dropped.push_back("theta=" + fmt(theta) + ": F_mu has a pole at theta, spike skipped");
      continue;
    }
    const double s = hm.h.real();
    const double dhm = hm.dh.real();
    const auto residual = [&](double rho, double* d) {
      const HValue hn = h_with_derivative(nu, cplx(s + rho, 0.0));
      if (d) *d = hn.dh.real() + 1.0;
      return hn.h.real() - theta + rho;
    };
    const std::size_t first_of_spike = preds.size();

    for (const auto& piece : pieces) {
      const double lo = std::max(piece.lo - s, result.window.lo);
      const double hi = std::min(piece.hi - s, result.window.hi);
      if (!(lo < hi)) continue;
      for (const auto& seg : subtract(lo, hi, k_delta)) {
        const double a = seg.lo + inset;
        const double b = seg.hi - inset;
        if (!(a < b)) continue;
        const auto n = static_cast<std::size_t>(std::ceil((b - a) / step)) + 1;
        std::vector<double> xs(n + 1);
        std::vector<double> rs(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
          xs[i] = i == n ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n);
          try {
            rs[i] = residual(xs[i], nullptr);
          } catch (const Error&) {
            rs[i] = std::numeric_limits<double>::quiet_NaN();
          }
        }
        for (std::size_t i = 0; i + 1 <= n; ++i) {
          const double r0 = rs[i];
          const double r1 = rs[i + 1];
          if (!std::isfinite(r0) || !std::isfinite(r1)) continue;
          double rho = 0.0;
          double res = 0.0;
          if (r0 == 0.0) {
            rho = xs[i];
          } else if (r0 < 0.0 && r1 > 0.0) {
            rho = safeguarded_newton(residual, xs[i], xs[i + 1], opt.root_tolerance, &res);
          } else if (r0 > 0.0 && r1 < 0.0) {
            // Cannot happen for an increasing residual; kept for robustness.
            rho = safeguarded_newton([&](double x, double* d) { const double v = -residual(x, d); *d = -*d; return v; },
                                     xs[i], xs[i + 1], opt.root_tolerance, &res);
            res = -res;
          } else {
            continue;
          }
          if (!(std::abs(res) < opt.root_tolerance)) {
            dropped.push_back("theta=" + fmt(theta) + ": bracket near " + fmt(rho) + " did not refine (|res| = " +
                              fmt(std::abs(res)) + ")");
            continue;
          }
          const double dist = K.distance(rho);
          if (dist <= opt.boundary_reject) {
            dropped.push_back("theta=" + fmt(theta) + ": root " + fmt(rho) + " within " + fmt(opt.boundary_reject) +
                              " of K, unresolvable");
            continue;
          }
          double d_nu = 0.0;
          residual(rho, &d_nu);
          const double dp = dhm * (d_nu - 1.0);
          if (!(dp > opt.admissible_lo && dp < opt.admissible_hi)) {
            dropped.push_back("theta=" + fmt(theta) + ": root " + fmt(rho) + " not admissible (derivative product " +
                              fmt(dp) + ")");
            continue;
          }
          if (opt.cross_check) {
            try {
              const auto w = omega_boundary(mu, nu, rho, opt.boundary);
              if (w.is_pole || std::abs(w.value - theta) > opt.cross_check_tolerance) {
                dropped.push_back("theta=" + fmt(theta) + ": root " + fmt(rho) + " fails omega(rho) = theta (got " +
                                  (w.is_pole ? std::string("pole") : fmt(w.value)) + ")");
                continue;
              }
            } catch (const Error& e) {
              dropped.push_back("theta=" + fmt(theta) + ": root " + fmt(rho) + " boundary check failed: " + e.what());
              continue;
            }
          }
          bool duplicate = false;
          for (std::size_t j = first_of_spike; j < preds.size(); ++j) {
            duplicate = duplicate || std::abs(preds[j].rho - rho) <= opt.merge_distance;
          }
          if (duplicate) continue;
          preds.push_back({rho, theta, spike.multiplicity, dp, res, dist});
        }
      }
    }
  }
  std::sort(preds.begin(), preds.end(), [](const auto& x, const auto& y) { return x.rho < y.rho; });
  return result;
}

}  // namespace freeconv
