#include "subordination.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "errors.hpp"

namespace freeconv {

namespace {

struct MapEval {
  cplx f;        // f_z(w)
  cplx omega2;   // h_mu(w) + z
  HValue hmu;    // at w
  HValue hnu;    // at omega2
  double res;    // |f - w|
};

MapEval evaluate(const SpectralMeasure& mu, const SpectralMeasure& nu, cplx z, cplx w,
                 const TransformOptions& opt) {
  MapEval e;
  e.hmu = h_with_derivative(mu, w, opt);
  e.omega2 = e.hmu.h + z;
  e.hnu = h_with_derivative(nu, e.omega2, opt);
  e.f = e.hnu.h + z;
  e.res = std::abs(e.f - w);
  return e;
}

SubordinationPoint finish(cplx z, cplx w, const MapEval& e, int iterations) {
  SubordinationPoint p;
  p.z = z;
  p.omega1 = w;
  p.omega2 = e.omega2;
  p.iterations = iterations;
  p.residual = e.res;
  p.derivative_product = e.hmu.dh * e.hnu.dh;
  return p;
}

/// Worker split of [0, n) over up to `threads` threads.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

double density_at(const SpectralMeasure& mu, const SpectralMeasure& nu, double x,
                  const DensityOptions& opt, SubordinationPoint* last) {
  const auto& ladder = opt.ladder;
  std::optional<cplx> warm;
  std::vector<double> d(ladder.size());
  SubordinationPoint p;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    p = denjoy_wolff(mu, nu, cplx(x, ladder[k]), opt.subordination, warm);
    warm = p.omega1;
    d[k] = -cauchy_transform(mu, p.omega1, opt.subordination.transform).imag() / std::numbers::pi;
  }
  if (last) *last = p;
  double value = d.back();
  if (opt.extrapolate && ladder.size() >= 3) {
    const std::size_t n = ladder.size();
    const double eps[3] = {ladder[n - 3], ladder[n - 2], ladder[n - 1]};
    const cplx vals[3] = {d[n - 3], d[n - 2], d[n - 1]};
    value = extrapolate_to_zero(eps, vals).real();
  }
  return std::max(value, 0.0);
}

void check_ladder(const std::vector<double>& ladder) {
  if (ladder.empty()) throw ConfigError("epsilon ladder must be nonempty");
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (!(ladder[k] > 0.0)) throw ConfigError("epsilon ladder entries must be positive");
    if (k > 0 && !(ladder[k] < ladder[k - 1])) throw ConfigError("epsilon ladder must be decreasing");
  }
}

std::vector<Atom> atoms_with_families(const SpectralMeasure& tau) {
  std::vector<Atom> atoms = tau.atoms();
  if (tau.family() == Family::MarchenkoPastur && tau.mp_ratio() > 1.0) {
    atoms.push_back({0.0, 1.0 - 1.0 / tau.mp_ratio()});
  }
  return atoms;
}

}  // namespace

cplx extrapolate_to_zero(const double eps[3], const cplx values[3]) {
  cplx out = 0.0;
  for (int i = 0; i < 3; ++i) {
    double weight = 1.0;
    for (int j = 0; j < 3; ++j) {
      if (j != i) weight *= eps[j] / (eps[j] - eps[i]);
    }
    out += weight * values[i];
  }
  return out;
}

cplx subordination_map(const SpectralMeasure& mu, const SpectralMeasure& nu, cplx z, cplx w,
                       const TransformOptions& opt) {
  return h_transform(nu, h_transform(mu, w, opt) + z, opt) + z;
}

SubordinationPoint denjoy_wolff(const SpectralMeasure& mu, const SpectralMeasure& nu, cplx z,
                                const SubordinationOptions& opt, std::optional<cplx> start) {
  if (z.imag() < 0.0) {
    // omega_j(conj z) = conj omega_j(z)
    auto p = denjoy_wolff(mu, nu, std::conj(z), opt, start ? std::optional<cplx>(std::conj(*start)) : std::nullopt);
    p.z = z;
    p.omega1 = std::conj(p.omega1);
    p.omega2 = std::conj(p.omega2);
    p.derivative_product = std::conj(p.derivative_product);
    return p;
  }
  if (!(z.imag() > 0.0)) throw DomainError("denjoy_wolff needs Im z != 0");
  const auto& topt = opt.transform;

  if (const auto a = nu.point_mass_location()) {
    const cplx w = z - *a;
    return finish(z, w, evaluate(mu, nu, z, w, topt), 0);
  }
  if (const auto a = mu.point_mass_location()) {
    const cplx w = h_transform(nu, z - *a, topt) + z;
    return finish(z, w, evaluate(mu, nu, z, w, topt), 0);
  }

  const double tol = z.imag() < opt.relax_below ? opt.relaxed_tolerance : opt.tolerance;
  cplx w = (start && start->imag() > 0.0) ? *start : z;
  MapEval e = evaluate(mu, nu, z, w, topt);
  double lambda = 1.0;
  double best = e.res;
  int stall = 0;

  for (int it = 0; it < opt.max_iterations; ++it) {
    if (e.res <= tol * std::max(1.0, std::abs(w))) return finish(z, w, e, it);

    if (opt.newton) {
      const cplx slope = e.hmu.dh * e.hnu.dh - 1.0;
      if (slope != 0.0) {
        const cplx wn = w - (e.f - w) / slope;
        if (wn.imag() > 0.0 && std::isfinite(wn.real()) && std::isfinite(wn.imag())) {
          const MapEval en = evaluate(mu, nu, z, wn, topt);
          if (en.res < e.res) {
            w = wn;
            e = en;
            best = std::min(best, e.res);
            continue;
          }
        }
      }
    }

    w = (1.0 - lambda) * w + lambda * e.f;
    e = evaluate(mu, nu, z, w, topt);
    if (e.res < best * (1.0 - 1e-3)) {
      best = e.res;
      stall = 0;
    } else if (++stall > 25 && lambda > 0.1) {
      lambda = lambda > 0.5 ? 0.5 : 0.1;
      stall = 0;
    }
  }
  std::ostringstream os;
  os.precision(17);
  os << "subordination iteration did not converge at z = " << z << " after " << opt.max_iterations
     << " iterations (residual " << e.res << ")";
  throw ConvergenceError(os.str());
}

cplx convolution_cauchy(const SpectralMeasure& mu, const SpectralMeasure& nu, cplx z,
                        const SubordinationOptions& opt) {
  const auto p = denjoy_wolff(mu, nu, z, opt);
  return cauchy_transform(mu, p.omega1, opt.transform);
}

std::vector<DensitySample> convolution_density(const SpectralMeasure& mu, const SpectralMeasure& nu,
                                               const std::vector<double>& grid, const DensityOptions& opt) {
  check_ladder(opt.ladder);
  std::vector<DensitySample> out(grid.size());
  parallel_for(grid.size(), opt.threads, [&](std::size_t i) {
    DensitySample& s = out[i];
    s.x = grid[i];
    try {
      s.density = density_at(mu, nu, grid[i], opt, &s.last);
    } catch (const Error&) {
      s.ok = false;
      s.density = 0.0;
    }
  });
  return out;
}

std::vector<Atom> convolution_atoms(const SpectralMeasure& mu, const SpectralMeasure& nu) {
  std::vector<Atom> out;
  for (const auto& a : atoms_with_families(mu)) {
    for (const auto& b : atoms_with_families(nu)) {
      const double w = a.weight + b.weight - 1.0;
      if (w > 1e-12) out.push_back({a.position + b.position, w});
    }
  }
  return out;
}

SupportSet convolution_support(const SpectralMeasure& mu, const SpectralMeasure& nu, const SupportOptions& opt) {
  const auto pm_mu = mu.point_mass_location();
  const auto pm_nu = nu.point_mass_location();
  if (pm_nu) return support(mu).shifted(*pm_nu);
  if (pm_mu) return support(nu).shifted(*pm_mu);
  check_ladder(opt.density.ladder);
  if (opt.scan_points < 3) throw ConfigError("support scan needs at least 3 points");

  const Interval hm = mu.hull();
  const Interval hn = nu.hull();
  const double lo = hm.lo + hn.lo;
  const double hi = hm.hi + hn.hi;
  const std::size_t n = opt.scan_points;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  const auto samples = convolution_density(mu, nu, grid, opt.density);
  // Unresolved points count as inside: K is used to exclude outlier candidates.
  auto inside = [&](const DensitySample& s) { return !s.ok || s.density > opt.density_cutoff; };
  auto inside_at = [&](double x) {
    try {
      return density_at(mu, nu, x, opt.density, nullptr) > opt.density_cutoff;
    } catch (const Error&) {
      return true;
    }
  };
  auto edge = [&](double out_x, double in_x) {
    while (std::abs(in_x - out_x) > opt.edge_tolerance) {
      const double mid = 0.5 * (out_x + in_x);
      (inside_at(mid) ? in_x : out_x) = mid;
    }
    return in_x;
  };

  std::vector<Interval> parts;
  std::size_t i = 0;
  while (i < n) {
    if (!inside(samples[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && inside(samples[j + 1])) ++j;
    const double left = i == 0 ? grid[0] : edge(grid[i - 1], grid[i]);
    const double right = j + 1 == n ? grid[n - 1] : edge(grid[j + 1], grid[j]);
    parts.push_back({left, right});
    i = j + 1;
  }
  for (const auto& a : convolution_atoms(mu, nu)) parts.push_back({a.position, a.position});
  if (parts.empty()) parts.push_back({lo, hi});
  return SupportSet(std::move(parts));
}

BoundaryValue omega_boundary(const SpectralMeasure& mu, const SpectralMeasure& nu, double x,
                             const BoundaryOptions& opt) {
  check_ladder(opt.ladder);
  const auto& topt = opt.subordination.transform;
  BoundaryValue out;
  if (const auto a = nu.point_mass_location()) {
    out.value = x - *a;
    return out;
  }
  if (const auto a = mu.point_mass_location()) {
    try {
      out.value = reciprocal_cauchy(nu, cplx(x - *a, 0.0), topt).real() + *a;
    } catch (const PoleError&) {
      out.is_pole = true;
      out.value = std::numeric_limits<double>::quiet_NaN();
    } catch (const DomainError& e) {
      throw BoundaryError(std::string("omega_boundary: ") + e.what());
    }
    return out;
  }

  const std::size_t n = opt.ladder.size();
  std::vector<cplx> w(n);
  std::optional<cplx> warm;
  for (std::size_t k = 0; k < n; ++k) {
    const auto p = denjoy_wolff(mu, nu, cplx(x, opt.ladder[k]), opt.subordination, warm);
    w[k] = p.omega1;
    warm = w[k];
  }
  if (n >= 3) {
    bool growing = true;
    for (std::size_t k = n - 2; k < n; ++k) {
      growing = growing && std::abs(w[k]) > 5.0 * std::abs(w[k - 1]);
    }
    if (growing) {
      out.is_pole = true;
      out.value = std::numeric_limits<double>::quiet_NaN();
      return out;
    }
  }
  cplx limit = w.back();
  if (n >= 3) {
    const double eps[3] = {opt.ladder[n - 3], opt.ladder[n - 2], opt.ladder[n - 1]};
    const cplx vals[3] = {w[n - 3], w[n - 2], w[n - 1]};
    limit = extrapolate_to_zero(eps, vals);
  }
  out.value = limit.real();
  out.imag_residual = std::abs(limit.imag());
  const bool decays = w.back().imag() <= w.front().imag();
  if (!decays || out.imag_residual > opt.imag_tolerance * std::max(1.0, std::abs(limit))) {
    std::ostringstream os;
    os.precision(10);
    os << "omega1 does not become real at x = " << x << " (Im at smallest rung " << w.back().imag()
       << "); x is probably inside the support of the convolution";
    throw BoundaryError(os.str());
  }
  return out;
}

}  // namespace freeconv
