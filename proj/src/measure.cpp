#include "measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "errors.hpp"
#include "quadrature.hpp"

namespace freeconv {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMassTolerance = 1e-10;

std::string format_point(cplx z) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i)";
  return os.str();
}

/// log(1 + w) without cancellation for small |w|.
cplx log1p_complex(cplx w) {
  if (std::abs(w) < 1e-2) {
    cplx term = w;
    cplx sum = 0.0;
    for (int k = 1; k <= 9; ++k) {
      sum += term / static_cast<double>(k);
      term *= -w;
    }
    return sum;
  }
  return std::log(1.0 + w);
}

struct MpEdges {
  double lo;
  double hi;
};

MpEdges mp_edges(double c, double s) {
  const double r = std::sqrt(c);
  return {s * (1.0 - r) * (1.0 - r), s * (1.0 + r) * (1.0 + r)};
}

double semicircle_edge(double t) { return 2.0 * std::sqrt(t); }

CauchyValue semicircle_cauchy(double t, cplx z) {
  const double e = semicircle_edge(t);
  const cplx sq = std::sqrt(z - e) * std::sqrt(z + e);
  const cplx g = 2.0 / (z + sq);
  // From z = 1/G + t G.
  const cplx dg = g * g / (t * g * g - 1.0);
  return {g, dg};
}

CauchyValue mp_cauchy(double c, double s, cplx z) {
  const auto [e1, e2] = mp_edges(c, s);
  const cplx b = z + s * (c - 1.0);
  const cplx sq = std::sqrt(z - e1) * std::sqrt(z - e2);
  const cplx g = 2.0 / (b + sq);
  // From z = 1/G + s / (1 - c s G).
  const double alpha = c * s;
  const cplx one_minus = 1.0 - alpha * g;
  const cplx dzdg = -1.0 / (g * g) + s * alpha / (one_minus * one_minus);
  return {g, 1.0 / dzdg};
}

/// Exact Cauchy transform (and derivative) of atoms plus piecewise-linear pieces.
CauchyValue general_cauchy(const std::vector<Atom>& atoms, const std::vector<DensityPiece>& pieces,
                           cplx z) {
  cplx g = 0.0;
  cplx dg = 0.0;
  for (const auto& atom : atoms) {
    const cplx d = z - atom.position;
    g += atom.weight / d;
    dg -= atom.weight / (d * d);
  }
  for (const auto& piece : pieces) {
    for (std::size_t k = 0; k + 1 < piece.nodes.size(); ++k) {
      const double a = piece.nodes[k];
      const double b = piece.nodes[k + 1];
      const double fa = piece.values[k];
      const double fb = piece.values[k + 1];
      if (fa == 0.0 && fb == 0.0) continue;
      const double q = (fb - fa) / (b - a);
      const cplx fz = fa + q * (z - a);
      const cplx za = z - a;
      const cplx zb = z - b;
      const cplx log_ratio = log1p_complex((b - a) / zb);  // log((z-a)/(z-b))
      g += fz * log_ratio - q * (b - a);
      dg -= fz * (b - a) / (za * zb) - q * log_ratio;
    }
  }
  return {g, dg};
}

double trapezoid_mass(const DensityPiece& p) {
  double m = 0.0;
  for (std::size_t k = 0; k + 1 < p.nodes.size(); ++k) {
    m += 0.5 * (p.values[k] + p.values[k + 1]) * (p.nodes[k + 1] - p.nodes[k]);
  }
  return m;
}

/// Continuous part of the Marchenko-Pastur CDF on [e1, x] via the substitution
/// x = e1 + (e2 - e1)(1 - cos phi)/2, which removes the square-root edges.
double mp_continuous_cdf(double c, double s, double x) {
  const auto [e1, e2] = mp_edges(c, s);
  const double cont_mass = std::min(1.0, 1.0 / c);
  if (x <= e1) return 0.0;
  if (x >= e2) return cont_mass;
  const double d = e2 - e1;
  const double phi_x = std::acos(std::clamp(1.0 - 2.0 * (x - e1) / d, -1.0, 1.0));
  static const GaussRule rule = gauss_legendre(48);
  constexpr int kPanels = 4;
  double sum = 0.0;
  const double h = phi_x / kPanels;
  for (int panel = 0; panel < kPanels; ++panel) {
    const double left = panel * h;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double phi = left + 0.5 * h * (rule.nodes[i] + 1.0);
      const double sphi = std::sin(phi);
      const double xx = e1 + 0.5 * d * (1.0 - std::cos(phi));
      const double integrand = 0.25 * d * d * sphi * sphi / (2.0 * kPi * s * c * xx);
      sum += 0.5 * h * rule.weights[i] * integrand;
    }
  }
  return std::min(sum, cont_mass);
}

void check_real_domain(const SpectralMeasure& tau, cplx z, const TransformOptions& opt) {
  if (z.imag() != 0.0) return;
  const double cutoff = opt.domain_cutoff * std::max(1.0, tau.radius());
  if (tau.touches_support(z.real(), cutoff)) {
    throw DomainError("point " + format_point(z) + " lies in the support of " + tau.describe());
  }
}

}  // namespace

std::string_view family_name(Family f) noexcept {
  switch (f) {
    case Family::Custom: return "custom";
    case Family::Semicircle: return "semicircle";
    case Family::MarchenkoPastur: return "marchenko_pastur";
    case Family::PointMass: return "point_mass";
    case Family::BernoulliSymmetric: return "bernoulli_symmetric";
    case Family::Empirical: return "empirical";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Construction

SpectralMeasure SpectralMeasure::semicircle(double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw MeasureError("semicircle variance must be positive");
  }
  SpectralMeasure m;
  m.family_ = Family::Semicircle;
  m.param1_ = variance;
  return m;
}

SpectralMeasure SpectralMeasure::marchenko_pastur(double ratio, double scale) {
  if (!(ratio > 0.0) || !(scale > 0.0) || !std::isfinite(ratio) || !std::isfinite(scale)) {
    throw MeasureError("marchenko_pastur ratio and scale must be positive");
  }
  SpectralMeasure m;
  m.family_ = Family::MarchenkoPastur;
  m.param1_ = ratio;
  m.param2_ = scale;
  return m;
}

SpectralMeasure SpectralMeasure::point_mass(double a) {
  if (!std::isfinite(a)) throw MeasureError("point mass location must be finite");
  SpectralMeasure m;
  m.family_ = Family::PointMass;
  m.atoms_.push_back({a, 1.0});
  return m;
}

SpectralMeasure SpectralMeasure::bernoulli_symmetric() {
  SpectralMeasure m;
  m.family_ = Family::BernoulliSymmetric;
  m.atoms_ = {{-1.0, 0.5}, {1.0, 0.5}};
  return m;
}

SpectralMeasure SpectralMeasure::empirical(std::span<const double> points) {
  if (points.empty()) throw MeasureError("empirical measure needs at least one point");
  std::map<double, std::size_t> counts;
  for (double x : points) {
    if (!std::isfinite(x)) throw MeasureError("empirical points must be finite");
    ++counts[x];
  }
  SpectralMeasure m;
  m.family_ = Family::Empirical;
  const double n = static_cast<double>(points.size());
  for (const auto& [x, k] : counts) m.atoms_.push_back({x, static_cast<double>(k) / n});
  if (m.atoms_.size() == 1) m.atoms_.front().weight = 1.0;
  return m;
}

SpectralMeasure SpectralMeasure::from_parts(std::vector<Atom> atoms, std::vector<DensityPiece> pieces,
                                            bool normalize) {
  std::map<double, double> merged;
  for (const auto& a : atoms) {
    if (!std::isfinite(a.position)) throw MeasureError("atom position must be finite");
    if (!(a.weight > 0.0) || !std::isfinite(a.weight) || (!normalize && a.weight > 1.0 + kMassTolerance)) {
      throw MeasureError("atom weight must lie in (0, 1]");
    }
    merged[a.position] += a.weight;
  }
  for (const auto& p : pieces) {
    if (p.nodes.size() < 2 || p.nodes.size() != p.values.size()) {
      throw MeasureError("density interval needs >= 2 nodes and one value per node");
    }
    for (std::size_t k = 0; k < p.nodes.size(); ++k) {
      if (!std::isfinite(p.nodes[k]) || !std::isfinite(p.values[k])) {
        throw MeasureError("density nodes and values must be finite");
      }
      if (p.values[k] < 0.0) throw MeasureError("density values must be nonnegative");
      if (k > 0 && !(p.nodes[k] > p.nodes[k - 1])) {
        throw MeasureError("density nodes must be strictly increasing");
      }
    }
  }

  SpectralMeasure m;
  m.family_ = Family::Custom;
  for (const auto& [x, w] : merged) m.atoms_.push_back({x, w});
  m.pieces_ = std::move(pieces);

  const double mass = m.total_mass();
  if (!(mass > 0.0)) throw MeasureError("measure has zero mass");
  if (normalize) {
    for (auto& a : m.atoms_) a.weight /= mass;
    for (auto& p : m.pieces_) {
      for (auto& v : p.values) v /= mass;
    }
  } else if (std::abs(mass - 1.0) > kMassTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "total mass " << mass << " differs from 1 by more than " << kMassTolerance;
    throw MeasureError(os.str());
  }
  if (m.atoms_.size() == 1 && m.pieces_.empty()) m.atoms_.front().weight = 1.0;
  return m;
}

// ---------------------------------------------------------------------------
// Accessors

double SpectralMeasure::semicircle_variance() const {
  if (family_ != Family::Semicircle) throw FamilyError("not a semicircle measure");
  return param1_;
}

double SpectralMeasure::mp_ratio() const {
  if (family_ != Family::MarchenkoPastur) throw FamilyError("not a Marchenko-Pastur measure");
  return param1_;
}

double SpectralMeasure::mp_scale() const {
  if (family_ != Family::MarchenkoPastur) throw FamilyError("not a Marchenko-Pastur measure");
  return param2_;
}

std::optional<double> SpectralMeasure::point_mass_location() const noexcept {
  if (family_ == Family::Semicircle || family_ == Family::MarchenkoPastur) return std::nullopt;
  if (atoms_.size() == 1 && pieces_.empty() && std::abs(atoms_.front().weight - 1.0) <= 1e-12) {
    return atoms_.front().position;
  }
  return std::nullopt;
}

bool SpectralMeasure::is_purely_atomic() const noexcept {
  return family_ != Family::Semicircle && family_ != Family::MarchenkoPastur && pieces_.empty();
}

bool SpectralMeasure::has_closed_form_r() const noexcept {
  return family_ == Family::Semicircle || family_ == Family::MarchenkoPastur ||
         point_mass_location().has_value();
}

double SpectralMeasure::total_mass() const {
  if (family_ == Family::Semicircle || family_ == Family::MarchenkoPastur) return 1.0;
  double mass = 0.0;
  for (const auto& a : atoms_) mass += a.weight;
  for (const auto& p : pieces_) mass += trapezoid_mass(p);
  return mass;
}

double SpectralMeasure::mean() const {
  if (family_ == Family::Semicircle) return 0.0;
  if (family_ == Family::MarchenkoPastur) return param2_;
  double m = 0.0;
  for (const auto& a : atoms_) m += a.weight * a.position;
  for (const auto& p : pieces_) {
    for (std::size_t k = 0; k + 1 < p.nodes.size(); ++k) {
      const double a = p.nodes[k];
      const double b = p.nodes[k + 1];
      const double q = (p.values[k + 1] - p.values[k]) / (b - a);
      const double c0 = p.values[k] - q * a;
      m += c0 * (b * b - a * a) / 2.0 + q * (b * b * b - a * a * a) / 3.0;
    }
  }
  return m;
}

Interval SpectralMeasure::hull() const {
  if (family_ == Family::Semicircle) {
    const double e = semicircle_edge(param1_);
    return {-e, e};
  }
  if (family_ == Family::MarchenkoPastur) {
    const auto [e1, e2] = mp_edges(param1_, param2_);
    return {param1_ > 1.0 ? 0.0 : e1, e2};
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& a : atoms_) {
    lo = std::min(lo, a.position);
    hi = std::max(hi, a.position);
  }
  for (const auto& p : pieces_) {
    for (std::size_t k = 0; k + 1 < p.nodes.size(); ++k) {
      if (p.values[k] > 0.0 || p.values[k + 1] > 0.0) {
        lo = std::min(lo, p.nodes[k]);
        hi = std::max(hi, p.nodes[k + 1]);
      }
    }
  }
  return {lo, hi};
}

double SpectralMeasure::radius() const {
  const auto h = hull();
  return std::max(std::abs(h.lo), std::abs(h.hi));
}

double SpectralMeasure::density(double x) const {
  if (family_ == Family::Semicircle) {
    const double t = param1_;
    const double v = 4.0 * t - x * x;
    return v > 0.0 ? std::sqrt(v) / (2.0 * kPi * t) : 0.0;
  }
  if (family_ == Family::MarchenkoPastur) {
    const auto [e1, e2] = mp_edges(param1_, param2_);
    if (x <= e1 || x >= e2) return 0.0;
    return std::sqrt((e2 - x) * (x - e1)) / (2.0 * kPi * param2_ * param1_ * x);
  }
  double f = 0.0;
  for (const auto& p : pieces_) {
    if (x < p.a() || x > p.b()) continue;
    const auto it = std::upper_bound(p.nodes.begin(), p.nodes.end(), x);
    const std::size_t k = std::min<std::size_t>(
        static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - p.nodes.begin() - 1, 0)), p.nodes.size() - 2);
    const double a = p.nodes[k];
    const double b = p.nodes[k + 1];
    f += p.values[k] + (p.values[k + 1] - p.values[k]) * (x - a) / (b - a);
  }
  return f;
}

double SpectralMeasure::cdf(double x) const {
  if (family_ == Family::Semicircle) {
    const double e = semicircle_edge(param1_);
    if (x <= -e) return 0.0;
    if (x >= e) return 1.0;
    const double t = param1_;
    return 0.5 + x * std::sqrt(4.0 * t - x * x) / (4.0 * kPi * t) + std::asin(x / e) / kPi;
  }
  if (family_ == Family::MarchenkoPastur) {
    double F = (param1_ > 1.0 && x >= 0.0) ? 1.0 - 1.0 / param1_ : 0.0;
    return std::min(1.0, F + mp_continuous_cdf(param1_, param2_, x));
  }
  double F = 0.0;
  for (const auto& a : atoms_) {
    if (a.position <= x) F += a.weight;
  }
  for (const auto& p : pieces_) {
    for (std::size_t k = 0; k + 1 < p.nodes.size(); ++k) {
      const double a = p.nodes[k];
      const double b = p.nodes[k + 1];
      if (x <= a) break;
      if (x >= b) {
        F += 0.5 * (p.values[k] + p.values[k + 1]) * (b - a);
      } else {
        const double q = (p.values[k + 1] - p.values[k]) / (b - a);
        F += p.values[k] * (x - a) + 0.5 * q * (x - a) * (x - a);
      }
    }
  }
  return std::min(F, 1.0);
}

bool SpectralMeasure::touches_support(double x, double cutoff) const {
  if (family_ == Family::Semicircle) return std::abs(x) <= semicircle_edge(param1_) + cutoff;
  if (family_ == Family::MarchenkoPastur) {
    const auto [e1, e2] = mp_edges(param1_, param2_);
    if (x >= e1 - cutoff && x <= e2 + cutoff) return true;
    return param1_ > 1.0 && std::abs(x) <= cutoff;
  }
  for (const auto& a : atoms_) {
    if (std::abs(x - a.position) <= cutoff) return true;
  }
  for (const auto& p : pieces_) {
    if (x < p.a() - cutoff || x > p.b() + cutoff) continue;
    for (std::size_t k = 0; k + 1 < p.nodes.size(); ++k) {
      if ((p.values[k] > 0.0 || p.values[k + 1] > 0.0) && x >= p.nodes[k] - cutoff &&
          x <= p.nodes[k + 1] + cutoff) {
        return true;
      }
    }
  }
  return false;
}

std::string SpectralMeasure::describe() const {
  std::ostringstream os;
  os.precision(10);
  switch (family_) {
    case Family::Semicircle: os << "semicircle(variance=" << param1_ << ")"; break;
    case Family::MarchenkoPastur:
      os << "marchenko_pastur(ratio=" << param1_ << ", scale=" << param2_ << ")";
      break;
    case Family::PointMass: os << "point_mass(" << atoms_.front().position << ")"; break;
    case Family::BernoulliSymmetric: os << "bernoulli_symmetric"; break;
    case Family::Empirical: os << "empirical(" << atoms_.size() << " atoms)"; break;
    case Family::Custom:
      os << "custom(" << atoms_.size() << " atoms, " << pieces_.size() << " density intervals)";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Transforms

CauchyValue cauchy_with_derivative(const SpectralMeasure& tau, cplx z, const TransformOptions& opt) {
  check_real_domain(tau, z, opt);
  switch (tau.family()) {
    case Family::Semicircle: return semicircle_cauchy(tau.semicircle_variance(), z);
    case Family::MarchenkoPastur: return mp_cauchy(tau.mp_ratio(), tau.mp_scale(), z);
    default: return general_cauchy(tau.atoms(), tau.density_pieces(), z);
  }
}

cplx cauchy_transform(const SpectralMeasure& tau, cplx z, const TransformOptions& opt) {
  return cauchy_with_derivative(tau, z, opt).g;
}

cplx cauchy_derivative(const SpectralMeasure& tau, cplx z, const TransformOptions& opt) {
  return cauchy_with_derivative(tau, z, opt).dg;
}

cplx reciprocal_cauchy(const SpectralMeasure& tau, cplx z, const TransformOptions& opt) {
  if (const auto a = tau.point_mass_location()) {
    check_real_domain(tau, z, opt);
    return z - *a;
  }
  const cplx g = cauchy_transform(tau, z, opt);
  if (std::abs(g) < opt.pole_cutoff) {
    throw PoleError("F = 1/G has a pole near " + format_point(z) + " for " + tau.describe());
  }
  return 1.0 / g;
}

HValue h_with_derivative(const SpectralMeasure& tau, cplx z, const TransformOptions& opt) {
  if (const auto a = tau.point_mass_location()) {
    check_real_domain(tau, z, opt);
    return {-*a, 0.0};
  }
  const CauchyValue cv = cauchy_with_derivative(tau, z, opt);
  switch (tau.family()) {
    case Family::Semicircle: {
      // h = -R(G) with R(w) = t w.
      const double t = tau.semicircle_variance();
      return {-t * cv.g, -t * cv.dg};
    }
    case Family::MarchenkoPastur: {
      const double c = tau.mp_ratio();
      const double s = tau.mp_scale();
      const cplx one_minus = 1.0 - c * s * cv.g;
      return {-s / one_minus, -s * c * s / (one_minus * one_minus) * cv.dg};
    }
    default: break;
  }
  if (std::abs(cv.g) < opt.pole_cutoff) {
    throw PoleError("h has a pole near " + format_point(z) + " for " + tau.describe());
  }
  if (tau.is_purely_atomic()) {
    // zG - 1 = sum w x / (z - x) avoids the cancellation in 1/G - z.
    cplx k = 0.0;
    cplx dk = 0.0;
    for (const auto& atom : tau.atoms()) {
      const cplx d = z - atom.position;
      k += atom.weight * atom.position / d;
      dk -= atom.weight * atom.position / (d * d);
    }
    const cplx g2 = cv.g * cv.g;
    return {-k / cv.g, (k * cv.dg - dk * cv.g) / g2};
  }
  return {1.0 / cv.g - z, -cv.dg / (cv.g * cv.g) - 1.0};
}

cplx h_transform(const SpectralMeasure& tau, cplx z, const TransformOptions& opt) {
  return h_with_derivative(tau, z, opt).h;
}

cplx h_derivative(const SpectralMeasure& tau, cplx z, const TransformOptions& opt) {
  return h_with_derivative(tau, z, opt).dh;
}

cplx r_transform(const SpectralMeasure& tau, cplx w, const RInversionOptions& opt) {
  if (w == 0.0) return tau.mean();
  cplx z = 1.0 / w;
  double last_step = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iterations; ++it) {
    CauchyValue cv;
    try {
      cv = cauchy_with_derivative(tau, z, opt.transform);
    } catch (const DomainError&) {
      throw InversionError("Newton inversion of G hit the support at w = " + format_point(w) +
                           "; |w| is too large for " + tau.describe());
    }
    if (cv.dg == 0.0) break;
    const cplx step = (cv.g - w) / cv.dg;
    z -= step;
    last_step = std::abs(step);
    if (last_step <= opt.tolerance * std::max(1.0, std::abs(z))) {
      return z - 1.0 / w;
    }
  }
  std::ostringstream os;
  os << "Newton inversion of G did not converge at w = " << format_point(w) << " (last step "
     << last_step << "); try |w| < " << 0.5 / std::max(1.0, tau.radius());
  throw InversionError(os.str());
}

cplx closed_form_r(const SpectralMeasure& tau, cplx w) {
  switch (tau.family()) {
    case Family::Semicircle: return tau.semicircle_variance() * w;
    case Family::MarchenkoPastur: {
      const double c = tau.mp_ratio();
      const double s = tau.mp_scale();
      return s / (1.0 - c * s * w);
    }
    default: break;
  }
  if (const auto a = tau.point_mass_location()) return *a;
  throw FamilyError("no closed-form R-transform for " + tau.describe());
}

cplx closed_form_r_derivative(const SpectralMeasure& tau, cplx w) {
  switch (tau.family()) {
    case Family::Semicircle: return tau.semicircle_variance();
    case Family::MarchenkoPastur: {
      const double c = tau.mp_ratio();
      const double s = tau.mp_scale();
      const cplx d = 1.0 - c * s * w;
      return s * c * s / (d * d);
    }
    default: break;
  }
  if (tau.point_mass_location()) return 0.0;
  throw FamilyError("no closed-form R-transform for " + tau.describe());
}

// ---------------------------------------------------------------------------
// Support and sampling

SupportSet support(const SpectralMeasure& tau, double density_cutoff) {
  std::vector<Interval> parts;
  switch (tau.family()) {
    case Family::Semicircle: {
      const double e = semicircle_edge(tau.semicircle_variance());
      parts.push_back({-e, e});
      return SupportSet(std::move(parts));
    }
    case Family::MarchenkoPastur: {
      const auto [e1, e2] = mp_edges(tau.mp_ratio(), tau.mp_scale());
      parts.push_back({e1, e2});
      if (tau.mp_ratio() > 1.0) parts.push_back({0.0, 0.0});
      return SupportSet(std::move(parts));
    }
    default: break;
  }
  for (const auto& a : tau.atoms()) parts.push_back({a.position, a.position});
  for (const auto& p : tau.density_pieces()) {
    for (std::size_t k = 0; k + 1 < p.nodes.size(); ++k) {
      const double a = p.nodes[k];
      const double b = p.nodes[k + 1];
      const double fa = p.values[k];
      const double fb = p.values[k + 1];
      const bool in_a = fa > density_cutoff;
      const bool in_b = fb > density_cutoff;
      if (in_a && in_b) {
        parts.push_back({a, b});
      } else if (in_a) {
        parts.push_back({a, a + (fa - density_cutoff) / (fa - fb) * (b - a)});
      } else if (in_b) {
        parts.push_back({b - (fb - density_cutoff) / (fb - fa) * (b - a), b});
      }
    }
  }
  if (parts.empty()) throw MeasureError("density never exceeds the support cutoff");
  return SupportSet(std::move(parts));
}

double quantile(const SpectralMeasure& tau, double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
  if (const auto a = tau.point_mass_location()) return *a;
  constexpr double kTieTolerance = 1e-13;
  const double target = p - kTieTolerance;
  const Interval h = tau.hull();
  if (tau.cdf(h.lo) >= target) return h.lo;
  double lo = h.lo;  // cdf(lo) < target
  double hi = h.hi;  // cdf(hi) >= target
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() *
                                             std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (tau.cdf(mid) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  // A jump of the CDF inside (lo, hi] comes from an atom: return it exactly.
  for (const auto& atom : tau.atoms()) {
    if (atom.position > lo && atom.position <= hi) return atom.position;
  }
  if (tau.family() == Family::MarchenkoPastur && tau.mp_ratio() > 1.0 && lo < 0.0 && hi >= 0.0) {
    return 0.0;
  }
  return hi;
}

std::vector<double> quantile_sample(const SpectralMeasure& tau, std::size_t n) {
  if (n == 0) throw DomainError("quantile_sample needs n >= 1");
  std::vector<double> out(n);
  if (const auto a = tau.point_mass_location()) {
    std::fill(out.begin(), out.end(), *a);
    return out;
  }
  const double denom = static_cast<double>(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = quantile(tau, static_cast<double>(i + 1) / denom);
    if (i > 0) out[i] = std::max(out[i], out[i - 1]);
  }
  return out;
}

SpectralMeasure render_to_grid(const SpectralMeasure& tau, std::size_t nodes_per_piece) {
  if (nodes_per_piece < 3) throw DomainError("render_to_grid needs at least 3 nodes");
  std::vector<Atom> atoms = tau.atoms();
  std::vector<DensityPiece> pieces = tau.density_pieces();
  double lo = 0.0;
  double hi = 0.0;
  double cont_mass = 0.0;
  switch (tau.family()) {
    case Family::Semicircle: {
      hi = semicircle_edge(tau.semicircle_variance());
      lo = -hi;
      cont_mass = 1.0;
      break;
    }
    case Family::MarchenkoPastur: {
      const auto e = mp_edges(tau.mp_ratio(), tau.mp_scale());
      lo = e.lo;
      hi = e.hi;
      cont_mass = std::min(1.0, 1.0 / tau.mp_ratio());
      if (tau.mp_ratio() > 1.0) atoms.push_back({0.0, 1.0 - cont_mass});
      break;
    }
    default: return SpectralMeasure::from_parts(std::move(atoms), std::move(pieces), true);
  }
  DensityPiece piece;
  piece.nodes.resize(nodes_per_piece);
  piece.values.resize(nodes_per_piece);
  for (std::size_t i = 0; i < nodes_per_piece; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(nodes_per_piece - 1);
    piece.nodes[i] = x;
    piece.values[i] = (i == 0 || i + 1 == nodes_per_piece) ? 0.0 : tau.density(x);
  }
  const double m = trapezoid_mass(piece);
  for (auto& v : piece.values) v *= cont_mass / m;
  pieces.push_back(std::move(piece));
  return SpectralMeasure::from_parts(std::move(atoms), std::move(pieces), true);
}

}  // namespace freeconv
