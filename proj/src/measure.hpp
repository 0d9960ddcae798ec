#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "support_set.hpp"

namespace freeconv {

using cplx = std::complex<double>;

enum class Family {
  Custom,  // atoms and/or a grid density given explicitly
  Semicircle,
  MarchenkoPastur,
  PointMass,
  BernoulliSymmetric,
  Empirical,
};

std::string_view family_name(Family f) noexcept;

struct Atom {
  double position;
  double weight;
};

/// One piece of the absolutely continuous part: density values at ordered
/// nodes, linearly interpolated in between, zero outside [nodes.front(), nodes.back()].
struct DensityPiece {
  std::vector<double> nodes;
  std::vector<double> values;

  double a() const { return nodes.front(); }
  double b() const { return nodes.back(); }
};

struct TransformOptions {
  /// A real z closer than this to supp(tau) is rejected with DomainError.
  double domain_cutoff = 1e-14;
  /// |G(z)| below this makes F = 1/G a pole (PoleError).
  double pole_cutoff = 1e-12;
};

/// Compactly supported probability measure on the real line.
///
/// Immutable after construction. Closed-form families (semicircle,
/// Marchenko-Pastur) evaluate their transforms analytically; atomic and grid
/// parts are summed / integrated exactly for the piecewise-linear density.
class SpectralMeasure {
 public:
  /// Semicircle law of variance t, supported on [-2 sqrt t, 2 sqrt t].
  static SpectralMeasure semicircle(double variance);
  /// Marchenko-Pastur law with ratio c = p/n and scale s: mean s, support
  /// s(1 -+ sqrt c)^2, plus an atom of mass 1 - 1/c at 0 when c > 1.
  static SpectralMeasure marchenko_pastur(double ratio, double scale);
  static SpectralMeasure point_mass(double a);
  /// (delta_{-1} + delta_{1}) / 2.
  static SpectralMeasure bernoulli_symmetric();
  /// Uniform weights 1/n on the given points (repeated points accumulate).
  static SpectralMeasure empirical(std::span<const double> points);
  /// General atoms plus grid density. Validates nonnegativity, node order and
  /// unit mass (to 1e-10); with `normalize` the mass is rescaled to 1 instead.
  static SpectralMeasure from_parts(std::vector<Atom> atoms, std::vector<DensityPiece> pieces,
                                    bool normalize = false);

  Family family() const noexcept { return family_; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const std::vector<DensityPiece>& density_pieces() const noexcept { return pieces_; }

  /// Variance of the semicircle family.
  double semicircle_variance() const;
  double mp_ratio() const;
  double mp_scale() const;

  /// Set when the measure is exactly one atom of weight 1.
  std::optional<double> point_mass_location() const noexcept;
  bool is_purely_atomic() const noexcept;
  /// Semicircle, Marchenko-Pastur and point masses carry a closed-form R-transform.
  bool has_closed_form_r() const noexcept;

  double total_mass() const;
  double mean() const;
  /// Convex hull of the support.
  Interval hull() const;
  /// Smallest R with supp in [-R, R].
  double radius() const;

  /// Density of the absolutely continuous part at x.
  double density(double x) const;
  /// Distribution function tau((-inf, x]).
  double cdf(double x) const;

  /// Topological support membership with a distance cutoff (used for domain checks).
  bool touches_support(double x, double cutoff) const;

  std::string describe() const;

 private:
  SpectralMeasure() = default;

  Family family_ = Family::Custom;
  double param1_ = 0.0;  // semicircle variance, or MP ratio
  double param2_ = 0.0;  // MP scale
  std::vector<Atom> atoms_;
  std::vector<DensityPiece> pieces_;
};

struct CauchyValue {
  cplx g;
  cplx dg;
};

struct HValue {
  cplx h;
  cplx dh;
};

/// G(z) = int dtau(t) / (z - t).
cplx cauchy_transform(const SpectralMeasure& tau, cplx z, const TransformOptions& opt = {});
/// G'(z) = -int dtau(t) / (z - t)^2.
cplx cauchy_derivative(const SpectralMeasure& tau, cplx z, const TransformOptions& opt = {});
CauchyValue cauchy_with_derivative(const SpectralMeasure& tau, cplx z, const TransformOptions& opt = {});

/// F = 1/G.
cplx reciprocal_cauchy(const SpectralMeasure& tau, cplx z, const TransformOptions& opt = {});
/// h = F - z.
cplx h_transform(const SpectralMeasure& tau, cplx z, const TransformOptions& opt = {});
cplx h_derivative(const SpectralMeasure& tau, cplx z, const TransformOptions& opt = {});
HValue h_with_derivative(const SpectralMeasure& tau, cplx z, const TransformOptions& opt = {});

struct RInversionOptions {
  int max_iterations = 200;
  double tolerance = 1e-15;
  TransformOptions transform;
};

/// R(w) = G^{-1}(w) - 1/w, with G inverted by Newton's method from 1/w.
cplx r_transform(const SpectralMeasure& tau, cplx w, const RInversionOptions& opt = {});

/// Closed-form R-transform and its derivative (FamilyError when unavailable).
cplx closed_form_r(const SpectralMeasure& tau, cplx w);
cplx closed_form_r_derivative(const SpectralMeasure& tau, cplx w);

/// Exact support for atoms and families; for grid densities the region where
/// the interpolated density exceeds `density_cutoff`.
SupportSet support(const SpectralMeasure& tau, double density_cutoff = 1e-8);

/// The i/(n+1) quantiles of tau, i = 1..n, nondecreasing.
std::vector<double> quantile_sample(const SpectralMeasure& tau, std::size_t n);

/// Quantile function q(p) = inf{x : F(x) >= p}.
double quantile(const SpectralMeasure& tau, double p);

/// Samples the absolutely continuous part of a family onto `nodes_per_piece`
/// uniform nodes and renormalises; atoms are carried over unchanged.
SpectralMeasure render_to_grid(const SpectralMeasure& tau, std::size_t nodes_per_piece);

}  // namespace freeconv
