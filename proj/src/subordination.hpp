#pragma once

#include <optional>
#include <vector>

#include "measure.hpp"
#include "support_set.hpp"

namespace freeconv {

struct SubordinationOptions {
  int max_iterations = 10000;
  double tolerance = 1e-12;
  /// Used instead of `tolerance` when Im z < relax_below.
  double relaxed_tolerance = 1e-10;
  double relax_below = 1e-4;
  /// Newton steps on f_z(w) - w, taken only when they stay in the upper half
  /// plane and shrink the residual. Off gives the plain/damped iteration.
  bool newton = true;
  TransformOptions transform;
};

/// (omega1, omega2) at z. `residual` is |f_z(omega1) - omega1| at the returned omega1.
struct SubordinationPoint {
  cplx z;
  cplx omega1;
  cplx omega2;
  int iterations = 0;
  double residual = 0.0;
  cplx derivative_product;  // h_mu'(omega1) h_nu'(omega2)
};

/// f_z(w) = h_nu(h_mu(w) + z) + z.
cplx subordination_map(const SpectralMeasure& mu, const SpectralMeasure& nu, cplx z, cplx w,
                       const TransformOptions& opt = {});

/// Fixed point of f_z in the upper half plane (Im z > 0), iterated from
/// `start` (default: z). Point masses use the exact translation forms. For
/// Im z < 0 the result is the conjugate of the one at conj z.
SubordinationPoint denjoy_wolff(const SpectralMeasure& mu, const SpectralMeasure& nu, cplx z,
                                const SubordinationOptions& opt = {},
                                std::optional<cplx> start = std::nullopt);

/// G of mu boxplus nu at z, as G_mu(omega1(z)).
cplx convolution_cauchy(const SpectralMeasure& mu, const SpectralMeasure& nu, cplx z,
                        const SubordinationOptions& opt = {});

struct DensityOptions {
  std::vector<double> ladder{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  /// Quadratic extrapolation to eps = 0 through the last three rungs.
  bool extrapolate = true;
  unsigned threads = 1;
  SubordinationOptions subordination;
};

struct DensitySample {
  double x = 0.0;
  double density = 0.0;
  /// False when a rung failed to converge; density is then 0 and not meaningful.
  bool ok = true;
  /// Subordination point at the smallest rung.
  SubordinationPoint last;
};

std::vector<DensitySample> convolution_density(const SpectralMeasure& mu, const SpectralMeasure& nu,
                                               const std::vector<double>& grid,
                                               const DensityOptions& opt = {});

struct SupportOptions {
  double density_cutoff = 1e-8;
  std::size_t scan_points = 1200;
  double edge_tolerance = 1e-6;
  DensityOptions density{{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8}, true, 1, {}};
};

/// supp(mu boxplus nu): density-threshold intervals on a scan of the
/// Minkowski sum of the hulls, edges bisected, plus atoms of the convolution.
SupportSet convolution_support(const SpectralMeasure& mu, const SpectralMeasure& nu,
                               const SupportOptions& opt = {});

/// Atoms of mu boxplus nu: x + y whenever mu({x}) + nu({y}) > 1.
std::vector<Atom> convolution_atoms(const SpectralMeasure& mu, const SpectralMeasure& nu);

struct BoundaryValue {
  double value = 0.0;
  bool is_pole = false;
  /// |Im| of the extrapolated limit.
  double imag_residual = 0.0;
};

struct BoundaryOptions {
  std::vector<double> ladder{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  double imag_tolerance = 1e-6;
  SubordinationOptions subordination;
};

/// lim_{eps -> 0} omega1(x + i eps) for real x outside supp(mu boxplus nu).
/// Throws BoundaryError when the imaginary part does not decay.
BoundaryValue omega_boundary(const SpectralMeasure& mu, const SpectralMeasure& nu, double x,
                             const BoundaryOptions& opt = {});

/// Value at 0 of the quadratic through three (eps, value) pairs.
cplx extrapolate_to_zero(const double eps[3], const cplx values[3]);

}  // namespace freeconv
