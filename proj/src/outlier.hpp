#pragma once

#include <optional>
#include <string>
#include <vector>

#include "measure.hpp"
#include "subordination.hpp"
#include "support_set.hpp"

namespace freeconv {

struct Spike {
  double theta;
  int multiplicity;
};

/// Spikes theta_1 > ... > theta_J with positive multiplicities. The
/// constructor sorts by decreasing theta and rejects repeated values.
class SpikeSet {
 public:
  SpikeSet() = default;
  explicit SpikeSet(std::vector<Spike> spikes);

  const std::vector<Spike>& spikes() const noexcept { return spikes_; }
  bool empty() const noexcept { return spikes_.empty(); }
  std::size_t size() const noexcept { return spikes_.size(); }
  /// Sum of multiplicities.
  int rank() const noexcept;
  /// Each theta repeated by its multiplicity, in order.
  std::vector<double> expanded() const;

  /// DomainError unless every theta is farther than `margin` from supp(mu).
  void check_outside(const SpectralMeasure& mu, double margin = 1e-9) const;

 private:
  std::vector<Spike> spikes_;
};

struct OutlierPrediction {
  double rho = 0.0;
  double theta = 0.0;
  int multiplicity = 0;
  double derivative_product = 0.0;
  double residual = 0.0;
  double distance_to_support = 0.0;
};

/// h_nu(h_mu(theta) + rho) - theta + rho.
double spike_residual(const SpectralMeasure& mu, const SpectralMeasure& nu, double theta, double rho,
                      const TransformOptions& opt = {});

/// h_mu'(theta) h_nu'(h_mu(theta) + rho).
double derivative_product(const SpectralMeasure& mu, const SpectralMeasure& nu, double theta, double rho,
                          const TransformOptions& opt = {});

struct OutlierOptions {
  /// Search window; default hull(K) inflated by 3 diam(K).
  std::optional<Interval> window;
  /// Scan step; 0 means diam(K)/2000.
  double grid_step = 0.0;
  double support_margin = 1e-4;
  double boundary_reject = 1e-6;
  double root_tolerance = 1e-10;
  double admissible_lo = 1e-12;
  double admissible_hi = 1.0 - 1e-9;
  double merge_distance = 1e-9;
  bool cross_check = true;
  double cross_check_tolerance = 1e-5;
  /// Precomputed supp(mu boxplus nu); computed when absent.
  std::optional<SupportSet> support;
  SupportOptions support_options;
  BoundaryOptions boundary;
};

struct OutlierResult {
  std::vector<OutlierPrediction> predictions;  // sorted by rho
  std::vector<std::string> dropped;            // one line per rejected candidate
  SupportSet support;                          // K used for exclusion
  Interval window{0.0, 0.0};
};

/// All admissible roots of the spike equation for every spike. Point masses
/// on either side are handled in closed form.
OutlierResult solve_outliers(const SpectralMeasure& mu, const SpectralMeasure& nu, const SpikeSet& spikes,
                             const OutlierOptions& opt = {});

/// rho = H(theta) = theta + R_nu(G_mu(theta)) when H'(theta) > 0. FamilyError
/// unless nu has a closed-form R-transform.
std::optional<double> outliers_infdiv(const SpectralMeasure& mu, const SpectralMeasure& nu, double theta);

/// H'(theta) analytically and by central differences (step 1e-7).
struct InfDivDerivative {
  double analytic;
  double finite_difference;
};
InfDivDerivative infdiv_derivative(const SpectralMeasure& mu, const SpectralMeasure& nu, double theta);

/// Finite-rank perturbation of nu (mu = delta_0): solutions of F_nu(rho) = gamma
/// off supp(nu), one per analytic piece at most.
std::vector<OutlierPrediction> outliers_point_mass(const SpectralMeasure& nu, const std::vector<Spike>& gammas,
                                                   std::vector<std::string>* dropped = nullptr);

/// 1/lim_{x -> b+} G_nu(x) and 1/lim_{x -> a-} G_nu(x) with [a, b] the hull of supp(nu),
/// extrapolated from two points just outside the edge.
struct EdgeThresholds {
  double upper;
  double lower;
};
EdgeThresholds edge_thresholds(const SpectralMeasure& nu);

/// Real zeros of G_nu (poles of F_nu) in the bounded gaps of supp(nu).
std::vector<double> reciprocal_poles(const SpectralMeasure& nu);

}  // namespace freeconv
