#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "linalg.hpp"
#include "measure.hpp"
#include "outlier.hpp"
#include "support_set.hpp"

namespace freeconv {

/// Haar-distributed N x N unitary: QR of a complex Ginibre matrix drawn from
/// Philox stream (seed, stream), columns rephased by R_ii / |R_ii|.
CMatrix haar_unitary(std::size_t n, std::uint64_t seed, std::uint64_t stream = 0,
                     Backend backend = Backend::Default);

/// X = diag(a) + U^* diag(b) U.
struct ModelInstance {
  std::size_t n = 0;
  std::vector<double> a_diag;  // spikes (with multiplicity) first, then quantiles of mu
  std::vector<double> b_diag;  // quantiles of nu
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  int rank = 0;
  CMatrix u;
  CMatrix conjugated;  // U^* diag(b) U
  std::optional<std::vector<double>> eigenvalues;  // nonincreasing

  /// The full matrix X (or X with the first r diagonal slots replaced by alpha).
  CMatrix matrix(std::optional<double> spike_replacement = std::nullopt) const;
};

ModelInstance build_model(const SpectralMeasure& mu, const SpectralMeasure& nu, const SpikeSet& spikes,
                          std::size_t n, std::uint64_t seed, std::uint64_t stream = 0,
                          Backend backend = Backend::Default);

/// Sorted nonincreasing. DomainError if the input is not Hermitian to 1e-10.
std::vector<double> hermitian_eigenvalues(const CMatrix& h, Backend backend = Backend::Default);

/// Fills instance.eigenvalues.
void compute_spectrum(ModelInstance& instance, Backend backend = Backend::Default);

struct VerificationConfig {
  std::size_t n = 2000;
  int trials = 10;
  double epsilon = 0.1;
  /// <= 0 selects 4 N^{-1/3} diam(K).
  double eta = 0.0;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double pass_threshold = 0.9;
  Backend backend = Backend::Default;
};

struct WindowRow {
  int trial;
  double rho;
  double epsilon;
  int expected;
  int observed;
};

struct StrayRow {
  int trial;
  double eigenvalue;
};

struct SimulationReport {
  std::vector<WindowRow> rows;  // ordered by trial, then rho
  std::vector<StrayRow> strays;
  std::vector<bool> trial_passed;
  int trials = 0;
  std::size_t n = 0;
  double epsilon = 0.0;
  double eta = 0.0;
  std::uint64_t seed = 0;
  double pass_fraction = 0.0;
  bool passed = false;
  SupportSet k_eta;
  /// epsilon < d(rho, K_eta) / 2 for every prediction.
  bool separation_from_k_eta = true;
  /// Predictions within 1e-6 of the boundary of K_eta (count not decided there).
  std::vector<double> boundary_flags;
};

double default_eta(std::size_t n, const SupportSet& k);

/// Samples `trials` instances (stream = trial index) and counts eigenvalues in
/// each window (rho - eps, rho + eps). Coincident predictions share one window
/// and their multiplicities add. ConfigError when a window would meet another
/// window or K.
SimulationReport run_verification(const SpectralMeasure& mu, const SpectralMeasure& nu, const SpikeSet& spikes,
                                  const std::vector<OutlierPrediction>& predictions, const SupportSet& k,
                                  const VerificationConfig& cfg);

/// Median of mu, moved to the nearest support point when it falls in a gap.
double default_alpha(const SpectralMeasure& mu);

struct DetMResult {
  cplx det;
  /// Diagonal of P R_N(lambda) P^t.
  std::vector<cplx> block_diagonal;
};

/// det(I_r - P R_N(lambda) P^t Theta), R_N(lambda) = (lambda - (A' + U^* B U))^{-1},
/// A' = A with the spikes replaced by alpha, Theta = diag(theta_j - alpha).
DetMResult det_m_diagnostic(const ModelInstance& instance, const SpikeSet& spikes, double alpha, double lambda);

}  // namespace freeconv
