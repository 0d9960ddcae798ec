#include "rmt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "errors.hpp"
#include "rng.hpp"

namespace freeconv {

namespace {

struct Window {
  double rho;
  int expected;
};

struct TrialResult {
  int trial;
  std::vector<int> observed;
  std::vector<double> strays;
};

/// Distance from x to the boundary of the closed set s.
double boundary_distance(const SupportSet& s, double x) {
  double best = s.distance(x);
  for (const auto& iv : s.intervals()) {
    if (iv.contains(x)) best = std::min(x - iv.lo, iv.hi - x);
  }
  return best;
}

}  // namespace

CMatrix haar_unitary(std::size_t n, std::uint64_t seed, std::uint64_t stream, Backend backend) {
  if (n == 0) throw SizeError("haar_unitary needs N >= 1");
  PhiloxStream rng(seed, stream);
  CMatrix g(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double re = rng.normal();
      g(i, j) = cplx(re, rng.normal());
    }
  }
  QrFactors qr = qr_decompose(g, backend);
  for (std::size_t j = 0; j < n; ++j) {
    const cplx r = qr.r_diagonal[j];
    const cplx phase = std::abs(r) > 0.0 ? r / std::abs(r) : cplx(1.0);
    for (std::size_t i = 0; i < n; ++i) qr.q(i, j) *= phase;
  }
  return std::move(qr.q);
}

CMatrix ModelInstance::matrix(std::optional<double> spike_replacement) const {
  CMatrix x = conjugated;
  for (std::size_t i = 0; i < n; ++i) {
    const bool spike_slot = static_cast<int>(i) < rank;
    x(i, i) += (spike_slot && spike_replacement) ? *spike_replacement : a_diag[i];
  }
  return x;
}

ModelInstance build_model(const SpectralMeasure& mu, const SpectralMeasure& nu, const SpikeSet& spikes,
                          std::size_t n, std::uint64_t seed, std::uint64_t stream, Backend backend) {
  const int r = spikes.rank();
  if (n <= static_cast<std::size_t>(r)) throw SizeError("build_model needs N > r = " + std::to_string(r));
  ModelInstance m;
  m.n = n;
  m.seed = seed;
  m.stream = stream;
  m.rank = r;
  m.a_diag = spikes.expanded();
  const auto bulk = quantile_sample(mu, n - static_cast<std::size_t>(r));
  m.a_diag.insert(m.a_diag.end(), bulk.begin(), bulk.end());
  m.b_diag = quantile_sample(nu, n);
  m.u = haar_unitary(n, seed, stream, backend);

  CMatrix scaled = m.u;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= m.b_diag[i];
  }
  m.conjugated = multiply_adjoint(m.u, scaled, backend);
  for (std::size_t j = 0; j < n; ++j) {
    m.conjugated(j, j) = m.conjugated(j, j).real();
    for (std::size_t i = j + 1; i < n; ++i) m.conjugated(j, i) = std::conj(m.conjugated(i, j));
  }
  return m;
}

std::vector<double> hermitian_eigenvalues(const CMatrix& h, Backend backend) {
  if (h.rows() != h.cols()) throw SizeError("hermitian_eigenvalues needs a square matrix");
  if (hermitian_defect(h) >= 1e-10) throw DomainError("matrix is not Hermitian to 1e-10");
  return eigvalsh(h, backend);
}

void compute_spectrum(ModelInstance& instance, Backend backend) {
  instance.eigenvalues = eigvalsh(instance.matrix(), backend);
}

double default_eta(std::size_t n, const SupportSet& k) {
  return 4.0 * std::pow(static_cast<double>(n), -1.0 / 3.0) * k.diameter();
}

SimulationReport run_verification(const SpectralMeasure& mu, const SpectralMeasure& nu, const SpikeSet& spikes,
                                  const std::vector<OutlierPrediction>& predictions, const SupportSet& k,
                                  const VerificationConfig& cfg) {
  if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  if (!(cfg.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (k.empty()) throw ConfigError("support set K is empty");

  std::vector<OutlierPrediction> sorted = predictions;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.rho < b.rho; });
  std::vector<Window> windows;
  for (const auto& p : sorted) {
    if (!windows.empty() && std::abs(p.rho - windows.back().rho) <= 1e-9) {
      windows.back().expected += p.multiplicity;
    } else {
      windows.push_back({p.rho, p.multiplicity});
    }
  }
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (i > 0 && cfg.epsilon >= 0.5 * (windows[i].rho - windows[i - 1].rho)) {
      throw ConfigError("epsilon " + std::to_string(cfg.epsilon) + " is not below half the gap between predictions " +
                        std::to_string(windows[i - 1].rho) + " and " + std::to_string(windows[i].rho));
    }
    if (cfg.epsilon >= k.distance(windows[i].rho)) {
      throw ConfigError("epsilon window around " + std::to_string(windows[i].rho) + " reaches the support K");
    }
  }

  SimulationReport rep;
  rep.trials = cfg.trials;
  rep.n = cfg.n;
  rep.epsilon = cfg.epsilon;
  rep.seed = cfg.seed;
  rep.eta = cfg.eta > 0.0 ? cfg.eta : default_eta(cfg.n, k);
  rep.k_eta = k.enlarged(rep.eta);
  for (const auto& w : windows) {
    if (!(cfg.epsilon < 0.5 * rep.k_eta.distance(w.rho))) rep.separation_from_k_eta = false;
    if (boundary_distance(rep.k_eta, w.rho) < 1e-6) rep.boundary_flags.push_back(w.rho);
  }

  std::vector<TrialResult> results;
  std::mutex handoff;
  std::atomic<int> next{0};
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= cfg.trials) return;
      TrialResult tr;
      tr.trial = t;
      try {
        ModelInstance inst = build_model(mu, nu, spikes, cfg.n, cfg.seed, static_cast<std::uint64_t>(t), cfg.backend);
        const auto eig = eigvalsh(inst.matrix(), cfg.backend);
        tr.observed.assign(windows.size(), 0);
        for (double lambda : eig) {
          bool covered = false;
          for (std::size_t w = 0; w < windows.size(); ++w) {
            if (std::abs(lambda - windows[w].rho) < cfg.epsilon) {
              ++tr.observed[w];
              covered = true;
            }
          }
          if (!covered && rep.k_eta.distance(lambda) > 0.0) tr.strays.push_back(lambda);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(handoff);
        if (!failure) failure = std::current_exception();
        next.store(cfg.trials);
        return;
      }
      std::lock_guard<std::mutex> lock(handoff);
      results.push_back(std::move(tr));
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.trials)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.trial < b.trial; });
  int passes = 0;
  for (const auto& tr : results) {
    bool ok = tr.strays.empty();
    for (std::size_t w = 0; w < windows.size(); ++w) {
      rep.rows.push_back({tr.trial, windows[w].rho, cfg.epsilon, windows[w].expected, tr.observed[w]});
      ok = ok && tr.observed[w] == windows[w].expected;
    }
    for (double s : tr.strays) rep.strays.push_back({tr.trial, s});
    rep.trial_passed.push_back(ok);
    passes += ok ? 1 : 0;
  }
  rep.pass_fraction = static_cast<double>(passes) / static_cast<double>(cfg.trials);
  rep.passed = rep.pass_fraction >= cfg.pass_threshold;
  return rep;
}

double default_alpha(const SpectralMeasure& mu) {
  const double m = quantile(mu, 0.5);
  if (mu.density(m) > 0.0 || mu.touches_support(m, 0.0)) return m;
  const SupportSet s = support(mu);
  double best = s.intervals().front().lo;
  for (const auto& iv : s.intervals()) {
    for (double end : {iv.lo, iv.hi}) {
      if (std::abs(end - m) < std::abs(best - m)) best = end;
    }
  }
  return best;
}

DetMResult det_m_diagnostic(const ModelInstance& instance, const SpikeSet& spikes, double alpha, double lambda) {
  DetMResult out{1.0, {}};
  const int r = spikes.rank();
  if (r != instance.rank) throw SizeError("spike set does not match the instance");
  if (r == 0) return out;
  const std::size_t n = instance.n;
  const auto ur = static_cast<std::size_t>(r);
  CMatrix a = instance.matrix(alpha);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) a(i, j) = -a(i, j);
    a(j, j) += lambda;
  }
  CMatrix rhs(n, ur);
  for (std::size_t j = 0; j < ur; ++j) rhs(j, j) = 1.0;
  const CMatrix y = lu_solve(std::move(a), std::move(rhs));
  const auto thetas = spikes.expanded();
  CMatrix m(ur, ur);
  for (std::size_t j = 0; j < ur; ++j) {
    for (std::size_t i = 0; i < ur; ++i) m(i, j) = (i == j ? 1.0 : 0.0) - y(i, j) * (thetas[j] - alpha);
    out.block_diagonal.push_back(y(j, j));
  }
  out.det = determinant(std::move(m));
  return out;
}

}  // namespace freeconv
