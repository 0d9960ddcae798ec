#include "freeconv/freeconv.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "errors.hpp"
#include "measure.hpp"
#include "measure_json.hpp"
#include "outlier.hpp"
#include "rmt.hpp"
#include "subordination.hpp"

struct fc_measure {
  freeconv::SpectralMeasure m;
};

struct fc_support {
  freeconv::SupportSet s;
};

struct fc_predictions {
  std::vector<freeconv::OutlierPrediction> items;
  std::vector<std::string> dropped;
  freeconv::SupportSet support;
};

struct fc_report {
  freeconv::SimulationReport r;
};

struct fc_model {
  freeconv::ModelInstance inst;
  freeconv::Backend backend;
};

namespace {

using namespace freeconv;

thread_local std::string g_last_error;

fc_status fail(fc_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

fc_status to_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::Domain: return FC_ERR_DOMAIN;
    case ErrorCode::Pole: return FC_ERR_POLE;
    case ErrorCode::Inversion: return FC_ERR_INVERSION;
    case ErrorCode::Convergence: return FC_ERR_CONVERGENCE;
    case ErrorCode::Boundary: return FC_ERR_BOUNDARY;
    case ErrorCode::Family: return FC_ERR_FAMILY;
    case ErrorCode::Size: return FC_ERR_SIZE;
    case ErrorCode::Config: return FC_ERR_CONFIG;
    case ErrorCode::Singular: return FC_ERR_SINGULAR;
    case ErrorCode::InvalidMeasure: return FC_ERR_MEASURE;
  }
  return FC_ERR_INTERNAL;
}

template <class Fn>
fc_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return FC_OK;
  } catch (const Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(FC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FC_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FC_ERR_INTERNAL, "unknown error");
  }
}

#define FC_REQUIRE(cond, what) \
  if (!(cond)) return fail(FC_ERR_INVALID_ARGUMENT, what)

Backend to_backend(fc_backend b) {
  switch (b) {
    case FC_BACKEND_NATIVE: return Backend::Native;
    case FC_BACKEND_LAPACK: return Backend::Lapack;
    default: return Backend::Default;
  }
}

SpikeSet to_spikes(const fc_spike* spikes, std::size_t n) {
  std::vector<Spike> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back({spikes[i].theta, spikes[i].multiplicity});
  return SpikeSet(std::move(v));
}

fc_status make_measure(fc_measure** out, SpectralMeasure (*make)(const void*), const void* arg) {
  FC_REQUIRE(out, "out must not be NULL");
  *out = nullptr;
  return guarded([&] { *out = new fc_measure{make(arg)}; });
}

void write_matrix(const CMatrix& m, double* out) {
  const std::size_t count = m.rows() * m.cols();
  for (std::size_t k = 0; k < count; ++k) {
    out[2 * k] = m.data()[k].real();
    out[2 * k + 1] = m.data()[k].imag();
  }
}

fc_subordination_point to_c(const SubordinationPoint& p) {
  return {p.z.real(),      p.z.imag(),     p.omega1.real(),
          p.omega1.imag(), p.omega2.real(), p.omega2.imag(),
          p.iterations,    p.residual,      p.derivative_product.real(),
          p.derivative_product.imag()};
}

}  // namespace

extern "C" {

const char* fc_version(void) { return "0.1.0"; }

const char* fc_status_string(fc_status status) {
  switch (status) {
    case FC_OK: return "ok";
    case FC_ERR_DOMAIN: return "domain error";
    case FC_ERR_POLE: return "pole";
    case FC_ERR_INVERSION: return "inversion failed";
    case FC_ERR_CONVERGENCE: return "no convergence";
    case FC_ERR_BOUNDARY: return "boundary value not real";
    case FC_ERR_FAMILY: return "no closed form for this family";
    case FC_ERR_SIZE: return "size error";
    case FC_ERR_CONFIG: return "configuration error";
    case FC_ERR_SINGULAR: return "singular matrix";
    case FC_ERR_MEASURE: return "invalid measure";
    case FC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case FC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* fc_last_error(void) { return g_last_error.c_str(); }

int fc_lapack_available(void) { return lapack_available() ? 1 : 0; }

// ---- measures ---------------------------------------------------------------

fc_status fc_measure_from_json(const char* json, fc_measure** out) {
  FC_REQUIRE(json, "json must not be NULL");
  return make_measure(
      out, [](const void* p) { return measure_from_json_text(static_cast<const char*>(p)); }, json);
}

fc_status fc_measure_semicircle(double variance, fc_measure** out) {
  return make_measure(
      out, [](const void* p) { return SpectralMeasure::semicircle(*static_cast<const double*>(p)); }, &variance);
}

fc_status fc_measure_marchenko_pastur(double ratio, double scale, fc_measure** out) {
  const double args[2] = {ratio, scale};
  return make_measure(
      out,
      [](const void* p) {
        const auto* a = static_cast<const double*>(p);
        return SpectralMeasure::marchenko_pastur(a[0], a[1]);
      },
      args);
}

fc_status fc_measure_point_mass(double a, fc_measure** out) {
  return make_measure(
      out, [](const void* p) { return SpectralMeasure::point_mass(*static_cast<const double*>(p)); }, &a);
}

fc_status fc_measure_bernoulli_symmetric(fc_measure** out) {
  return make_measure(
      out, [](const void*) { return SpectralMeasure::bernoulli_symmetric(); }, nullptr);
}

fc_status fc_measure_empirical(const double* points, size_t n, fc_measure** out) {
  FC_REQUIRE(points || n == 0, "points must not be NULL");
  FC_REQUIRE(out, "out must not be NULL");
  *out = nullptr;
  return guarded([&] { *out = new fc_measure{SpectralMeasure::empirical(std::span<const double>(points, n))}; });
}

void fc_measure_free(fc_measure* m) { delete m; }

fc_status fc_measure_to_json(const fc_measure* m, char* buf, size_t cap, size_t* needed) {
  FC_REQUIRE(m, "measure must not be NULL");
  FC_REQUIRE(buf || cap == 0, "buf must not be NULL when cap > 0");
  return guarded([&] {
    const std::string text = measure_to_json(m->m).dump();
    if (needed) *needed = text.size() + 1;
    if (cap > 0) {
      const std::size_t n = std::min(cap - 1, text.size());
      std::memcpy(buf, text.data(), n);
      buf[n] = '\0';
    }
  });
}

fc_status fc_measure_radius(const fc_measure* m, double* out) {
  FC_REQUIRE(m && out, "arguments must not be NULL");
  return guarded([&] { *out = m->m.radius(); });
}

fc_status fc_transform_eval(const fc_measure* m, fc_transform which, double re, double im, double* out_re,
                            double* out_im) {
  FC_REQUIRE(m && out_re && out_im, "arguments must not be NULL");
  FC_REQUIRE(which >= FC_TRANSFORM_G && which <= FC_TRANSFORM_R, "unknown transform");
  return guarded([&] {
    const cplx z(re, im);
    cplx v;
    switch (which) {
      case FC_TRANSFORM_G: v = cauchy_transform(m->m, z); break;
      case FC_TRANSFORM_G_PRIME: v = cauchy_derivative(m->m, z); break;
      case FC_TRANSFORM_F: v = reciprocal_cauchy(m->m, z); break;
      case FC_TRANSFORM_H: v = h_transform(m->m, z); break;
      case FC_TRANSFORM_H_PRIME: v = h_derivative(m->m, z); break;
      case FC_TRANSFORM_R: v = r_transform(m->m, z); break;
      default: throw ConfigError("unknown transform");
    }
    *out_re = v.real();
    *out_im = v.imag();
  });
}

fc_status fc_quantile_sample(const fc_measure* m, size_t n, double* out) {
  FC_REQUIRE(m && out, "arguments must not be NULL");
  return guarded([&] {
    const auto q = quantile_sample(m->m, n);
    std::copy(q.begin(), q.end(), out);
  });
}

fc_status fc_measure_support(const fc_measure* m, fc_support** out) {
  FC_REQUIRE(m && out, "arguments must not be NULL");
  *out = nullptr;
  return guarded([&] { *out = new fc_support{support(m->m)}; });
}

size_t fc_support_count(const fc_support* s) { return s ? s->s.size() : 0; }

fc_status fc_support_interval(const fc_support* s, size_t i, double* lo, double* hi) {
  FC_REQUIRE(s && lo && hi, "arguments must not be NULL");
  FC_REQUIRE(i < s->s.size(), "interval index out of range");
  *lo = s->s.intervals()[i].lo;
  *hi = s->s.intervals()[i].hi;
  return FC_OK;
}

fc_status fc_support_enlarge(const fc_support* s, double eps, fc_support** out) {
  FC_REQUIRE(s && out, "arguments must not be NULL");
  *out = nullptr;
  return guarded([&] { *out = new fc_support{enlarge(s->s, eps)}; });
}

double fc_support_distance(const fc_support* s, double x) { return s ? s->s.distance(x) : 0.0; }

void fc_support_free(fc_support* s) { delete s; }

// ---- subordination ----------------------------------------------------------

fc_status fc_denjoy_wolff(const fc_measure* mu, const fc_measure* nu, double z_re, double z_im,
                          fc_subordination_point* out) {
  FC_REQUIRE(mu && nu && out, "arguments must not be NULL");
  return guarded([&] { *out = to_c(denjoy_wolff(mu->m, nu->m, cplx(z_re, z_im))); });
}

fc_status fc_convolution_cauchy(const fc_measure* mu, const fc_measure* nu, double z_re, double z_im, double* out_re,
                                double* out_im) {
  FC_REQUIRE(mu && nu && out_re && out_im, "arguments must not be NULL");
  return guarded([&] {
    const cplx g = convolution_cauchy(mu->m, nu->m, cplx(z_re, z_im));
    *out_re = g.real();
    *out_im = g.imag();
  });
}

fc_status fc_convolution_density(const fc_measure* mu, const fc_measure* nu, const double* grid, size_t n,
                                 const double* ladder, size_t ladder_len, int extrapolate, unsigned threads,
                                 double* density_out, int* ok_out, fc_subordination_point* trace_out) {
  FC_REQUIRE(mu && nu && density_out, "arguments must not be NULL");
  FC_REQUIRE(grid || n == 0, "grid must not be NULL");
  FC_REQUIRE(ladder || ladder_len == 0, "ladder must not be NULL when ladder_len > 0");
  return guarded([&] {
    DensityOptions opt;
    if (ladder_len > 0) opt.ladder.assign(ladder, ladder + ladder_len);
    opt.extrapolate = extrapolate != 0;
    opt.threads = std::max(1u, threads);
    const auto samples = convolution_density(mu->m, nu->m, std::vector<double>(grid, grid + n), opt);
    for (std::size_t i = 0; i < n; ++i) {
      density_out[i] = samples[i].density;
      if (ok_out) ok_out[i] = samples[i].ok ? 1 : 0;
      if (trace_out) trace_out[i] = to_c(samples[i].last);
    }
  });
}

fc_status fc_convolution_support(const fc_measure* mu, const fc_measure* nu, double cutoff, unsigned threads,
                                 fc_support** out) {
  FC_REQUIRE(mu && nu && out, "arguments must not be NULL");
  *out = nullptr;
  return guarded([&] {
    SupportOptions opt;
    if (cutoff > 0.0) opt.density_cutoff = cutoff;
    opt.density.threads = std::max(1u, threads);
    *out = new fc_support{convolution_support(mu->m, nu->m, opt)};
  });
}

fc_status fc_omega_boundary(const fc_measure* mu, const fc_measure* nu, double x, double* value, int* is_pole) {
  FC_REQUIRE(mu && nu && value, "arguments must not be NULL");
  return guarded([&] {
    const auto b = omega_boundary(mu->m, nu->m, x);
    *value = b.value;
    if (is_pole) *is_pole = b.is_pole ? 1 : 0;
  });
}

// ---- outliers -----------------------------------------------------------------

fc_status fc_spike_residual(const fc_measure* mu, const fc_measure* nu, double theta, double rho, double* out) {
  FC_REQUIRE(mu && nu && out, "arguments must not be NULL");
  return guarded([&] { *out = spike_residual(mu->m, nu->m, theta, rho); });
}

fc_status fc_derivative_product(const fc_measure* mu, const fc_measure* nu, double theta, double rho, double* out) {
  FC_REQUIRE(mu && nu && out, "arguments must not be NULL");
  return guarded([&] { *out = derivative_product(mu->m, nu->m, theta, rho); });
}

fc_status fc_solve_outliers(const fc_measure* mu, const fc_measure* nu, const fc_spike* spikes, size_t n_spikes,
                            const fc_outlier_options* opt, fc_predictions** out) {
  FC_REQUIRE(mu && nu && out, "arguments must not be NULL");
  FC_REQUIRE(spikes || n_spikes == 0, "spikes must not be NULL");
  *out = nullptr;
  return guarded([&] {
    OutlierOptions o;
    if (opt) {
      if (opt->has_window) o.window = Interval{opt->window_lo, opt->window_hi};
      o.grid_step = opt->grid_step;
      o.support_options.density.threads = std::max(1u, opt->threads);
    }
    auto res = solve_outliers(mu->m, nu->m, to_spikes(spikes, n_spikes), o);
    *out = new fc_predictions{std::move(res.predictions), std::move(res.dropped), std::move(res.support)};
  });
}

fc_status fc_outliers_infdiv(const fc_measure* mu, const fc_measure* nu, double theta, int* found, double* rho) {
  FC_REQUIRE(mu && nu && found && rho, "arguments must not be NULL");
  return guarded([&] {
    const auto r = outliers_infdiv(mu->m, nu->m, theta);
    *found = r ? 1 : 0;
    *rho = r ? *r : 0.0;
  });
}

fc_status fc_outliers_point_mass(const fc_measure* nu, const fc_spike* gammas, size_t n, fc_predictions** out) {
  FC_REQUIRE(nu && out, "arguments must not be NULL");
  FC_REQUIRE(gammas || n == 0, "gammas must not be NULL");
  *out = nullptr;
  return guarded([&] {
    std::vector<Spike> g;
    for (std::size_t i = 0; i < n; ++i) g.push_back({gammas[i].theta, gammas[i].multiplicity});
    auto p = std::make_unique<fc_predictions>();
    p->items = outliers_point_mass(nu->m, g, &p->dropped);
    *out = p.release();
  });
}

size_t fc_predictions_count(const fc_predictions* p) { return p ? p->items.size() : 0; }

fc_status fc_predictions_get(const fc_predictions* p, size_t i, fc_prediction* out) {
  FC_REQUIRE(p && out, "arguments must not be NULL");
  FC_REQUIRE(i < p->items.size(), "prediction index out of range");
  const auto& x = p->items[i];
  *out = {x.rho, x.theta, x.multiplicity, x.derivative_product, x.residual, x.distance_to_support};
  return FC_OK;
}

size_t fc_predictions_dropped_count(const fc_predictions* p) { return p ? p->dropped.size() : 0; }

const char* fc_predictions_dropped(const fc_predictions* p, size_t i) {
  return (p && i < p->dropped.size()) ? p->dropped[i].c_str() : nullptr;
}

fc_status fc_predictions_support(const fc_predictions* p, fc_support** out) {
  FC_REQUIRE(p && out, "arguments must not be NULL");
  *out = nullptr;
  return guarded([&] { *out = new fc_support{p->support}; });
}

void fc_predictions_free(fc_predictions* p) { delete p; }

// ---- random matrices ----------------------------------------------------------

fc_status fc_haar_unitary(size_t n, uint64_t seed, uint64_t stream, fc_backend backend, double* out) {
  FC_REQUIRE(out, "out must not be NULL");
  return guarded([&] { write_matrix(haar_unitary(n, seed, stream, to_backend(backend)), out); });
}

fc_status fc_hermitian_eigenvalues(size_t n, const double* h, fc_backend backend, double* out) {
  FC_REQUIRE(h && out, "arguments must not be NULL");
  return guarded([&] {
    CMatrix m(n, n);
    for (std::size_t k = 0; k < n * n; ++k) m.data()[k] = cplx(h[2 * k], h[2 * k + 1]);
    const auto w = hermitian_eigenvalues(m, to_backend(backend));
    std::copy(w.begin(), w.end(), out);
  });
}

fc_status fc_build_model(const fc_measure* mu, const fc_measure* nu, const fc_spike* spikes, size_t n_spikes,
                         size_t n, uint64_t seed, uint64_t stream, fc_backend backend, fc_model** out) {
  FC_REQUIRE(mu && nu && out, "arguments must not be NULL");
  FC_REQUIRE(spikes || n_spikes == 0, "spikes must not be NULL");
  *out = nullptr;
  return guarded([&] {
    const Backend b = to_backend(backend);
    *out = new fc_model{build_model(mu->m, nu->m, to_spikes(spikes, n_spikes), n, seed, stream, b), b};
  });
}

size_t fc_model_size(const fc_model* m) { return m ? m->inst.n : 0; }

fc_status fc_model_diagonals(const fc_model* m, double* a_out, double* b_out) {
  FC_REQUIRE(m, "model must not be NULL");
  if (a_out) std::copy(m->inst.a_diag.begin(), m->inst.a_diag.end(), a_out);
  if (b_out) std::copy(m->inst.b_diag.begin(), m->inst.b_diag.end(), b_out);
  return FC_OK;
}

fc_status fc_model_matrix(const fc_model* m, double* out) {
  FC_REQUIRE(m && out, "arguments must not be NULL");
  return guarded([&] { write_matrix(m->inst.matrix(), out); });
}

fc_status fc_model_eigenvalues(fc_model* m, double* out) {
  FC_REQUIRE(m && out, "arguments must not be NULL");
  return guarded([&] {
    if (!m->inst.eigenvalues) compute_spectrum(m->inst, m->backend);
    std::copy(m->inst.eigenvalues->begin(), m->inst.eigenvalues->end(), out);
  });
}

fc_status fc_model_det_m(const fc_model* m, const fc_spike* spikes, size_t n_spikes, double alpha, double lambda,
                         double* det_re, double* det_im, double* block_diag_out) {
  FC_REQUIRE(m && det_re && det_im, "arguments must not be NULL");
  FC_REQUIRE(spikes || n_spikes == 0, "spikes must not be NULL");
  return guarded([&] {
    const auto d = det_m_diagnostic(m->inst, to_spikes(spikes, n_spikes), alpha, lambda);
    *det_re = d.det.real();
    *det_im = d.det.imag();
    if (block_diag_out) {
      for (std::size_t i = 0; i < d.block_diagonal.size(); ++i) {
        block_diag_out[2 * i] = d.block_diagonal[i].real();
        block_diag_out[2 * i + 1] = d.block_diagonal[i].imag();
      }
    }
  });
}

fc_status fc_default_alpha(const fc_measure* mu, double* out) {
  FC_REQUIRE(mu && out, "arguments must not be NULL");
  return guarded([&] { *out = default_alpha(mu->m); });
}

void fc_model_free(fc_model* m) { delete m; }

void fc_verification_config_default(fc_verification_config* cfg) {
  if (!cfg) return;
  const VerificationConfig d;
  *cfg = {d.n, d.trials, d.epsilon, d.eta, d.seed, d.threads, d.pass_threshold, FC_BACKEND_DEFAULT};
}

fc_status fc_run_verification(const fc_measure* mu, const fc_measure* nu, const fc_spike* spikes, size_t n_spikes,
                              const fc_predictions* predictions, const fc_verification_config* cfg, fc_report** out) {
  FC_REQUIRE(mu && nu && predictions && cfg && out, "arguments must not be NULL");
  FC_REQUIRE(spikes || n_spikes == 0, "spikes must not be NULL");
  *out = nullptr;
  return guarded([&] {
    VerificationConfig c;
    c.n = cfg->n;
    c.trials = cfg->trials;
    c.epsilon = cfg->epsilon;
    c.eta = cfg->eta;
    c.seed = cfg->seed;
    c.threads = std::max(1u, cfg->threads);
    c.pass_threshold = cfg->pass_threshold;
    c.backend = to_backend(cfg->backend);
    *out = new fc_report{run_verification(mu->m, nu->m, to_spikes(spikes, n_spikes), predictions->items,
                                          predictions->support, c)};
  });
}

double fc_report_pass_fraction(const fc_report* r) { return r ? r->r.pass_fraction : 0.0; }
int fc_report_passed(const fc_report* r) { return r && r->r.passed ? 1 : 0; }
double fc_report_eta(const fc_report* r) { return r ? r->r.eta : 0.0; }
int fc_report_separation_ok(const fc_report* r) { return r && r->r.separation_from_k_eta ? 1 : 0; }
size_t fc_report_row_count(const fc_report* r) { return r ? r->r.rows.size() : 0; }

fc_status fc_report_row(const fc_report* r, size_t i, fc_window_row* out) {
  FC_REQUIRE(r && out, "arguments must not be NULL");
  FC_REQUIRE(i < r->r.rows.size(), "row index out of range");
  const auto& w = r->r.rows[i];
  *out = {w.trial, w.rho, w.epsilon, w.expected, w.observed};
  return FC_OK;
}

size_t fc_report_stray_count(const fc_report* r) { return r ? r->r.strays.size() : 0; }

fc_status fc_report_stray(const fc_report* r, size_t i, int* trial, double* eigenvalue) {
  FC_REQUIRE(r && trial && eigenvalue, "arguments must not be NULL");
  FC_REQUIRE(i < r->r.strays.size(), "stray index out of range");
  *trial = r->r.strays[i].trial;
  *eigenvalue = r->r.strays[i].eigenvalue;
  return FC_OK;
}

size_t fc_report_boundary_flag_count(const fc_report* r) { return r ? r->r.boundary_flags.size() : 0; }

double fc_report_boundary_flag(const fc_report* r, size_t i) {
  return (r && i < r->r.boundary_flags.size()) ? r->r.boundary_flags[i] : 0.0;
}

int fc_report_trial_passed(const fc_report* r, size_t trial) {
  return (r && trial < r->r.trial_passed.size() && r->r.trial_passed[trial]) ? 1 : 0;
}

void fc_report_free(fc_report* r) { delete r; }

}  // extern "C"
