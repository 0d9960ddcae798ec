#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"

#ifdef FREECONV_HAVE_LAPACK
extern "C" {
void zgeqrf_(const int* m, const int* n, std::complex<double>* a, const int* lda, std::complex<double>* tau,
             std::complex<double>* work, const int* lwork, int* info);
void zungqr_(const int* m, const int* n, const int* k, std::complex<double>* a, const int* lda,
             const std::complex<double>* tau, std::complex<double>* work, const int* lwork, int* info);
void zgemm_(const char* transa, const char* transb, const int* m, const int* n, const int* k,
            const std::complex<double>* alpha, const std::complex<double>* a, const int* lda,
            const std::complex<double>* b, const int* ldb, const std::complex<double>* beta, std::complex<double>* c,
            const int* ldc, std::size_t, std::size_t);
void zheevd_(const char* jobz, const char* uplo, const int* n, std::complex<double>* a, const int* lda, double* w,
             std::complex<double>* work, const int* lwork, double* rwork, const int* lrwork, int* iwork,
             const int* liwork, int* info, std::size_t, std::size_t);
}
#endif

namespace freeconv {

namespace {

void require_square(const CMatrix& a, const char* what) {
  if (a.rows() != a.cols()) throw SizeError(std::string(what) + " needs a square matrix");
}

int as_int(std::size_t n) {
  if (n > static_cast<std::size_t>(std::numeric_limits<int>::max())) throw SizeError("matrix too large for LAPACK");
  return static_cast<int>(n);
}

#ifdef FREECONV_HAVE_LAPACK
void check_info(int info, const char* routine) {
  if (info < 0) throw SizeError(std::string(routine) + ": illegal argument " + std::to_string(-info));
  if (info > 0) throw ConvergenceError(std::string(routine) + " failed to converge (info " + std::to_string(info) + ")");
}

CMatrix gemm(char ta, const CMatrix& a, const CMatrix& b) {
  const std::size_t m = ta == 'N' ? a.rows() : a.cols();
  const std::size_t k = ta == 'N' ? a.cols() : a.rows();
  if (k != b.rows()) throw SizeError("matrix product dimension mismatch");
  CMatrix c(m, b.cols());
  if (m == 0 || b.cols() == 0) return c;
  const int im = as_int(m), in = as_int(b.cols()), ik = as_int(k);
  const int lda = std::max(1, as_int(a.rows())), ldb = std::max(1, as_int(b.rows())), ldc = std::max(1, im);
  const cplx one = 1.0, zero = 0.0;
  const char tb = 'N';
  zgemm_(&ta, &tb, &im, &in, &ik, &one, a.data(), &lda, b.data(), &ldb, &zero, c.data(), &ldc, 1, 1);
  return c;
}
#endif

CMatrix native_multiply(const CMatrix& a, const CMatrix& b, bool adjoint_a) {
  const std::size_t m = adjoint_a ? a.cols() : a.rows();
  const std::size_t k = adjoint_a ? a.rows() : a.cols();
  if (k != b.rows()) throw SizeError("matrix product dimension mismatch");
  CMatrix c(m, b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    if (adjoint_a) {
      for (std::size_t i = 0; i < m; ++i) {
        cplx s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += std::conj(a(p, i)) * b(p, j);
        c(i, j) = s;
      }
    } else {
      for (std::size_t p = 0; p < k; ++p) {
        const cplx bpj = b(p, j);
        if (bpj == 0.0) continue;
        for (std::size_t i = 0; i < m; ++i) c(i, j) += a(i, p) * bpj;
      }
    }
  }
  return c;
}

QrFactors native_qr(const CMatrix& a) {
  const std::size_t n = a.rows();
  CMatrix r = a;
  std::vector<std::vector<cplx>> reflectors(n);
  std::vector<double> scales(n, 0.0);
  QrFactors out;
  out.r_diagonal.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double norm2 = 0.0;
    for (std::size_t i = k; i < n; ++i) norm2 += std::norm(r(i, k));
    const double norm = std::sqrt(norm2);
    if (norm == 0.0) continue;
    const cplx x0 = r(k, k);
    const cplx phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cplx(1.0);
    const cplx alpha = -phase * norm;
    std::vector<cplx> v(n - k);
    for (std::size_t i = k; i < n; ++i) v[i - k] = r(i, k);
    v[0] -= alpha;
    double vn2 = 0.0;
    for (const auto& vi : v) vn2 += std::norm(vi);
    const double tau = 2.0 / vn2;
    for (std::size_t j = k; j < n; ++j) {
      cplx s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += std::conj(v[i - k]) * r(i, j);
      s *= tau;
      for (std::size_t i = k; i < n; ++i) r(i, j) -= s * v[i - k];
    }
    out.r_diagonal[k] = alpha;
    reflectors[k] = std::move(v);
    scales[k] = tau;
  }
  CMatrix q = CMatrix::identity(n);
  for (std::size_t kk = n; kk-- > 0;) {
    const auto& v = reflectors[kk];
    if (v.empty()) continue;
    for (std::size_t j = kk; j < n; ++j) {
      cplx s = 0.0;
      for (std::size_t i = kk; i < n; ++i) s += std::conj(v[i - kk]) * q(i, j);
      s *= scales[kk];
      for (std::size_t i = kk; i < n; ++i) q(i, j) -= s * v[i - kk];
    }
  }
  out.q = std::move(q);
  return out;
}

#ifdef FREECONV_HAVE_LAPACK
QrFactors lapack_qr(const CMatrix& a) {
  const int n = as_int(a.rows());
  QrFactors out;
  out.q = a;
  if (n == 0) return out;
  std::vector<cplx> tau(static_cast<std::size_t>(n));
  int info = 0;
  int lwork = -1;
  cplx query;
  zgeqrf_(&n, &n, out.q.data(), &n, tau.data(), &query, &lwork, &info);
  lwork = std::max(1, static_cast<int>(query.real()));
  std::vector<cplx> work(static_cast<std::size_t>(lwork));
  zgeqrf_(&n, &n, out.q.data(), &n, tau.data(), work.data(), &lwork, &info);
  check_info(info, "zgeqrf");
  out.r_diagonal.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < out.r_diagonal.size(); ++i) out.r_diagonal[i] = out.q(i, i);
  lwork = -1;
  zungqr_(&n, &n, &n, out.q.data(), &n, tau.data(), &query, &lwork, &info);
  lwork = std::max(1, static_cast<int>(query.real()));
  work.assign(static_cast<std::size_t>(lwork), 0.0);
  zungqr_(&n, &n, &n, out.q.data(), &n, tau.data(), work.data(), &lwork, &info);
  check_info(info, "zungqr");
  return out;
}

std::vector<double> lapack_eigvalsh(const CMatrix& h) {
  const int n = as_int(h.rows());
  std::vector<double> w(static_cast<std::size_t>(n));
  if (n == 0) return w;
  CMatrix a = h;
  const char jobz = 'N', uplo = 'L';
  int info = 0;
  int lwork = -1, lrwork = -1, liwork = -1;
  cplx wq;
  double rq = 0.0;
  int iq = 0;
  zheevd_(&jobz, &uplo, &n, a.data(), &n, w.data(), &wq, &lwork, &rq, &lrwork, &iq, &liwork, &info, 1, 1);
  lwork = std::max(1, static_cast<int>(wq.real()));
  lrwork = std::max(1, static_cast<int>(rq));
  liwork = std::max(1, iq);
  std::vector<cplx> work(static_cast<std::size_t>(lwork));
  std::vector<double> rwork(static_cast<std::size_t>(lrwork));
  std::vector<int> iwork(static_cast<std::size_t>(liwork));
  zheevd_(&jobz, &uplo, &n, a.data(), &n, w.data(), work.data(), &lwork, rwork.data(), &lrwork, iwork.data(), &liwork,
          &info, 1, 1);
  check_info(info, "zheevd");
  return w;
}
#endif

/// Reduces the Hermitian matrix (lower triangle) to real tridiagonal form.
/// Off-diagonal phases are dropped: a diagonal unitary similarity makes them real.
void tridiagonalize(const CMatrix& h, std::vector<double>& d, std::vector<double>& e) {
  const std::size_t n = h.rows();
  CMatrix a(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = j; i < n; ++i) {
      a(i, j) = h(i, j);
      a(j, i) = std::conj(h(i, j));
    }
  }
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  std::vector<cplx> v(n), p(n), w(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t m = n - k - 1;
    double tail = 0.0;
    for (std::size_t i = k + 2; i < n; ++i) tail += std::norm(a(i, k));
    const cplx x0 = a(k + 1, k);
    if (tail == 0.0) {
      e[k] = std::abs(x0);
      continue;
    }
    const double norm = std::sqrt(tail + std::norm(x0));
    const cplx phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cplx(1.0);
    const cplx alpha = -phase * norm;
    for (std::size_t i = 0; i < m; ++i) v[i] = a(k + 1 + i, k);
    v[0] -= alpha;
    double vn2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) vn2 += std::norm(v[i]);
    const double tau = 2.0 / vn2;
    // A22 <- H A22 H with H = I - tau v v^*.
    std::fill(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(m), cplx(0.0));
    for (std::size_t j = 0; j < m; ++j) {
      const cplx vj = v[j];
      for (std::size_t i = 0; i < m; ++i) p[i] += a(k + 1 + i, k + 1 + j) * vj;
    }
    cplx vp = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      p[i] *= tau;
      vp += std::conj(v[i]) * p[i];
    }
    const cplx kk = 0.5 * tau * vp;
    for (std::size_t i = 0; i < m; ++i) w[i] = p[i] - kk * v[i];
    for (std::size_t j = 0; j < m; ++j) {
      const cplx cw = std::conj(w[j]);
      const cplx cv = std::conj(v[j]);
      for (std::size_t i = 0; i < m; ++i) a(k + 1 + i, k + 1 + j) -= v[i] * cw + w[i] * cv;
    }
    e[k] = norm;
  }
  for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i).real();
  if (n >= 2) e[n - 2] = std::abs(a(n - 1, n - 2));
  if (n >= 1) e[n - 1] = 0.0;
}

}  // namespace

CMatrix CMatrix::identity(std::size_t n) {
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix CMatrix::adjoint() const {
  CMatrix out(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j) {
    for (std::size_t i = 0; i < rows_; ++i) out(j, i) = std::conj((*this)(i, j));
  }
  return out;
}

bool lapack_available() noexcept {
#ifdef FREECONV_HAVE_LAPACK
  return true;
#else
  return false;
#endif
}

Backend resolve(Backend b) {
  if (b == Backend::Default) return lapack_available() ? Backend::Lapack : Backend::Native;
  if (b == Backend::Lapack && !lapack_available()) throw ConfigError("this build has no LAPACK backend");
  return b;
}

CMatrix multiply(const CMatrix& a, const CMatrix& b, Backend backend) {
#ifdef FREECONV_HAVE_LAPACK
  if (resolve(backend) == Backend::Lapack) return gemm('N', a, b);
#else
  resolve(backend);
#endif
  return native_multiply(a, b, false);
}

CMatrix multiply_adjoint(const CMatrix& a, const CMatrix& b, Backend backend) {
#ifdef FREECONV_HAVE_LAPACK
  if (resolve(backend) == Backend::Lapack) return gemm('C', a, b);
#else
  resolve(backend);
#endif
  return native_multiply(a, b, true);
}

double hermitian_defect(const CMatrix& a) {
  require_square(a, "hermitian_defect");
  double worst = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t i = j; i < a.rows(); ++i) worst = std::max(worst, std::abs(a(i, j) - std::conj(a(j, i))));
  }
  return worst;
}

QrFactors qr_decompose(const CMatrix& a, Backend backend) {
  require_square(a, "qr_decompose");
#ifdef FREECONV_HAVE_LAPACK
  if (resolve(backend) == Backend::Lapack) return lapack_qr(a);
#else
  resolve(backend);
#endif
  return native_qr(a);
}

std::vector<double> tridiagonal_eigenvalues(std::vector<double> d, std::vector<double> e) {
  const std::size_t n = d.size();
  e.resize(n, 0.0);
  if (n > 0) e[n - 1] = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m = l;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m == l) break;
      if (++iter > 60) {
        throw ConvergenceError("implicit QL did not converge for eigenvalue " + std::to_string(l));
      }
      // Wilkinson shift from the leading 2x2 block.
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool deflated = false;
      for (std::size_t i = m; i-- > l;) {
        const double f = s * e[i];
        const double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          deflated = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
      }
      if (deflated) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    } while (m != l);
  }
  std::sort(d.begin(), d.end(), std::greater<>());
  return d;
}

std::vector<double> eigvalsh(const CMatrix& h, Backend backend) {
  require_square(h, "eigvalsh");
  std::vector<double> w;
#ifdef FREECONV_HAVE_LAPACK
  if (resolve(backend) == Backend::Lapack) {
    w = lapack_eigvalsh(h);
    std::sort(w.begin(), w.end(), std::greater<>());
    return w;
  }
#else
  resolve(backend);
#endif
  std::vector<double> d, e;
  tridiagonalize(h, d, e);
  return tridiagonal_eigenvalues(std::move(d), std::move(e));
}

CMatrix lu_solve(CMatrix a, CMatrix b, double pivot_tolerance) {
  require_square(a, "lu_solve");
  const std::size_t n = a.rows();
  if (b.rows() != n) throw SizeError("lu_solve: right-hand side has the wrong number of rows");
  double scale = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, j)));
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > best) {
        best = std::abs(a(i, k));
        piv = i;
      }
    }
    if (!(best > pivot_tolerance * scale)) throw SingularError("matrix is numerically singular");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(piv, j));
    }
    const cplx inv = 1.0 / a(k, k);
    for (std::size_t i = k + 1; i < n; ++i) a(i, k) *= inv;
    for (std::size_t j = k + 1; j < n; ++j) {
      const cplx akj = a(k, j);
      if (akj == 0.0) continue;
      for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= a(i, k) * akj;
    }
    for (std::size_t j = 0; j < b.cols(); ++j) {
      const cplx bkj = b(k, j);
      if (bkj == 0.0) continue;
      for (std::size_t i = k + 1; i < n; ++i) b(i, j) -= a(i, k) * bkj;
    }
  }
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t k = n; k-- > 0;) {
      b(k, j) /= a(k, k);
      const cplx bk = b(k, j);
      for (std::size_t i = 0; i < k; ++i) b(i, j) -= a(i, k) * bk;
    }
  }
  return b;
}

cplx determinant(CMatrix a) {
  require_square(a, "determinant");
  const std::size_t n = a.rows();
  cplx det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    }
    if (a(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      det = -det;
    }
    det *= a(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const cplx f = a(i, k) / a(k, k);
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return det;
}

}  // namespace freeconv
