#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace freeconv {

using cplx = std::complex<double>;

/// Dense column-major complex matrix.
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static CMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  cplx& operator()(std::size_t i, std::size_t j) noexcept { return data_[j * rows_ + i]; }
  const cplx& operator()(std::size_t i, std::size_t j) const noexcept { return data_[j * rows_ + i]; }
  cplx* data() noexcept { return data_.data(); }
  const cplx* data() const noexcept { return data_.data(); }

  CMatrix adjoint() const;
  bool operator==(const CMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

enum class Backend {
  Default,  // LAPACK when compiled in, else Native
  Native,
  Lapack,
};

bool lapack_available() noexcept;
Backend resolve(Backend b);

CMatrix multiply(const CMatrix& a, const CMatrix& b, Backend backend = Backend::Default);
/// a^* b.
CMatrix multiply_adjoint(const CMatrix& a, const CMatrix& b, Backend backend = Backend::Default);

/// max_ij |a_ij - conj(a_ji)|.
double hermitian_defect(const CMatrix& a);

struct QrFactors {
  CMatrix q;
  std::vector<cplx> r_diagonal;
};

/// Householder QR of a square matrix: explicit Q and the diagonal of R.
QrFactors qr_decompose(const CMatrix& a, Backend backend = Backend::Default);

/// Eigenvalues of a Hermitian matrix (lower triangle is read), sorted nonincreasing.
/// Native path: Householder tridiagonalisation, then implicit QL with
/// Wilkinson shifts. Throws ConvergenceError when QL exceeds its budget.
std::vector<double> eigvalsh(const CMatrix& h, Backend backend = Backend::Default);

/// Eigenvalues of the symmetric tridiagonal matrix (d, e), e[i] coupling i and i+1.
std::vector<double> tridiagonal_eigenvalues(std::vector<double> d, std::vector<double> e);

/// Solves a x = b (b has any number of columns) by LU with partial pivoting.
/// Throws SingularError when a pivot falls below `pivot_tolerance` * max|a|.
CMatrix lu_solve(CMatrix a, CMatrix b, double pivot_tolerance = 1e-14);

/// Determinant by LU with partial pivoting (0 for exactly singular input).
cplx determinant(CMatrix a);

}  // namespace freeconv
