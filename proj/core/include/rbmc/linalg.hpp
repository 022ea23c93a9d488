#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rbmc::linalg {

// Row-major dense matrix. Everything downstream is tiny (d <= 3 rows for
// correctors, a few hundred columns at most), so no factorization library is
// pulled in; the SVD below is a one-sided Jacobi.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {
    if (r < 1 || c < 1) throw std::invalid_argument("Matrix: rows, cols must be >= 1");
  }

  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  static Matrix identity(int n);
};

Matrix transpose(const Matrix& m);
Matrix multiply(const Matrix& x, const Matrix& y);

// Thin SVD, a = u * diag(sigma) * v^T with sigma sorted descending.
// u is rows x k, v is cols x k, k = min(rows, cols).
struct Svd {
  Matrix u;
  std::vector<double> sigma;
  Matrix v;
};

Svd svd(const Matrix& m);

// Moore-Penrose inverse; singular values below rank_tol * sigma_max are
// treated as zero. Throws on non-finite input or rank_tol outside (0,1).
Matrix pseudoinverse(const Matrix& m, double rank_tol = 1e-12);

// Numerical rank at the same relative cutoff.
int rank(const Matrix& m, double rank_tol = 1e-12);

double operator_norm(const Matrix& m);  // largest singular value
double trace(const Matrix& m);

// Eigenvalues of a symmetric matrix, ascending. Input must be symmetric
// within 1e-10 relative; otherwise throws.
std::vector<double> sym_eigenvalues(const Matrix& m);

// Smallest eigenvalue of a symmetric matrix.
double min_quadratic_form(const Matrix& m);

}  // namespace rbmc::linalg
