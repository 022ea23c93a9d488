#include <doctest.h>

#include <cmath>

#include "rbmc/linalg.hpp"
#include "rbmc/rng.hpp"

using namespace rbmc;
using linalg::Matrix;

namespace {

Matrix random_matrix(int r, int c, RngStream& rng) {
  Matrix m(r, c);
  for (auto& v : m.a) v = 2.0 * rng.u01() - 1.0;
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.a.size(); ++i) d = std::max(d, std::abs(a.a[i] - b.a[i]));
  return d;
}

double frob(const Matrix& a) {
  double s = 0.0;
  for (double v : a.a) s += v * v;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("pseudoinverse of identity and diagonal truncation") {
  Matrix i3 = Matrix::identity(3);
  CHECK(max_abs_diff(linalg::pseudoinverse(i3), i3) < 1e-14);

  Matrix d(2, 2);
  d.at(0, 0) = 1.0;  // [[1,0],[0,0]] is its own pseudoinverse
  CHECK(max_abs_diff(linalg::pseudoinverse(d), d) < 1e-14);
}

TEST_CASE("full-rank 3x7 satisfies A A+ A = A") {
  RngStream rng(5, "pinv-37");
  Matrix a = random_matrix(3, 7, rng);
  Matrix p = linalg::pseudoinverse(a);
  Matrix back = linalg::multiply(linalg::multiply(a, p), a);
  CHECK(max_abs_diff(back, a) / frob(a) < 1e-10);
}

TEST_CASE("Penrose identities on random shapes") {
  RngStream rng(17, "penrose");
  for (int trial = 0; trial < 60; ++trial) {
    const int r = 1 + static_cast<int>(rng.uniform_int(8));
    const int c = 1 + static_cast<int>(rng.uniform_int(24));
    Matrix a = random_matrix(r, c, rng);
    // occasionally force rank deficiency by duplicating a row
    if (r > 1 && trial % 3 == 0)
      for (int j = 0; j < c; ++j) a.at(r - 1, j) = a.at(0, j);
    const Matrix p = linalg::pseudoinverse(a);
    const Matrix ap = linalg::multiply(a, p);
    const Matrix pa = linalg::multiply(p, a);
    const double scale = std::max(1.0, frob(a));
    CHECK(max_abs_diff(linalg::multiply(ap, a), a) / scale < 1e-10);
    CHECK(max_abs_diff(linalg::multiply(pa, p), p) / std::max(1.0, frob(p)) < 1e-10);
    CHECK(max_abs_diff(ap, linalg::transpose(ap)) < 1e-10 * scale);
    CHECK(max_abs_diff(pa, linalg::transpose(pa)) < 1e-10 * scale);
  }
}

TEST_CASE("full row rank gives A A+ = I") {
  RngStream rng(23, "rowrank");
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 1 + static_cast<int>(rng.uniform_int(3));
    Matrix a = random_matrix(r, r + 5 + static_cast<int>(rng.uniform_int(20)), rng);
    const Matrix ap = linalg::multiply(a, linalg::pseudoinverse(a));
    CHECK(max_abs_diff(ap, Matrix::identity(r)) < 1e-10);
  }
}

TEST_CASE("norm, trace, eigenvalues") {
  Matrix d(2, 2);
  d.at(0, 0) = 2.0;
  d.at(1, 1) = -5.0;
  CHECK(linalg::operator_norm(d) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(linalg::trace(Matrix::identity(3)) == doctest::Approx(3.0));

  // smallest eigenvalue of [[2,1],[1,2]]: characteristic polynomial
  // (2-l)^2 = 1 gives l = 1 and 3
  Matrix s(2, 2);
  s.at(0, 0) = s.at(1, 1) = 2.0;
  s.at(0, 1) = s.at(1, 0) = 1.0;
  CHECK(linalg::min_quadratic_form(s) == doctest::Approx(1.0).epsilon(1e-12));
  const auto ev = linalg::sym_eigenvalues(s);
  CHECK(ev.back() == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("error paths") {
  Matrix a(2, 2);
  a.at(0, 1) = 1.0;  // asymmetric
  CHECK_THROWS(linalg::min_quadratic_form(a));
  Matrix bad(1, 1);
  bad.at(0, 0) = std::nan("");
  CHECK_THROWS(linalg::pseudoinverse(bad));
  CHECK_THROWS(linalg::pseudoinverse(Matrix::identity(2), 2.0));  // rank_tol outside (0,1)
  CHECK_THROWS(linalg::trace(Matrix(2, 3)));
}
