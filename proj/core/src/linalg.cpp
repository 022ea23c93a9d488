#include "rbmc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rbmc::linalg {

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) t.at(j, i) = m.at(i, j);
  return t;
}

Matrix multiply(const Matrix& x, const Matrix& y) {
  if (x.cols != y.rows) throw std::invalid_argument("multiply: shape mismatch");
  Matrix r(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      const double xv = x.at(i, k);
      if (xv == 0.0) continue;
      for (int j = 0; j < y.cols; ++j) r.at(i, j) += xv * y.at(k, j);
    }
  return r;
}

namespace {

bool all_finite(const Matrix& m) {
  for (double v : m.a)
    if (!std::isfinite(v)) return false;
  return true;
}

// One-sided Jacobi on a tall matrix (rows >= cols): orthogonalize column
// pairs until A^T A is numerically diagonal. Returns column norms as sigma
// and the accumulated right rotations as v.
Svd svd_tall(Matrix a) {
  const int n = a.cols;
  const int mrows = a.rows;
  Matrix v = Matrix::identity(n);

  const double eps = 1e-15;
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < mrows; ++i) {
          const double xp = a.at(i, p), xq = a.at(i, q);
          app += xp * xp;
          aqq += xq * xq;
          apq += xp * xq;
        }
        if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < mrows; ++i) {
          const double xp = a.at(i, p), xq = a.at(i, q);
          a.at(i, p) = c * xp - s * xq;
          a.at(i, q) = s * xp + c * xq;
        }
        for (int i = 0; i < n; ++i) {
          const double vp = v.at(i, p), vq = v.at(i, q);
          v.at(i, p) = c * vp - s * vq;
          v.at(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double s2 = 0.0;
    for (int i = 0; i < mrows; ++i) s2 += a.at(i, j) * a.at(i, j);
    sigma[j] = std::sqrt(s2);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return sigma[x] > sigma[y]; });

  Svd out;
  out.u = Matrix(mrows, n);
  out.v = Matrix(n, n);
  out.sigma.resize(n);
  for (int jj = 0; jj < n; ++jj) {
    const int j = order[jj];
    out.sigma[jj] = sigma[j];
    const double inv = sigma[j] > 0.0 ? 1.0 / sigma[j] : 0.0;
    for (int i = 0; i < mrows; ++i) out.u.at(i, jj) = a.at(i, j) * inv;
    for (int i = 0; i < n; ++i) out.v.at(i, jj) = v.at(i, j);
  }
  return out;
}

}  // namespace

Svd svd(const Matrix& m) {
  if (!all_finite(m)) throw std::invalid_argument("svd: non-finite input");
  if (m.rows >= m.cols) return svd_tall(m);
  Svd t = svd_tall(transpose(m));
  return Svd{std::move(t.v), std::move(t.sigma), std::move(t.u)};
}

Matrix pseudoinverse(const Matrix& m, double rank_tol) {
  if (!(rank_tol > 0.0 && rank_tol < 1.0))
    throw std::invalid_argument("pseudoinverse: rank_tol must be in (0,1)");
  if (!all_finite(m)) throw std::invalid_argument("pseudoinverse: non-finite input");
  const Svd s = svd(m);
  const double cutoff = s.sigma.empty() ? 0.0 : rank_tol * s.sigma[0];
  const int k = static_cast<int>(s.sigma.size());
  // pinv = v * diag(1/sigma) * u^T
  Matrix r(m.cols, m.rows);
  for (int j = 0; j < k; ++j) {
    if (s.sigma[j] <= cutoff || s.sigma[j] == 0.0) continue;
    const double inv = 1.0 / s.sigma[j];
    for (int i = 0; i < m.cols; ++i) {
      const double vij = s.v.at(i, j) * inv;
      if (vij == 0.0) continue;
      for (int l = 0; l < m.rows; ++l) r.at(i, l) += vij * s.u.at(l, j);
    }
  }
  return r;
}

int rank(const Matrix& m, double rank_tol) {
  const Svd s = svd(m);
  if (s.sigma.empty() || s.sigma[0] == 0.0) return 0;
  const double cutoff = rank_tol * s.sigma[0];
  int r = 0;
  for (double sv : s.sigma)
    if (sv > cutoff) ++r;
  return r;
}

double operator_norm(const Matrix& m) {
  const Svd s = svd(m);
  return s.sigma.empty() ? 0.0 : s.sigma[0];
}

double trace(const Matrix& m) {
  if (m.rows != m.cols) throw std::invalid_argument("trace: square matrix required");
  double t = 0.0;
  for (int i = 0; i < m.rows; ++i) t += m.at(i, i);
  return t;
}

std::vector<double> sym_eigenvalues(const Matrix& m) {
  if (m.rows != m.cols) throw std::invalid_argument("sym_eigenvalues: square matrix required");
  if (!all_finite(m)) throw std::invalid_argument("sym_eigenvalues: non-finite input");
  double scale = 0.0;
  for (double v : m.a) scale = std::max(scale, std::abs(v));
  for (int i = 0; i < m.rows; ++i)
    for (int j = i + 1; j < m.cols; ++j)
      if (std::abs(m.at(i, j) - m.at(j, i)) > 1e-10 * std::max(1.0, scale))
        throw std::invalid_argument("sym_eigenvalues: asymmetric input");

  // classical cyclic Jacobi
  Matrix a = m;
  const int n = a.rows;
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a.at(i, j) * a.at(i, j);
    if (off <= 1e-30 * std::max(1.0, scale * scale)) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (apq == 0.0) continue;
        const double zeta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < n; ++i) {
          const double aip = a.at(i, p), aiq = a.at(i, q);
          a.at(i, p) = c * aip - s * aiq;
          a.at(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = a.at(p, i), aqi = a.at(q, i);
          a.at(p, i) = c * api - s * aqi;
          a.at(q, i) = s * api + c * aqi;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a.at(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

double min_quadratic_form(const Matrix& m) { return sym_eigenvalues(m).front(); }

}  // namespace rbmc::linalg
