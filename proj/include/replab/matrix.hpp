#ifndef REPLAB_MATRIX_HPP
#define REPLAB_MATRIX_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "replab/rng.hpp"

namespace replab {

using Vec = std::vector<double>;

// Dense row-major matrix. Minimal surface: the project only needs
// matrix-vector products, rank-1 accumulation and a couple of small solves.
struct Matrix {
  int rows = 0;
  int cols = 0;
  Vec data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  static Matrix zeros(int r, int c) { return Matrix(r, c); }

  static Matrix seeded_gaussian(int r, int c, double scale, Rng& rng) {
    Matrix m(r, c);
    for (auto& x : m.data) x = scale * rng.normal();
    return m;
  }

  bool finite() const {
    for (double x : data)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vec scaled(const Vec& x, double alpha) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = alpha * x[i];
  return y;
}

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// y = M x  (length rows)
inline Vec matvec(const Matrix& m, const Vec& x) {
  if (static_cast<int>(x.size()) != m.cols) throw std::invalid_argument("matvec: size mismatch");
  Vec y(m.rows, 0.0);
  for (int i = 0; i < m.rows; ++i) {
    double s = 0.0;
    const double* row = m.data.data() + static_cast<std::size_t>(i) * m.cols;
    for (int j = 0; j < m.cols; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

// y = M^T x  (length cols)
inline Vec matvec_t(const Matrix& m, const Vec& x) {
  if (static_cast<int>(x.size()) != m.rows) throw std::invalid_argument("matvec_t: size mismatch");
  Vec y(m.cols, 0.0);
  for (int i = 0; i < m.rows; ++i) {
    const double xi = x[i];
    const double* row = m.data.data() + static_cast<std::size_t>(i) * m.cols;
    for (int j = 0; j < m.cols; ++j) y[j] += row[j] * xi;
  }
  return y;
}

// Cosine similarity; callers are responsible for zero-norm handling.
inline double cosine(const Vec& a, const Vec& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine: zero-norm input");
  return dot(a, b) / (na * nb);
}

// Random matrix with orthonormal rows (rows <= cols), drawn from seeded
// Gaussians and orthonormalized with modified Gram-Schmidt.
inline Matrix orthonormal_rows(int rows, int cols, Rng& rng) {
  if (rows > cols) throw std::invalid_argument("orthonormal_rows: rows > cols");
  Matrix m = Matrix::seeded_gaussian(rows, cols, 1.0, rng);
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < i; ++k) {
      double proj = 0.0;
      for (int j = 0; j < cols; ++j) proj += m.at(i, j) * m.at(k, j);
      for (int j = 0; j < cols; ++j) m.at(i, j) -= proj * m.at(k, j);
    }
    double n = 0.0;
    for (int j = 0; j < cols; ++j) n += m.at(i, j) * m.at(i, j);
    n = std::sqrt(n);
    if (n < 1e-12) throw std::runtime_error("orthonormal_rows: degenerate draw");
    for (int j = 0; j < cols; ++j) m.at(i, j) /= n;
  }
  return m;
}

// Solve A x = b for symmetric positive definite A (in-place Cholesky).
// Only used for small systems.
inline Vec cholesky_solve_spd(Matrix a, Vec b) {
  const int n = a.rows;
  if (a.cols != n || static_cast<int>(b.size()) != n)
    throw std::invalid_argument("cholesky_solve_spd: shape mismatch");
  for (int j = 0; j < n; ++j) {
    double d = a.at(j, j);
    for (int k = 0; k < j; ++k) d -= a.at(j, k) * a.at(j, k);
    if (d <= 0.0) throw std::runtime_error("cholesky_solve_spd: matrix not positive definite");
    const double l = std::sqrt(d);
    a.at(j, j) = l;
    for (int i = j + 1; i < n; ++i) {
      double s = a.at(i, j);
      for (int k = 0; k < j; ++k) s -= a.at(i, k) * a.at(j, k);
      a.at(i, j) = s / l;
    }
  }
  for (int i = 0; i < n; ++i) {  // forward: L y = b
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= a.at(i, k) * b[k];
    b[i] = s / a.at(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {  // backward: L^T x = y
    double s = b[i];
    for (int k = i + 1; k < n; ++k) s -= a.at(k, i) * b[k];
    b[i] = s / a.at(i, i);
  }
  return b;
}

// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations.
// Sufficient for the small kernel matrices this project builds.
inline Vec symmetric_eigenvalues(Matrix a) {
  const int n = a.rows;
  if (a.cols != n) throw std::invalid_argument("symmetric_eigenvalues: not square");
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a.at(i, j) * a.at(i, j);
    if (off < 1e-24) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a.at(k, p);
          const double akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a.at(p, k);
          const double aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  Vec ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a.at(i, i);
  return ev;
}

}  // namespace replab

#endif  // REPLAB_MATRIX_HPP
