#pragma once

// Reference computations used as independent oracles by the tests. They are
// deliberately naive (textbook formulas, brute force) and share no code with
// the library beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "momlab/linalg.hpp"

namespace oracle {

using momlab::Mat2;
using momlab::Matrix;

inline Mat2 mul(const Mat2& x, const Mat2& y) {
  return {x.a11 * y.a11 + x.a12 * y.a21, x.a11 * y.a12 + x.a12 * y.a22,
          x.a21 * y.a11 + x.a22 * y.a21, x.a21 * y.a12 + x.a22 * y.a22};
}

inline Mat2 pow(const Mat2& m, unsigned k) {
  Mat2 out{1.0, 0.0, 0.0, 1.0};
  for (unsigned i = 0; i < k; ++i) out = mul(out, m);
  return out;
}

inline double max_entry_gap(const Mat2& x, const Mat2& y) {
  return std::max({std::abs(x.a11 - y.a11), std::abs(x.a12 - y.a12), std::abs(x.a21 - y.a21),
                   std::abs(x.a22 - y.a22)});
}

inline double max_entry(const Mat2& x) {
  return std::max({std::abs(x.a11), std::abs(x.a12), std::abs(x.a21), std::abs(x.a22)});
}

// Roots of xi^2 - tr xi + det via the schoolbook formula in complex arithmetic.
inline double spectral_radius(const Mat2& m) {
  const std::complex<double> tr = m.a11 + m.a22;
  const std::complex<double> det = m.a11 * m.a22 - m.a12 * m.a21;
  const std::complex<double> s = std::sqrt(tr * tr - 4.0 * det);
  return std::max(std::abs((tr + s) / 2.0), std::abs((tr - s) / 2.0));
}

// Largest singular value by power iteration on M^T M.
inline double spectral_norm(const Mat2& m, int iters = 2000) {
  const Mat2 g{m.a11 * m.a11 + m.a21 * m.a21, m.a11 * m.a12 + m.a21 * m.a22,
               m.a12 * m.a11 + m.a22 * m.a21, m.a12 * m.a12 + m.a22 * m.a22};
  double x = 0.6, y = 0.8;
  double lambda = 0.0;
  for (int i = 0; i < iters; ++i) {
    const double nx = g.a11 * x + g.a12 * y;
    const double ny = g.a21 * x + g.a22 * y;
    const double n = std::hypot(nx, ny);
    if (n == 0.0) return 0.0;
    lambda = n;
    x = nx / n;
    y = ny / n;
  }
  return std::sqrt(lambda);
}

inline Mat2 b_matrix(double lambda, double alpha, double beta) {
  return {1.0 - alpha * (1.0 + beta) * lambda, beta * beta, -alpha * lambda, beta};
}

// Determinant by Gaussian elimination with partial pivoting.
inline double determinant(Matrix a) {
  const std::size_t n = a.rows();
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    if (a(piv, c) == 0.0) return 0.0;
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
      det = -det;
    }
    det *= a(c, c);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      for (std::size_t j = c; j < n; ++j) a(r, j) -= f * a(c, j);
    }
  }
  return det;
}

inline Matrix matmul(const Matrix& x, const Matrix& y) {
  Matrix out(x.rows(), y.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t k = 0; k < x.cols(); ++k)
      for (std::size_t j = 0; j < y.cols(); ++j) out(i, j) += x(i, k) * y(k, j);
  return out;
}

inline Matrix transpose(const Matrix& x) {
  Matrix out(x.cols(), x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(j, i) = x(i, j);
  return out;
}

// Ordinary least-squares slope of log(v) against the index.
inline double log_slope(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = static_cast<double>(i);
    const double y = std::log(v[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Random symmetric matrix U diag(eigs) U^T with U from Gram-Schmidt on a
// Gaussian matrix supplied by the caller.
inline Matrix with_spectrum(const Matrix& gaussian, const std::vector<double>& eigs) {
  const std::size_t d = eigs.size();
  Matrix u = gaussian;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t p = 0; p < j; ++p) {
      double proj = 0.0;
      for (std::size_t i = 0; i < d; ++i) proj += u(i, j) * u(i, p);
      for (std::size_t i = 0; i < d; ++i) u(i, j) -= proj * u(i, p);
    }
    double n = 0.0;
    for (std::size_t i = 0; i < d; ++i) n += u(i, j) * u(i, j);
    n = std::sqrt(n);
    for (std::size_t i = 0; i < d; ++i) u(i, j) /= n;
  }
  Matrix out(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += u(i, k) * eigs[k] * u(j, k);
      out(i, j) = s;
    }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) out(j, i) = out(i, j);
  return out;
}

}  // namespace oracle
