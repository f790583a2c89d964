#include "momlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "momlab/error.hpp"

namespace momlab {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": size " + std::to_string(a) +
                            " vs " + std::to_string(b));
  }
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  require_same_size(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "subtract");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Vector Matrix::apply(std::span<const double> x) const {
  require_same_size(cols_, x.size(), "Matrix::apply");
  Vector y(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* r = data_.data() + i * cols_;
    double s = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

double Matrix::max_abs() const { return norm_inf(data_); }

Matrix operator*(const Matrix& a, const Matrix& b) {
  require_same_size(a.cols_, b.rows_, "Matrix product");
  Matrix c(a.rows_, b.cols_);
  for (std::size_t i = 0; i < a.rows_; ++i)
    for (std::size_t k = 0; k < a.cols_; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_size(a.rows_, b.rows_, "Matrix difference");
  require_same_size(a.cols_, b.cols_, "Matrix difference");
  Matrix c(a.rows_, a.cols_);
  for (std::size_t i = 0; i < a.data_.size(); ++i) c.data_[i] = a.data_[i] - b.data_[i];
  return c;
}

// ---------------------------------------------------------------------------
// SymMatrix

SymMatrix::SymMatrix(Matrix entries) : m_(std::move(entries)) {
  if (m_.rows() == 0) throw PreconditionError("SymMatrix: dimension must be >= 1");
  if (m_.rows() != m_.cols()) throw DimensionMismatch("SymMatrix: matrix is not square");
  for (std::size_t i = 0; i < m_.rows(); ++i)
    for (std::size_t j = i + 1; j < m_.cols(); ++j)
      if (m_(i, j) != m_(j, i))
        throw PreconditionError("SymMatrix: entries (" + std::to_string(i) + "," +
                                std::to_string(j) + ") not symmetric");

  const std::size_t n = m_.rows();
  const auto data = m_.data();
  const auto nnz = static_cast<std::size_t>(
      std::count_if(data.begin(), data.end(), [](double v) { return v != 0.0; }));
  if (4 * nnz > n * n) return;
  row_start_.reserve(n + 1);
  cols_.reserve(nnz);
  vals_.reserve(nnz);
  for (std::size_t i = 0; i < n; ++i) {
    row_start_.push_back(cols_.size());
    for (std::size_t j = 0; j < n; ++j)
      if (m_(i, j) != 0.0) {
        cols_.push_back(j);
        vals_.push_back(m_(i, j));
      }
  }
  row_start_.push_back(cols_.size());
}

Vector SymMatrix::apply(std::span<const double> x) const {
  Vector y(dim());
  apply_into(x, y);
  return y;
}

SymMatrix SymMatrix::identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return SymMatrix(std::move(m));
}

SymMatrix SymMatrix::from_upper(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("SymMatrix::from_upper: not square");
  Matrix s = m;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) s(j, i) = s(i, j);
  return SymMatrix(std::move(s));
}

void SymMatrix::apply_into(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = dim();
  require_same_size(n, x.size(), "SymMatrix::apply_into");
  require_same_size(n, y.size(), "SymMatrix::apply_into");
  if (!row_start_.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t e = row_start_[i]; e < row_start_[i + 1]; ++e) s += vals_[e] * x[cols_[e]];
      y[i] = s;
    }
    return;
  }
  const auto data = m_.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = data.data() + i * n;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += r[j] * x[j];
    y[i] = s;
  }
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) t += m_(i, i);
  return t;
}

double SymMatrix::frobenius() const { return norm2(m_.data()); }

// ---------------------------------------------------------------------------
// Jacobi

namespace {

double off_diagonal_mass(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

EigenDecomp sym_eigen(const SymMatrix& h, double tol) {
  const std::size_t n = h.dim();
  if (!(tol > 0.0)) tol = 1e-12 * h.frobenius();

  Matrix a = h.matrix();
  Matrix v = Matrix::identity(n);

  bool converged = false;
  for (int sweep = 0; sweep <= kJacobiMaxSweeps; ++sweep) {
    if (off_diagonal_mass(a) <= tol) {
      converged = true;
      break;
    }
    if (sweep == kJacobiMaxSweeps) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          const double new_rp = c * arp - s * arq;
          const double new_rq = s * arp + c * arq;
          a(r, p) = a(p, r) = new_rp;
          a(r, q) = a(q, r) = new_rq;
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;

        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }
  if (!converged) {
    throw ConvergenceError("sym_eigen: no convergence after " +
                           std::to_string(kJacobiMaxSweeps) + " sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  EigenDecomp out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = v(r, order[k]);
  }
  return out;
}

Vector solve_spd(const SymMatrix& h, std::span<const double> b) {
  const std::size_t n = h.dim();
  require_same_size(n, b.size(), "solve_spd");
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = h(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw PreconditionError("solve_spd: matrix is not positive definite");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = h(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  Vector y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= l(i, k) * y[k];
    y[i] /= l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) y[ii] -= l(k, ii) * y[k];
    y[ii] /= l(ii, ii);
  }
  return y;
}

void orthonormalize_columns(Matrix& a) {
  if (a.rows() < a.cols())
    throw PreconditionError("orthonormalize_columns: need rows >= cols");
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double proj = 0.0;
      for (std::size_t i = 0; i < a.rows(); ++i) proj += a(i, k) * a(i, j);
      for (std::size_t i = 0; i < a.rows(); ++i) a(i, j) -= proj * a(i, k);
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) nrm += a(i, j) * a(i, j);
    nrm = std::sqrt(nrm);
    if (!(nrm > 0.0)) throw PreconditionError("orthonormalize_columns: rank deficient");
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, j) /= nrm;
  }
}

// ---------------------------------------------------------------------------
// 2x2

double Mat2::max_abs_entry() const {
  return std::max({std::abs(a11), std::abs(a12), std::abs(a21), std::abs(a22)});
}

bool Mat2::finite() const {
  return std::isfinite(a11) && std::isfinite(a12) && std::isfinite(a21) &&
         std::isfinite(a22);
}

Mat2 operator*(const Mat2& x, const Mat2& y) {
  return {x.a11 * y.a11 + x.a12 * y.a21, x.a11 * y.a12 + x.a12 * y.a22,
          x.a21 * y.a11 + x.a22 * y.a21, x.a21 * y.a12 + x.a22 * y.a22};
}

Mat2 operator*(double s, const Mat2& m) {
  return {s * m.a11, s * m.a12, s * m.a21, s * m.a22};
}

Mat2 operator-(const Mat2& x, const Mat2& y) {
  return {x.a11 - y.a11, x.a12 - y.a12, x.a21 - y.a21, x.a22 - y.a22};
}

Mat2 power(const Mat2& m, unsigned k) {
  Mat2 out = Mat2::identity();
  for (unsigned i = 0; i < k; ++i) out = out * m;
  return out;
}

std::pair<std::complex<double>, std::complex<double>> eig2(const Mat2& m) {
  const double t = m.trace();
  const double d = m.det();
  double disc = t * t - 4.0 * d;
  // A discriminant inside the rounding noise of tr^2 and 4 det is a double root.
  const double diag_mag = std::abs(m.a11) + std::abs(m.a22);
  const double scale = diag_mag * diag_mag +
                       4.0 * (std::abs(m.a11 * m.a22) + std::abs(m.a12 * m.a21));
  if (std::abs(disc) <= 8.0 * std::numeric_limits<double>::epsilon() * scale) disc = 0.0;

  if (disc == 0.0) return {{0.5 * t, 0.0}, {0.5 * t, 0.0}};
  if (disc > 0.0) {
    const double sq = std::sqrt(disc);
    const double big = t >= 0.0 ? 0.5 * (t + sq) : 0.5 * (t - sq);
    const double small = big != 0.0 ? d / big : 0.0;
    return {{big, 0.0}, {small, 0.0}};
  }
  const double im = 0.5 * std::sqrt(-disc);
  return {{0.5 * t, im}, {0.5 * t, -im}};
}

double spectral_radius2(const Mat2& m) {
  const auto [r1, r2] = eig2(m);
  return std::max(std::abs(r1), std::abs(r2));
}

double spectral_norm2(const Mat2& m) {
  const double g11 = m.a11 * m.a11 + m.a21 * m.a21;
  const double g22 = m.a12 * m.a12 + m.a22 * m.a22;
  const double g12 = m.a11 * m.a12 + m.a21 * m.a22;
  const double half_diff = 0.5 * (g11 - g22);
  const double top = 0.5 * (g11 + g22) + std::sqrt(half_diff * half_diff + g12 * g12);
  return std::sqrt(top);
}

// ---------------------------------------------------------------------------
// Permutation

Permutation::Permutation(std::vector<std::size_t> mapping) : map_(std::move(mapping)) {
  std::vector<bool> seen(map_.size(), false);
  for (std::size_t target : map_) {
    if (target >= map_.size() || seen[target])
      throw PreconditionError("Permutation: mapping is not a bijection");
    seen[target] = true;
  }
}

Permutation Permutation::inverse() const {
  std::vector<std::size_t> inv(map_.size());
  for (std::size_t i = 0; i < map_.size(); ++i) inv[map_[i]] = i;
  return Permutation(std::move(inv));
}

Permutation Permutation::compose(const Permutation& other) const {
  require_same_size(size(), other.size(), "Permutation::compose");
  std::vector<std::size_t> out(map_.size());
  for (std::size_t i = 0; i < map_.size(); ++i) out[i] = other.map_[map_[i]];
  return Permutation(std::move(out));
}

bool Permutation::is_identity() const {
  for (std::size_t i = 0; i < map_.size(); ++i)
    if (map_[i] != i) return false;
  return true;
}

Matrix Permutation::as_matrix() const {
  Matrix p(size(), size());
  for (std::size_t i = 0; i < size(); ++i) p(i, map_[i]) = 1.0;
  return p;
}

Matrix Permutation::conjugate(const Matrix& m) const {
  require_same_size(m.rows(), size(), "Permutation::conjugate");
  require_same_size(m.cols(), size(), "Permutation::conjugate");
  Matrix out(size(), size());
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < size(); ++j) out(i, j) = m(map_[i], map_[j]);
  return out;
}

Permutation build_permutation(std::size_t d) {
  if (d == 0) throw PreconditionError("build_permutation: d must be >= 1");
  // Row i (0-based) takes r-block entry i/2 when i is even, v-block entry
  // d + i/2 when i is odd.
  std::vector<std::size_t> map(2 * d);
  for (std::size_t i = 0; i < 2 * d; ++i) map[i] = (i % 2 == 0) ? i / 2 : d + i / 2;
  return Permutation(std::move(map));
}

// ---------------------------------------------------------------------------
// Transition matrix

Mat2 transition_block(double lambda, double alpha, double beta) {
  return {1.0 - alpha * (1.0 + beta) * lambda, beta * beta, -alpha * lambda, beta};
}

Matrix transition_matrix(const SymMatrix& h, double alpha, double beta) {
  const std::size_t d = h.dim();
  Matrix a(2 * d, 2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      a(i, j) = (i == j ? 1.0 : 0.0) - alpha * (1.0 + beta) * h(i, j);
      a(d + i, j) = -alpha * h(i, j);
    }
    a(i, d + i) = beta * beta;
    a(d + i, d + i) = beta;
  }
  return a;
}

std::vector<Mat2> block_diagonalize(const EigenDecomp& eig, double alpha, double beta) {
  std::vector<Mat2> blocks;
  blocks.reserve(eig.eigenvalues.size());
  for (double lambda : eig.eigenvalues)
    blocks.push_back(transition_block(lambda, alpha, beta));
  return blocks;
}

std::vector<Mat2> block_diagonalize(const SymMatrix& h, double alpha, double beta) {
  return block_diagonalize(sym_eigen(h), alpha, beta);
}

}  // namespace momlab
