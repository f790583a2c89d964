#pragma once

// Small dense linear algebra: vectors, row-major matrices, a cyclic Jacobi
// eigensolver for symmetric matrices, and closed-form 2x2 spectral tools.

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace momlab {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);
// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
Vector subtract(std::span<const double> a, std::span<const double> b);

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transpose() const;
  Vector apply(std::span<const double> x) const;
  double max_abs() const;

  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend Matrix operator-(const Matrix& a, const Matrix& b);
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Symmetric matrix. Construction rejects any entry pair that is not
/// exactly equal across the diagonal.
class SymMatrix {
 public:
  explicit SymMatrix(Matrix entries);

  static SymMatrix identity(std::size_t n);
  static SymMatrix diagonal(std::span<const double> diag);
  // Builds from the upper triangle of `m`, mirroring it to the lower half.
  static SymMatrix from_upper(const Matrix& m);

  std::size_t dim() const noexcept { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }

  Vector apply(std::span<const double> x) const;
  // y = H x without allocating. Sparse matrices (at most a quarter of the
  // entries nonzero) skip their zeros.
  void apply_into(std::span<const double> x, std::span<double> y) const;
  double trace() const;
  double frobenius() const;

  friend bool operator==(const SymMatrix& a, const SymMatrix& b) { return a.m_ == b.m_; }

 private:
  Matrix m_;
  // Compressed rows of the nonzero entries; empty when the matrix is dense.
  std::vector<std::size_t> row_start_;
  std::vector<std::size_t> cols_;
  std::vector<double> vals_;
};

struct EigenDecomp {
  Vector eigenvalues;  // ascending
  Matrix eigenvectors; // column j pairs with eigenvalues[j]
};

inline constexpr int kJacobiMaxSweeps = 100;

/// Cyclic Jacobi eigendecomposition. Sweeps until the off-diagonal Frobenius
/// mass drops below `tol`; `tol <= 0` selects 1e-12 * ||H||_F.
/// Throws ConvergenceError after kJacobiMaxSweeps sweeps.
EigenDecomp sym_eigen(const SymMatrix& h, double tol = 0.0);

/// Solves H x = b for symmetric positive definite H by Cholesky.
Vector solve_spd(const SymMatrix& h, std::span<const double> b);

/// Orthonormalizes the columns of `a` in place (modified Gram-Schmidt).
/// Requires rows >= cols and full column rank.
void orthonormalize_columns(Matrix& a);

/// 2x2 real matrix [[a11, a12], [a21, a22]].
struct Mat2 {
  double a11 = 0.0;
  double a12 = 0.0;
  double a21 = 0.0;
  double a22 = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

  double trace() const { return a11 + a22; }
  double det() const { return a11 * a22 - a12 * a21; }
  double max_abs_entry() const;
  bool finite() const;

  friend Mat2 operator*(const Mat2& x, const Mat2& y);
  friend Mat2 operator*(double s, const Mat2& m);
  friend Mat2 operator-(const Mat2& x, const Mat2& y);
  friend bool operator==(const Mat2&, const Mat2&) = default;
};

Mat2 power(const Mat2& m, unsigned k);

/// Both roots of xi^2 - tr(M) xi + det(M). Real roots come back with the
/// larger-magnitude root first.
std::pair<std::complex<double>, std::complex<double>> eig2(const Mat2& m);

double spectral_radius2(const Mat2& m);

/// Largest singular value, from the closed-form top eigenvalue of M^T M.
double spectral_norm2(const Mat2& m);

/// Permutation on {0, ..., 2d-1} that interleaves the two d-blocks of a
/// 2x2-block matrix with diagonal blocks: conjugation maps
/// [[diag(a), diag(b)], [diag(c), diag(d)]] to blockdiag([[a_j, b_j], [c_j, d_j]]).
class Permutation {
 public:
  explicit Permutation(std::vector<std::size_t> mapping);

  std::size_t size() const noexcept { return map_.size(); }
  // Row i of P has its single 1 in column operator[](i).
  std::size_t operator[](std::size_t i) const { return map_[i]; }
  const std::vector<std::size_t>& mapping() const noexcept { return map_; }

  Permutation inverse() const;
  Permutation compose(const Permutation& other) const;  // (this o other)
  bool is_identity() const;

  Matrix as_matrix() const;
  // Returns P M P^T.
  Matrix conjugate(const Matrix& m) const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> map_;
};

Permutation build_permutation(std::size_t d);

/// The 2d x 2d state-transition matrix
/// [[I - alpha (1 + beta) H, beta^2 I], [-alpha H, beta I]].
Matrix transition_matrix(const SymMatrix& h, double alpha, double beta);

/// Returns [B(lambda_1), ..., B(lambda_d)] over the eigenvalues of H
/// (ascending), with B(lambda) = [[1 - alpha (1 + beta) lambda, beta^2],
/// [-alpha lambda, beta]].
std::vector<Mat2> block_diagonalize(const SymMatrix& h, double alpha, double beta);

std::vector<Mat2> block_diagonalize(const EigenDecomp& eig, double alpha, double beta);

/// B(lambda) for the given step-size and momentum.
Mat2 transition_block(double lambda, double alpha, double beta);

}  // namespace momlab
