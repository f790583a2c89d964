#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "momlab/error.hpp"
#include "momlab/linalg.hpp"
#include "momlab/rng.hpp"
#include "oracles.hpp"

using namespace momlab;

namespace {

Matrix gaussian_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

SymMatrix random_spd(Rng& rng, std::size_t d, double mu, double L) {
  std::vector<double> eigs(d);
  for (std::size_t i = 0; i < d; ++i) eigs[i] = mu + (L - mu) * rng.uniform();
  eigs.front() = mu;
  eigs.back() = L;
  return SymMatrix(oracle::with_spectrum(gaussian_matrix(rng, d, d), eigs));
}

Mat2 random_mat2(Rng& rng) {
  return {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
}

}  // namespace

TEST(VectorOps, BasicIdentities) {
  const Vector a{1.0, -2.0, 2.0};
  const Vector b{0.5, 0.5, 0.5};
  EXPECT_DOUBLE_EQ(dot(a, b), 0.5);
  EXPECT_DOUBLE_EQ(norm2(a), 3.0);
  EXPECT_DOUBLE_EQ(norm_inf(a), 2.0);
  Vector y = b;
  axpy(2.0, a, y);
  EXPECT_EQ(y, (Vector{2.5, -3.5, 4.5}));
  EXPECT_EQ(subtract(a, b), (Vector{0.5, -2.5, 1.5}));
  EXPECT_THROW(dot(a, Vector{1.0}), DimensionMismatch);
}

TEST(SymMatrix, RejectsAsymmetricInput) {
  Matrix m(2, 2);
  m(0, 1) = 1.0;
  EXPECT_THROW(SymMatrix{m}, PreconditionError);
  EXPECT_THROW(SymMatrix{Matrix(2, 3)}, DimensionMismatch);
}

TEST(SymEigen, IdentityHasUnitEigenvalues) {
  const EigenDecomp e = sym_eigen(SymMatrix::identity(3));
  EXPECT_EQ(e.eigenvalues, (Vector{1.0, 1.0, 1.0}));
  EXPECT_EQ(e.eigenvectors, Matrix::identity(3));
}

TEST(SymEigen, DiagonalInputIsSortedAscending) {
  const Vector diag{100.0, 0.05};
  const EigenDecomp e = sym_eigen(SymMatrix::diagonal(diag));
  EXPECT_EQ(e.eigenvalues, (Vector{0.05, 100.0}));
}

TEST(SymEigen, TwoByTwoMatchesCharacteristicRoots) {
  Matrix m(2, 2);
  m(0, 0) = 2.0;
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  m(1, 1) = 2.0;
  // lambda^2 - 4 lambda + 3 = (lambda - 1)(lambda - 3)
  const EigenDecomp e = sym_eigen(SymMatrix(m));
  EXPECT_NEAR(e.eigenvalues[0], 1.0, 1e-14);
  EXPECT_NEAR(e.eigenvalues[1], 3.0, 1e-14);
}

TEST(SymEigen, DecompositionInvariantsOnRandomMatrices) {
  Rng rng(11);
  for (std::size_t d : {1u, 2u, 3u, 5u, 8u, 20u}) {
    const SymMatrix h = SymMatrix::from_upper(gaussian_matrix(rng, d, d));
    const EigenDecomp e = sym_eigen(h);
    ASSERT_TRUE(std::is_sorted(e.eigenvalues.begin(), e.eigenvalues.end()));

    const Matrix& u = e.eigenvectors;
    const Matrix utu = oracle::matmul(oracle::transpose(u), u);
    double orth = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        orth = std::max(orth, std::abs(utu(i, j) - (i == j ? 1.0 : 0.0)));
    EXPECT_LT(orth, 1e-10) << "d=" << d;

    Matrix lam(d, d);
    for (std::size_t i = 0; i < d; ++i) lam(i, i) = e.eigenvalues[i];
    const Matrix rec = oracle::matmul(oracle::matmul(u, lam), oracle::transpose(u));
    EXPECT_LT((rec - h.matrix()).max_abs(), 1e-8 * h.matrix().max_abs()) << "d=" << d;

    const double sum = std::accumulate(e.eigenvalues.begin(), e.eigenvalues.end(), 0.0);
    EXPECT_NEAR(sum, h.trace(), 1e-8 * std::max(1.0, std::abs(h.trace())));
    if (d <= 8) {
      const double prod = std::accumulate(e.eigenvalues.begin(), e.eigenvalues.end(), 1.0,
                                          std::multiplies<>());
      const double det = oracle::determinant(h.matrix());
      EXPECT_NEAR(prod, det, 1e-6 * std::abs(det)) << "d=" << d;
    }
  }
}

TEST(SymEigen, RepeatedEigenvaluesKeepOrthogonalVectors) {
  Rng rng(5);
  const SymMatrix h(oracle::with_spectrum(gaussian_matrix(rng, 4, 4), {2.0, 2.0, 2.0, 7.0}));
  const EigenDecomp e = sym_eigen(h);
  EXPECT_NEAR(e.eigenvalues[0], 2.0, 1e-12);
  EXPECT_NEAR(e.eigenvalues[2], 2.0, 1e-12);
  EXPECT_NEAR(e.eigenvalues[3], 7.0, 1e-12);
}

TEST(SolveSpd, RecoversKnownSolution) {
  Rng rng(3);
  const SymMatrix h = random_spd(rng, 6, 0.5, 10.0);
  const Vector x{1.0, -2.0, 0.5, 3.0, 0.0, -1.0};
  const Vector b = h.apply(x);
  const Vector got = solve_spd(h, b);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(got[i], x[i], 1e-12);
}

TEST(Eig2, IdentityHasDoubleUnitRoot) {
  const auto [a, b] = eig2(Mat2::identity());
  EXPECT_EQ(a, std::complex<double>(1.0, 0.0));
  EXPECT_EQ(b, std::complex<double>(1.0, 0.0));
}

TEST(Eig2, NilpotentTransitionAtLargestEigenvalue) {
  for (double beta : {-0.5, 0.0, 0.3, 0.9}) {
    const Mat2 m = oracle::b_matrix(1.0, 1.0, beta);  // alpha = 1/L with L = 1
    EXPECT_NEAR(m.trace(), 0.0, 1e-15);
    EXPECT_NEAR(m.det(), 0.0, 1e-15);
    const auto [a, b] = eig2(m);
    EXPECT_LT(std::abs(a), 1e-15);
    EXPECT_LT(std::abs(b), 1e-15);
  }
}

TEST(Eig2, CriticallyDampedDoubleRoot) {
  // Q = 4, L = 1, alpha = 1, beta = 1/3 at lambda = mu = 1/4.
  const Mat2 m = oracle::b_matrix(0.25, 1.0, 1.0 / 3.0);
  const auto [a, b] = eig2(m);
  EXPECT_NEAR(a.real(), 0.5, 1e-12);
  EXPECT_NEAR(b.real(), 0.5, 1e-12);
  EXPECT_NEAR(spectral_radius2(m), 0.5, 1e-12);
}

TEST(Eig2, ComplexPairForNegativeDiscriminant) {
  const Mat2 rot{0.0, -1.0, 1.0, 0.0};
  const auto [a, b] = eig2(rot);
  EXPECT_NEAR(std::abs(a.imag()), 1.0, 1e-15);
  EXPECT_EQ(a, std::conj(b));
}

TEST(SpectralRadius2, SegmentProductMatchesClosedForm) {
  // Q = 16, L = 1, alpha = 1, beta = 3/5.
  const double mu = 1.0 / 16.0;
  const Mat2 bl = oracle::b_matrix(1.0, 1.0, 0.6);
  const Mat2 bm = oracle::b_matrix(mu, 1.0, 0.6);
  const Mat2 prod = oracle::mul(bl, oracle::mul(bm, bm));
  EXPECT_NEAR(spectral_radius2(prod), std::pow(0.75, 3) * 2.0, 1e-12);
  EXPECT_NEAR(spectral_radius2(prod), 0.84375, 1e-12);
}

TEST(SpectralRadius2, AgreesWithSchoolbookRoots) {
  Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    const Mat2 m = random_mat2(rng);
    EXPECT_NEAR(spectral_radius2(m), oracle::spectral_radius(m), 1e-12);
  }
}

TEST(SpectralNorm2, SimpleCases) {
  EXPECT_DOUBLE_EQ(spectral_norm2(Mat2::identity()), 1.0);
  EXPECT_DOUBLE_EQ(spectral_norm2(Mat2{2.0, 0.0, 0.0, 3.0}), 3.0);
}

TEST(SpectralNorm2, MatchesPowerIterationAndDominatesRadius) {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const Mat2 m = random_mat2(rng);
    const double n = spectral_norm2(m);
    EXPECT_NEAR(n, oracle::spectral_norm(m), 1e-10 * std::max(1.0, n));
    EXPECT_GE(n + 1e-15, spectral_radius2(m));
  }
}

TEST(SpectralNorm2, GelfandSideInequality) {
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const Mat2 m = random_mat2(rng);
    const double r = spectral_radius2(m);
    for (unsigned k = 1; k <= 20; ++k) {
      const double nk = spectral_norm2(power(m, k));
      EXPECT_LE(std::pow(r, k), nk * (1.0 + 1e-10)) << "k=" << k;
    }
  }
}

TEST(Mat2, PowerMatchesRepeatedMultiplication) {
  Rng rng(4);
  const Mat2 m = 0.5 * random_mat2(rng);
  for (unsigned k : {0u, 1u, 2u, 7u, 16u, 33u}) {
    const Mat2 want = oracle::pow(m, k);
    EXPECT_LT(oracle::max_entry_gap(power(m, k), want), 1e-12 * std::max(1.0, oracle::max_entry(want)));
  }
}

TEST(Permutation, SingleBlockIsIdentity) {
  EXPECT_TRUE(build_permutation(1).is_identity());
}

TEST(Permutation, InterleavesBlocks) {
  // Row 2j of the permuted matrix is row j of the top half; row 2j+1 is row j
  // of the bottom half.
  const Permutation p = build_permutation(2);
  EXPECT_EQ(p.mapping(), (std::vector<std::size_t>{0, 2, 1, 3}));
  const Permutation q = build_permutation(3);
  EXPECT_EQ(q.mapping(), (std::vector<std::size_t>{0, 3, 1, 4, 2, 5}));
}

TEST(Permutation, InverseComposesToIdentity) {
  for (std::size_t d : {1u, 2u, 5u, 13u}) {
    const Permutation p = build_permutation(d);
    EXPECT_TRUE(p.compose(p.inverse()).is_identity());
    EXPECT_TRUE(p.inverse().compose(p).is_identity());
  }
  EXPECT_THROW(Permutation({0, 0}), PreconditionError);
}

TEST(Permutation, ConjugationBlockDiagonalizesDiagonalBlocks) {
  Rng rng(12);
  const std::size_t d = 4;
  std::vector<double> a(d), b(d), c(d), e(d);
  Matrix m(2 * d, 2 * d);
  for (std::size_t j = 0; j < d; ++j) {
    a[j] = rng.normal();
    b[j] = rng.normal();
    c[j] = rng.normal();
    e[j] = rng.normal();
    m(j, j) = a[j];
    m(j, d + j) = b[j];
    m(d + j, j) = c[j];
    m(d + j, d + j) = e[j];
  }
  const Permutation p = build_permutation(d);
  const Matrix pm = p.as_matrix();
  const Matrix via_matrix = oracle::matmul(oracle::matmul(pm, m), oracle::transpose(pm));
  const Matrix conj = p.conjugate(m);
  EXPECT_EQ(conj, via_matrix);
  for (std::size_t i = 0; i < 2 * d; ++i)
    for (std::size_t j = 0; j < 2 * d; ++j) {
      const std::size_t bi = i / 2, bj = j / 2;
      if (bi != bj) {
        EXPECT_EQ(conj(i, j), 0.0);
        continue;
      }
      const double want = (i % 2 == 0) ? (j % 2 == 0 ? a[bi] : b[bi]) : (j % 2 == 0 ? c[bi] : e[bi]);
      EXPECT_EQ(conj(i, j), want);
    }
}

TEST(TransitionMatrix, MatchesStateSpaceRecursion) {
  Rng rng(2);
  const SymMatrix h = random_spd(rng, 3, 0.2, 2.0);
  const double alpha = 0.4, beta = 0.7;
  const Matrix a = transition_matrix(h, alpha, beta);
  Vector r{0.3, -1.0, 2.0}, v{1.0, 0.5, -0.25};
  Vector z(r);
  z.insert(z.end(), v.begin(), v.end());
  const Vector next = a.apply(z);
  const Vector g = h.apply(r);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(next[i], r[i] + beta * beta * v[i] - alpha * (1 + beta) * g[i], 1e-14);
    EXPECT_NEAR(next[3 + i], beta * v[i] - alpha * g[i], 1e-14);
  }
}

TEST(BlockDiagonalize, ScalarHessianGivesEqualBlocks) {
  const Vector diag{0.7, 0.7};
  const auto blocks = block_diagonalize(SymMatrix::diagonal(diag), 0.5, 0.2);
  ASSERT_EQ(blocks.size(), 2u);
  EXPECT_EQ(blocks[0], blocks[1]);
  EXPECT_LT(oracle::max_entry_gap(blocks[0], oracle::b_matrix(0.7, 0.5, 0.2)), 1e-15);
}

TEST(BlockDiagonalize, DiagonalHessianOrdersByEigenvalue) {
  const double mu = 0.1, L = 3.0;
  const Vector diag{mu, L};
  const auto blocks = block_diagonalize(SymMatrix::diagonal(diag), 0.3, 0.5);
  EXPECT_LT(oracle::max_entry_gap(blocks[0], oracle::b_matrix(mu, 0.3, 0.5)), 1e-15);
  EXPECT_LT(oracle::max_entry_gap(blocks[1], oracle::b_matrix(L, 0.3, 0.5)), 1e-15);
}

TEST(BlockDiagonalize, ReconstructsConjugatedTransitionMatrix) {
  Rng rng(31);
  for (std::size_t d : {2u, 4u, 6u, 8u}) {
    const double mu = 0.05, L = 1.0;
    const SymMatrix h = random_spd(rng, d, mu, L);
    const double alpha = 1.5 * rng.uniform() / L + 0.01, beta = -0.9 + 1.8 * rng.uniform();

    // Build A directly from the recursion rather than via transition_matrix.
    Matrix a(2 * d, 2 * d);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        a(i, j) = (i == j) - alpha * (1 + beta) * h(i, j);
        a(d + i, j) = -alpha * h(i, j);
      }
      a(i, d + i) = beta * beta;
      a(d + i, d + i) = beta;
    }
    const EigenDecomp e = sym_eigen(h);
    Matrix w(2 * d, 2 * d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        w(i, j) = e.eigenvectors(j, i);
        w(d + i, d + j) = e.eigenvectors(j, i);
      }
    const Matrix rotated = oracle::matmul(oracle::matmul(w, a), oracle::transpose(w));
    const Matrix conj = build_permutation(d).conjugate(rotated);

    const auto blocks = block_diagonalize(e, alpha, beta);
    double resid = 0.0;
    for (std::size_t i = 0; i < 2 * d; ++i)
      for (std::size_t j = 0; j < 2 * d; ++j) {
        double want = 0.0;
        if (i / 2 == j / 2) {
          const Mat2& blk = blocks[i / 2];
          want = (i % 2 == 0) ? (j % 2 == 0 ? blk.a11 : blk.a12) : (j % 2 == 0 ? blk.a21 : blk.a22);
        }
        resid = std::max(resid, std::abs(conj(i, j) - want));
      }
    EXPECT_LT(resid, 1e-10) << "d=" << d;
  }
}

TEST(BlockDiagonalize, BlockRootsAreEigenvaluesOfFullMatrix) {
  // The 2d x 2d transition matrix is not symmetric, so compare through the
  // characteristic polynomial: det(A - xi I) must vanish at every block root.
  Rng rng(17);
  const std::size_t d = 3;
  const SymMatrix h = random_spd(rng, d, 0.1, 1.0);
  const double alpha = 0.8, beta = 0.4;
  const Matrix a = transition_matrix(h, alpha, beta);
  for (const Mat2& blk : block_diagonalize(h, alpha, beta)) {
    const auto [r1, r2] = eig2(blk);
    for (const auto& r : {r1, r2}) {
      if (std::abs(r.imag()) > 0.0) continue;
      Matrix shifted = a;
      for (std::size_t i = 0; i < 2 * d; ++i) shifted(i, i) -= r.real();
      EXPECT_NEAR(oracle::determinant(shifted), 0.0, 1e-8);
    }
  }
}
