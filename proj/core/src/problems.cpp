#include "momlab/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "momlab/error.hpp"

namespace momlab {

namespace {

void require_dim(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw DimensionMismatch(std::string(what) + ": expected dimension " +
                            std::to_string(expected) + ", got " + std::to_string(got));
  }
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// Columns form an orthonormal basis of a random subspace.
Matrix random_orthonormal(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m = gaussian_matrix(rows, cols, rng);
  orthonormalize_columns(m);
  return m;
}

// A = U diag(s) V^T.
Matrix compose_design(const Matrix& u, std::span<const double> s, const Matrix& v) {
  Matrix a(u.rows(), v.rows());
  for (std::size_t i = 0; i < u.rows(); ++i)
    for (std::size_t j = 0; j < v.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < s.size(); ++k) acc += u(i, k) * s[k] * v(j, k);
      a(i, j) = acc;
    }
  return a;
}

// The least-squares quadratic 1/(2n) ||A x - y||^2.
struct LsTerms {
  Matrix h;
  Vector b;
  double c;
};

LsTerms least_squares_terms(const Matrix& a, std::span<const double> y) {
  const std::size_t n = a.rows();
  const std::size_t d = a.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  LsTerms t{Matrix(d, d), Vector(d, 0.0), 0.0};
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) acc += a(r, i) * a(r, j);
      t.h(i, j) = acc * inv_n;
    }
  for (std::size_t j = 0; j < d; ++j) {
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) acc += a(r, j) * y[r];
    t.b[j] = acc * inv_n;
  }
  t.c = 0.5 * dot(y, y) * inv_n;
  return t;
}

Vector log_spaced(double lo, double hi, std::size_t count) {
  Vector out(count, lo);
  if (count == 1) return out;
  for (std::size_t j = 0; j < count; ++j) {
    const double frac = static_cast<double>(j) / static_cast<double>(count - 1);
    out[j] = lo * std::pow(hi / lo, frac);
  }
  out.back() = hi;
  return out;
}

// Softmax probabilities for one sample into `probs`.
void softmax_row(const LogRegProblem& p, std::span<const double> w, std::size_t sample,
                 std::span<double> probs) {
  const std::size_t d = p.n_features();
  const auto x = p.features.row(sample);
  double top = -INFINITY;
  for (int c = 0; c < p.classes; ++c) {
    double z = 0.0;
    const double* wc = w.data() + static_cast<std::size_t>(c) * d;
    for (std::size_t j = 0; j < d; ++j) z += wc[j] * x[j];
    probs[static_cast<std::size_t>(c)] = z;
    top = std::max(top, z);
  }
  double total = 0.0;
  for (double& z : probs) {
    z = std::exp(z - top);
    total += z;
  }
  for (double& z : probs) z /= total;
}

}  // namespace

// ---------------------------------------------------------------------------
// Quadratic

Quadratic Quadratic::make(SymMatrix H, Vector b, double c, SpectrumBounds declared,
                          std::string generator, std::uint64_t seed) {
  declared.validate();
  require_dim(H.dim(), b.size(), "Quadratic::make");
  const EigenDecomp eig = sym_eigen(H);
  const double tol = 1e-8 * std::max(1.0, declared.L);
  if (eig.eigenvalues.front() < declared.mu - tol || eig.eigenvalues.back() > declared.L + tol) {
    throw PreconditionError("Quadratic::make: spectrum [" + std::to_string(eig.eigenvalues.front()) +
                            ", " + std::to_string(eig.eigenvalues.back()) +
                            "] outside declared bounds");
  }
  Vector xs = solve_spd(H, b);
  Quadratic q{std::move(H), std::move(b), c, std::move(xs), declared, std::move(generator), seed};
  const Vector hx = q.H.apply(q.x_star);
  double resid = 0.0;
  for (std::size_t i = 0; i < hx.size(); ++i) resid = std::max(resid, std::abs(hx[i] - q.b[i]));
  if (resid >= 1e-8 * (norm_inf(q.b) + 1.0))
    throw ConvergenceError("Quadratic::make: minimizer residual too large");
  return q;
}

double Quadratic::value(std::span<const double> x) const {
  require_dim(dim(), x.size(), "Quadratic::value");
  const Vector hx = H.apply(x);
  return 0.5 * dot(x, hx) - dot(b, x) + c;
}

Vector Quadratic::gradient(std::span<const double> y) const {
  Vector g(dim());
  gradient_into(y, g);
  return g;
}

void Quadratic::gradient_into(std::span<const double> y, std::span<double> out) const {
  require_dim(dim(), y.size(), "Quadratic::gradient");
  require_dim(dim(), out.size(), "Quadratic::gradient");
  H.apply_into(y, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
}

FiniteSumProblem FiniteSumProblem::make(std::vector<Quadratic> components, std::size_t minibatch,
                                        bool interpolation, SpectrumBounds declared,
                                        std::string generator, std::uint64_t seed) {
  if (components.empty()) throw PreconditionError("FiniteSumProblem: need at least one component");
  const std::size_t n = components.size();
  if (minibatch < 1 || minibatch > n)
    throw PreconditionError("FiniteSumProblem: minibatch size must be in [1, n]");
  const std::size_t d = components.front().dim();
  Matrix h(d, d);
  Vector b(d, 0.0);
  double c = 0.0;
  for (const Quadratic& q : components) {
    require_dim(d, q.dim(), "FiniteSumProblem component");
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) h(i, j) += q.H(i, j);
      b[i] += q.b[i];
    }
    c += q.c;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) h(i, j) *= inv_n;
    b[i] *= inv_n;
  }
  Quadratic agg = Quadratic::make(SymMatrix::from_upper(h), std::move(b), c * inv_n, declared,
                                  generator + "/aggregate", seed);
  if (interpolation) {
    for (const Quadratic& q : components)
      for (std::size_t i = 0; i < d; ++i)
        if (std::abs(q.x_star[i] - agg.x_star[i]) > 1e-8)
          throw PreconditionError("FiniteSumProblem: interpolation flag set but minimizers differ");
  }
  return {std::move(components), minibatch, interpolation, std::move(agg), std::move(generator),
          seed};
}

// ---------------------------------------------------------------------------
// Sampling

SamplingVector::SamplingVector(std::vector<std::size_t> indices, std::size_t n)
    : idx_(std::move(indices)), n_(n) {
  if (idx_.empty()) throw PreconditionError("SamplingVector: empty batch");
  std::sort(idx_.begin(), idx_.end());
  if (std::adjacent_find(idx_.begin(), idx_.end()) != idx_.end())
    throw PreconditionError("SamplingVector: repeated index");
  if (idx_.back() >= n_) throw PreconditionError("SamplingVector: index out of range");
}

Vector SamplingVector::weights() const {
  Vector w(n_, 0.0);
  const double share = 1.0 / static_cast<double>(idx_.size());
  for (std::size_t i : idx_) w[i] = share;
  return w;
}

BatchSampler::BatchSampler(std::size_t n, std::size_t m, bool no_repeat, Rng& rng)
    : n_(n), m_(m), no_repeat_(no_repeat), rng_(&rng), scratch_(n) {
  if (m < 1 || m > n) throw PreconditionError("BatchSampler: need 1 <= m <= n");
  if (no_repeat && (m >= n || n < 2))
    throw PreconditionError("BatchSampler: no-repeat sampling requires m < n");
}

SamplingVector BatchSampler::next() {
  for (;;) {
    std::vector<std::size_t> pick;
    if (m_ == 1) {
      pick.push_back(rng_->uniform_index(n_));
    } else {
      std::iota(scratch_.begin(), scratch_.end(), std::size_t{0});
      for (std::size_t i = 0; i < m_; ++i) {
        const std::size_t j = i + rng_->uniform_index(n_ - i);
        std::swap(scratch_[i], scratch_[j]);
      }
      pick.assign(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(m_));
    }
    SamplingVector nu(std::move(pick), n_);
    if (no_repeat_ && prev_ && *prev_ == nu) continue;
    prev_ = nu;
    return nu;
  }
}

std::vector<SamplingVector> sampling_schedule(std::size_t n, std::size_t m, std::size_t K, Rng& rng,
                                              bool no_repeat) {
  BatchSampler sampler(n, m, no_repeat, rng);
  std::vector<SamplingVector> out;
  out.reserve(K);
  for (std::size_t k = 0; k < K; ++k) out.push_back(sampler.next());
  return out;
}

// ---------------------------------------------------------------------------
// Logistic regression

void LogRegProblem::validate() const {
  if (classes < 2) throw PreconditionError("LogRegProblem: need at least two classes");
  if (!(reg > 0.0)) throw PreconditionError("LogRegProblem: reg must be positive");
  if (labels.size() != features.rows())
    throw DimensionMismatch("LogRegProblem: one label per sample required");
  std::vector<bool> present(static_cast<std::size_t>(classes), false);
  for (int y : labels) {
    if (y < 0 || y >= classes) throw PreconditionError("LogRegProblem: label out of range");
    present[static_cast<std::size_t>(y)] = true;
  }
  for (bool seen : present)
    if (!seen) throw PreconditionError("LogRegProblem: every class must appear");
}

double logreg_loss(const LogRegProblem& p, std::span<const double> w) {
  require_dim(p.dim(), w.size(), "logreg_loss");
  const std::size_t d = p.n_features();
  double total = 0.0;
  for (std::size_t s = 0; s < p.samples(); ++s) {
    const auto x = p.features.row(s);
    Vector z(static_cast<std::size_t>(p.classes));
    double top = -INFINITY;
    for (int c = 0; c < p.classes; ++c) {
      double acc = 0.0;
      const double* wc = w.data() + static_cast<std::size_t>(c) * d;
      for (std::size_t j = 0; j < d; ++j) acc += wc[j] * x[j];
      z[static_cast<std::size_t>(c)] = acc;
      top = std::max(top, acc);
    }
    double sum = 0.0;
    for (double zc : z) sum += std::exp(zc - top);
    total += top + std::log(sum) - z[static_cast<std::size_t>(p.labels[s])];
  }
  return total / static_cast<double>(p.samples()) + 0.5 * p.reg * dot(w, w);
}

Vector logreg_gradient(const LogRegProblem& p, std::span<const double> w) {
  require_dim(p.dim(), w.size(), "logreg_gradient");
  const std::size_t d = p.n_features();
  Vector g(p.dim(), 0.0);
  Vector probs(static_cast<std::size_t>(p.classes));
  for (std::size_t s = 0; s < p.samples(); ++s) {
    softmax_row(p, w, s, probs);
    probs[static_cast<std::size_t>(p.labels[s])] -= 1.0;
    const auto x = p.features.row(s);
    for (int c = 0; c < p.classes; ++c) {
      double* gc = g.data() + static_cast<std::size_t>(c) * d;
      const double coef = probs[static_cast<std::size_t>(c)];
      for (std::size_t j = 0; j < d; ++j) gc[j] += coef * x[j];
    }
  }
  const double inv_s = 1.0 / static_cast<double>(p.samples());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = g[i] * inv_s + p.reg * w[i];
  return g;
}

SymMatrix logreg_hessian(const LogRegProblem& p, std::span<const double> w, double reg_weight) {
  require_dim(p.dim(), w.size(), "logreg_hessian");
  const std::size_t d = p.n_features();
  const std::size_t k = static_cast<std::size_t>(p.classes);
  const std::size_t dim = p.dim();
  Matrix h(dim, dim);
  Vector probs(k);
  for (std::size_t s = 0; s < p.samples(); ++s) {
    softmax_row(p, w, s, probs);
    const auto x = p.features.row(s);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a; b < k; ++b) {
        const double coef = (a == b ? probs[a] : 0.0) - probs[a] * probs[b];
        for (std::size_t i = 0; i < d; ++i) {
          const std::size_t row = a * d + i;
          const std::size_t j0 = (a == b) ? i : 0;
          for (std::size_t j = j0; j < d; ++j) h(row, b * d + j) += coef * x[i] * x[j];
        }
      }
  }
  const double inv_s = 1.0 / static_cast<double>(p.samples());
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i; j < dim; ++j) h(i, j) *= inv_s;
    h(i, i) += reg_weight * p.reg;
  }
  return SymMatrix::from_upper(h);
}

// ---------------------------------------------------------------------------
// Constructors

Quadratic worst_case_quadratic(std::size_t d, double mu, double L) {
  if (d < 2) throw PreconditionError("worst_case_quadratic: d must be >= 2");
  if (!(mu > 0.0) || !(mu < L)) throw PreconditionError("worst_case_quadratic: need 0 < mu < L");
  const double scale = (L - mu) / 4.0;
  Matrix h(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    h(i, i) = 2.0 * scale + mu;
    if (i + 1 < d) h(i, i + 1) = h(i + 1, i) = -scale;
  }
  Vector b(d, 0.0);
  b[0] = scale;
  return Quadratic::make(SymMatrix(std::move(h)), std::move(b), 0.0, {mu, L}, "worst_case_quadratic");
}

Quadratic random_least_squares(std::uint64_t seed, std::size_t n_samples, std::size_t n_features,
                               double Q_target, double mu_floor) {
  if (n_features < 1 || n_samples < n_features)
    throw PreconditionError("random_least_squares: need n_samples >= n_features >= 1");
  if (!(Q_target >= 1.0)) throw PreconditionError("random_least_squares: Q_target must be >= 1");
  if (!(mu_floor > 0.0)) throw PreconditionError("random_least_squares: mu_floor must be positive");
  if (n_features == 1 && Q_target != 1.0)
    throw PreconditionError("random_least_squares: a single feature has condition number 1");

  Rng rng(seed);
  const Matrix u = random_orthonormal(n_samples, n_features, rng);
  const Matrix v = random_orthonormal(n_features, n_features, rng);
  const double n = static_cast<double>(n_samples);
  Vector eigs = log_spaced(mu_floor, mu_floor * Q_target, n_features);
  Vector s(n_features);
  for (std::size_t j = 0; j < n_features; ++j) s[j] = std::sqrt(n * eigs[j]);
  const Matrix a = compose_design(u, s, v);

  Vector x_true(n_features);
  for (double& x : x_true) x = rng.normal();
  Vector y = a.apply(x_true);
  for (double& t : y) t += 0.1 * rng.normal();

  LsTerms t = least_squares_terms(a, y);
  return Quadratic::make(SymMatrix::from_upper(t.h), std::move(t.b), t.c,
                         {mu_floor, mu_floor * Q_target}, "random_least_squares", seed);
}

FiniteSumProblem counterexample_finite_sum(std::size_t n, double mu, double L) {
  if (n < 3) throw PreconditionError("counterexample_finite_sum: n must be >= 3");
  if (!(mu > 0.0) || !(mu <= L)) throw PreconditionError("counterexample_finite_sum: need 0 < mu <= L");
  const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
  const Vector xs{inv_sqrt3, inv_sqrt3, inv_sqrt3};
  std::vector<Quadratic> comps;
  comps.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lam = (i + 1 == n) ? L : mu;
    const Vector diag{L, mu, lam};
    Vector b(3);
    double c = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      b[j] = diag[j] * xs[j];
      c += 0.5 * diag[j] * xs[j] * xs[j];
    }
    comps.push_back(Quadratic::make(SymMatrix::diagonal(diag), std::move(b), c, {mu, L},
                                    "counterexample_finite_sum"));
  }
  return FiniteSumProblem::make(std::move(comps), 1, true, {mu, L}, "counterexample_finite_sum");
}

FiniteSumProblem partitioned_least_squares(std::uint64_t seed, std::size_t n_samples,
                                           std::size_t n_features, std::size_t n_batches, double Q,
                                           double label_noise) {
  if (n_batches < 1 || n_samples % n_batches != 0)
    throw PreconditionError("partitioned_least_squares: n_samples must be divisible by n_batches");
  const std::size_t per_batch = n_samples / n_batches;
  if (n_features < 2 || per_batch < n_features)
    throw PreconditionError("partitioned_least_squares: need per-batch samples >= features >= 2");
  if (!(Q >= 1.0)) throw PreconditionError("partitioned_least_squares: Q must be >= 1");
  if (!(label_noise >= 0.0))
    throw PreconditionError("partitioned_least_squares: label_noise must be >= 0");

  Rng rng(seed);
  Vector x_true(n_features);
  for (double& x : x_true) x = rng.normal();
  const double scale = 10.0 / norm2(x_true);
  for (double& x : x_true) x *= scale;

  const SpectrumBounds bounds{1.0 / Q, 1.0};
  const Vector eigs = log_spaced(bounds.mu, bounds.L, n_features);
  Vector s(n_features);
  for (std::size_t j = 0; j < n_features; ++j)
    s[j] = std::sqrt(static_cast<double>(per_batch) * eigs[j]);

  std::vector<Quadratic> comps;
  comps.reserve(n_batches);
  for (std::size_t i = 0; i < n_batches; ++i) {
    const Matrix u = random_orthonormal(per_batch, n_features, rng);
    const Matrix v = random_orthonormal(n_features, n_features, rng);
    const Matrix a = compose_design(u, s, v);
    Vector y = a.apply(x_true);
    if (label_noise > 0.0)
      for (double& t : y) t += label_noise * rng.normal();
    LsTerms t = least_squares_terms(a, y);
    comps.push_back(Quadratic::make(SymMatrix::from_upper(t.h), std::move(t.b), t.c, bounds,
                                    "partitioned_least_squares", seed));
  }
  return FiniteSumProblem::make(std::move(comps), 1, label_noise == 0.0, bounds,
                                "partitioned_least_squares", seed);
}

LogRegProblem logreg_problem(std::uint64_t seed, int classes, std::size_t n_samples,
                             std::size_t n_features, std::size_t n_informative, double cluster_sep,
                             double reg) {
  if (classes < 2) throw PreconditionError("logreg_problem: need at least two classes");
  if (n_informative > n_features)
    throw PreconditionError("logreg_problem: n_informative must not exceed n_features");
  if (n_samples < static_cast<std::size_t>(classes))
    throw PreconditionError("logreg_problem: need at least one sample per class");

  Rng rng(seed);
  LogRegProblem p;
  p.features = Matrix(n_samples, n_features);
  p.labels.resize(n_samples);
  p.classes = classes;
  p.reg = reg;
  p.generator = "logreg_problem";
  p.seed = seed;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const int label = static_cast<int>(s % static_cast<std::size_t>(classes));
    p.labels[s] = label;
    for (std::size_t j = 0; j < n_features; ++j) {
      double centre = 0.0;
      if (j < n_informative) {
        // Vertex of the informative hypercube indexed by the label's bits.
        const bool bit = j < 63 && ((static_cast<unsigned long long>(label) >> j) & 1ULL);
        centre = bit ? cluster_sep : -cluster_sep;
      }
      p.features(s, j) = centre + rng.normal();
    }
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Oracles

GradientSample grad_exact(const Quadratic& q, std::span<const double> y) {
  return {q.gradient(y), GradientKind::exact, std::nullopt};
}

GradientSample grad_exact(const LogRegProblem& p, std::span<const double> y) {
  return {logreg_gradient(p, y), GradientKind::exact, std::nullopt};
}

namespace {

void add_gaussian_noise(Vector& g, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw PreconditionError("grad_gaussian: sigma must be >= 0");
  if (sigma == 0.0) return;
  const double sd = sigma / std::sqrt(static_cast<double>(g.size()));
  for (double& x : g) x += sd * rng.normal();
}

}  // namespace

GradientSample grad_gaussian(const Quadratic& q, std::span<const double> y, double sigma, Rng& rng) {
  GradientSample out{q.gradient(y), GradientKind::gaussian, std::nullopt};
  add_gaussian_noise(out.value, sigma, rng);
  return out;
}

GradientSample grad_gaussian(const LogRegProblem& p, std::span<const double> y, double sigma,
                             Rng& rng) {
  GradientSample out{logreg_gradient(p, y), GradientKind::gaussian, std::nullopt};
  add_gaussian_noise(out.value, sigma, rng);
  return out;
}

GradientSample grad_minibatch(const FiniteSumProblem& fs, std::span<const double> y,
                              const SamplingVector& nu) {
  require_dim(fs.dim(), y.size(), "grad_minibatch");
  if (nu.n() != fs.n())
    throw DimensionMismatch("grad_minibatch: sampling vector length " + std::to_string(nu.n()) +
                            " vs " + std::to_string(fs.n()) + " components");
  Vector g(fs.dim(), 0.0);
  Vector scratch(fs.dim());
  for (std::size_t i : nu.indices()) {
    fs.components[i].gradient_into(y, scratch);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += scratch[j];
  }
  const double inv_m = 1.0 / static_cast<double>(nu.m());
  for (double& x : g) x *= inv_m;
  return {std::move(g), GradientKind::minibatch, nu};
}

}  // namespace momlab
