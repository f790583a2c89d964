#pragma once

// Objectives used by the experiments: quadratics (single and finite-sum),
// multinomial logistic regression, their gradient oracles, and mini-batch
// sampling.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "momlab/linalg.hpp"
#include "momlab/rng.hpp"
#include "momlab/theory.hpp"

namespace momlab {

/// f(x) = 1/2 x^T H x - b^T x + c with minimizer x_star (H x_star = b).
struct Quadratic {
  SymMatrix H;
  Vector b;
  double c = 0.0;
  Vector x_star;
  SpectrumBounds bounds;  // declared [mu, L], verified against the spectrum
  std::string generator;
  std::uint64_t seed = 0;

  /// Solves for x_star and checks that the spectrum of H lies in `declared`
  /// (within 1e-8 max(1, L)). Throws PreconditionError otherwise.
  static Quadratic make(SymMatrix H, Vector b, double c, SpectrumBounds declared,
                        std::string generator = "custom", std::uint64_t seed = 0);

  std::size_t dim() const noexcept { return H.dim(); }
  double value(std::span<const double> x) const;
  double f_star() const { return value(x_star); }
  Vector gradient(std::span<const double> y) const;
  void gradient_into(std::span<const double> y, std::span<double> out) const;
};

/// Average of component quadratics, sampled m at a time.
struct FiniteSumProblem {
  std::vector<Quadratic> components;
  std::size_t minibatch = 1;
  bool interpolation = false;
  Quadratic aggregate;
  std::string generator;
  std::uint64_t seed = 0;

  static FiniteSumProblem make(std::vector<Quadratic> components, std::size_t minibatch,
                               bool interpolation, SpectrumBounds declared,
                               std::string generator = "custom", std::uint64_t seed = 0);

  std::size_t n() const noexcept { return components.size(); }
  std::size_t dim() const noexcept { return aggregate.dim(); }
  const SpectrumBounds& bounds() const noexcept { return aggregate.bounds; }
};

/// The m-subset selected at one iteration; weights are 1/m on the subset.
class SamplingVector {
 public:
  SamplingVector(std::vector<std::size_t> indices, std::size_t n);

  const std::vector<std::size_t>& indices() const noexcept { return idx_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return idx_.size(); }
  Vector weights() const;

  friend bool operator==(const SamplingVector&, const SamplingVector&) = default;

 private:
  std::vector<std::size_t> idx_;  // sorted, distinct
  std::size_t n_;
};

enum class GradientKind { exact, gaussian, minibatch };

struct GradientSample {
  Vector value;
  GradientKind kind = GradientKind::exact;
  std::optional<SamplingVector> batch;
};

/// l2-regularized multinomial logistic regression without intercepts.
/// Parameters are a classes x features weight matrix flattened class-major.
struct LogRegProblem {
  Matrix features;          // samples x features
  std::vector<int> labels;  // in [0, classes)
  int classes = 2;
  double reg = 1.0;
  std::string generator = "custom";
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t samples() const noexcept { return features.rows(); }
  std::size_t n_features() const noexcept { return features.cols(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(classes) * features.cols(); }
};

double logreg_loss(const LogRegProblem& p, std::span<const double> w);
Vector logreg_gradient(const LogRegProblem& p, std::span<const double> w);
/// Hessian of the regularized loss; `reg_weight` scales the ridge term (use 0
/// for the data term alone).
SymMatrix logreg_hessian(const LogRegProblem& p, std::span<const double> w,
                         double reg_weight = 1.0);

// --- constructors ----------------------------------------------------------

/// ((L - mu)/4) T + mu I with T = tridiag(-1, 2, -1) and b = ((L - mu)/4) e_1.
Quadratic worst_case_quadratic(std::size_t d, double mu, double L);

/// Mean-squared-error objective 1/(2n) ||A x - y||^2 over a synthetic design
/// whose Hessian spectrum runs log-uniformly from mu_floor to mu_floor * Q.
Quadratic random_least_squares(std::uint64_t seed, std::size_t n_samples, std::size_t n_features,
                               double Q_target, double mu_floor = 1.0);

/// Three-dimensional finite sum with H_i = diag(L, mu, lambda_i), lambda_i = mu
/// except lambda_n = L, all sharing the minimizer (1, 1, 1)/sqrt(3).
FiniteSumProblem counterexample_finite_sum(std::size_t n, double mu, double L);

/// Least squares split into equal mini-batches; each batch Hessian has
/// spectrum from 1/Q to 1 (exactly {1/Q, 1} with two features). With
/// label_noise == 0 every batch is minimized at the same point.
FiniteSumProblem partitioned_least_squares(std::uint64_t seed, std::size_t n_samples = 25000,
                                           std::size_t n_features = 2,
                                           std::size_t n_batches = 50, double Q = 16.0,
                                           double label_noise = 0.01);

/// One Gaussian cluster per class centred on a hypercube vertex (scaled by
/// cluster_sep) in the first n_informative features; the remaining features
/// are pure noise. Labels are balanced round-robin.
LogRegProblem logreg_problem(std::uint64_t seed, int classes = 5, std::size_t n_samples = 100,
                             std::size_t n_features = 10, std::size_t n_informative = 5,
                             double cluster_sep = 1.0, double reg = 1e-2);

// --- oracles ---------------------------------------------------------------

GradientSample grad_exact(const Quadratic& q, std::span<const double> y);
GradientSample grad_exact(const LogRegProblem& p, std::span<const double> y);

/// Exact gradient plus N(0, (sigma^2/d) I) noise, so E||noise||^2 = sigma^2.
GradientSample grad_gaussian(const Quadratic& q, std::span<const double> y, double sigma, Rng& rng);
GradientSample grad_gaussian(const LogRegProblem& p, std::span<const double> y, double sigma,
                             Rng& rng);

GradientSample grad_minibatch(const FiniteSumProblem& fs, std::span<const double> y,
                              const SamplingVector& nu);

/// Streams uniformly random m-subsets of {0..n-1}. With no_repeat, a draw
/// equal to its predecessor is rejected and redrawn.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t m, bool no_repeat, Rng& rng);
  SamplingVector next();

 private:
  std::size_t n_;
  std::size_t m_;
  bool no_repeat_;
  Rng* rng_;
  std::vector<std::size_t> scratch_;
  std::optional<SamplingVector> prev_;
};

std::vector<SamplingVector> sampling_schedule(std::size_t n, std::size_t m, std::size_t K, Rng& rng,
                                              bool no_repeat = true);

}  // namespace momlab
