#pragma once

// Closed-form rate theory for the accelerated stochastic gradient iteration
// on quadratics: per-eigenvalue spectral radii, the variance neighborhood
// coefficient, spectral-norm contraction factors, and the algebra of the
// finite-sum counterexample.

#include <cstddef>
#include <optional>
#include <vector>

#include "momlab/linalg.hpp"

namespace momlab {

struct FiniteSumProblem;

/// Step-size alpha and momentum beta.
struct OptimizerParams {
  double alpha = 0.0;
  double beta = 0.0;

  /// Throws PreconditionError unless alpha > 0 and |beta| < 1.
  void validate() const;

  friend bool operator==(const OptimizerParams&, const OptimizerParams&) = default;
};

struct SpectrumBounds {
  double mu = 1.0;
  double L = 1.0;

  double Q() const { return L / mu; }
  /// Throws PreconditionError unless 0 < mu <= L.
  void validate() const;

  static SpectrumBounds from_condition(double Q, double L = 1.0);

  friend bool operator==(const SpectrumBounds&, const SpectrumBounds&) = default;
};

/// Theory for one (alpha, beta, mu, L) point. The optional fields are empty
/// when the parameters are unstable (rho >= 1).
struct RateReport {
  double rho = 0.0;
  bool stable = false;
  std::optional<double> variance_coeff;
  std::optional<double> c_epsilon;
  double spectral_norm_rate = 0.0;
  // max |1 - alpha lambda| over {mu, L}; only set when beta == 0 and alpha < 2/L.
  std::optional<double> sgd_rate;

  /// sqrt(c_epsilon * variance_coeff): the predicted stationary distance per
  /// unit of noise standard deviation. Empty when unstable.
  std::optional<double> neighborhood() const;
};

/// Lengths k_1..k_s of the runs of consistent batches between inconsistent ones.
class SegmentPattern {
 public:
  explicit SegmentPattern(std::vector<unsigned> k_list);

  const std::vector<unsigned>& k_list() const noexcept { return k_; }
  std::size_t s() const noexcept { return k_.size(); }
  // sum(k) + s
  unsigned k_total() const noexcept;

 private:
  std::vector<unsigned> k_;
};

double delta_lambda(double lambda, const OptimizerParams& p);
double rho_lambda(double lambda, const OptimizerParams& p);
double rho(const SpectrumBounds& b, const OptimizerParams& p);

/// alpha^2 ((1 + beta)^2 + 1) / (1 - rho^2). Throws OutOfRegionError when
/// rho >= 1.
double variance_coeff(const SpectrumBounds& b, const OptimizerParams& p);

/// Exact stationary E||y - x*||^2 / sigma^2 bound for plain SGD,
/// alpha^2 / (1 - varrho(alpha)^2). Throws OutOfRegionError for alpha >= 2/L.
double sgd_variance_coeff(const SpectrumBounds& b, double alpha);

double c_epsilon_estimate(double norm_A, double rho);

OptimizerParams nesterov_defaults(const SpectrumBounds& b);

double big_R_lambda(double lambda, const OptimizerParams& p);

inline constexpr std::size_t kBigRGridPoints = 1024;
/// max of big_R_lambda over [mu, L]: both endpoints plus a log-uniform grid.
double big_R(const SpectrumBounds& b, const OptimizerParams& p);

double sgd_finite_sum_rate(const SpectrumBounds& b, double alpha);

Mat2 b_matrix(double lambda, const OptimizerParams& p);

/// B(mu)^k at Nesterov parameters via its Jordan form.
Mat2 b_mu_power_closed_form(const SpectrumBounds& b, unsigned k);

/// B(L) B(mu)^{k_1} ... B(L) B(mu)^{k_s} at Nesterov parameters.
Mat2 lemma1_product(const SpectrumBounds& b, const SegmentPattern& pattern);

/// Closed-form spectral radius of lemma1_product:
/// r^{k_total} * k_1 * ... * k_s with r = (sqrt(Q) - 1) / sqrt(Q).
double lemma1_rho(const SpectrumBounds& b, const SegmentPattern& pattern);

/// r (n - 1)^{1/n}. Values above one predict growth of the counterexample.
double divergence_factor(const SpectrumBounds& b, std::size_t n);

/// Mean over components of ||grad f_i(x*)||_2.
double sigma_star(const FiniteSumProblem& fs);

/// varrho(alpha)^k ||y_0 - x*|| + alpha / (1 - varrho(alpha)) * sigma.
double sgd_finite_sum_bound(const SpectrumBounds& b, double alpha, std::size_t k,
                            double initial_distance, double sigma);

RateReport rate_report(const SpectrumBounds& b, const OptimizerParams& p);

}  // namespace momlab
