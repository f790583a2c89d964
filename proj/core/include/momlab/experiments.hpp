#pragma once

// Experiment drivers: (alpha, beta) heatmap sweeps with theory overlays, the
// finite-sum divergence example, SGD finite-sum bound checks, logistic
// regression sweeps, and numerical validation of the segment-product formula.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "momlab/optim.hpp"
#include "momlab/problems.hpp"
#include "momlab/theory.hpp"

namespace momlab {

// --- trajectory analysis ---------------------------------------------------

inline constexpr std::size_t kMinFitPoints = 20;

/// exp of the least-squares slope of log(distance) against k, over the
/// iterations before the distance first drops below `floor`. Throws
/// TooFewPoints when that segment is shorter than kMinFitPoints and
/// PreconditionError on a diverged trajectory.
double fit_linear_rate(const Trajectory& t, double floor);
double fit_linear_rate(std::span<const double> distances, double floor);

/// Mean of the final tail_fraction of distances divided by sigma; 0 when the
/// tail mean is below 1e-10. Throws NonStationaryTail when the tail's
/// log-distance slope exceeds 0.002 in magnitude.
double estimate_neighborhood(const Trajectory& t, double sigma, double tail_fraction = 0.2);

double tail_mean(std::span<const double> values, double tail_fraction);

// --- sweep grids -------------------------------------------------------------

struct GridSpec {
  std::size_t n_alpha = 32;
  std::size_t n_beta = 32;
  double alpha_lo = 0.01;
  double alpha_hi = 1.99;
  bool alpha_log = true;
  double beta_lo = -0.95;
  double beta_hi = 0.95;
  // Each anchor pulls its nearest grid node onto itself, so that distinguished
  // parameter values are sampled exactly.
  std::vector<double> alpha_anchors;
  std::vector<double> beta_anchors;

  void validate() const;
  Vector alpha_values() const;
  Vector beta_values() const;

  /// 32 x 32, alpha log-spaced over [0.01/L, 1.99/L], beta over [-0.95, 0.95],
  /// anchored at alpha in {1/L, 2/(mu+L)} and beta in {0, Nesterov beta}.
  static GridSpec heatmap_default(const SpectrumBounds& b);
};

struct CellResult {
  RateReport theory;
  std::optional<double> empirical_rate;
  std::optional<double> empirical_rate_median;
  std::optional<double> empirical_neighborhood;
  std::optional<double> empirical_neighborhood_median;
  bool diverged = false;  // majority of trials diverged
  std::size_t diverged_trials = 0;
  std::size_t trials = 0;
  std::size_t failed_fits = 0;

  double diverged_fraction() const {
    return trials == 0 ? 0.0 : static_cast<double>(diverged_trials) / static_cast<double>(trials);
  }
};

struct SweepGrid {
  Vector alpha_values;
  Vector beta_values;
  std::vector<CellResult> cells;  // cells[ib * n_alpha + ia]
  SpectrumBounds bounds;

  std::size_t n_alpha() const noexcept { return alpha_values.size(); }
  std::size_t n_beta() const noexcept { return beta_values.size(); }
  const CellResult& at(std::size_t ia, std::size_t ib) const { return cells[ib * n_alpha() + ia]; }
  CellResult& at(std::size_t ia, std::size_t ib) { return cells[ib * n_alpha() + ia]; }
  /// Index pair of the cell closest to (alpha, beta) in grid coordinates.
  std::pair<std::size_t, std::size_t> nearest(double alpha, double beta) const;
};

struct HeatmapConfig {
  double sigma = 0.05;
  std::size_t iterations = 2000;
  std::size_t trials = 3;
  std::uint64_t seed = 0;
  // Rate runs start at x* + far_start * z / ||z||_inf with z ~ N(0, I), which
  // leaves many decades of clean decay above the noise floor.
  double far_start = 1e12;
  double tail_fraction = 0.2;
  double divergence_factor = kDefaultDivergenceFactor;
  unsigned jobs = 1;
};

/// Theory and Gaussian-noise empirics for every (alpha, beta) cell. Each trial
/// makes a rate run from a far start and a neighborhood run from x*, both
/// measured in the infinity norm.
SweepGrid heatmap_sweep(const Quadratic& q, const SpectrumBounds& b, const GridSpec& spec,
                        const HeatmapConfig& cfg);

/// Points on the rho = 1 level set, found by bisection on every grid edge whose
/// endpoints straddle it; sorted by beta, then alpha.
std::vector<std::pair<double, double>> stability_contour(const Vector& alpha_values,
                                                         const Vector& beta_values,
                                                         const SpectrumBounds& b);

// --- finite-sum divergence ---------------------------------------------------

struct DivergenceRun {
  Trajectory trajectory;
  std::vector<std::size_t> inconsistent_events;  // iterations k that sampled f_n
  std::vector<bool> opposite_sign;               // sign(v_{k-1}[2]) sign(g_k[2]) < 0
  double growth_exponent = 0.0;                  // mean log-increment of ||(r, v)||
  bool converged = false;                        // no guard and final < initial distance
};

struct DivergenceSeries {
  std::size_t n = 0;
  double divergence_factor = 0.0;
  double predicted_exponent = 0.0;  // log(divergence_factor)
  std::vector<DivergenceRun> runs;
  std::size_t diverged_count = 0;
  std::size_t converged_count = 0;
  double mean_growth_exponent = 0.0;
};

struct DivergenceConfig {
  std::size_t iterations = 300;
  std::size_t seeds = 20;
  std::uint64_t seed = 0;
  double divergence_factor = kDefaultDivergenceFactor;
};

std::vector<DivergenceSeries> divergence_experiment(const std::vector<std::size_t>& n_values,
                                                    const SpectrumBounds& b,
                                                    const DivergenceConfig& cfg);

// --- SGD on finite sums ------------------------------------------------------

struct BoundCheck {
  std::size_t k = 0;
  double empirical = 0.0;
  double bound = 0.0;
};

struct SgdFiniteSumSeries {
  double Q = 0.0;
  double alpha = 0.0;
  double rate_theory = 0.0;
  double sigma_star = 0.0;
  std::vector<BoundCheck> checks;  // mean over seeds of ||y_k - x*||_2
  std::optional<double> fitted_rate;
  std::size_t violations = 0;
};

struct SgdFiniteSumConfig {
  std::size_t n_samples = 2500;
  std::size_t n_features = 2;
  std::size_t n_batches = 50;
  std::size_t iterations = 1000;
  std::size_t seeds = 20;
  std::uint64_t seed = 0;
  bool interpolation = false;  // noise-free labels, so every batch shares x*
};

std::vector<SgdFiniteSumSeries> sgd_finite_sum_experiment(const std::vector<double>& Q_values,
                                                          const SgdFiniteSumConfig& cfg);

// --- logistic regression -----------------------------------------------------

/// Newton's method on the regularized loss.
Vector logreg_minimizer(const LogRegProblem& p, double tol = 1e-12, int max_iter = 100);

/// reg such that (lambda_max(data Hessian at 0) + reg) / reg == Q_target.
double tune_logreg_reg(const LogRegProblem& p, double Q_target);

struct LogRegSweepConfig {
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  double sigma = 1e-3;
  std::size_t hessian_every = 10;
  unsigned jobs = 1;
};

struct LogRegSweepResult {
  SweepGrid grid;             // theory evaluated at the estimated bounds
  SpectrumBounds estimated;   // extremes of Hessian eigenvalues seen in training
  Vector x_star;
  std::pair<double, double> hessian_at_optimum;  // (min, max) eigenvalue
};

LogRegSweepResult logreg_sweep(const LogRegProblem& p, const GridSpec& spec,
                               const LogRegSweepConfig& cfg);

struct TunedLogRegSweep {
  double reg = 0.0;
  int passes = 0;
  LogRegSweepResult result;
};

/// Repeats logreg_sweep, re-solving for reg after each pass, until the tracked
/// condition number is within rel_tol of Q_target (or max_passes is reached).
/// The first pass uses tune_logreg_reg.
TunedLogRegSweep tuned_logreg_sweep(LogRegProblem p, double Q_target, const GridSpec& spec,
                                    const LogRegSweepConfig& cfg, int max_passes = 4,
                                    double rel_tol = 0.1);

/// Best (smallest) fitted rate among non-diverged cells, optionally limited
/// to beta == 0 or beta > 0.
std::optional<double> best_rate(const SweepGrid& g, bool positive_beta);

// --- segment products --------------------------------------------------------

struct Lemma1Report {
  std::size_t patterns = 0;
  double max_relative_error = 0.0;
  double max_identity_residual = 0.0;  // B(L)B(mu)^k B(L) + r^{k+1} k B(L), k <= 10
};

Lemma1Report lemma1_validation(const std::vector<double>& Q_values, std::size_t n_patterns,
                               std::uint64_t seed, std::size_t max_segments = 5,
                               unsigned max_k = 6);

// --- validation suite --------------------------------------------------------

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fast property checks over the theory, linear algebra and optimizer.
std::vector<ValidationCheck> validation_suite(std::uint64_t seed);

}  // namespace momlab
