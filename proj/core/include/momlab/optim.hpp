#pragma once

// The accelerated stochastic gradient iteration
//   y_{k+1} = x_k + beta (x_k - x_{k-1}),  x_{k+1} = y_{k+1} - alpha g_{k+1},
// its equivalent error-coordinate recursion, and a recording driver.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "momlab/linalg.hpp"
#include "momlab/problems.hpp"
#include "momlab/theory.hpp"

namespace momlab {

struct OptState {
  Vector x_curr;
  Vector x_prev;
  std::size_t k = 0;

  /// State at k = 0 with x_{-1} = x_0.
  static OptState start(Vector x0);
};

/// The extrapolated point y_{k+1} at which the next gradient is evaluated.
Vector peek_y(const OptState& s, const OptimizerParams& p);

/// Advances the state with a gradient evaluated at peek_y(s, p). Throws
/// DimensionMismatch or PreconditionError (non-finite gradient).
OptState asg_step(const OptState& s, const GradientSample& g, const OptimizerParams& p);

/// Error coordinates r_k = y_k - x* and v_{k-1} = x_{k-1} - x_{k-2}.
struct StateSpaceVec {
  Vector r;
  Vector v;

  /// r_1 = x_0 - x*, v_0 = 0.
  static StateSpaceVec start(std::span<const double> x0, std::span<const double> x_star);
};

/// r_{k+1} = r_k + beta^2 v_{k-1} - alpha (1 + beta) g_k,  v_k = beta v_{k-1} - alpha g_k,
/// with g_k evaluated at y_k = r_k + x*.
StateSpaceVec state_space_step(const StateSpaceVec& z, const GradientSample& g,
                               const OptimizerParams& p);

enum class NormKind { two, inf };

double measure(std::span<const double> v, NormKind norm);

struct RecordOptions {
  NormKind norm = NormKind::two;
  bool state_norms = false;     // ||(r_k, v_{k-1})||_2
  bool per_coordinate = false;  // y_k - x*
  bool velocity = false;        // v_{k-1} = x_{k-1} - x_{k-2}
  bool gradients = false;       // g_k
  bool batches = false;         // first index of each sampled batch
};

enum class OracleKind { exact, gaussian, minibatch };

struct OracleConfig {
  OracleKind kind = OracleKind::exact;
  double sigma = 0.0;      // gaussian only
  bool no_repeat = true;   // minibatch only
};

inline constexpr double kDefaultDivergenceFactor = 1e12;

struct RunOptions {
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  Vector x0;  // empty means the origin
  RecordOptions record;
  // The run stops once ||y_k - x*||_2 > divergence_factor (1 + ||x_0 - x*||_2).
  double divergence_factor = kDefaultDivergenceFactor;
  // Called with (k, y_k) before each gradient evaluation.
  std::function<void(std::size_t, std::span<const double>)> observer;
};

/// Recorded run. Entry j of each per-iteration series refers to iteration
/// k = j + 1, i.e. the point y_k at which the k-th gradient was evaluated.
struct Trajectory {
  std::vector<double> distances;
  NormKind norm = NormKind::two;
  std::vector<double> state_norms;
  std::vector<std::size_t> sampled_batches;
  std::vector<Vector> per_coordinate;
  std::vector<Vector> velocity;
  std::vector<Vector> gradients;
  std::optional<std::size_t> diverged_at;  // iteration k at which the guard fired
  std::uint64_t seed = 0;
  OptimizerParams params;
  std::string problem_digest;
  double initial_distance = 0.0;  // ||x_0 - x*||_2

  bool diverged() const noexcept { return diverged_at.has_value(); }
  std::size_t size() const noexcept { return distances.size(); }
};

Trajectory run(const Quadratic& q, const OracleConfig& oracle, const OptimizerParams& p,
               const RunOptions& opts);

/// Mini-batches of size fs.minibatch (OracleKind::minibatch), or the full
/// aggregate gradient (OracleKind::exact).
Trajectory run(const FiniteSumProblem& fs, const OracleConfig& oracle, const OptimizerParams& p,
               const RunOptions& opts);

/// Logistic regression has no closed-form minimizer; the caller supplies it.
Trajectory run(const LogRegProblem& lr, std::span<const double> x_star, const OracleConfig& oracle,
               const OptimizerParams& p, const RunOptions& opts);

}  // namespace momlab
