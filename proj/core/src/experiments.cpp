#include "momlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "momlab/error.hpp"
#include "momlab/rng.hpp"

namespace momlab {

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Least squares of log(values[i]) against i + offset.
LineFit fit_log_line(std::span<const double> values, double offset = 0.0) {
  const double n = static_cast<double>(values.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = static_cast<double>(i) + offset;
    const double y = std::log(std::max(values[i], std::numeric_limits<double>::min()));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  LineFit f;
  f.slope = denom > 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::optional<double> median_of(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Runs body(i) for i in [0, count) on `jobs` threads; each index is claimed once.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& body) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Vector axis(double lo, double hi, std::size_t count, bool log_spaced) {
  Vector v(count, lo);
  if (count == 1) return v;
  for (std::size_t i = 0; i < count; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(count - 1);
    v[i] = log_spaced ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f;
  }
  v.back() = hi;
  return v;
}

void apply_anchors(Vector& v, const std::vector<double>& anchors, bool log_metric) {
  std::vector<bool> taken(v.size(), false);
  for (double a : anchors) {
    if (v.empty() || a < v.front() || a > v.back()) continue;
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = log_metric ? std::abs(std::log(v[i] / a)) : std::abs(v[i] - a);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    if (taken[best]) continue;
    v[best] = a;
    taken[best] = true;
  }
}

Vector random_far_start(std::span<const double> x_star, double scale, Rng& rng) {
  Vector z(x_star.size());
  for (double& x : z) x = rng.normal();
  const double m = norm_inf(z);
  Vector x0(x_star.begin(), x_star.end());
  for (std::size_t i = 0; i < z.size(); ++i) x0[i] += scale * z[i] / m;
  return x0;
}

double rate_floor(std::span<const double> distances) {
  return std::max(5.0 * tail_mean(distances, 0.2), 1e-12);
}

}  // namespace

// ---------------------------------------------------------------------------
// Trajectory analysis

double tail_mean(std::span<const double> values, double tail_fraction) {
  if (values.empty()) throw TooFewPoints("tail_mean: empty series");
  if (!(tail_fraction > 0.0) || tail_fraction > 1.0)
    throw PreconditionError("tail_mean: tail_fraction must be in (0, 1]");
  const std::size_t len = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(values.size()))));
  const auto tail = values.subspan(values.size() - len);
  return std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(len);
}

double fit_linear_rate(std::span<const double> distances, double floor) {
  std::size_t end = 0;
  while (end < distances.size() && distances[end] >= floor) ++end;
  if (end < kMinFitPoints) {
    throw TooFewPoints("fit_linear_rate: " + std::to_string(end) +
                       " points above the floor, need " + std::to_string(kMinFitPoints));
  }
  return std::exp(fit_log_line(distances.first(end)).slope);
}

double fit_linear_rate(const Trajectory& t, double floor) {
  if (t.diverged()) throw PreconditionError("fit_linear_rate: trajectory diverged");
  return fit_linear_rate(t.distances, floor);
}

double estimate_neighborhood(const Trajectory& t, double sigma, double tail_fraction) {
  if (t.diverged()) throw PreconditionError("estimate_neighborhood: trajectory diverged");
  if (!(sigma > 0.0)) throw PreconditionError("estimate_neighborhood: sigma must be positive");
  const double mean = tail_mean(t.distances, tail_fraction);
  if (mean < 1e-10) return 0.0;
  const std::size_t len = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(t.size()))));
  const auto tail = std::span<const double>(t.distances).subspan(t.size() - len);
  const double slope = fit_log_line(tail).slope;
  if (std::abs(slope) > 0.002) {
    throw NonStationaryTail("estimate_neighborhood: tail log-slope " + std::to_string(slope));
  }
  return mean / sigma;
}

// ---------------------------------------------------------------------------
// Grids

void GridSpec::validate() const {
  if (n_alpha < 1 || n_beta < 1) throw PreconditionError("GridSpec: grid must be nonempty");
  if (!(alpha_lo > 0.0) || !(alpha_hi >= alpha_lo))
    throw PreconditionError("GridSpec: need 0 < alpha_lo <= alpha_hi");
  if (!(beta_hi >= beta_lo) || !(beta_lo > -1.0) || !(beta_hi < 1.0))
    throw PreconditionError("GridSpec: need -1 < beta_lo <= beta_hi < 1");
}

Vector GridSpec::alpha_values() const {
  Vector v = axis(alpha_lo, alpha_hi, n_alpha, alpha_log);
  apply_anchors(v, alpha_anchors, alpha_log);
  return v;
}

Vector GridSpec::beta_values() const {
  Vector v = axis(beta_lo, beta_hi, n_beta, false);
  apply_anchors(v, beta_anchors, false);
  return v;
}

GridSpec GridSpec::heatmap_default(const SpectrumBounds& b) {
  GridSpec g;
  g.alpha_lo = 0.01 / b.L;
  g.alpha_hi = 1.99 / b.L;
  g.alpha_anchors = {1.0 / b.L, 2.0 / (b.mu + b.L)};
  g.beta_anchors = {0.0, nesterov_defaults(b).beta};
  return g;
}

std::pair<std::size_t, std::size_t> SweepGrid::nearest(double alpha, double beta) const {
  auto closest = [](const Vector& v, double x, bool log_metric) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = log_metric ? std::abs(std::log(v[i] / x)) : std::abs(v[i] - x);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  };
  return {closest(alpha_values, alpha, true), closest(beta_values, beta, false)};
}

// ---------------------------------------------------------------------------
// Heatmap

SweepGrid heatmap_sweep(const Quadratic& q, const SpectrumBounds& b, const GridSpec& spec,
                        const HeatmapConfig& cfg) {
  spec.validate();
  b.validate();
  if (cfg.trials < 1) throw PreconditionError("heatmap_sweep: trials must be >= 1");
  if (!(cfg.sigma >= 0.0)) throw PreconditionError("heatmap_sweep: sigma must be >= 0");

  SweepGrid grid;
  grid.alpha_values = spec.alpha_values();
  grid.beta_values = spec.beta_values();
  grid.bounds = b;
  grid.cells.resize(grid.n_alpha() * grid.n_beta());

  const OracleConfig oracle{cfg.sigma > 0.0 ? OracleKind::gaussian : OracleKind::exact, cfg.sigma,
                            true};

  parallel_for(grid.cells.size(), cfg.jobs, [&](std::size_t cell) {
    const std::size_t ia = cell % grid.n_alpha();
    const std::size_t ib = cell / grid.n_alpha();
    const OptimizerParams p{grid.alpha_values[ia], grid.beta_values[ib]};
    CellResult res;
    res.theory = rate_report(b, p);
    res.trials = cfg.trials;

    std::vector<double> rates;
    std::vector<double> hoods;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      RunOptions ro;
      ro.iterations = cfg.iterations;
      ro.record.norm = NormKind::inf;
      ro.divergence_factor = cfg.divergence_factor;

      Rng start_rng(derive_seed(cfg.seed, cell, 3 * t));
      ro.x0 = random_far_start(q.x_star, cfg.far_start, start_rng);
      ro.seed = derive_seed(cfg.seed, cell, 3 * t + 1);
      const Trajectory rate_run = run(q, oracle, p, ro);

      ro.x0 = q.x_star;
      ro.seed = derive_seed(cfg.seed, cell, 3 * t + 2);
      const Trajectory hood_run = run(q, oracle, p, ro);

      if (rate_run.diverged() || hood_run.diverged()) {
        ++res.diverged_trials;
        continue;
      }
      try {
        rates.push_back(fit_linear_rate(rate_run, rate_floor(rate_run.distances)));
      } catch (const TooFewPoints&) {
        ++res.failed_fits;
      }
      if (cfg.sigma > 0.0) {
        try {
          hoods.push_back(estimate_neighborhood(hood_run, cfg.sigma, cfg.tail_fraction));
        } catch (const NonStationaryTail&) {
          ++res.failed_fits;
        }
      }
    }
    res.diverged = 2 * res.diverged_trials > res.trials;
    if (!res.diverged) {
      res.empirical_rate = mean_of(rates);
      res.empirical_rate_median = median_of(rates);
      res.empirical_neighborhood = mean_of(hoods);
      res.empirical_neighborhood_median = median_of(hoods);
    }
    grid.cells[cell] = std::move(res);
  });
  return grid;
}

std::vector<std::pair<double, double>> stability_contour(const Vector& alpha_values,
                                                         const Vector& beta_values,
                                                         const SpectrumBounds& b) {
  auto excess = [&](double a, double be) { return rho(b, {a, be}) - 1.0; };
  auto bisect = [&](double a0, double b0, double a1, double b1) {
    double lo = 0.0, hi = 1.0;
    const bool lo_stable = excess(a0, b0) < 0.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const bool stable = excess(a0 + mid * (a1 - a0), b0 + mid * (b1 - b0)) < 0.0;
      (stable == lo_stable ? lo : hi) = mid;
    }
    const double f = 0.5 * (lo + hi);
    return std::make_pair(a0 + f * (a1 - a0), b0 + f * (b1 - b0));
  };

  std::vector<std::pair<double, double>> pts;
  for (std::size_t ib = 0; ib < beta_values.size(); ++ib)
    for (std::size_t ia = 0; ia < alpha_values.size(); ++ia) {
      const double a = alpha_values[ia];
      const double be = beta_values[ib];
      const bool here = excess(a, be) < 0.0;
      if (ia + 1 < alpha_values.size() && here != (excess(alpha_values[ia + 1], be) < 0.0))
        pts.push_back(bisect(a, be, alpha_values[ia + 1], be));
      if (ib + 1 < beta_values.size() && here != (excess(a, beta_values[ib + 1]) < 0.0))
        pts.push_back(bisect(a, be, a, beta_values[ib + 1]));
    }
  std::sort(pts.begin(), pts.end(), [](const auto& x, const auto& y) {
    return x.second != y.second ? x.second < y.second : x.first < y.first;
  });
  return pts;
}

// ---------------------------------------------------------------------------
// Divergence example

std::vector<DivergenceSeries> divergence_experiment(const std::vector<std::size_t>& n_values,
                                                    const SpectrumBounds& b,
                                                    const DivergenceConfig& cfg) {
  b.validate();
  const OptimizerParams p = nesterov_defaults(b);
  std::vector<DivergenceSeries> out;
  for (std::size_t n : n_values) {
    const FiniteSumProblem fs = counterexample_finite_sum(n, b.mu, b.L);
    DivergenceSeries series;
    series.n = n;
    series.divergence_factor = divergence_factor(b, n);
    series.predicted_exponent = std::log(series.divergence_factor);

    double exponent_sum = 0.0;
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
      RunOptions ro;
      ro.iterations = cfg.iterations;
      ro.seed = derive_seed(cfg.seed, n, s);
      ro.divergence_factor = cfg.divergence_factor;
      ro.record = {NormKind::two, true, true, true, true, true};
      DivergenceRun dr;
      dr.trajectory = run(fs, {OracleKind::minibatch, 0.0, true}, p, ro);
      const Trajectory& t = dr.trajectory;

      for (std::size_t j = 0; j < t.sampled_batches.size(); ++j)
        if (t.sampled_batches[j] + 1 == n) dr.inconsistent_events.push_back(j + 1);
      dr.opposite_sign.resize(t.gradients.size());
      for (std::size_t j = 0; j < t.gradients.size(); ++j) {
        const double v = t.velocity[j][2];
        const double g = t.gradients[j][2];
        dr.opposite_sign[j] = (v > 0.0 && g < 0.0) || (v < 0.0 && g > 0.0);
      }
      const auto& sn = t.state_norms;
      if (sn.size() >= 2)
        dr.growth_exponent = (std::log(sn.back()) - std::log(sn.front())) /
                             static_cast<double>(sn.size() - 1);
      dr.converged = !t.diverged() && t.distances.back() < t.distances.front();

      series.diverged_count += t.diverged() ? 1 : 0;
      series.converged_count += dr.converged ? 1 : 0;
      exponent_sum += dr.growth_exponent;
      series.runs.push_back(std::move(dr));
    }
    if (cfg.seeds > 0) series.mean_growth_exponent = exponent_sum / static_cast<double>(cfg.seeds);
    out.push_back(std::move(series));
  }
  return out;
}

// ---------------------------------------------------------------------------
// SGD on finite sums

std::vector<SgdFiniteSumSeries> sgd_finite_sum_experiment(const std::vector<double>& Q_values,
                                                          const SgdFiniteSumConfig& cfg) {
  if (cfg.seeds < 1 || cfg.iterations < 1)
    throw PreconditionError("sgd_finite_sum_experiment: need seeds >= 1 and iterations >= 1");
  std::vector<SgdFiniteSumSeries> out;
  for (std::size_t qi = 0; qi < Q_values.size(); ++qi) {
    const double Q = Q_values[qi];
    const FiniteSumProblem fs =
        partitioned_least_squares(derive_seed(cfg.seed, 0x5150, qi), cfg.n_samples,
                                  cfg.n_features, cfg.n_batches, Q,
                                  cfg.interpolation ? 0.0 : 0.01);
    const SpectrumBounds b = fs.bounds();
    SgdFiniteSumSeries series;
    series.Q = Q;
    series.alpha = 2.0 / (b.mu + b.L);
    series.rate_theory = sgd_finite_sum_rate(b, series.alpha);
    series.sigma_star = sigma_star(fs);

    std::vector<double> mean(cfg.iterations, 0.0);
    double initial = 0.0;
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
      RunOptions ro;
      ro.iterations = cfg.iterations;
      ro.seed = derive_seed(cfg.seed, qi, s);
      const Trajectory t = run(fs, {OracleKind::minibatch, 0.0, false}, {series.alpha, 0.0}, ro);
      if (t.diverged()) throw InternalError("sgd_finite_sum_experiment: run diverged");
      for (std::size_t k = 0; k < cfg.iterations; ++k) mean[k] += t.distances[k];
      initial = t.initial_distance;
    }
    for (double& m : mean) m /= static_cast<double>(cfg.seeds);

    series.checks.reserve(cfg.iterations);
    for (std::size_t k = 0; k < cfg.iterations; ++k) {
      const double bound = sgd_finite_sum_bound(b, series.alpha, k, initial, series.sigma_star);
      series.checks.push_back({k, mean[k], bound});
      if (mean[k] > bound) ++series.violations;
    }
    try {
      series.fitted_rate = fit_linear_rate(mean, rate_floor(mean));
    } catch (const TooFewPoints&) {
      series.fitted_rate.reset();
    }
    out.push_back(std::move(series));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Logistic regression

Vector logreg_minimizer(const LogRegProblem& p, double tol, int max_iter) {
  p.validate();
  Vector w(p.dim(), 0.0);
  for (int it = 0; it < max_iter; ++it) {
    const Vector g = logreg_gradient(p, w);
    if (norm2(g) <= tol) return w;
    const Vector step = solve_spd(logreg_hessian(p, w), g);
    const double f0 = logreg_loss(p, w);
    const double slope = dot(g, step);
    double t = 1.0;
    Vector trial(w.size());
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < w.size(); ++i) trial[i] = w[i] - t * step[i];
      if (logreg_loss(p, trial) <= f0 - 1e-4 * t * slope) break;
      t *= 0.5;
    }
    if (w == trial) return w;
    w = trial;
  }
  const double gn = norm2(logreg_gradient(p, w));
  if (gn <= std::max(tol, 1e-10)) return w;
  throw ConvergenceError("logreg_minimizer: gradient norm " + std::to_string(gn) +
                         " after " + std::to_string(max_iter) + " Newton steps");
}

double tune_logreg_reg(const LogRegProblem& p, double Q_target) {
  if (!(Q_target > 1.0)) throw PreconditionError("tune_logreg_reg: Q_target must exceed 1");
  const Vector zero(p.dim(), 0.0);
  const EigenDecomp eig = sym_eigen(logreg_hessian(p, zero, 0.0));
  return eig.eigenvalues.back() / (Q_target - 1.0);
}

LogRegSweepResult logreg_sweep(const LogRegProblem& p, const GridSpec& spec,
                               const LogRegSweepConfig& cfg) {
  p.validate();
  spec.validate();
  if (cfg.hessian_every < 1) throw PreconditionError("logreg_sweep: hessian_every must be >= 1");

  LogRegSweepResult out;
  out.x_star = logreg_minimizer(p);
  {
    const EigenDecomp eig = sym_eigen(logreg_hessian(p, out.x_star));
    out.hessian_at_optimum = {eig.eigenvalues.front(), eig.eigenvalues.back()};
  }
  SweepGrid& grid = out.grid;
  grid.alpha_values = spec.alpha_values();
  grid.beta_values = spec.beta_values();
  grid.cells.resize(grid.n_alpha() * grid.n_beta());
  std::vector<std::pair<double, double>> windows(grid.cells.size(),
                                                 {out.hessian_at_optimum.first,
                                                  out.hessian_at_optimum.second});

  const OracleConfig oracle{cfg.sigma > 0.0 ? OracleKind::gaussian : OracleKind::exact, cfg.sigma,
                            true};
  parallel_for(grid.cells.size(), cfg.jobs, [&](std::size_t cell) {
    const std::size_t ia = cell % grid.n_alpha();
    const std::size_t ib = cell / grid.n_alpha();
    const OptimizerParams params{grid.alpha_values[ia], grid.beta_values[ib]};
    auto& window = windows[cell];

    RunOptions ro;
    ro.iterations = cfg.iterations;
    ro.seed = derive_seed(cfg.seed, cell, 0);
    ro.record.norm = NormKind::inf;
    ro.observer = [&](std::size_t k, std::span<const double> y) {
      if ((k - 1) % cfg.hessian_every != 0) return;
      const EigenDecomp eig = sym_eigen(logreg_hessian(p, y));
      window.first = std::min(window.first, eig.eigenvalues.front());
      window.second = std::max(window.second, eig.eigenvalues.back());
    };
    const Trajectory t = run(p, out.x_star, oracle, params, ro);

    CellResult res;
    res.trials = 1;
    if (t.diverged()) {
      res.diverged = true;
      res.diverged_trials = 1;
    } else {
      try {
        res.empirical_rate = fit_linear_rate(t, rate_floor(t.distances));
        res.empirical_rate_median = res.empirical_rate;
      } catch (const TooFewPoints&) {
        ++res.failed_fits;
      }
      if (cfg.sigma > 0.0) {
        try {
          res.empirical_neighborhood = estimate_neighborhood(t, cfg.sigma);
          res.empirical_neighborhood_median = res.empirical_neighborhood;
        } catch (const NonStationaryTail&) {
          ++res.failed_fits;
        }
      }
    }
    grid.cells[cell] = std::move(res);
  });

  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& [wlo, whi] : windows) {
    lo = std::min(lo, wlo);
    hi = std::max(hi, whi);
  }
  out.estimated = {lo, hi};
  grid.bounds = out.estimated;
  for (std::size_t cell = 0; cell < grid.cells.size(); ++cell) {
    const std::size_t ia = cell % grid.n_alpha();
    const std::size_t ib = cell / grid.n_alpha();
    grid.cells[cell].theory = rate_report(out.estimated, {grid.alpha_values[ia], grid.beta_values[ib]});
  }
  return out;
}

TunedLogRegSweep tuned_logreg_sweep(LogRegProblem p, double Q_target, const GridSpec& spec,
                                    const LogRegSweepConfig& cfg, int max_passes, double rel_tol) {
  if (max_passes < 1) throw PreconditionError("tuned_logreg_sweep: max_passes must be >= 1");
  if (!(rel_tol > 0.0)) throw PreconditionError("tuned_logreg_sweep: rel_tol must be positive");
  p.reg = tune_logreg_reg(p, Q_target);
  TunedLogRegSweep out;
  for (int pass = 1; pass <= max_passes; ++pass) {
    out.result = logreg_sweep(p, spec, cfg);
    out.reg = p.reg;
    out.passes = pass;
    const SpectrumBounds& est = out.result.estimated;
    if (std::abs(est.Q() / Q_target - 1.0) <= rel_tol) break;
    // Tracked extremes are (data extreme + reg); solve (Ld + r) / (md + r) = Q_target.
    const double data_hi = est.L - p.reg;
    const double data_lo = std::max(est.mu - p.reg, 0.0);
    const double next = (data_hi - Q_target * data_lo) / (Q_target - 1.0);
    if (!(next > 0.0)) break;
    p.reg = next;
  }
  return out;
}

std::optional<double> best_rate(const SweepGrid& g, bool positive_beta) {
  std::optional<double> best;
  for (std::size_t ib = 0; ib < g.n_beta(); ++ib) {
    const double be = g.beta_values[ib];
    if (positive_beta ? !(be > 0.0) : be != 0.0) continue;
    for (std::size_t ia = 0; ia < g.n_alpha(); ++ia) {
      const CellResult& c = g.at(ia, ib);
      if (c.diverged || !c.empirical_rate) continue;
      if (!best || *c.empirical_rate < *best) best = *c.empirical_rate;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Segment products

Lemma1Report lemma1_validation(const std::vector<double>& Q_values, std::size_t n_patterns,
                               std::uint64_t seed, std::size_t max_segments, unsigned max_k) {
  if (Q_values.empty()) throw PreconditionError("lemma1_validation: need at least one Q");
  if (max_segments < 1 || max_k < 1)
    throw PreconditionError("lemma1_validation: max_segments and max_k must be >= 1");
  Lemma1Report rep;
  Rng rng(seed);
  for (std::size_t i = 0; i < n_patterns; ++i) {
    const SpectrumBounds b = SpectrumBounds::from_condition(Q_values[i % Q_values.size()]);
    const std::size_t s = 1 + rng.uniform_index(max_segments);
    std::vector<unsigned> ks(s);
    for (unsigned& k : ks) k = 1 + static_cast<unsigned>(rng.uniform_index(max_k));
    const SegmentPattern pattern(ks);
    const double closed = lemma1_rho(b, pattern);
    const double numeric = spectral_radius2(lemma1_product(b, pattern));
    const double err = closed == 0.0 ? std::abs(numeric) : std::abs(numeric - closed) / closed;
    rep.max_relative_error = std::max(rep.max_relative_error, err);
    ++rep.patterns;
  }
  for (double Q : Q_values) {
    const SpectrumBounds b = SpectrumBounds::from_condition(Q);
    const OptimizerParams p = nesterov_defaults(b);
    const double sq = std::sqrt(Q);
    const double r = (sq - 1.0) / sq;
    const Mat2 bl = b_matrix(b.L, p);
    const Mat2 bm = b_matrix(b.mu, p);
    for (unsigned k = 1; k <= 10; ++k) {
      const Mat2 lhs = bl * power(bm, k) * bl;
      const Mat2 rhs = (-std::pow(r, k + 1) * k) * bl;
      rep.max_identity_residual = std::max(rep.max_identity_residual, (lhs - rhs).max_abs_entry());
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Validation suite

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

ValidationCheck check(std::string name, bool ok, std::string detail) {
  return {std::move(name), ok, std::move(detail)};
}

}  // namespace

std::vector<ValidationCheck> validation_suite(std::uint64_t seed) {
  std::vector<ValidationCheck> out;
  Rng rng(seed);

  {
    double worst = 0.0;
    for (double Q : {2.0, 4.0, 8.0, 32.0, 2000.0}) {
      const SpectrumBounds b = SpectrumBounds::from_condition(Q);
      const double sq = std::sqrt(Q);
      worst = std::max(worst, std::abs(rho(b, nesterov_defaults(b)) - (sq - 1.0) / sq));
    }
    out.push_back(check("nesterov_rate_identity", worst < 1e-12, "max error " + fmt(worst)));
  }
  {
    double worst_rho = 0.0, worst_R = 0.0;
    const SpectrumBounds b = SpectrumBounds::from_condition(50.0);
    for (int i = 0; i < 1000; ++i) {
      const double lam = b.mu + (b.L - b.mu) * rng.uniform();
      const OptimizerParams p{2.0 / b.L * (1.0 - rng.uniform()), -0.95 + 1.9 * rng.uniform()};
      const Mat2 m = b_matrix(lam, p);
      worst_rho = std::max(worst_rho, std::abs(rho_lambda(lam, p) - spectral_radius2(m)));
      worst_R = std::max(worst_R, std::abs(big_R_lambda(lam, p) - spectral_norm2(m)));
    }
    out.push_back(check("rho_lambda_matches_eig2", worst_rho < 1e-12, "max error " + fmt(worst_rho)));
    out.push_back(check("big_R_lambda_matches_norm", worst_R < 1e-12, "max error " + fmt(worst_R)));
  }
  {
    const Lemma1Report rep = lemma1_validation({4.0, 16.0, 100.0}, 200, rng.next_u64());
    out.push_back(check("segment_product_radius", rep.max_relative_error < 1e-8,
                        "max relative error " + fmt(rep.max_relative_error)));
    out.push_back(check("segment_product_identity", rep.max_identity_residual < 1e-10,
                        "max residual " + fmt(rep.max_identity_residual)));
  }
  {
    double worst = 0.0;
    for (double Q : {4.0, 16.0}) {
      const SpectrumBounds b = SpectrumBounds::from_condition(Q);
      const Mat2 bm = b_matrix(b.mu, nesterov_defaults(b));
      Mat2 acc = Mat2::identity();
      for (unsigned k = 1; k <= 50; ++k) {
        acc = acc * bm;
        const Mat2 closed = b_mu_power_closed_form(b, k);
        worst = std::max(worst, (acc - closed).max_abs_entry() / acc.max_abs_entry());
      }
    }
    out.push_back(check("jordan_power_closed_form", worst < 1e-10, "max relative error " + fmt(worst)));
  }
  {
    const std::size_t d = 5;
    const SpectrumBounds b{0.1, 1.0};
    const OptimizerParams p = nesterov_defaults(b);
    Matrix u(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) u(i, j) = rng.normal();
    orthonormalize_columns(u);
    Matrix h(d, d);
    Vector lam(d);
    for (double& l : lam) l = b.mu + (b.L - b.mu) * rng.uniform();
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) acc += u(i, k) * lam[k] * u(j, k);
        h(i, j) = acc;
      }
    const SymMatrix H = SymMatrix::from_upper(h);
    const EigenDecomp eig = sym_eigen(H);
    const std::vector<Mat2> blocks = block_diagonalize(eig, p.alpha, p.beta);
    Matrix w(2 * d, 2 * d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        w(i, j) = eig.eigenvectors(i, j);
        w(d + i, d + j) = eig.eigenvectors(i, j);
      }
    const Matrix conj = build_permutation(d).conjugate(w.transpose() * transition_matrix(H, p.alpha, p.beta) * w);
    double worst = 0.0;
    for (std::size_t i = 0; i < 2 * d; ++i)
      for (std::size_t j = 0; j < 2 * d; ++j) {
        double expect = 0.0;
        if (i / 2 == j / 2) {
          const Mat2& blk = blocks[i / 2];
          const std::size_t r = i % 2, c = j % 2;
          expect = r == 0 ? (c == 0 ? blk.a11 : blk.a12) : (c == 0 ? blk.a21 : blk.a22);
        }
        worst = std::max(worst, std::abs(conj(i, j) - expect));
      }
    out.push_back(check("block_diagonalization", worst < 1e-10, "max residual " + fmt(worst)));
  }
  {
    const Quadratic q = random_least_squares(rng.next_u64(), 40, 6, 10.0);
    const SpectrumBounds b = q.bounds;
    const OptimizerParams p = nesterov_defaults(b);
    Rng noise(rng.next_u64());
    OptState s = OptState::start(Vector(q.dim(), 1.0));
    StateSpaceVec z = StateSpaceVec::start(s.x_curr, q.x_star);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Vector y = peek_y(s, p);
      GradientSample g = grad_gaussian(q, y, 0.1, noise);
      s = asg_step(s, g, p);
      z = state_space_step(z, g, p);
      const Vector y_next = peek_y(s, p);
      for (std::size_t i = 0; i < q.dim(); ++i) {
        const double ref = std::max(1.0, std::abs(y_next[i]));
        worst = std::max(worst, std::abs(z.r[i] + q.x_star[i] - y_next[i]) / ref);
      }
    }
    out.push_back(check("dual_path_equivalence", worst < 1e-9, "max relative gap " + fmt(worst)));
  }
  {
    Rng srng(rng.next_u64());
    const auto sched = sampling_schedule(5, 2, 20000, srng, true);
    bool repeats = false;
    std::vector<double> freq(5, 0.0);
    for (std::size_t k = 0; k < sched.size(); ++k) {
      if (k > 0 && sched[k] == sched[k - 1]) repeats = true;
      for (std::size_t i : sched[k].indices()) freq[i] += 1.0;
    }
    double worst = 0.0;
    for (double f : freq) worst = std::max(worst, std::abs(f / (2.0 * 20000.0) - 0.2));
    out.push_back(check("sampling_no_repeat", !repeats && worst < 0.01,
                        "max marginal deviation " + fmt(worst)));
  }
  {
    const SpectrumBounds b{0.05, 100.0};
    const double f50 = divergence_factor(b, 50);
    const double f1000 = divergence_factor(b, 1000);
    out.push_back(check("divergence_factor_values",
                        std::abs(f50 - 1.05678) < 1e-4 && std::abs(f1000 - 0.98441) < 1e-4,
                        "n=50: " + fmt(f50) + ", n=1000: " + fmt(f1000)));
  }
  return out;
}

}  // namespace momlab
