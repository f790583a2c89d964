#include "momlab/optim.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "momlab/error.hpp"

namespace momlab {

namespace {

void require_dim(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw DimensionMismatch(std::string(what) + ": expected dimension " +
                            std::to_string(expected) + ", got " + std::to_string(got));
  }
}

void require_finite(std::span<const double> g) {
  for (double x : g)
    if (!std::isfinite(x)) throw PreconditionError("non-finite gradient");
}

void extrapolate(std::span<const double> x_curr, std::span<const double> x_prev, double beta,
                 std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x_curr[i] + beta * (x_curr[i] - x_prev[i]);
}

// Shared driver: `oracle(k, y)` returns the gradient sample for iteration k.
template <class Oracle>
Trajectory drive(std::span<const double> x_star, const OptimizerParams& p, const RunOptions& opts,
                 Oracle&& oracle) {
  if (opts.iterations < 1) throw PreconditionError("run: iterations must be >= 1");
  const std::size_t d = x_star.size();
  Vector x0 = opts.x0.empty() ? Vector(d, 0.0) : opts.x0;
  require_dim(d, x0.size(), "run: x0");

  Trajectory t;
  t.norm = opts.record.norm;
  t.seed = opts.seed;
  t.params = p;
  t.initial_distance = norm2(subtract(x0, x_star));
  const double threshold = opts.divergence_factor * (1.0 + t.initial_distance);
  t.distances.reserve(opts.iterations);

  OptState s = OptState::start(std::move(x0));
  Vector y(d);
  Vector err(d);
  for (std::size_t k = 1; k <= opts.iterations; ++k) {
    extrapolate(s.x_curr, s.x_prev, p.beta, y);
    for (std::size_t i = 0; i < d; ++i) err[i] = y[i] - x_star[i];
    const double dist2 = norm2(err);
    t.distances.push_back(opts.record.norm == NormKind::two ? dist2 : norm_inf(err));

    if (opts.record.state_norms) {
      double acc = dist2 * dist2;
      for (std::size_t i = 0; i < d; ++i) {
        const double v = s.x_curr[i] - s.x_prev[i];
        acc += v * v;
      }
      t.state_norms.push_back(std::sqrt(acc));
    }
    if (opts.record.per_coordinate) t.per_coordinate.push_back(err);
    if (opts.record.velocity) t.velocity.push_back(subtract(s.x_curr, s.x_prev));

    if (!std::isfinite(dist2) || dist2 > threshold) {
      t.diverged_at = k;
      break;
    }
    if (opts.observer) opts.observer(k, y);

    GradientSample g;
    try {
      g = oracle(k, y);
      s = asg_step(s, g, p);
    } catch (const IterationError&) {
      throw;
    } catch (const Error& e) {
      throw IterationError(k, e.what());
    }
    if (opts.record.gradients) t.gradients.push_back(g.value);
    if (opts.record.batches && g.batch) t.sampled_batches.push_back(g.batch->indices().front());
  }
  return t;
}

}  // namespace

OptState OptState::start(Vector x0) {
  OptState s;
  s.x_prev = x0;
  s.x_curr = std::move(x0);
  return s;
}

Vector peek_y(const OptState& s, const OptimizerParams& p) {
  require_dim(s.x_curr.size(), s.x_prev.size(), "peek_y");
  Vector y(s.x_curr.size());
  extrapolate(s.x_curr, s.x_prev, p.beta, y);
  return y;
}

OptState asg_step(const OptState& s, const GradientSample& g, const OptimizerParams& p) {
  require_dim(s.x_curr.size(), g.value.size(), "asg_step");
  require_finite(g.value);
  OptState next;
  next.x_prev = s.x_curr;
  next.x_curr = peek_y(s, p);
  for (std::size_t i = 0; i < next.x_curr.size(); ++i) next.x_curr[i] -= p.alpha * g.value[i];
  next.k = s.k + 1;
  return next;
}

StateSpaceVec StateSpaceVec::start(std::span<const double> x0, std::span<const double> x_star) {
  return {subtract(x0, x_star), Vector(x0.size(), 0.0)};
}

StateSpaceVec state_space_step(const StateSpaceVec& z, const GradientSample& g,
                               const OptimizerParams& p) {
  require_dim(z.r.size(), z.v.size(), "state_space_step");
  require_dim(z.r.size(), g.value.size(), "state_space_step");
  require_finite(g.value);
  const double b2 = p.beta * p.beta;
  const double ar = p.alpha * (1.0 + p.beta);
  StateSpaceVec out{Vector(z.r.size()), Vector(z.v.size())};
  for (std::size_t i = 0; i < z.r.size(); ++i) {
    out.r[i] = z.r[i] + b2 * z.v[i] - ar * g.value[i];
    out.v[i] = p.beta * z.v[i] - p.alpha * g.value[i];
  }
  return out;
}

double measure(std::span<const double> v, NormKind norm) {
  return norm == NormKind::two ? norm2(v) : norm_inf(v);
}

Trajectory run(const Quadratic& q, const OracleConfig& oracle, const OptimizerParams& p,
               const RunOptions& opts) {
  switch (oracle.kind) {
    case OracleKind::exact:
      return drive(q.x_star, p, opts,
                   [&](std::size_t, std::span<const double> y) { return grad_exact(q, y); });
    case OracleKind::gaussian: {
      Rng rng(opts.seed);
      return drive(q.x_star, p, opts, [&](std::size_t, std::span<const double> y) {
        return grad_gaussian(q, y, oracle.sigma, rng);
      });
    }
    case OracleKind::minibatch:
      break;
  }
  throw UnsupportedProblem("run: a single quadratic has no mini-batches");
}

Trajectory run(const FiniteSumProblem& fs, const OracleConfig& oracle, const OptimizerParams& p,
               const RunOptions& opts) {
  switch (oracle.kind) {
    case OracleKind::exact:
      return drive(fs.aggregate.x_star, p, opts, [&](std::size_t, std::span<const double> y) {
        return grad_exact(fs.aggregate, y);
      });
    case OracleKind::minibatch: {
      Rng rng(opts.seed);
      BatchSampler sampler(fs.n(), fs.minibatch, oracle.no_repeat, rng);
      return drive(fs.aggregate.x_star, p, opts, [&](std::size_t, std::span<const double> y) {
        return grad_minibatch(fs, y, sampler.next());
      });
    }
    case OracleKind::gaussian: {
      Rng rng(opts.seed);
      return drive(fs.aggregate.x_star, p, opts, [&](std::size_t, std::span<const double> y) {
        return grad_gaussian(fs.aggregate, y, oracle.sigma, rng);
      });
    }
  }
  throw InternalError("run: unknown oracle kind");
}

Trajectory run(const LogRegProblem& lr, std::span<const double> x_star, const OracleConfig& oracle,
               const OptimizerParams& p, const RunOptions& opts) {
  require_dim(lr.dim(), x_star.size(), "run: logistic minimizer");
  switch (oracle.kind) {
    case OracleKind::exact:
      return drive(x_star, p, opts,
                   [&](std::size_t, std::span<const double> y) { return grad_exact(lr, y); });
    case OracleKind::gaussian: {
      Rng rng(opts.seed);
      return drive(x_star, p, opts, [&](std::size_t, std::span<const double> y) {
        return grad_gaussian(lr, y, oracle.sigma, rng);
      });
    }
    case OracleKind::minibatch:
      break;
  }
  throw UnsupportedProblem("run: logistic regression is run with exact or gaussian oracles");
}

}  // namespace momlab
