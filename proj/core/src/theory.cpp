#include "momlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "momlab/error.hpp"
#include "momlab/problems.hpp"

namespace momlab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Rounding noise in a discriminant assembled from terms of this magnitude.
bool within_rounding(double value, double scale) { return std::abs(value) <= 8.0 * kEps * scale; }

}  // namespace

void OptimizerParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw PreconditionError("alpha must be a positive finite number, got " + std::to_string(alpha));
  if (!(std::abs(beta) < 1.0))
    throw PreconditionError("beta must satisfy |beta| < 1, got " + std::to_string(beta));
}

void SpectrumBounds::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw PreconditionError("mu must be positive, got " + std::to_string(mu));
  if (!(L >= mu) || !std::isfinite(L))
    throw PreconditionError("L must satisfy L >= mu, got " + std::to_string(L));
}

SpectrumBounds SpectrumBounds::from_condition(double Q, double L) {
  if (!(Q >= 1.0)) throw PreconditionError("condition number must be >= 1");
  if (!(L > 0.0)) throw PreconditionError("L must be positive");
  return {L / Q, L};
}

std::optional<double> RateReport::neighborhood() const {
  if (!stable || !variance_coeff || !c_epsilon) return std::nullopt;
  return std::sqrt(*c_epsilon * *variance_coeff);
}

SegmentPattern::SegmentPattern(std::vector<unsigned> k_list) : k_(std::move(k_list)) {
  if (k_.empty()) throw PreconditionError("SegmentPattern: need at least one segment");
  for (unsigned k : k_)
    if (k == 0) throw PreconditionError("SegmentPattern: every k must be >= 1");
}

unsigned SegmentPattern::k_total() const noexcept {
  unsigned t = static_cast<unsigned>(k_.size());
  for (unsigned k : k_) t += k;
  return t;
}

double delta_lambda(double lambda, const OptimizerParams& p) {
  const double u = 1.0 - p.alpha * lambda;
  const double a = 1.0 + p.beta;
  return a * a * u * u - 4.0 * p.beta * u;
}

double rho_lambda(double lambda, const OptimizerParams& p) {
  const double u = 1.0 - p.alpha * lambda;
  const double a = 1.0 + p.beta;
  const double lead = a * a * u * u;
  const double cross = 4.0 * p.beta * u;
  double delta = lead - cross;
  if (within_rounding(delta, lead + std::abs(cross))) delta = 0.0;

  if (delta >= 0.0) return 0.5 * std::abs(a * u) + 0.5 * std::sqrt(delta);
  const double prod = p.beta * u;
  if (prod < 0.0) {
    throw InternalError("rho_lambda: negative discriminant with beta (1 - alpha lambda) < 0");
  }
  return std::sqrt(prod);
}

double rho(const SpectrumBounds& b, const OptimizerParams& p) {
  return std::max(rho_lambda(b.mu, p), rho_lambda(b.L, p));
}

double variance_coeff(const SpectrumBounds& b, const OptimizerParams& p) {
  const double r = rho(b, p);
  if (!(r < 1.0)) {
    throw OutOfRegionError("variance_coeff: parameters are unstable (rho = " +
                           std::to_string(r) + ")");
  }
  const double a = 1.0 + p.beta;
  return p.alpha * p.alpha * (a * a + 1.0) / (1.0 - r * r);
}

double sgd_variance_coeff(const SpectrumBounds& b, double alpha) {
  const double r = sgd_finite_sum_rate(b, alpha);
  return alpha * alpha / (1.0 - r * r);
}

double c_epsilon_estimate(double norm_A, double rho) {
  if (rho < 0.0) throw PreconditionError("c_epsilon_estimate: rho must be >= 0");
  if (norm_A < rho * (1.0 - 1e-12))
    throw PreconditionError("c_epsilon_estimate: norm must dominate the spectral radius");
  return 1.0 + (1.0 - rho * rho) * (norm_A * norm_A - rho * rho);
}

OptimizerParams nesterov_defaults(const SpectrumBounds& b) {
  b.validate();
  const double sq = std::sqrt(b.Q());
  return {1.0 / b.L, (sq - 1.0) / (sq + 1.0)};
}

double big_R_lambda(double lambda, const OptimizerParams& p) {
  const double al = p.alpha * lambda;
  const double b2 = p.beta * p.beta;
  const double t = 1.0 - (1.0 + p.beta) * al;
  const double c = t * t + al * al + b2 * (b2 + 1.0);
  const double u = 1.0 - al;
  double disc = c * c - 4.0 * b2 * u * u;
  if (disc < 0.0) {
    if (!within_rounding(disc, c * c + 4.0 * b2 * u * u))
      throw InternalError("big_R_lambda: negative Gram discriminant");
    disc = 0.0;
  }
  return std::sqrt(0.5 * (c + std::sqrt(disc)));
}

double big_R(const SpectrumBounds& b, const OptimizerParams& p) {
  double best = std::max(big_R_lambda(b.mu, p), big_R_lambda(b.L, p));
  if (b.L == b.mu) return best;
  const double log_lo = std::log(b.mu);
  const double step = (std::log(b.L) - log_lo) / static_cast<double>(kBigRGridPoints - 1);
  for (std::size_t i = 1; i + 1 < kBigRGridPoints; ++i)
    best = std::max(best, big_R_lambda(std::exp(log_lo + step * static_cast<double>(i)), p));
  return best;
}

double sgd_finite_sum_rate(const SpectrumBounds& b, double alpha) {
  if (!(alpha > 0.0)) throw PreconditionError("sgd_finite_sum_rate: alpha must be positive");
  if (!(alpha < 2.0 / b.L))
    throw OutOfRegionError("sgd_finite_sum_rate: alpha must be below 2/L");
  return std::max(std::abs(1.0 - alpha * b.mu), std::abs(1.0 - alpha * b.L));
}

Mat2 b_matrix(double lambda, const OptimizerParams& p) {
  return transition_block(lambda, p.alpha, p.beta);
}

Mat2 b_mu_power_closed_form(const SpectrumBounds& b, unsigned k) {
  if (k == 0) throw PreconditionError("b_mu_power_closed_form: k must be >= 1");
  const double Q = b.Q();
  const double sq = std::sqrt(Q);
  const double r = (sq - 1.0) / sq;
  const double beta = (sq - 1.0) / (sq + 1.0);
  const double kd = static_cast<double>(k);
  // std::pow(0.0, 0) == 1, which is the convention needed at Q = 1.
  const double rk = std::pow(r, static_cast<int>(k));
  const double rk1 = std::pow(r, static_cast<int>(k - 1));
  return {(1.0 + kd / (sq + 1.0)) * rk, kd * beta * beta * rk1, -(kd / Q) * rk1,
          (1.0 - kd / (sq + 1.0)) * rk};
}

Mat2 lemma1_product(const SpectrumBounds& b, const SegmentPattern& pattern) {
  const OptimizerParams p = nesterov_defaults(b);
  const Mat2 bl = b_matrix(b.L, p);
  const Mat2 bm = b_matrix(b.mu, p);
  Mat2 out = Mat2::identity();
  for (unsigned k : pattern.k_list()) out = out * bl * power(bm, k);
  return out;
}

double lemma1_rho(const SpectrumBounds& b, const SegmentPattern& pattern) {
  const double sq = std::sqrt(b.Q());
  const double r = (sq - 1.0) / sq;
  double prod = std::pow(r, static_cast<int>(pattern.k_total()));
  for (unsigned k : pattern.k_list()) prod *= static_cast<double>(k);
  return prod;
}

double divergence_factor(const SpectrumBounds& b, std::size_t n) {
  if (n < 2) throw PreconditionError("divergence_factor: n must be >= 2");
  const double sq = std::sqrt(b.Q());
  const double nd = static_cast<double>(n);
  return (sq - 1.0) / sq * std::pow(nd - 1.0, 1.0 / nd);
}

double sigma_star(const FiniteSumProblem& fs) {
  const Vector& xs = fs.aggregate.x_star;
  if (xs.size() != fs.dim()) throw UnsupportedProblem("sigma_star: minimizer unavailable");
  double total = 0.0;
  for (const Quadratic& q : fs.components) total += norm2(q.gradient(xs));
  return total / static_cast<double>(fs.components.size());
}

double sgd_finite_sum_bound(const SpectrumBounds& b, double alpha, std::size_t k,
                            double initial_distance, double sigma) {
  const double r = sgd_finite_sum_rate(b, alpha);
  return std::pow(r, static_cast<double>(k)) * initial_distance + alpha / (1.0 - r) * sigma;
}

RateReport rate_report(const SpectrumBounds& b, const OptimizerParams& p) {
  b.validate();
  p.validate();
  RateReport rep;
  rep.rho = rho(b, p);
  rep.stable = rep.rho < 1.0;
  rep.spectral_norm_rate = big_R(b, p);
  if (rep.stable) {
    rep.variance_coeff = variance_coeff(b, p);
    rep.c_epsilon = c_epsilon_estimate(std::max(rep.spectral_norm_rate, rep.rho), rep.rho);
  }
  if (p.beta == 0.0 && p.alpha < 2.0 / b.L) rep.sgd_rate = sgd_finite_sum_rate(b, p.alpha);
  return rep;
}

}  // namespace momlab
