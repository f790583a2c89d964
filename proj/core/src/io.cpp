#include "momlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "momlab/error.hpp"

namespace momlab {

using nlohmann::ordered_json;

namespace {

ordered_json spectrum_json(const SymMatrix& h, const SpectrumBounds& declared) {
  const EigenDecomp eig = sym_eigen(h);
  return {{"declared_mu", declared.mu},
          {"declared_L", declared.L},
          {"measured_min", eig.eigenvalues.front()},
          {"measured_max", eig.eigenvalues.back()}};
}

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::string csv_optional(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

const char* norm_name(NormKind k) { return k == NormKind::two ? "l2" : "linf"; }

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string problem_json(const Quadratic& q) {
  ordered_json j = {{"kind", "quadratic"},
                    {"generator", q.generator},
                    {"generator_version", kGeneratorVersion},
                    {"seed", q.seed},
                    {"dim", q.dim()},
                    {"spectrum", spectrum_json(q.H, q.bounds)}};
  return j.dump();
}

std::string problem_json(const FiniteSumProblem& fs) {
  ordered_json j = {{"kind", "finite_sum"},
                    {"generator", fs.generator},
                    {"generator_version", kGeneratorVersion},
                    {"seed", fs.seed},
                    {"dim", fs.dim()},
                    {"n", fs.n()},
                    {"minibatch", fs.minibatch},
                    {"interpolation", fs.interpolation},
                    {"spectrum", spectrum_json(fs.aggregate.H, fs.bounds())}};
  return j.dump();
}

std::string problem_json(const LogRegProblem& p) {
  ordered_json j = {{"kind", "logistic_regression"},
                    {"generator", p.generator},
                    {"generator_version", kGeneratorVersion},
                    {"seed", p.seed},
                    {"samples", p.samples()},
                    {"features", p.n_features()},
                    {"classes", p.classes},
                    {"reg", p.reg}};
  return j.dump();
}

template <class Problem>
std::string problem_digest(const Problem& p) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(problem_json(p))));
  return buf;
}

template std::string problem_digest(const Quadratic&);
template std::string problem_digest(const FiniteSumProblem&);
template std::string problem_digest(const LogRegProblem&);

std::string rate_report_json(const SpectrumBounds& b, const OptimizerParams& p,
                             const RateReport& r) {
  ordered_json j = {{"mu", b.mu},
                    {"L", b.L},
                    {"Q", b.Q()},
                    {"alpha", p.alpha},
                    {"beta", p.beta},
                    {"rho", r.rho},
                    {"stable", r.stable},
                    {"variance_coeff", optional_number(r.variance_coeff)},
                    {"c_epsilon", optional_number(r.c_epsilon)},
                    {"neighborhood", optional_number(r.neighborhood())},
                    {"spectral_norm_rate", r.spectral_norm_rate},
                    {"sgd_rate", optional_number(r.sgd_rate)}};
  return j.dump(2);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
  const bool batches = !t.sampled_batches.empty();
  const std::size_t d = t.per_coordinate.empty() ? 0 : t.per_coordinate.front().size();
  os << "k,distance";
  if (batches) os << ",batch_index";
  for (std::size_t i = 0; i < d; ++i) os << ",coord_" << i;
  os << '\n';
  for (std::size_t j = 0; j < t.distances.size(); ++j) {
    os << j + 1 << ',' << format_double(t.distances[j]);
    if (batches) {
      os << ',';
      if (j < t.sampled_batches.size()) os << t.sampled_batches[j];
    }
    if (d > 0)
      for (std::size_t i = 0; i < d; ++i) {
        os << ',';
        if (j < t.per_coordinate.size()) os << format_double(t.per_coordinate[j][i]);
      }
    os << '\n';
  }
}

std::string trajectory_json(const Trajectory& t) {
  ordered_json j = {{"seed", t.seed},
                    {"alpha", t.params.alpha},
                    {"beta", t.params.beta},
                    {"problem_digest", t.problem_digest},
                    {"norm", norm_name(t.norm)},
                    {"initial_distance", t.initial_distance},
                    {"iterations", t.distances.size()},
                    {"diverged_at", t.diverged_at ? ordered_json(*t.diverged_at) : ordered_json(nullptr)},
                    {"distances", t.distances}};
  return j.dump(2);
}

void write_grid_csv(std::ostream& os, const SweepGrid& g) {
  os << "alpha,beta,theory_rho,theory_R,theory_neighborhood,emp_rate,emp_neighborhood,diverged,"
        "emp_rate_median,emp_neighborhood_median,diverged_trials,trials\n";
  for (std::size_t ib = 0; ib < g.n_beta(); ++ib)
    for (std::size_t ia = 0; ia < g.n_alpha(); ++ia) {
      const CellResult& c = g.at(ia, ib);
      const auto hood = c.theory.neighborhood();
      os << format_double(g.alpha_values[ia]) << ',' << format_double(g.beta_values[ib]) << ','
         << format_double(c.theory.rho) << ',' << format_double(c.theory.spectral_norm_rate) << ','
         << (hood ? format_double(*hood) : std::string("unstable")) << ','
         << csv_optional(c.empirical_rate) << ',' << csv_optional(c.empirical_neighborhood) << ','
         << (c.diverged ? 1 : 0) << ',' << csv_optional(c.empirical_rate_median) << ','
         << csv_optional(c.empirical_neighborhood_median) << ',' << c.diverged_trials << ','
         << c.trials << '\n';
    }
}

std::string grid_json(const SweepGrid& g) {
  ordered_json cells = ordered_json::array();
  for (std::size_t ib = 0; ib < g.n_beta(); ++ib)
    for (std::size_t ia = 0; ia < g.n_alpha(); ++ia) {
      const CellResult& c = g.at(ia, ib);
      cells.push_back({{"alpha", g.alpha_values[ia]},
                       {"beta", g.beta_values[ib]},
                       {"theory_rho", c.theory.rho},
                       {"theory_stable", c.theory.stable},
                       {"theory_R", c.theory.spectral_norm_rate},
                       {"theory_neighborhood", optional_number(c.theory.neighborhood())},
                       {"emp_rate", optional_number(c.empirical_rate)},
                       {"emp_neighborhood", optional_number(c.empirical_neighborhood)},
                       {"diverged", c.diverged},
                       {"diverged_trials", c.diverged_trials},
                       {"trials", c.trials}});
    }
  ordered_json j = {{"mu", g.bounds.mu},
                    {"L", g.bounds.L},
                    {"alpha_values", g.alpha_values},
                    {"beta_values", g.beta_values},
                    {"cells", std::move(cells)}};
  return j.dump(1);
}

void write_contour_csv(std::ostream& os, const std::vector<std::pair<double, double>>& pts) {
  os << "alpha,beta\n";
  for (const auto& [a, b] : pts) os << format_double(a) << ',' << format_double(b) << '\n';
}

void write_divergence_trace_csv(std::ostream& os, const DivergenceRun& r, std::size_t n) {
  const Trajectory& t = r.trajectory;
  os << "k,coord2_value,batch_index,opposite_sign_flag,inconsistent_batch\n";
  for (std::size_t j = 0; j < t.per_coordinate.size(); ++j) {
    os << j + 1 << ',' << format_double(t.per_coordinate[j][2]) << ',';
    if (j < t.sampled_batches.size()) os << t.sampled_batches[j];
    os << ',';
    if (j < r.opposite_sign.size()) os << (r.opposite_sign[j] ? 1 : 0);
    os << ',';
    if (j < t.sampled_batches.size()) os << (t.sampled_batches[j] + 1 == n ? 1 : 0);
    os << '\n';
  }
}

void write_bound_checks_csv(std::ostream& os, const SgdFiniteSumSeries& s) {
  os << "k,empirical,bound\n";
  for (const BoundCheck& c : s.checks)
    os << c.k << ',' << format_double(c.empirical) << ',' << format_double(c.bound) << '\n';
}

std::vector<std::uint8_t> heatmap_pixels(const SweepGrid& g, HeatmapQuantity q) {
  const std::size_t w = g.n_alpha();
  const std::size_t h = g.n_beta();
  std::vector<std::optional<double>> values(w * h);
  for (std::size_t ib = 0; ib < h; ++ib)
    for (std::size_t ia = 0; ia < w; ++ia) {
      const CellResult& c = g.at(ia, ib);
      std::optional<double> v;
      switch (q) {
        case HeatmapQuantity::empirical_rate:
          if (!c.diverged) v = c.empirical_rate;
          break;
        case HeatmapQuantity::empirical_neighborhood:
          if (!c.diverged) v = c.empirical_neighborhood;
          break;
        case HeatmapQuantity::theory_rate:
          if (c.theory.stable) v = c.theory.rho;
          break;
        case HeatmapQuantity::theory_neighborhood:
          v = c.theory.neighborhood();
          break;
      }
      values[(h - 1 - ib) * w + ia] = v;
    }

  std::vector<std::uint8_t> px(w * h, 0);
  const bool is_rate = q == HeatmapQuantity::empirical_rate || q == HeatmapQuantity::theory_rate;
  if (is_rate) {
    for (std::size_t i = 0; i < px.size(); ++i)
      if (values[i]) {
        const double x = std::clamp(1.0 - *values[i], 0.0, 1.0);
        px[i] = static_cast<std::uint8_t>(std::lround(255.0 * x));
      }
    return px;
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& v : values)
    if (v && *v > 0.0) {
      lo = std::min(lo, std::log(*v));
      hi = std::max(hi, std::log(*v));
    }
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (!values[i]) continue;
    if (!(*values[i] > 0.0) || !(hi > lo)) {
      px[i] = 255;
      continue;
    }
    const double x = 1.0 - (std::log(*values[i]) - lo) / (hi - lo);
    // Keep the worst stable cell distinguishable from diverged ones.
    px[i] = static_cast<std::uint8_t>(1 + std::lround(254.0 * std::clamp(x, 0.0, 1.0)));
  }
  return px;
}

void write_pgm(std::ostream& os, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != width * height)
    throw DimensionMismatch("write_pgm: pixel count does not match dimensions");
  os << "P5\n" << width << ' ' << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

}  // namespace momlab
