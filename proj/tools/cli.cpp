#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "momlab/error.hpp"
#include "momlab/experiments.hpp"
#include "momlab/io.hpp"
#include "momlab/problems.hpp"
#include "momlab/theory.hpp"

namespace momlab::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kDefaultSeed = 20240611;
constexpr const char* kVersion = "0.1.0";

bool is_set(double v) { return !std::isnan(v); }

struct RunConfig {
  std::string command;
  std::string preset;
  std::string problem = "worst_case";
  double mu = kUnset;
  double L = kUnset;
  std::vector<double> Q;
  double alpha = kUnset;
  double beta = kUnset;
  bool nesterov = false;
  bool divergence_factor = false;
  std::uint64_t seed = kDefaultSeed;
  std::size_t iters = 0;
  std::size_t trials = 3;
  std::string grid;
  std::string alpha_range;
  std::string beta_range;
  double sigma = kUnset;
  std::vector<std::size_t> n;
  std::size_t m = 1;
  std::size_t dim = 100;
  std::size_t seeds = 20;
  double cluster_sep = 1.0;
  std::string out;
  std::string format = "csv,json,pgm";
  unsigned jobs = 1;
  bool full_scale = false;
};

ordered_json number_or_null(double v) { return is_set(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json to_json(const RunConfig& c) {
  return {{"command", c.command},   {"preset", c.preset},
          {"problem", c.problem},   {"mu", number_or_null(c.mu)},
          {"L", number_or_null(c.L)}, {"Q", c.Q},
          {"alpha", number_or_null(c.alpha)}, {"beta", number_or_null(c.beta)},
          {"nesterov", c.nesterov}, {"divergence_factor", c.divergence_factor},
          {"seed", c.seed},         {"iters", c.iters},
          {"trials", c.trials},     {"grid", c.grid},
          {"alpha_range", c.alpha_range}, {"beta_range", c.beta_range},
          {"sigma", number_or_null(c.sigma)}, {"n", c.n},
          {"m", c.m},               {"dim", c.dim},
          {"seeds", c.seeds},       {"cluster_sep", c.cluster_sep},
          {"out", c.out},           {"format", c.format},
          {"jobs", c.jobs},         {"full_scale", c.full_scale}};
}

template <class T>
void read_field(const ordered_json& j, const char* key, T& dst) {
  if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<T>();
}

void read_number(const ordered_json& j, const char* key, double& dst) {
  if (!j.contains(key)) return;
  dst = j.at(key).is_null() ? kUnset : j.at(key).get<double>();
}

void from_json(const ordered_json& raw, RunConfig& c) {
  const ordered_json& j = raw.contains("config") ? raw.at("config") : raw;
  read_field(j, "preset", c.preset);
  read_field(j, "problem", c.problem);
  read_number(j, "mu", c.mu);
  read_number(j, "L", c.L);
  read_field(j, "Q", c.Q);
  read_number(j, "alpha", c.alpha);
  read_number(j, "beta", c.beta);
  read_field(j, "nesterov", c.nesterov);
  read_field(j, "divergence_factor", c.divergence_factor);
  read_field(j, "seed", c.seed);
  read_field(j, "iters", c.iters);
  read_field(j, "trials", c.trials);
  read_field(j, "grid", c.grid);
  read_field(j, "alpha_range", c.alpha_range);
  read_field(j, "beta_range", c.beta_range);
  read_number(j, "sigma", c.sigma);
  read_field(j, "n", c.n);
  read_field(j, "m", c.m);
  read_field(j, "dim", c.dim);
  read_field(j, "seeds", c.seeds);
  read_field(j, "cluster_sep", c.cluster_sep);
  read_field(j, "out", c.out);
  read_field(j, "format", c.format);
  read_field(j, "jobs", c.jobs);
  read_field(j, "full_scale", c.full_scale);
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void apply_preset(const std::string& command, const std::string& preset, RunConfig& c) {
  if (preset.empty()) return;
  auto expect = [&](const char* cmd) {
    if (command != cmd)
      throw UsageError("preset '" + preset + "' belongs to the '" + cmd + "' subcommand");
  };
  if (preset == "fig1" || preset == "f1") {
    expect("sweep");
    c.problem = preset == "fig1" ? "worst_case" : "least_squares";
    if (c.Q.empty()) c.Q = {8.0};
    c.L = 1.0;
    c.dim = preset == "fig1" ? 100 : 10;
    c.sigma = 0.05;
    c.grid = "32x32";
    c.iters = 2000;
    c.trials = 3;
  } else if (preset == "fig2") {
    expect("counterexample");
    c.mu = 0.05;
    c.L = 100.0;
    c.n = {50, 250, 1000};
    c.iters = 300;
    c.seeds = 20;
  } else if (preset == "fig3") {
    expect("sgdfs");
    c.Q = {16.0, 32.0, 64.0};
    c.iters = 1000;
    c.seeds = 20;
  } else if (preset == "f2") {
    expect("logreg");
    c.Q = {45.0};
    c.grid = "12x12";
    c.iters = 1000;
  } else {
    throw UsageError("unknown preset '" + preset + "'");
  }
}

// --- parsing helpers ---------------------------------------------------------

std::pair<std::size_t, std::size_t> parse_grid(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw UsageError("--grid expects WxH, got '" + s + "'");
  try {
    const long w = std::stol(s.substr(0, x));
    const long h = std::stol(s.substr(x + 1));
    if (w < 1 || h < 1) throw UsageError("--grid dimensions must be positive");
    return {static_cast<std::size_t>(w), static_cast<std::size_t>(h)};
  } catch (const std::logic_error&) {
    throw UsageError("--grid expects WxH, got '" + s + "'");
  }
}

std::pair<double, double> parse_range(const std::string& s, const char* flag) {
  const auto colon = s.find(':');
  if (colon == std::string::npos)
    throw UsageError(std::string(flag) + " expects lo:hi, got '" + s + "'");
  try {
    const double lo = std::stod(s.substr(0, colon));
    const double hi = std::stod(s.substr(colon + 1));
    if (!(hi >= lo)) throw UsageError(std::string(flag) + " needs lo <= hi");
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw UsageError(std::string(flag) + " expects lo:hi, got '" + s + "'");
  }
}

struct Formats {
  bool csv = false;
  bool json = false;
  bool pgm = false;
};

Formats parse_formats(const std::string& s) {
  Formats f;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "csv") f.csv = true;
    else if (item == "json") f.json = true;
    else if (item == "pgm") f.pgm = true;
    else if (!item.empty()) throw UsageError("unknown --format entry '" + item + "'");
  }
  return f;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw UsageError(msg);
}

// Resolves mu and L from any two of --mu, --L, --Q.
SpectrumBounds resolve_bounds(const RunConfig& c, double default_L, double default_Q) {
  double L = is_set(c.L) ? c.L : default_L;
  double mu = c.mu;
  const double Q = c.Q.empty() ? default_Q : c.Q.front();
  if (!is_set(mu)) {
    require(is_set(Q), "give the spectrum with two of --mu, --L, --Q (L defaults to 1)");
    require(Q >= 1.0, "--Q must be >= 1");
    mu = L / Q;
  } else if (!is_set(c.L) && !c.Q.empty()) {
    L = mu * Q;
  }
  require(mu > 0.0 && std::isfinite(mu), "--mu must be positive");
  require(L >= mu && std::isfinite(L), "--L must be >= mu");
  return {mu, L};
}

// --- output helpers ------------------------------------------------------------

fs::path prepare_out(const RunConfig& c, const char* fallback) {
  fs::path dir = c.out.empty() ? fs::path(fallback) : fs::path(c.out);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << text;
}

template <class Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  fn(f);
}

void write_meta(const fs::path& dir, const RunConfig& c, const ordered_json& extra) {
  ordered_json meta = {{"command", c.command}, {"version", kVersion}, {"config", to_json(c)}};
  for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

void write_heatmaps(const fs::path& dir, const SweepGrid& g) {
  const std::pair<const char*, HeatmapQuantity> maps[] = {
      {"heatmap_rate.pgm", HeatmapQuantity::empirical_rate},
      {"heatmap_var.pgm", HeatmapQuantity::empirical_neighborhood},
      {"heatmap_theory_rate.pgm", HeatmapQuantity::theory_rate},
      {"heatmap_theory_var.pgm", HeatmapQuantity::theory_neighborhood}};
  for (const auto& [name, quantity] : maps)
    write_with(dir / name, [&](std::ostream& os) {
      write_pgm(os, g.n_alpha(), g.n_beta(), heatmap_pixels(g, quantity));
    });
}

const char* kGridPlot = R"(# gnuplot script: renders the sweep heatmaps with the stability contour.
set datafile separator ','
set terminal pngcairo size 900,700
set logscale x
set xlabel 'step-size alpha'
set ylabel 'momentum beta'
set palette gray
set key off

set output 'rate.png'
set title 'empirical convergence rate (brighter is faster)'
plot 'grid.csv' every ::1 using 1:2:(column(6) eq '' ? 1 : 1 - $6) with points pt 5 ps 1.2 palette, \
     'contour.csv' every ::1 using 1:2 with lines lw 2 lc rgb 'red'

set output 'theory_rate.png'
set title 'theoretical rate rho(alpha, beta)'
plot 'grid.csv' every ::1 using 1:2:($3 >= 1 ? 0 : 1 - $3) with points pt 5 ps 1.2 palette, \
     'contour.csv' every ::1 using 1:2 with lines lw 2 lc rgb 'red'

set output 'neighborhood.png'
set title 'empirical neighborhood / sigma (log scale, brighter is smaller)'
set cbrange [*:*]
plot 'grid.csv' every ::1 using 1:2:(column(7) eq '' ? 0 : -log($7)) with points pt 5 ps 1.2 palette, \
     'contour.csv' every ::1 using 1:2 with lines lw 2 lc rgb 'red'
)";

// --- subcommands ---------------------------------------------------------------

int cmd_theory(const RunConfig& c, std::ostream& out) {
  const SpectrumBounds b = resolve_bounds(c, 1.0, kUnset);
  OptimizerParams p;
  if (c.nesterov) {
    p = nesterov_defaults(b);
  } else {
    require(is_set(c.alpha) && is_set(c.beta), "theory needs --alpha and --beta, or --nesterov");
    p = {c.alpha, c.beta};
  }
  try {
    p.validate();
  } catch (const PreconditionError& e) {
    throw UsageError(e.what());
  }
  const RateReport r = rate_report(b, p);
  std::optional<double> dfactor;
  if (c.divergence_factor) {
    require(!c.n.empty() && c.n.front() >= 2, "--divergence-factor needs --n >= 2");
    dfactor = divergence_factor(b, c.n.front());
  }
  std::optional<double> sgd_rate, sgd_var;
  if (p.alpha < 2.0 / b.L) {
    sgd_rate = sgd_finite_sum_rate(b, p.alpha);
    sgd_var = sgd_variance_coeff(b, p.alpha);
  }

  const Formats f = parse_formats(c.format);
  ordered_json report = ordered_json::parse(rate_report_json(b, p, r));
  report["sgd_finite_sum_rate"] = sgd_rate ? ordered_json(*sgd_rate) : ordered_json(nullptr);
  report["sgd_variance_coeff"] = sgd_var ? ordered_json(*sgd_var) : ordered_json(nullptr);
  if (dfactor) {
    report["n"] = c.n.front();
    report["divergence_factor"] = *dfactor;
  }

  if (f.json && !f.csv && c.out.empty()) {
    out << report.dump(2) << '\n';
  } else {
    auto row = [&](const char* name, const std::string& value) {
      out << std::left << std::setw(22) << name << value << '\n';
    };
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("-"); };
    row("mu", format_double(b.mu));
    row("L", format_double(b.L));
    row("Q", format_double(b.Q()));
    row("alpha", format_double(p.alpha));
    row("beta", format_double(p.beta));
    row("rho", format_double(r.rho));
    row("stable", r.stable ? "yes" : "no (unstable)");
    row("variance_coeff", r.stable ? opt(r.variance_coeff) : "unstable");
    row("c_epsilon", r.stable ? opt(r.c_epsilon) : "unstable");
    row("neighborhood", r.stable ? opt(r.neighborhood()) : "unstable");
    row("spectral_norm_rate", format_double(r.spectral_norm_rate));
    row("sgd_finite_sum_rate", opt(sgd_rate));
    row("sgd_variance_coeff", opt(sgd_var));
    if (dfactor) row("divergence_factor", format_double(*dfactor));
  }
  if (!c.out.empty()) {
    const fs::path dir = prepare_out(c, "");
    write_meta(dir, c, {{"report", report}});
    if (f.json) write_text(dir / "theory.json", report.dump(2) + "\n");
  }
  return kOk;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  const SpectrumBounds b = resolve_bounds(c, 1.0, 8.0);
  require(c.problem == "worst_case" || c.problem == "least_squares",
          "--problem must be worst_case or least_squares");
  require(c.trials >= 1, "--trials must be >= 1");
  const double sigma = is_set(c.sigma) ? c.sigma : 0.05;
  require(sigma >= 0.0, "--sigma must be >= 0");
  const std::size_t iters = c.iters == 0 ? 2000 : c.iters;
  GridSpec spec = GridSpec::heatmap_default(b);
  if (!c.grid.empty()) std::tie(spec.n_alpha, spec.n_beta) = parse_grid(c.grid);
  if (!c.alpha_range.empty()) std::tie(spec.alpha_lo, spec.alpha_hi) = parse_range(c.alpha_range, "--alpha-range");
  if (!c.beta_range.empty()) std::tie(spec.beta_lo, spec.beta_hi) = parse_range(c.beta_range, "--beta-range");
  try {
    spec.validate();
  } catch (const PreconditionError& e) {
    throw UsageError(e.what());
  }
  const Formats f = parse_formats(c.format);

  std::optional<Quadratic> q;
  if (c.problem == "worst_case") {
    require(c.dim >= 2, "--dim must be >= 2");
    require(b.mu < b.L, "the worst-case quadratic needs Q > 1");
    q = worst_case_quadratic(c.dim, b.mu, b.L);
  } else {
    require(c.dim >= 1, "--dim must be >= 1");
    q = random_least_squares(derive_seed(c.seed, 0xF1), std::max<std::size_t>(500, c.dim), c.dim,
                             b.Q(), b.mu);
  }

  HeatmapConfig hc;
  hc.sigma = sigma;
  hc.iterations = iters;
  hc.trials = c.trials;
  hc.seed = c.seed;
  hc.jobs = c.jobs;
  const SweepGrid g = heatmap_sweep(*q, b, spec, hc);
  const auto contour = stability_contour(g.alpha_values, g.beta_values, b);

  const fs::path dir = prepare_out(c, "momlab_sweep");
  if (f.csv) {
    write_with(dir / "grid.csv", [&](std::ostream& os) { write_grid_csv(os, g); });
    write_with(dir / "contour.csv", [&](std::ostream& os) { write_contour_csv(os, contour); });
  }
  if (f.json) write_text(dir / "grid.json", grid_json(g) + "\n");
  if (f.pgm) write_heatmaps(dir, g);
  write_text(dir / "plots.gp", kGridPlot);

  std::size_t stable = 0, diverged = 0;
  for (const CellResult& cell : g.cells) {
    stable += cell.theory.stable ? 1 : 0;
    diverged += cell.diverged ? 1 : 0;
  }
  const OptimizerParams nest = nesterov_defaults(b);
  const auto [ia, ib] = g.nearest(nest.alpha, nest.beta);
  const CellResult& nc = g.at(ia, ib);
  ordered_json summary = {{"cells", g.cells.size()},
                          {"theory_stable_cells", stable},
                          {"diverged_cells", diverged},
                          {"nesterov_cell",
                           {{"alpha", g.alpha_values[ia]},
                            {"beta", g.beta_values[ib]},
                            {"theory_rho", nc.theory.rho},
                            {"emp_rate", nc.empirical_rate ? ordered_json(*nc.empirical_rate)
                                                           : ordered_json(nullptr)}}}};
  write_meta(dir, c,
             {{"problem", ordered_json::parse(problem_json(*q))},
              {"problem_digest", problem_digest(*q)},
              {"summary", summary}});

  out << "sweep: " << g.n_alpha() << "x" << g.n_beta() << " cells, Q=" << format_double(b.Q())
      << ", " << stable << " theoretically stable, " << diverged << " diverged\n";
  out << "nearest Nesterov cell: alpha=" << format_double(g.alpha_values[ia])
      << " beta=" << format_double(g.beta_values[ib]) << " theory_rho=" << format_double(nc.theory.rho)
      << " emp_rate=" << (nc.empirical_rate ? format_double(*nc.empirical_rate) : "-") << '\n';
  out << "wrote " << dir.string() << '\n';
  return kOk;
}

int cmd_counterexample(const RunConfig& c, std::ostream& out) {
  const SpectrumBounds b = resolve_bounds(c, 100.0, 2000.0);
  const std::vector<std::size_t> ns = c.n.empty() ? std::vector<std::size_t>{50} : c.n;
  for (std::size_t n : ns) require(n >= 3, "--n must be >= 3");
  require(c.seeds >= 1, "--seeds must be >= 1");
  DivergenceConfig dc;
  dc.iterations = c.iters == 0 ? 300 : c.iters;
  dc.seeds = c.seeds;
  dc.seed = c.seed;
  const std::vector<DivergenceSeries> series = divergence_experiment(ns, b, dc);

  const fs::path dir = prepare_out(c, "momlab_counterexample");
  fs::create_directories(dir / "traces");
  ordered_json summaries = ordered_json::array();
  std::ostringstream table;
  table << "n,seed_index,diverged_at,converged,growth_exponent,inconsistent_batches,final_distance\n";
  for (const DivergenceSeries& s : series) {
    for (std::size_t i = 0; i < s.runs.size(); ++i) {
      const DivergenceRun& r = s.runs[i];
      const Trajectory& t = r.trajectory;
      write_with(dir / "traces" / ("n" + std::to_string(s.n) + "_seed" + std::to_string(i) + ".csv"),
                 [&](std::ostream& os) { write_divergence_trace_csv(os, r, s.n); });
      table << s.n << ',' << i << ',' << (t.diverged_at ? std::to_string(*t.diverged_at) : "") << ','
            << (r.converged ? 1 : 0) << ',' << format_double(r.growth_exponent) << ','
            << r.inconsistent_events.size() << ',' << format_double(t.distances.back()) << '\n';
    }
    summaries.push_back({{"n", s.n},
                         {"divergence_factor", s.divergence_factor},
                         {"predicted_exponent", s.predicted_exponent},
                         {"mean_growth_exponent", s.mean_growth_exponent},
                         {"diverged_seeds", s.diverged_count},
                         {"converged_seeds", s.converged_count},
                         {"seeds", s.runs.size()}});
    out << "n=" << s.n << ": " << s.diverged_count << "/" << s.runs.size()
        << " seeds hit the divergence guard, " << s.converged_count << " converged; growth exponent "
        << format_double(s.mean_growth_exponent) << " (log factor "
        << format_double(s.predicted_exponent) << ")\n";
  }
  if (parse_formats(c.format).csv) write_text(dir / "summary.csv", table.str());
  std::ostringstream gp;
  gp << "# gnuplot script: third-coordinate traces with inconsistent batches marked.\n"
        "set datafile separator ','\nset terminal pngcairo size 900,500\nset xlabel 'iteration k'\n"
        "set ylabel 'y_k[2] - x*[2]'\nset key off\n";
  for (const DivergenceSeries& s : series)
    gp << "set output 'n" << s.n << ".png'\nset title 'n = " << s.n << "'\n"
       << "plot 'traces/n" << s.n << "_seed0.csv' every ::1 using 1:2 with lines lc rgb 'black', \\\n"
       << "     '' every ::1 using 1:($5 == 1 ? $2 : 1/0) with points pt 7 lc rgb 'red'\n";
  write_text(dir / "plots.gp", gp.str());
  const FiniteSumProblem probe = counterexample_finite_sum(ns.front(), b.mu, b.L);
  write_meta(dir, c, {{"problem_digest", problem_digest(probe)}, {"series", summaries}});
  out << "wrote " << dir.string() << '\n';
  return kOk;
}

int cmd_sgdfs(const RunConfig& c, std::ostream& out) {
  const std::vector<double> Qs = c.Q.empty() ? std::vector<double>{16.0, 32.0, 64.0} : c.Q;
  for (double Q : Qs) require(Q >= 1.0, "--Q must be >= 1");
  require(c.seeds >= 1, "--seeds must be >= 1");
  SgdFiniteSumConfig sc;
  sc.n_samples = c.full_scale ? 25000 : 2500;
  sc.iterations = c.iters == 0 ? 1000 : c.iters;
  sc.seeds = c.seeds;
  sc.seed = c.seed;
  const std::vector<SgdFiniteSumSeries> series = sgd_finite_sum_experiment(Qs, sc);

  const fs::path dir = prepare_out(c, "momlab_sgdfs");
  fs::create_directories(dir / "traces");
  ordered_json summaries = ordered_json::array();
  std::ostringstream gp;
  gp << "# gnuplot script: mean distance against the finite-sum bound.\n"
        "set datafile separator ','\nset terminal pngcairo size 900,500\nset logscale y\n"
        "set xlabel 'iteration k'\nset ylabel 'E||y_k - x*||'\n";
  for (const SgdFiniteSumSeries& s : series) {
    const std::string name = "Q" + format_double(s.Q);
    write_with(dir / "traces" / (name + ".csv"),
               [&](std::ostream& os) { write_bound_checks_csv(os, s); });
    summaries.push_back({{"Q", s.Q},
                         {"alpha", s.alpha},
                         {"rate_theory", s.rate_theory},
                         {"fitted_rate", s.fitted_rate ? ordered_json(*s.fitted_rate) : ordered_json(nullptr)},
                         {"sigma_star", s.sigma_star},
                         {"bound_violations", s.violations}});
    gp << "set output '" << name << ".png'\nset title 'Q = " << format_double(s.Q) << "'\n"
       << "plot 'traces/" << name << ".csv' every ::1 using 1:2 with lines title 'empirical', \\\n"
       << "     '' every ::1 using 1:3 with lines dt 2 title 'bound'\n";
    out << "Q=" << format_double(s.Q) << ": fitted rate "
        << (s.fitted_rate ? format_double(*s.fitted_rate) : "-") << " vs theory "
        << format_double(s.rate_theory) << ", bound violations " << s.violations << "\n";
  }
  write_text(dir / "plots.gp", gp.str());
  write_meta(dir, c, {{"series", summaries}});
  out << "wrote " << dir.string() << '\n';
  return kOk;
}

int cmd_logreg(const RunConfig& c, std::ostream& out) {
  const double Q_target = c.Q.empty() ? 45.0 : c.Q.front();
  require(Q_target > 1.0, "--Q must exceed 1 for logistic regression");
  const double sigma = is_set(c.sigma) ? c.sigma : 1e-3;
  require(sigma >= 0.0, "--sigma must be >= 0");
  LogRegProblem p = logreg_problem(derive_seed(c.seed, 0xF2), 5, 100, 10, 5, c.cluster_sep, 1.0);
  const double reg0 = tune_logreg_reg(p, Q_target);
  p.reg = reg0;
  const double L0 = sym_eigen(logreg_hessian(p, Vector(p.dim(), 0.0))).eigenvalues.back();

  GridSpec spec = GridSpec::heatmap_default({reg0, L0});
  std::tie(spec.n_alpha, spec.n_beta) = parse_grid(c.grid.empty() ? "12x12" : c.grid);
  spec.beta_lo = 0.0;
  if (!c.alpha_range.empty()) std::tie(spec.alpha_lo, spec.alpha_hi) = parse_range(c.alpha_range, "--alpha-range");
  if (!c.beta_range.empty()) std::tie(spec.beta_lo, spec.beta_hi) = parse_range(c.beta_range, "--beta-range");
  try {
    spec.validate();
  } catch (const PreconditionError& e) {
    throw UsageError(e.what());
  }
  LogRegSweepConfig lc;
  lc.iterations = c.iters == 0 ? 1000 : c.iters;
  lc.seed = c.seed;
  lc.sigma = sigma;
  lc.jobs = c.jobs;
  const TunedLogRegSweep tuned = tuned_logreg_sweep(p, Q_target, spec, lc);
  const LogRegSweepResult& res = tuned.result;
  p.reg = tuned.reg;
  const auto contour = stability_contour(res.grid.alpha_values, res.grid.beta_values, res.estimated);

  const Formats f = parse_formats(c.format);
  const fs::path dir = prepare_out(c, "momlab_logreg");
  if (f.csv) {
    write_with(dir / "grid.csv", [&](std::ostream& os) { write_grid_csv(os, res.grid); });
    write_with(dir / "contour.csv", [&](std::ostream& os) { write_contour_csv(os, contour); });
  }
  if (f.json) write_text(dir / "grid.json", grid_json(res.grid) + "\n");
  if (f.pgm) write_heatmaps(dir, res.grid);
  write_text(dir / "plots.gp", kGridPlot);

  const auto best_sgd = best_rate(res.grid, false);
  const auto best_asg = best_rate(res.grid, true);
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  write_meta(dir, c,
             {{"problem", ordered_json::parse(problem_json(p))},
              {"problem_digest", problem_digest(p)},
              {"summary",
               {{"estimated_mu", res.estimated.mu},
                {"estimated_L", res.estimated.L},
                {"estimated_Q", res.estimated.Q()},
                {"reg", tuned.reg},
                {"tuning_passes", tuned.passes},
                {"best_rate_beta_zero", opt(best_sgd)},
                {"best_rate_beta_positive", opt(best_asg)}}}});
  out << "logreg: reg=" << format_double(p.reg) << ", tracked mu=" << format_double(res.estimated.mu)
      << " L=" << format_double(res.estimated.L) << " Q=" << format_double(res.estimated.Q()) << '\n';
  out << "best rate beta=0: " << (best_sgd ? format_double(*best_sgd) : "-")
      << ", best rate beta>0: " << (best_asg ? format_double(*best_asg) : "-") << '\n';
  out << "wrote " << dir.string() << '\n';
  return kOk;
}

int cmd_validate(const RunConfig& c, std::ostream& out) {
  const std::vector<ValidationCheck> checks = validation_suite(c.seed);
  bool all = true;
  std::ostringstream csv;
  csv << "check,passed,detail\n";
  for (const ValidationCheck& ch : checks) {
    all = all && ch.passed;
    out << (ch.passed ? "PASS " : "FAIL ") << ch.name << ": " << ch.detail << '\n';
    csv << ch.name << ',' << (ch.passed ? 1 : 0) << ',' << ch.detail << '\n';
  }
  if (!c.out.empty()) {
    const fs::path dir = prepare_out(c, "");
    write_text(dir / "validation.csv", csv.str());
    write_meta(dir, c, {{"passed", all}});
  }
  out << (all ? "all checks passed" : "validation FAILED") << '\n';
  return all ? kOk : kValidationFailed;
}

// Finds the value following `flag` (either "--flag value" or "--flag=value").
std::optional<std::string> prescan(const std::vector<std::string>& args, const std::string& flag) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == flag && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind(flag + "=", 0) == 0) return args[i].substr(flag.size() + 1);
  }
  return std::nullopt;
}

void add_common(CLI::App* sub, RunConfig& c) {
  sub->add_option("--seed", c.seed, "master random seed (default: $MOMLAB_SEED or built-in)");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--format", c.format, "comma list of csv,json,pgm");
  sub->add_option("--jobs", c.jobs, "worker threads for cell-parallel sweeps");
  sub->add_option("--config", "JSON config or meta.json from an earlier run");
  sub->add_option("--preset", c.preset, "fig1, f1 (sweep), fig2 (counterexample), fig3 (sgdfs), f2 (logreg)");
}

void add_spectrum(CLI::App* sub, RunConfig& c) {
  sub->add_option("--mu", c.mu, "strong convexity modulus");
  sub->add_option("--L", c.L, "smoothness constant");
  sub->add_option("--Q", c.Q, "condition number(s) L/mu")->delimiter(',');
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  if (const char* env = std::getenv("MOMLAB_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::logic_error&) {
      err << "momlab: MOMLAB_SEED must be an unsigned integer\n";
      return kUsage;
    }
  }

  std::string command;
  for (const std::string& a : args)
    if (!a.empty() && a[0] != '-') {
      command = a;
      break;
    }

  try {
    if (const auto preset = prescan(args, "--preset")) apply_preset(command, *preset, cfg);
    if (const auto path = prescan(args, "--config")) {
      std::ifstream f(*path);
      if (!f) throw UsageError("cannot read config file " + *path);
      ordered_json j;
      try {
        j = ordered_json::parse(f);
      } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file " + *path + ": " + e.what());
      }
      from_json(j, cfg);
    }
  } catch (const UsageError& e) {
    err << "momlab: " << e.what() << '\n';
    return kUsage;
  }

  CLI::App app{"momlab: momentum and stochastic gradient rate laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CLI::App* theory = app.add_subcommand("theory", "closed-form rates for one (alpha, beta)");
  add_spectrum(theory, cfg);
  theory->add_option("--alpha", cfg.alpha, "step-size");
  theory->add_option("--beta", cfg.beta, "momentum");
  theory->add_flag("--nesterov", cfg.nesterov, "use alpha = 1/L, beta = (sqrt(Q)-1)/(sqrt(Q)+1)");
  theory->add_flag("--divergence-factor", cfg.divergence_factor, "also report r (n-1)^(1/n)");
  theory->add_option("--n", cfg.n, "number of finite-sum terms")->delimiter(',');
  add_common(theory, cfg);

  CLI::App* sweep = app.add_subcommand("sweep", "(alpha, beta) heatmap sweep on a quadratic");
  add_spectrum(sweep, cfg);
  sweep->add_option("--problem", cfg.problem, "worst_case or least_squares");
  sweep->add_option("--dim", cfg.dim, "problem dimension");
  sweep->add_option("--sigma", cfg.sigma, "gradient noise level (E||noise||^2 = sigma^2)");
  sweep->add_option("--iters", cfg.iters, "iterations per run");
  sweep->add_option("--trials", cfg.trials, "trials per cell");
  sweep->add_option("--grid", cfg.grid, "WxH cells");
  sweep->add_option("--alpha-range", cfg.alpha_range, "lo:hi step-size range");
  sweep->add_option("--beta-range", cfg.beta_range, "lo:hi momentum range");
  add_common(sweep, cfg);

  CLI::App* counter = app.add_subcommand("counterexample", "finite-sum divergence example");
  add_spectrum(counter, cfg);
  counter->add_option("--n", cfg.n, "number of terms (comma list)")->delimiter(',');
  counter->add_option("--m", cfg.m, "mini-batch size (the construction uses 1)");
  counter->add_option("--iters", cfg.iters, "iterations per run");
  counter->add_option("--seeds", cfg.seeds, "runs per n");
  add_common(counter, cfg);

  CLI::App* sgdfs = app.add_subcommand("sgdfs", "SGD on partitioned least squares vs. its bound");
  sgdfs->add_option("--Q", cfg.Q, "per-batch condition numbers (comma list)")->delimiter(',');
  sgdfs->add_option("--iters", cfg.iters, "iterations per run");
  sgdfs->add_option("--seeds", cfg.seeds, "runs per Q");
  sgdfs->add_flag("--full-scale", cfg.full_scale, "25000 samples instead of 2500");
  add_common(sgdfs, cfg);

  CLI::App* logreg = app.add_subcommand("logreg", "multinomial logistic regression sweep");
  logreg->add_option("--Q", cfg.Q, "target condition number used to tune the regularizer");
  logreg->add_option("--sigma", cfg.sigma, "gradient noise level");
  logreg->add_option("--iters", cfg.iters, "iterations per run");
  logreg->add_option("--grid", cfg.grid, "WxH cells");
  logreg->add_option("--alpha-range", cfg.alpha_range, "lo:hi step-size range");
  logreg->add_option("--beta-range", cfg.beta_range, "lo:hi momentum range");
  logreg->add_option("--cluster-sep", cfg.cluster_sep, "class cluster separation");
  add_common(logreg, cfg);

  CLI::App* validate = app.add_subcommand("validate", "run the property validation suite");
  add_common(validate, cfg);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  try {
    if (cfg.m != 1) throw UsageError("--m: the counterexample is defined for single-term batches");
    if (cfg.jobs < 1) throw UsageError("--jobs must be >= 1");
    if (cfg.command == "theory") return cmd_theory(cfg, out);
    if (cfg.command == "sweep") return cmd_sweep(cfg, out);
    if (cfg.command == "counterexample") return cmd_counterexample(cfg, out);
    if (cfg.command == "sgdfs") return cmd_sgdfs(cfg, out);
    if (cfg.command == "logreg") return cmd_logreg(cfg, out);
    if (cfg.command == "validate") return cmd_validate(cfg, out);
  } catch (const UsageError& e) {
    err << "momlab " << cfg.command << ": " << e.what() << '\n';
    return kUsage;
  } catch (const PreconditionError& e) {
    err << "momlab " << cfg.command << ": invalid parameters: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "momlab " << cfg.command << ": " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

}  // namespace momlab::cli
