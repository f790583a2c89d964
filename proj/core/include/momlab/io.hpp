#pragma once

// Plain-file serialization: CSV tables, JSON documents and binary PGM images.
// Numbers are written with 17 significant digits so files round-trip exactly.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "momlab/experiments.hpp"
#include "momlab/optim.hpp"
#include "momlab/problems.hpp"
#include "momlab/theory.hpp"

namespace momlab {

inline constexpr int kGeneratorVersion = 1;

std::string format_double(double v);

std::uint64_t fnv1a64(std::string_view bytes);

std::string problem_json(const Quadratic& q);
std::string problem_json(const FiniteSumProblem& fs);
std::string problem_json(const LogRegProblem& p);

/// 16 hex digits of the FNV-1a hash of problem_json.
template <class Problem>
std::string problem_digest(const Problem& p);

std::string rate_report_json(const SpectrumBounds& b, const OptimizerParams& p,
                             const RateReport& r);

/// Columns: k, distance[, batch_index][, coord_0 .. coord_{d-1}].
void write_trajectory_csv(std::ostream& os, const Trajectory& t);
std::string trajectory_json(const Trajectory& t);

/// One row per cell: alpha, beta, theory_rho, theory_R, theory_neighborhood,
/// emp_rate, emp_neighborhood, diverged, then medians and trial counts.
/// Missing empirical values are empty fields; unstable theory is "unstable".
void write_grid_csv(std::ostream& os, const SweepGrid& g);
std::string grid_json(const SweepGrid& g);

void write_contour_csv(std::ostream& os, const std::vector<std::pair<double, double>>& pts);

/// Columns: k, coord2_value, batch_index, opposite_sign_flag, inconsistent_batch.
void write_divergence_trace_csv(std::ostream& os, const DivergenceRun& r, std::size_t n);

/// Columns: k, empirical, bound.
void write_bound_checks_csv(std::ostream& os, const SgdFiniteSumSeries& s);

enum class HeatmapQuantity { empirical_rate, empirical_neighborhood, theory_rate, theory_neighborhood };

/// Grayscale pixels, row 0 = largest beta. Rates map to 255 (1 - rate) clipped
/// to [0, 255]; neighborhoods map log-linearly so smaller is brighter.
/// Diverged or unstable cells are black.
std::vector<std::uint8_t> heatmap_pixels(const SweepGrid& g, HeatmapQuantity q);

/// Binary P5 image with maxval 255.
void write_pgm(std::ostream& os, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& pixels);

extern template std::string problem_digest(const Quadratic&);
extern template std::string problem_digest(const FiniteSumProblem&);
extern template std::string problem_digest(const LogRegProblem&);

}  // namespace momlab
