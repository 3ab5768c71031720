#pragma once

#include "rka/csv.hpp"
#include "rka/rng.hpp"
#include "rka/sampling.hpp"
#include "rka/system.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <string>
#include <vector>

namespace rka::experiments {

/// Gaussian test system: A i.i.d. N(0,1), ‖x⋆‖ = 1, and for inconsistent
/// systems a unit residual r⋆ orthogonal to range(A); b = A·x⋆ + r⋆.
/// Rank-deficient draws are retried up to three times.
LinearSystem gen_system(std::size_t m, std::size_t n, bool consistent, Rng& rng);

/// Parallelism knobs. Results never depend on them.
struct Parallelism {
    unsigned trial_workers = 1;
    unsigned solver_workers = 1;
};

/// Per-iteration statistics of ‖e^k‖² over independent trials.
struct TrialStats {
    std::size_t iterations = 0;
    Vector mean_sq_err;
    Vector p05;
    Vector p95;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
};

/// Nearest-rank percentile (p in (0, 100]) of unsorted samples.
double percentile_nearest_rank(std::vector<double> samples, double p);

/// Runs `trials` solves from x⁰ = 0; trial t is seeded with base_seed + t.
/// The system must carry x⋆.
TrialStats run_trials(const LinearSystem& system, SchemeKind kind, double alpha, std::size_t q, std::size_t k,
                      std::size_t trials, std::uint64_t base_seed, Parallelism par = {});

/// Mean of the trailing `fraction` of the mean error curve.
double plateau(const TrialStats& stats, double fraction = 0.5);

struct SweepRow {
    std::size_t q;
    double alpha;
    double mean_sq_err;
    double p05;
    double p95;
    double alpha_star;
    double alpha_rt;
};

/// Final-iterate error statistics over a grid of relaxations, for each q.
std::vector<SweepRow> alpha_sweep(const LinearSystem& system, SchemeKind kind, const std::vector<std::size_t>& q_list,
                                  const std::vector<double>& alpha_grid, std::size_t k, std::size_t trials,
                                  std::uint64_t base_seed, Parallelism par = {});

/// Grid value with the smallest mean error for one q.
double empirical_argmin(const std::vector<SweepRow>& rows, std::size_t q);

struct BoundRow {
    double alpha;
    double bound;
    double empirical_mean;
};

/// Predicted bound on E‖e^K‖² (uniform weights, row-norm probabilities)
/// next to the empirical mean over `trials` runs.
std::vector<BoundRow> bound_sweep(const LinearSystem& system, std::size_t q, const std::vector<double>& alpha_grid,
                                  std::size_t k, std::size_t trials, std::uint64_t base_seed, Parallelism par = {});

/// 0.25, 0.5, ..., `stop`.
std::vector<double> default_alpha_grid(double step = 0.25, double stop = 12.0);

csv::Table trace_table(const TrialStats& stats, const std::string& provenance);
csv::Table sweep_table(const std::vector<SweepRow>& rows, const std::string& provenance);
csv::Table bound_table(const std::vector<BoundRow>& rows, const std::string& provenance);

enum class Figure {
    Threads,    ///< error traces for several q, inconsistent system
    Alpha,      ///< error traces for several α at fixed q, inconsistent system
    AlphaSweep, ///< final error vs α for several q, consistent system
    Bounds,     ///< bound vs empirical final error, consistent system
};

std::string_view figure_name(Figure f) noexcept;
std::optional<Figure> parse_figure(std::string_view name) noexcept;

struct FigureParams {
    std::size_t rows = 100;
    std::size_t cols = 10;
    std::size_t trials = 100;
    std::uint64_t seed = 1;
    SchemeKind scheme = SchemeKind::UniformWeightsRowNormProbs;
    std::size_t iterations = 500;
    double alpha = 1.0;
    std::vector<std::size_t> threads;
    std::vector<double> alphas;
    Parallelism par;
};

FigureParams default_params(Figure f);

/// Writes the figure's CSVs plus manifest.json into `out_dir` (created if
/// needed) and returns the written paths.
std::vector<std::filesystem::path> run_figure(Figure f, const FigureParams& params,
                                              const std::filesystem::path& out_dir);

} // namespace rka::experiments
